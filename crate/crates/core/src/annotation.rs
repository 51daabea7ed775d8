//! Ground-truth intention masks from demonstration driving: the future
//! traversed ribbon projected into the image, plus obstacle labels from the
//! concurrent laser scan.

use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, GroundPoint, Pixel};
use crate::mask::{IntentionMask, MaskClass};
use crate::polyline::dist;
use crate::scan::LaserScan;
use crate::track::PoseTrack;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotationParams {
    pub vehicle_width: f64,
    pub horizon_s: f64,
    /// Cap on the arc length of the annotated ribbon.
    pub max_arc_length: f64,
    /// Closest ground distance (hood line) that is annotated.
    pub near_clip: f64,
}

impl Default for AnnotationParams {
    fn default() -> Self {
        Self {
            vehicle_width: 1.6,
            horizon_s: 4.0,
            max_arc_length: 20.0,
            near_clip: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnotationError {
    #[error("frame {index} out of range for a track of {len} samples")]
    FrameOutOfRange { index: usize, len: usize },
    #[error("frame {0}: the vehicle does not move within the horizon, intention is empty")]
    EmptyIntention(usize),
}

/// Clip a ground polygon to the half-plane `x_forward >= x_min`.
fn clip_forward(poly: &[[f64; 2]], x_min: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let a_in = a[0] >= x_min;
        let b_in = b[0] >= x_min;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (x_min - a[0]) / (b[0] - a[0]);
            out.push([x_min, a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn unit_normal(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let d = dist(a, b);
    if d == 0.0 {
        return [0.0, 0.0];
    }
    [-(b[1] - a[1]) / d, (b[0] - a[0]) / d]
}

/// Paint the ground ribbon of `width` meters around a vehicle-frame centerline into a
/// new mask. The centerline itself is always drawn so a zero-width ribbon stays visible.
pub fn rasterize_ribbon(
    centerline: &[[f64; 2]],
    width: f64,
    cam: &CameraModel,
    near_clip: f64,
    frame_id: u64,
) -> IntentionMask {
    let mut mask = IntentionMask::new(cam.image_width, cam.image_height, frame_id);
    paint_ribbon(&mut mask, centerline, width, cam, near_clip);
    mask
}

pub fn paint_ribbon(
    mask: &mut IntentionMask,
    centerline: &[[f64; 2]],
    width: f64,
    cam: &CameraModel,
    near_clip: f64,
) {
    let n = centerline.len();
    if n < 2 {
        return;
    }
    let x_min = near_clip.max(cam.forward_offset + 0.05);
    let half = width / 2.0;
    let normals: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let a = unit_normal(centerline[i.saturating_sub(1)], centerline[i]);
            let b = unit_normal(centerline[i], centerline[(i + 1).min(n - 1)]);
            let s = [a[0] + b[0], a[1] + b[1]];
            let l = s[0].hypot(s[1]);
            if l > 1e-12 {
                [s[0] / l, s[1] / l]
            } else {
                a
            }
        })
        .collect();
    let project = |p: [f64; 2]| cam.project(GroundPoint::new(p[0], p[1]));
    for i in 0..n - 1 {
        let (p, q) = (centerline[i], centerline[i + 1]);
        if half > 0.0 {
            let (np, nq) = (normals[i], normals[i + 1]);
            let quad = [
                [p[0] + np[0] * half, p[1] + np[1] * half],
                [q[0] + nq[0] * half, q[1] + nq[1] * half],
                [q[0] - nq[0] * half, q[1] - nq[1] * half],
                [p[0] - np[0] * half, p[1] - np[1] * half],
            ];
            let clipped = clip_forward(&quad, x_min);
            let img: Option<Vec<Pixel>> = clipped.iter().map(|&g| project(g)).collect();
            if let Some(img) = img {
                mask.fill_polygon(&img, MaskClass::Intention);
            }
        }
        let seg = clip_forward(&[p, q], x_min);
        if seg.len() >= 2 {
            if let (Some(a), Some(b)) = (project(seg[0]), project(seg[1])) {
                mask.draw_line(a, b, MaskClass::Intention);
            }
        }
    }
}

/// Future path of the vehicle from `frame_index`, in that frame's vehicle coordinates,
/// limited by time horizon and arc length.
pub fn future_path(
    track: &PoseTrack,
    frame_index: usize,
    horizon_s: f64,
    max_arc_length: f64,
) -> Result<Vec<[f64; 2]>, AnnotationError> {
    let samples = track.samples();
    let current = samples
        .get(frame_index)
        .ok_or(AnnotationError::FrameOutOfRange {
            index: frame_index,
            len: samples.len(),
        })?;
    let mut path = vec![[0.0, 0.0]];
    let mut arc = 0.0;
    for s in &samples[frame_index + 1..] {
        if s.t - current.t > horizon_s + 1e-9 {
            break;
        }
        let p = current.pose.to_local(s.pose.position());
        let last = *path.last().unwrap();
        let d = dist(last, p);
        if arc + d >= max_arc_length {
            let t = (max_arc_length - arc) / d;
            path.push([last[0] + t * (p[0] - last[0]), last[1] + t * (p[1] - last[1])]);
            arc = max_arc_length;
            break;
        }
        arc += d;
        path.push(p);
    }
    if path.len() < 2 || arc < 1e-6 {
        return Err(AnnotationError::EmptyIntention(frame_index));
    }
    Ok(path)
}

/// Ground-truth intention for one frame of a demonstration track.
pub fn annotate_intention(
    track: &PoseTrack,
    frame_index: usize,
    cam: &CameraModel,
    params: &AnnotationParams,
) -> Result<IntentionMask, AnnotationError> {
    let path = future_path(track, frame_index, params.horizon_s, params.max_arc_length)?;
    let mask = rasterize_ribbon(
        &path,
        params.vehicle_width,
        cam,
        params.near_clip,
        frame_index as u64,
    );
    if mask.count(MaskClass::Intention) == 0 {
        return Err(AnnotationError::EmptyIntention(frame_index));
    }
    Ok(mask)
}

/// Mark the image column above every laser return as obstacle, never overwriting
/// intention pixels.
pub fn label_obstacles(mask: &IntentionMask, scan: &LaserScan, cam: &CameraModel) -> IntentionMask {
    let mut out = mask.clone();
    for hit in scan.hit_points() {
        let proj = cam.ground_to_image(GroundPoint::new(hit[0], hit[1]));
        let Some(px) = proj.in_image() else { continue };
        let Some((col, row)) = px.index(out.width, out.height) else {
            continue;
        };
        for r in 0..=row {
            if !out.is_intention(col, r) {
                out.set(col, r, MaskClass::Obstacle);
            }
        }
    }
    out
}

/// Frame indices kept when thinning straight driving: every frame whose
/// |curvature| exceeds `straight_threshold`, and one in `keep_every` straight frames.
pub fn downsample_straight(curvatures: &[f64], straight_threshold: f64, keep_every: usize) -> Vec<usize> {
    let keep_every = keep_every.max(1);
    let mut straight_seen = 0usize;
    let mut kept = Vec::new();
    for (i, &k) in curvatures.iter().enumerate() {
        if k.abs() > straight_threshold {
            kept.push(i);
        } else {
            if straight_seen.is_multiple_of(keep_every) {
                kept.push(i);
            }
            straight_seen += 1;
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use crate::track::TrackSample;

    fn arc_track(speed: f64, curvature: f64, dt: f64, n: usize) -> PoseTrack {
        let samples = (0..n)
            .map(|k| {
                let s = speed * dt * k as f64;
                let (x, y, yaw) = if curvature == 0.0 {
                    (s, 0.0, 0.0)
                } else {
                    let a = curvature * s;
                    (a.sin() / curvature, (1.0 - a.cos()) / curvature, a)
                };
                TrackSample {
                    t: dt * k as f64,
                    pose: Pose2D::new(x, y, yaw),
                    v: Some(speed),
                    w: Some(speed * curvature),
                }
            })
            .collect();
        PoseTrack::new(samples).unwrap()
    }

    fn flat_cam() -> CameraModel {
        CameraModel::default()
    }

    #[test]
    fn straight_drive_is_symmetric_about_center_column() {
        let cam = flat_cam();
        let track = arc_track(5.0, 0.0, 0.1, 60);
        let params = AnnotationParams {
            horizon_s: 3.0,
            ..AnnotationParams::default()
        };
        let m = annotate_intention(&track, 0, &cam, &params).unwrap();
        assert!(m.count(MaskClass::Intention) > 100);
        // The 1-px centerline sits on the column boundary at cx, so only rows the
        // ribbon fill reaches are compared.
        for (c, r) in m.pixels(MaskClass::Intention) {
            let row_len = (0..cam.image_width).filter(|&k| m.is_intention(k, r)).count();
            if row_len > 2 {
                assert!(m.is_intention(cam.image_width - 1 - c, r), "pixel ({c},{r})");
            }
        }
        // far edge near 15 m
        let top = m.pixels(MaskClass::Intention).map(|p| p.1).min().unwrap();
        let g = cam
            .image_to_ground(Pixel {
                u: cam.cx,
                v: top as f64 + 0.5,
            })
            .unwrap();
        assert!((g.x_forward - 15.0).abs() < 1.0, "{}", g.x_forward);
    }

    #[test]
    fn stationary_vehicle_is_flagged() {
        let track = arc_track(0.0, 0.0, 0.1, 20);
        assert_eq!(
            annotate_intention(&track, 0, &flat_cam(), &AnnotationParams::default()),
            Err(AnnotationError::EmptyIntention(0))
        );
    }

    #[test]
    fn left_curve_centroid_left_of_center() {
        let cam = flat_cam();
        let track = arc_track(3.0, 0.1, 0.1, 80);
        let m = annotate_intention(&track, 0, &cam, &AnnotationParams::default()).unwrap();
        let (u, _) = m.intention_centroid().unwrap();
        assert!(u < cam.cx, "{u}");
    }

    #[test]
    fn pixel_count_grows_with_horizon() {
        let cam = flat_cam();
        let track = arc_track(3.0, 0.05, 0.1, 100);
        let mut prev = 0;
        for h in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
            let params = AnnotationParams {
                horizon_s: h,
                ..AnnotationParams::default()
            };
            let n = annotate_intention(&track, 0, &cam, &params)
                .map(|m| m.count(MaskClass::Intention))
                .unwrap_or(0);
            assert!(n >= prev, "horizon {h}: {n} < {prev}");
            prev = n;
        }
    }

    #[test]
    fn zero_width_is_a_thin_curve() {
        let cam = flat_cam();
        let track = arc_track(3.0, 0.02, 0.1, 100);
        let params = AnnotationParams {
            vehicle_width: 0.0,
            ..AnnotationParams::default()
        };
        let m = annotate_intention(&track, 0, &cam, &params).unwrap();
        let mut per_row = vec![0usize; cam.image_height];
        for (_, r) in m.pixels(MaskClass::Intention) {
            per_row[r] += 1;
        }
        assert!(per_row.iter().all(|&n| n <= 2), "{per_row:?}");
    }

    #[test]
    fn obstacle_column_above_return() {
        let cam = flat_cam();
        let mask = IntentionMask::new(cam.image_width, cam.image_height, 0);
        let scan = LaserScan::new(vec![-0.1, 0.0, 0.1], vec![20.0, 5.0, 20.0], 20.0).unwrap();
        let out = label_obstacles(&mask, &scan, &cam);
        let px = cam.project(GroundPoint::new(5.0, 0.0)).unwrap();
        let (col, row) = px.index(cam.image_width, cam.image_height).unwrap();
        assert_eq!(col, 324);
        assert_eq!(out.get(col, row), MaskClass::Obstacle);
        assert_eq!(out.get(col, 0), MaskClass::Obstacle);
        assert_eq!(out.get(col, row + 1), MaskClass::Unknown);
        assert_eq!(out.count(MaskClass::Obstacle), row + 1);
    }

    #[test]
    fn empty_scan_leaves_mask() {
        let cam = flat_cam();
        let mask = annotate_intention(&arc_track(3.0, 0.0, 0.1, 60), 0, &cam, &AnnotationParams::default())
            .unwrap();
        let scan = LaserScan::empty(vec![-1.0, 0.0, 1.0], 20.0);
        assert_eq!(label_obstacles(&mask, &scan, &cam), mask);
    }

    #[test]
    fn obstacle_never_overwrites_intention() {
        let cam = flat_cam();
        let mask = annotate_intention(&arc_track(3.0, 0.0, 0.1, 60), 0, &cam, &AnnotationParams::default())
            .unwrap();
        // far beyond the 12 m ribbon, dead ahead
        let scan = LaserScan::new(vec![0.0], vec![18.0], 20.0).unwrap();
        let out = label_obstacles(&mask, &scan, &cam);
        assert_eq!(out.count(MaskClass::Intention), mask.count(MaskClass::Intention));
        assert!(out.count(MaskClass::Obstacle) > 0);
    }

    #[test]
    fn straight_frames_thinned_to_one_in_six() {
        let mut k = vec![0.0; 60];
        k.extend(vec![0.1; 10]);
        let kept = downsample_straight(&k, 0.02, 6);
        assert_eq!(kept.len(), 10 + 10);
        assert_eq!(&kept[..3], &[0, 6, 12]);
    }
}
