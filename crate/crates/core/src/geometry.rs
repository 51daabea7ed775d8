//! Planar pose algebra and flat-ground pinhole camera projection.
//!
//! Vehicle frame: x forward, y left, z up, origin at the rear axle center.
//! Image frame: u to the right, v down; pixel `(i, j)` covers the continuous
//! square `[i, i+1) x [j, j+1)` so its center sits at `(i + 0.5, j + 0.5)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid maps -pi to pi already; guard the 2*pi rounding edge.
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Planar rigid pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Default for Pose2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2D {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
        }
    }

    pub const fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
        }
    }

    /// `self * relative`: apply `relative`, expressed in this pose's frame.
    pub fn compose(&self, relative: &Pose2D) -> Pose2D {
        let (s, c) = self.yaw.sin_cos();
        Pose2D::new(
            self.x + c * relative.x - s * relative.y,
            self.y + s * relative.x + c * relative.y,
            self.yaw + relative.yaw,
        )
    }

    pub fn inverse(&self) -> Pose2D {
        let (s, c) = self.yaw.sin_cos();
        Pose2D::new(
            -c * self.x - s * self.y,
            s * self.x - c * self.y,
            -self.yaw,
        )
    }

    /// Map a point from this pose's local frame to the parent frame.
    pub fn transform_point(&self, local: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.x + c * local[0] - s * local[1],
            self.y + s * local[0] + c * local[1],
        ]
    }

    /// Map a parent-frame point into this pose's local frame.
    pub fn to_local(&self, world: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        let dx = world[0] - self.x;
        let dy = world[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy]
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Point on the ground plane in the vehicle frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x_forward: f64,
    pub y_left: f64,
}

impl GroundPoint {
    pub fn new(x_forward: f64, y_left: f64) -> Self {
        Self { x_forward, y_left }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.x_forward, self.y_left]
    }
}

/// Continuous image coordinates in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    /// Integer pixel `(column, row)` containing this point, if inside an image of the given size.
    pub fn index(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        let (c, r) = (self.u.floor(), self.v.floor());
        if c >= 0.0 && r >= 0.0 && (c as usize) < width && (r as usize) < height {
            Some((c as usize, r as usize))
        } else {
            None
        }
    }
}

/// Outcome of projecting a ground point into the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageProjection {
    InImage(Pixel),
    /// In front of the camera but outside the image bounds. The pixel is still reported.
    OutsideImage(Pixel),
    BehindCamera,
}

impl ImageProjection {
    pub fn pixel(&self) -> Option<Pixel> {
        match *self {
            ImageProjection::InImage(p) | ImageProjection::OutsideImage(p) => Some(p),
            ImageProjection::BehindCamera => None,
        }
    }

    pub fn in_image(&self) -> Option<Pixel> {
        match *self {
            ImageProjection::InImage(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CameraError {
    #[error("focal lengths must be positive (fx={fx}, fy={fy})")]
    Focal { fx: f64, fy: f64 },
    #[error("camera height must be positive, got {0}")]
    Height(f64),
    #[error("principal point ({cx}, {cy}) outside a {width}x{height} image")]
    PrincipalPoint {
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    },
}

/// Pinhole camera looking forward over a flat ground plane, pitched down by `pitch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub height: f64,
    pub pitch: f64,
    pub forward_offset: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            fx: 320.0,
            fy: 320.0,
            cx: 324.0,
            cy: 157.0,
            image_width: 648,
            image_height: 314,
            height: 1.5,
            pitch: 0.15,
            forward_offset: 0.0,
        }
    }
}

const MIN_DEPTH: f64 = 1e-9;

impl CameraModel {
    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CameraError::Focal {
                fx: self.fx,
                fy: self.fy,
            });
        }
        if !(self.height > 0.0) {
            return Err(CameraError::Height(self.height));
        }
        if !(self.cx >= 0.0
            && self.cx < self.image_width as f64
            && self.cy >= 0.0
            && self.cy < self.image_height as f64)
        {
            return Err(CameraError::PrincipalPoint {
                cx: self.cx,
                cy: self.cy,
                width: self.image_width,
                height: self.image_height,
            });
        }
        Ok(())
    }

    /// Continuous row of the ground horizon. Rows strictly below it (larger v) see the ground.
    pub fn horizon_row(&self) -> f64 {
        self.cy - self.fy * self.pitch.tan()
    }

    /// Whether a ray through continuous row `v` hits the ground.
    pub fn row_sees_ground(&self, v: f64) -> bool {
        self.ground_depth_factor(v) < -MIN_DEPTH
    }

    // z-component of the viewing ray for row v (ray scaled to unit optical depth).
    fn ground_depth_factor(&self, v: f64) -> f64 {
        let (s, c) = self.pitch.sin_cos();
        let yc = (v - self.cy) / self.fy;
        -yc * c - s
    }

    /// Project without any image-bounds check; `None` only when behind the camera.
    pub fn project(&self, p: GroundPoint) -> Option<Pixel> {
        let (s, c) = self.pitch.sin_cos();
        let dx = p.x_forward - self.forward_offset;
        let dy = p.y_left;
        let dz = -self.height;
        let xc = -dy;
        let yc = -dx * s - dz * c;
        let zc = dx * c - dz * s;
        if zc <= MIN_DEPTH {
            return None;
        }
        Some(Pixel {
            u: self.cx + self.fx * xc / zc,
            v: self.cy + self.fy * yc / zc,
        })
    }

    pub fn in_bounds(&self, px: Pixel) -> bool {
        px.u >= 0.0
            && px.v >= 0.0
            && px.u < self.image_width as f64
            && px.v < self.image_height as f64
    }

    pub fn ground_to_image(&self, p: GroundPoint) -> ImageProjection {
        match self.project(p) {
            None => ImageProjection::BehindCamera,
            Some(px) if self.in_bounds(px) => ImageProjection::InImage(px),
            Some(px) => ImageProjection::OutsideImage(px),
        }
    }

    /// Intersect the viewing ray through `px` with the ground plane.
    /// `None` at or above the horizon.
    pub fn image_to_ground(&self, px: Pixel) -> Option<GroundPoint> {
        let (s, c) = self.pitch.sin_cos();
        let xc = (px.u - self.cx) / self.fx;
        let yc = (px.v - self.cy) / self.fy;
        let dir_x = c - yc * s;
        let dir_y = -xc;
        let dir_z = -yc * c - s;
        if dir_z >= -MIN_DEPTH {
            return None;
        }
        let t = -self.height / dir_z;
        Some(GroundPoint {
            x_forward: self.forward_offset + t * dir_x,
            y_left: t * dir_y,
        })
    }

    /// Ground line seen by a whole image row: `x_forward` is constant and
    /// `y_left = slope * (u - cx)`. `None` at or above the horizon.
    pub fn row_ground_line(&self, v: f64) -> Option<(f64, f64)> {
        let (s, c) = self.pitch.sin_cos();
        let yc = (v - self.cy) / self.fy;
        let dir_z = -yc * c - s;
        if dir_z >= -MIN_DEPTH {
            return None;
        }
        let t = -self.height / dir_z;
        Some((self.forward_offset + t * (c - yc * s), -t / self.fx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Pose2D, b: &Pose2D, tol: f64) -> bool {
        (a.x - b.x).abs() < tol && (a.y - b.y).abs() < tol && wrap_angle(a.yaw - b.yaw).abs() < tol
    }

    #[test]
    fn wrap_stays_in_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        for k in -20..20 {
            let a = wrap_angle(k as f64 * 0.7);
            assert!(a > -PI && a <= PI);
        }
    }

    #[test]
    fn compose_identity_and_hand_example() {
        let p = Pose2D::new(1.5, -2.0, 0.4);
        assert!(close(&Pose2D::identity().compose(&p), &p, 1e-15));
        assert!(close(&p.compose(&Pose2D::identity()), &p, 1e-15));
        let r = Pose2D::new(1.0, 0.0, PI / 2.0).compose(&Pose2D::new(1.0, 0.0, 0.0));
        assert!(close(&r, &Pose2D::new(1.0, 1.0, PI / 2.0), 1e-12));
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose2D::new(3.0, 4.0, -2.5);
        assert!(close(&p.compose(&p.inverse()), &Pose2D::identity(), 1e-12));
        assert!(close(&p.inverse().compose(&p), &Pose2D::identity(), 1e-12));
    }

    #[test]
    fn point_transforms_are_inverse() {
        let p = Pose2D::new(-1.0, 2.0, 1.1);
        let w = p.transform_point([3.0, -0.5]);
        let l = p.to_local(w);
        assert!((l[0] - 3.0).abs() < 1e-12 && (l[1] + 0.5).abs() < 1e-12);
    }

    fn flat_cam() -> CameraModel {
        CameraModel {
            fx: 300.0,
            fy: 300.0,
            pitch: 0.0,
            ..CameraModel::default()
        }
    }

    #[test]
    fn closed_form_pinhole_row() {
        let cam = flat_cam();
        let px = cam
            .ground_to_image(GroundPoint::new(10.0, 0.0))
            .in_image()
            .unwrap();
        assert!((px.u - cam.cx).abs() < 1e-12);
        assert!((px.v - (cam.cy + 45.0)).abs() < 1e-9);
        let g = cam
            .image_to_ground(Pixel {
                u: cam.cx,
                v: cam.cy + 45.0,
            })
            .unwrap();
        assert!((g.x_forward - 10.0).abs() < 1e-9 && g.y_left.abs() < 1e-12);
    }

    #[test]
    fn behind_and_horizon_cases() {
        let cam = flat_cam();
        assert_eq!(
            cam.ground_to_image(GroundPoint::new(-1.0, 0.0)),
            ImageProjection::BehindCamera
        );
        assert!(cam
            .image_to_ground(Pixel {
                u: 100.0,
                v: cam.cy
            })
            .is_none());
        assert!(cam.image_to_ground(Pixel { u: 100.0, v: 10.0 }).is_none());
    }

    #[test]
    fn left_points_project_left_of_center() {
        let cam = CameraModel::default();
        let px = cam.project(GroundPoint::new(8.0, 1.0)).unwrap();
        assert!(px.u < cam.cx);
    }

    #[test]
    fn row_line_matches_per_pixel_inverse() {
        let cam = CameraModel {
            forward_offset: 0.7,
            ..CameraModel::default()
        };
        let v = 250.5;
        let (x, slope) = cam.row_ground_line(v).unwrap();
        for u in [0.5, 100.5, 324.0, 600.5] {
            let g = cam.image_to_ground(Pixel { u, v }).unwrap();
            assert!((g.x_forward - x).abs() < 1e-9);
            assert!((g.y_left - slope * (u - cam.cx)).abs() < 1e-9);
        }
    }

    #[test]
    fn default_camera_sees_two_to_twenty_five_meters() {
        let cam = CameraModel::default();
        cam.validate().unwrap();
        let near = cam
            .image_to_ground(Pixel {
                u: cam.cx,
                v: cam.image_height as f64 - 0.5,
            })
            .unwrap();
        assert!(near.x_forward > 2.0 && near.x_forward < 2.5);
        let far = cam.ground_to_image(GroundPoint::new(25.0, 0.0));
        assert!(matches!(far, ImageProjection::InImage(_)));
    }

    #[test]
    fn invalid_camera_rejected() {
        let bad = CameraModel {
            height: 0.0,
            ..CameraModel::default()
        };
        assert!(matches!(bad.validate(), Err(CameraError::Height(_))));
        let bad = CameraModel {
            cx: 700.0,
            ..CameraModel::default()
        };
        assert!(bad.validate().is_err());
    }
}
