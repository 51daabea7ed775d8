//! Geometric intention generator: follows the road skeleton in the direction the
//! local route asks for.
//!
//! Road centerlines form a graph through their endpoints: an endpoint lying on another
//! centerline links the two. From the vehicle's position every forward path through
//! that graph is enumerated, and the one whose heading profile best matches the local
//! route (allowing an along-track shift, since the route may be offset) becomes a
//! vehicle-width ribbon, nudged around obstacles and painted into the image.

use serde::{Deserialize, Serialize};

use crate::annotation::paint_ribbon;
use crate::geometry::{wrap_angle, CameraModel, GroundPoint, Pixel, Pose2D};
use crate::mask::{IntentionMask, MaskClass};
use crate::polyline::{dist, Polyline};
use crate::route::LocalRoute;

use super::world::World;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleParams {
    /// Length of the enumerated forward paths.
    pub search_length: f64,
    pub ribbon_length: f64,
    pub profile_step: f64,
    /// Largest along-track shift tried when matching the route.
    pub max_shift: f64,
    pub start_heading_tolerance: f64,
    pub branch_heading_tolerance: f64,
    pub link_tolerance: f64,
    /// Image pixels closer than this to an obstacle surface are left out.
    pub obstacle_margin: f64,
    pub near_clip: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            search_length: 25.0,
            ribbon_length: 20.0,
            profile_step: 0.5,
            max_shift: 8.0,
            start_heading_tolerance: 60f64.to_radians(),
            branch_heading_tolerance: 45f64.to_radians(),
            link_tolerance: 0.25,
            obstacle_margin: 1.0,
            near_clip: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Link {
    s: f64,
    other: usize,
    other_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    line: usize,
    s0: f64,
    s1: f64,
}

/// Road centerlines with their endpoint links.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub lines: Vec<Polyline>,
    pub half_widths: Vec<f64>,
    links: Vec<Vec<Link>>,
}

impl Skeleton {
    pub fn new(world: &World, link_tolerance: f64) -> Self {
        let lines: Vec<Polyline> = world.roads.iter().map(|r| Polyline::new(&r.points)).collect();
        let half_widths = world.roads.iter().map(|r| r.width / 2.0).collect();
        let mut links: Vec<Vec<Link>> = vec![Vec::new(); lines.len()];
        for q in 0..lines.len() {
            for end_s in [0.0, lines[q].length()] {
                let p_end = lines[q].sample(end_s).0;
                for p in 0..lines.len() {
                    if p == q {
                        continue;
                    }
                    let pr = lines[p].project(p_end);
                    if pr.distance <= link_tolerance {
                        push_link(&mut links[p], Link { s: pr.s, other: q, other_s: end_s });
                        push_link(&mut links[q], Link { s: end_s, other: p, other_s: pr.s });
                    }
                }
            }
        }
        for l in &mut links {
            l.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.other.cmp(&b.other)));
        }
        Self {
            lines,
            half_widths,
            links,
        }
    }

    // Travel heading on `line` at `s` moving in direction `dir`.
    fn heading(&self, line: usize, s: f64, dir: f64) -> f64 {
        let pl = &self.lines[line];
        let len = pl.length();
        let (mut lo, mut hi) = if dir > 0.0 { (s, s + 0.05) } else { (s - 0.05, s) };
        if hi > len {
            (lo, hi) = (len - 0.05, len);
        }
        if lo < 0.0 {
            (lo, hi) = (0.0, 0.05);
        }
        let (a, _) = pl.sample(lo.max(0.0));
        let (b, _) = pl.sample(hi.min(len));
        let h = (b[1] - a[1]).atan2(b[0] - a[0]);
        if dir < 0.0 {
            wrap_angle(h + std::f64::consts::PI)
        } else {
            h
        }
    }

    fn walk(
        &self,
        line: usize,
        s: f64,
        dir: f64,
        remaining: f64,
        tol: f64,
        pieces: &mut Vec<Piece>,
        out: &mut Vec<Vec<Piece>>,
    ) {
        let len = self.lines[line].length();
        let end_s = if dir > 0.0 { len } else { 0.0 };
        let reach = (s + dir * remaining).clamp(0.0, len);
        let next = self.links[line]
            .iter()
            .filter(|l| (l.s - s) * dir > 1e-6 && (l.s - reach) * dir <= 1e-9)
            .map(|l| l.s)
            .min_by(|a, b| (a * dir).total_cmp(&(b * dir)));
        let Some(s_e) = next else {
            pieces.push(Piece { line, s0: s, s1: reach });
            out.push(pieces.clone());
            pieces.pop();
            return;
        };
        pieces.push(Piece { line, s0: s, s1: s_e });
        let rem = remaining - (s_e - s).abs();
        let here = self.heading(line, s_e, -dir);
        let here = wrap_angle(here + std::f64::consts::PI);
        let mut branched = false;
        if (s_e - end_s).abs() > 1e-6 {
            self.walk(line, s_e, dir, rem, tol, pieces, out);
            branched = true;
        }
        for l in self.links[line].iter().filter(|l| (l.s - s_e).abs() <= 1e-6) {
            let qlen = self.lines[l.other].length();
            for d in [1.0, -1.0] {
                if (d > 0.0 && l.other_s >= qlen - 1e-6) || (d < 0.0 && l.other_s <= 1e-6) {
                    continue;
                }
                let h = self.heading(l.other, l.other_s, d);
                if wrap_angle(h - here).abs() < tol {
                    self.walk(l.other, l.other_s, d, rem, tol, pieces, out);
                    branched = true;
                }
            }
        }
        if !branched {
            out.push(pieces.clone());
        }
        pieces.pop();
    }

    fn path_points(&self, pieces: &[Piece]) -> Vec<[f64; 2]> {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for p in pieces {
            let pl = &self.lines[p.line];
            let n = ((p.s1 - p.s0).abs() / 0.25).ceil().max(1.0) as usize;
            for k in 0..=n {
                let s = p.s0 + (p.s1 - p.s0) * k as f64 / n as f64;
                let q = pl.sample(s).0;
                if pts.last().is_none_or(|&l| dist(l, q) > 1e-9) {
                    pts.push(q);
                }
            }
        }
        pts
    }

    /// Forward paths (world frame) from `pose`, each with the half width of the road
    /// it starts on.
    pub fn forward_paths(&self, pose: &Pose2D, params: &OracleParams) -> Vec<(Vec<[f64; 2]>, f64)> {
        let pos = pose.position();
        let mut starts = Vec::new();
        for (i, pl) in self.lines.iter().enumerate() {
            let pr = pl.project(pos);
            if pr.distance > self.half_widths[i] + 0.5 {
                continue;
            }
            for d in [1.0, -1.0] {
                let h = self.heading(i, pr.s, d);
                if wrap_angle(h - pose.yaw).abs() < params.start_heading_tolerance {
                    starts.push((i, pr.s, d));
                }
            }
        }
        if starts.is_empty() {
            // Closest line, best-aligned direction.
            let best = self
                .lines
                .iter()
                .enumerate()
                .map(|(i, pl)| (i, pl.project(pos)))
                .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance));
            if let Some((i, pr)) = best {
                let d = [1.0, -1.0]
                    .into_iter()
                    .min_by(|&a, &b| {
                        let ha = wrap_angle(self.heading(i, pr.s, a) - pose.yaw).abs();
                        let hb = wrap_angle(self.heading(i, pr.s, b) - pose.yaw).abs();
                        ha.total_cmp(&hb)
                    })
                    .unwrap();
                starts.push((i, pr.s, d));
            }
        }
        let mut out = Vec::new();
        for (i, s, d) in starts {
            let mut paths = Vec::new();
            self.walk(
                i,
                s,
                d,
                params.search_length,
                params.branch_heading_tolerance,
                &mut Vec::new(),
                &mut paths,
            );
            for p in paths {
                let pts = self.path_points(&p);
                if pts.len() >= 2 {
                    out.push((pts, self.half_widths[i]));
                }
            }
        }
        out
    }
}

fn push_link(v: &mut Vec<Link>, l: Link) {
    if !v
        .iter()
        .any(|x| x.other == l.other && (x.s - l.s).abs() < 1e-6 && (x.other_s - l.other_s).abs() < 1e-6)
    {
        v.push(l);
    }
}

/// Mean absolute heading difference between `path` and `route` (both vehicle frame),
/// minimised over along-track shifts of the route. Samples missing on either side
/// cost a right angle.
pub fn profile_mismatch(path: &Polyline, route: &Polyline, params: &OracleParams) -> f64 {
    let step = params.profile_step;
    let n = (params.search_length / step).round() as usize;
    let shifts = (params.max_shift / step).round() as i64;
    let miss = std::f64::consts::FRAC_PI_2;
    let mut best = f64::INFINITY;
    for k in -shifts..=shifts {
        let delta = k as f64 * step;
        let mut sum = 0.0;
        for i in 0..n {
            let s = i as f64 * step;
            let sr = s + delta;
            if s + step > path.length() + 1e-9 || sr < 0.0 || sr + step > route.length() + 1e-9 {
                sum += miss;
                continue;
            }
            let hp = path.sample(s).1;
            let hr = route.sample(sr).1;
            sum += wrap_angle(hp - hr).abs();
        }
        best = best.min(sum / n as f64);
    }
    best
}

/// Precomputed oracle for one world.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub skeleton: Skeleton,
    pub world: World,
    pub params: OracleParams,
}

impl Oracle {
    pub fn new(world: &World, params: OracleParams) -> Self {
        Self {
            skeleton: Skeleton::new(world, params.link_tolerance),
            world: world.clone(),
            params,
        }
    }

    /// Vehicle-frame centerline the vehicle should follow, with its road half width.
    pub fn centerline(
        &self,
        pose: &Pose2D,
        local_route: &LocalRoute,
    ) -> Result<(Vec<[f64; 2]>, f64), SimError> {
        let paths = self.skeleton.forward_paths(pose, &self.params);
        let route = Polyline::new(&local_route.points);
        let mut best: Option<(f64, Vec<[f64; 2]>, f64)> = None;
        for (pts, half) in paths {
            let local: Vec<[f64; 2]> = pts.iter().map(|&p| pose.to_local(p)).collect();
            let pl = Polyline::new(&local);
            let cost = profile_mismatch(&pl, &route, &self.params);
            if best.as_ref().is_none_or(|b| cost < b.0 - 1e-9) {
                best = Some((cost, local, half));
            }
        }
        let (_, local, half) = best.ok_or(SimError::NoRoad(pose.position()))?;
        let pl = Polyline::new(&local);
        Ok((pl.slice(0.0, self.params.ribbon_length.min(pl.length())), half))
    }

    /// Intention mask for `pose` at time `t`.
    pub fn intention(
        &self,
        pose: &Pose2D,
        local_route: &LocalRoute,
        cam: &CameraModel,
        t: f64,
        frame_id: u64,
    ) -> Result<IntentionMask, SimError> {
        let (line, half) = self.centerline(pose, local_route)?;
        let w = self.world.vehicle_width;
        let obstacles: Vec<([f64; 2], f64)> = self
            .world
            .obstacles
            .iter()
            .map(|o| (pose.to_local(o.center_at(t)), o.radius))
            .filter(|(c, r)| c[0].hypot(c[1]) < self.params.ribbon_length + 10.0 + r)
            .collect();
        let ribbon = avoid_obstacles(&line, &obstacles, w, half, self.params.obstacle_margin);
        let mut mask = IntentionMask::new(cam.image_width, cam.image_height, frame_id);
        paint_ribbon(&mut mask, &ribbon, w, cam, self.params.near_clip);
        if !obstacles.is_empty() {
            let hits: Vec<(usize, usize)> = mask
                .pixels(MaskClass::Intention)
                .filter(|&(c, r)| {
                    let px = Pixel {
                        u: c as f64 + 0.5,
                        v: r as f64 + 0.5,
                    };
                    cam.image_to_ground(px).is_some_and(|g: GroundPoint| {
                        obstacles.iter().any(|(oc, rad)| {
                            dist(g.as_array(), *oc) <= rad + self.params.obstacle_margin
                        })
                    })
                })
                .collect();
            for (c, r) in hits {
                mask.set(c, r, MaskClass::Unknown);
            }
        }
        Ok(mask)
    }
}

/// Shift a centerline sideways so it keeps `r + margin + width/2` from each obstacle,
/// ramping in and out over 5 m and staying `0.2 m` inside the road edge.
pub fn avoid_obstacles(
    line: &[[f64; 2]],
    obstacles: &[([f64; 2], f64)],
    width: f64,
    road_half_width: f64,
    margin: f64,
) -> Vec<[f64; 2]> {
    if obstacles.is_empty() || line.len() < 2 {
        return line.to_vec();
    }
    let pl = Polyline::new(line);
    let limit = (road_half_width - width / 2.0 - 0.2).max(0.0);
    let mut shifts = vec![0.0f64; pl.len()];
    for &(c, r) in obstacles {
        let pr = pl.project(c);
        let seg = pr.segment.min(pl.len() - 2);
        let (a, b) = (pl.points()[seg], pl.points()[seg + 1]);
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let clearance = r + margin + width / 2.0;
        if pr.distance >= clearance {
            continue;
        }
        let need = clearance - pr.distance;
        let sign = if cross > 0.0 { -1.0 } else { 1.0 };
        for (i, &s) in pl.cumulative().iter().enumerate() {
            let gap = (s - pr.s).abs() - (r + 1.0);
            let ramp = if gap <= 0.0 { 1.0 } else { (1.0 - gap / 5.0).max(0.0) };
            let v = sign * need * ramp;
            if v.abs() > shifts[i].abs() {
                shifts[i] = v;
            }
        }
    }
    let pts = pl.points();
    (0..pts.len())
        .map(|i| {
            let a = pts[i.saturating_sub(1)];
            let b = pts[(i + 1).min(pts.len() - 1)];
            let d = dist(a, b).max(1e-12);
            let n = [-(b[1] - a[1]) / d, (b[0] - a[0]) / d];
            let sh = shifts[i].clamp(-limit, limit);
            [pts[i][0] + n[0] * sh, pts[i][1] + n[1] * sh]
        })
        .collect()
}

/// One-shot convenience wrapper around [`Oracle`].
pub fn oracle_intention(
    world: &World,
    pose: &Pose2D,
    local_route: &LocalRoute,
    cam: &CameraModel,
    params: &OracleParams,
) -> Result<IntentionMask, SimError> {
    Oracle::new(world, *params).intention(pose, local_route, cam, 0.0, 0)
}
