//! Route discretization, geometric DTW alignment of a driven track to the
//! route, and cropping/rasterizing of local planned routes.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2D};
use crate::polyline::{dist, Polyline};
use crate::track::{PoseRecord, PoseTrack};

/// Maximum distance between a pose and its associated route point.
pub const ASSOCIATION_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("route polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("route polyline has zero length")]
    ZeroLength,
    #[error("spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("cannot align an empty sequence")]
    EmptySequence,
    #[error("pose is {distance:.2} m from the route (limit {ASSOCIATION_RADIUS} m)")]
    AssociationFailed { distance: f64 },
    #[error("aligned index {index} out of range for {len} route points")]
    BadIndex { index: usize, len: usize },
    #[error("raster side must be at least 16 cells, got {0}")]
    RasterTooSmall(usize),
    #[error("local route falls entirely outside the raster")]
    EmptyRaster,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutePoint {
    pub x: f64,
    pub y: f64,
    /// Direction of travel in radians.
    pub heading: f64,
}

impl RoutePoint {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Arc-length resampled route.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutePoints {
    pub points: Vec<RoutePoint>,
    pub spacing: f64,
}

impl RoutePoints {
    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(RoutePoint::position).collect()
    }

    pub fn polyline(&self) -> Polyline {
        Polyline::new(&self.positions())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn records(&self) -> Vec<PoseRecord> {
        self.points
            .iter()
            .map(|p| PoseRecord {
                t: None,
                x: p.x,
                y: p.y,
                yaw: p.heading,
                v: None,
                w: None,
            })
            .collect()
    }

    /// Rebuild from stored records; spacing is taken as the mean point gap.
    pub fn from_records(records: &[PoseRecord]) -> Result<Self, RouteError> {
        if records.len() < 2 {
            return Err(RouteError::TooFewPoints(records.len()));
        }
        let points: Vec<RoutePoint> = records
            .iter()
            .map(|r| RoutePoint {
                x: r.x,
                y: r.y,
                heading: r.yaw,
            })
            .collect();
        let total: f64 = points
            .windows(2)
            .map(|w| dist(w[0].position(), w[1].position()))
            .sum();
        Ok(Self {
            spacing: total / (points.len() - 1) as f64,
            points,
        })
    }
}

/// Resample `polyline` evenly by arc length with spacing as close to `spacing` as an
/// integer number of steps allows. Endpoints are kept.
pub fn discretize_route(polyline: &[[f64; 2]], spacing: f64) -> Result<RoutePoints, RouteError> {
    if polyline.len() < 2 {
        return Err(RouteError::TooFewPoints(polyline.len()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(RouteError::BadSpacing(spacing));
    }
    let pl = Polyline::new(polyline);
    let length = pl.length();
    if !(length > 0.0) {
        return Err(RouteError::ZeroLength);
    }
    let steps = ((length / spacing).round() as usize).max(1);
    let step = length / steps as f64;
    let points = (0..=steps)
        .map(|k| {
            let s = if k == steps { length } else { k as f64 * step };
            let (p, heading) = pl.sample(s);
            RoutePoint {
                x: p[0],
                y: p[1],
                heading,
            }
        })
        .collect();
    Ok(RoutePoints { points, spacing })
}

/// Monotone alignment between a track (index `i`) and a route (index `j`).
#[derive(Debug, Clone, PartialEq)]
pub struct WarpPath {
    pub pairs: Vec<(usize, usize)>,
    /// Euclidean distance of each pair.
    pub step_costs: Vec<f64>,
    /// Minimal accumulated distance of the recurrence (sum of `step_costs`).
    pub accumulated_cost: f64,
    /// `sqrt(sum of squared step costs) / K`, in meters.
    pub total_cost: f64,
}

impl WarpPath {
    /// For each track index, the route index it is matched to with the smallest distance.
    pub fn matched_route_indices(&self, track_len: usize) -> Vec<usize> {
        let mut best = vec![(f64::INFINITY, 0usize); track_len];
        for (&(i, j), &c) in self.pairs.iter().zip(&self.step_costs) {
            if c < best[i].0 {
                best[i] = (c, j);
            }
        }
        best.into_iter().map(|(_, j)| j).collect()
    }
}

/// Geometric DTW between two point sequences.
pub fn dtw_align_points(track: &[[f64; 2]], route: &[[f64; 2]]) -> Result<WarpPath, RouteError> {
    let (n, m) = (track.len(), route.len());
    if n == 0 || m == 0 {
        return Err(RouteError::EmptySequence);
    }
    let idx = |i: usize, j: usize| i * m + j;
    let mut gamma = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            let w = dist(track[i], route[j]);
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(gamma[idx(i - 1, j - 1)]);
                }
                if i > 0 {
                    best = best.min(gamma[idx(i - 1, j)]);
                }
                if j > 0 {
                    best = best.min(gamma[idx(i, j - 1)]);
                }
                best
            };
            gamma[idx(i, j)] = prev + w;
        }
    }

    let mut pairs = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let (ni, nj) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = gamma[idx(i - 1, j - 1)];
            let up = gamma[idx(i - 1, j)];
            let left = gamma[idx(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        i = ni;
        j = nj;
        pairs.push((i, j));
    }
    pairs.reverse();
    let step_costs: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| dist(track[i], route[j]))
        .collect();
    let sq: f64 = step_costs.iter().map(|c| c * c).sum();
    Ok(WarpPath {
        total_cost: sq.sqrt() / pairs.len() as f64,
        accumulated_cost: gamma[idx(n - 1, m - 1)],
        pairs,
        step_costs,
    })
}

pub fn dtw_align(track: &PoseTrack, route: &RoutePoints) -> Result<WarpPath, RouteError> {
    dtw_align_points(&track.positions(), &route.positions())
}

/// Localization-error level applied when rendering a local route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetLevel {
    #[default]
    None,
    Minor,
    Moderate,
    Hard,
}

impl OffsetLevel {
    pub const ALL: [OffsetLevel; 4] = [
        OffsetLevel::None,
        OffsetLevel::Minor,
        OffsetLevel::Moderate,
        OffsetLevel::Hard,
    ];

    /// Offset magnitude range in meters.
    pub fn range(self) -> (f64, f64) {
        match self {
            OffsetLevel::None => (0.0, 0.0),
            OffsetLevel::Minor => (0.0, 1.0),
            OffsetLevel::Moderate => (1.0, 2.5),
            OffsetLevel::Hard => (2.5, 5.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OffsetLevel::None => "none",
            OffsetLevel::Minor => "minor",
            OffsetLevel::Moderate => "moderate",
            OffsetLevel::Hard => "hard",
        }
    }

    /// Draw a planar offset: magnitude uniform in the level range, direction uniform.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> [f64; 2] {
        let (lo, hi) = self.range();
        let mag: f64 = rng.random_range(lo..=hi);
        let dir: f64 = rng.random_range(0.0..2.0 * PI);
        if hi == 0.0 {
            return [0.0, 0.0];
        }
        [mag * dir.cos(), mag * dir.sin()]
    }
}

impl std::str::FromStr for OffsetLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown offset level `{s}`"))
    }
}

/// Route window ahead of the vehicle, in the (possibly offset-perturbed) vehicle frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRoute {
    pub points: Vec<[f64; 2]>,
    /// World-frame localization offset that was applied.
    pub applied_offset: [f64; 2],
    pub level: OffsetLevel,
    /// Route index the window starts at.
    pub start_index: usize,
}

/// Index of the route point nearest to `p`.
pub fn nearest_route_index(route: &RoutePoints, p: [f64; 2]) -> Option<(usize, f64)> {
    route
        .points
        .iter()
        .enumerate()
        .map(|(i, rp)| (i, dist(rp.position(), p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Crop `window_forward` meters of route ahead of the associated index and express
/// them in the frame of `pose` shifted by a random offset of the given level.
pub fn crop_local_route<R: Rng + ?Sized>(
    route: &RoutePoints,
    pose: &Pose2D,
    aligned_index: Option<usize>,
    window_forward: f64,
    level: OffsetLevel,
    rng: &mut R,
) -> Result<LocalRoute, RouteError> {
    if route.is_empty() {
        return Err(RouteError::EmptySequence);
    }
    let (start_index, distance) = match aligned_index {
        Some(j) if j >= route.len() => {
            return Err(RouteError::BadIndex {
                index: j,
                len: route.len(),
            })
        }
        Some(j) => (j, dist(route.points[j].position(), pose.position())),
        None => nearest_route_index(route, pose.position()).ok_or(RouteError::EmptySequence)?,
    };
    if distance > ASSOCIATION_RADIUS {
        return Err(RouteError::AssociationFailed { distance });
    }
    let offset = level.sample(rng);
    let believed = Pose2D::new(pose.x + offset[0], pose.y + offset[1], pose.yaw);
    let pl = route.polyline();
    let s0 = pl.cumulative()[start_index.min(pl.len() - 1)];
    let mut world = pl.slice(s0, (s0 + window_forward).min(pl.length()));
    if world.is_empty() {
        world.push(route.points[start_index].position());
    }
    Ok(LocalRoute {
        points: world.into_iter().map(|p| believed.to_local(p)).collect(),
        applied_offset: offset,
        level,
        start_index,
    })
}

/// Binary vehicle-centric raster of a local route; row 0 is the far edge, the
/// vehicle sits at the bottom-center cell facing up.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteRaster {
    pub side: usize,
    pub cell_size: f64,
    pub cells: Vec<u8>,
}

impl RouteRaster {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.side + col]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// Cell holding a vehicle-frame point, as signed `(row, col)`.
    pub fn cell_of(side: usize, cell_size: f64, p: [f64; 2]) -> (i64, i64) {
        let row = side as i64 - 1 - (p[0] / cell_size).floor() as i64;
        let col = (side as f64 / 2.0 - p[1] / cell_size).ceil() as i64 - 1;
        (row, col)
    }

    /// Vehicle cell (bottom-center).
    pub fn vehicle_cell(&self) -> (usize, usize) {
        (self.side - 1, self.side / 2 - 1)
    }
}

pub fn render_route_raster(
    local: &LocalRoute,
    side: usize,
    cell_size: f64,
) -> Result<RouteRaster, RouteError> {
    if side < 16 {
        return Err(RouteError::RasterTooSmall(side));
    }
    let mut cells = vec![0u8; side * side];
    let mut set = |r: i64, c: i64| {
        if r >= 0 && c >= 0 && (r as usize) < side && (c as usize) < side {
            cells[r as usize * side + c as usize] = 1;
        }
    };
    let coords: Vec<(i64, i64)> = local
        .points
        .iter()
        .map(|&p| RouteRaster::cell_of(side, cell_size, p))
        .collect();
    if coords.len() == 1 {
        set(coords[0].0, coords[0].1);
    }
    for w in coords.windows(2) {
        bresenham(w[0], w[1], &mut set);
    }
    let raster = RouteRaster {
        side,
        cell_size,
        cells,
    };
    if raster.count() == 0 {
        return Err(RouteError::EmptyRaster);
    }
    Ok(raster)
}

/// Visit every cell of the integer line from `a` to `b`, endpoints included.
pub fn bresenham(a: (i64, i64), b: (i64, i64), visit: &mut impl FnMut(i64, i64)) {
    let (mut x0, mut y0) = a;
    let (x1, y1) = b;
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        visit(x0, y0);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Check the spacing and heading invariants of a discretized route.
pub fn route_is_consistent(route: &RoutePoints) -> bool {
    route.points.windows(2).all(|w| {
        let d = dist(w[0].position(), w[1].position());
        let chord = (w[1].y - w[0].y).atan2(w[1].x - w[0].x);
        d >= 0.5 * route.spacing
            && d <= 1.5 * route.spacing
            && wrap_angle(chord - w[0].heading).abs() <= 30f64.to_radians()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn straight_route_discretizes_to_eleven_points() {
        let r = discretize_route(&[[0.0, 0.0], [10.0, 0.0]], 1.0).unwrap();
        assert_eq!(r.len(), 11);
        for (k, p) in r.points.iter().enumerate() {
            assert!((p.x - k as f64).abs() < 1e-12 && p.y == 0.0 && p.heading == 0.0);
        }
        assert!(route_is_consistent(&r));
    }

    #[test]
    fn l_shape_heading_jumps_at_corner() {
        let r = discretize_route(&[[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]], 1.0).unwrap();
        assert_eq!(r.len(), 21);
        assert_eq!(r.points[9].heading, 0.0);
        assert!((r.points[10].heading - PI / 2.0).abs() < 1e-12);
        assert_eq!(r.points[10].position(), [10.0, 0.0]);
        assert!(route_is_consistent(&r));
    }

    #[test]
    fn long_spacing_keeps_endpoints_only() {
        let r = discretize_route(&[[0.0, 0.0], [3.0, 4.0]], 50.0).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.points[1].position(), [3.0, 4.0]);
    }

    #[test]
    fn degenerate_routes_rejected() {
        assert_eq!(
            discretize_route(&[[1.0, 1.0], [1.0, 1.0]], 1.0),
            Err(RouteError::ZeroLength)
        );
        assert_eq!(
            discretize_route(&[[1.0, 1.0]], 1.0),
            Err(RouteError::TooFewPoints(1))
        );
        assert!(matches!(
            discretize_route(&[[0.0, 0.0], [1.0, 0.0]], 0.0),
            Err(RouteError::BadSpacing(_))
        ));
    }

    #[test]
    fn identical_sequences_align_diagonally() {
        let pts: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, 0.5 * i as f64]).collect();
        let w = dtw_align_points(&pts, &pts).unwrap();
        assert_eq!(w.total_cost, 0.0);
        assert!(w.pairs.iter().enumerate().all(|(k, &(i, j))| i == k && j == k));
    }

    #[test]
    fn duplicated_track_absorbs_in_warping() {
        let route: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, 0.0]).collect();
        let track: Vec<[f64; 2]> = route.iter().flat_map(|&p| [p, p]).collect();
        let w = dtw_align_points(&track, &route).unwrap();
        assert_eq!(w.accumulated_cost, 0.0);
        for j in 0..6 {
            assert_eq!(w.pairs.iter().filter(|p| p.1 == j).count(), 2);
        }
        assert_eq!(w.matched_route_indices(track.len())[7], 3);
    }

    #[test]
    fn empty_sequences_rejected() {
        assert_eq!(
            dtw_align_points(&[], &[[0.0, 0.0]]),
            Err(RouteError::EmptySequence)
        );
    }

    #[test]
    fn crop_levels_and_straight_window() {
        let route = discretize_route(&[[0.0, 0.0], [100.0, 0.0]], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pose = Pose2D::new(10.0, 0.0, 0.0);
        let lr = crop_local_route(&route, &pose, None, 30.0, OffsetLevel::None, &mut rng).unwrap();
        assert_eq!(lr.applied_offset, [0.0, 0.0]);
        assert_eq!(lr.points.first().copied().unwrap(), [0.0, 0.0]);
        assert!((lr.points.last().unwrap()[0] - 30.0).abs() < 1e-9);
        assert!(lr.points.iter().all(|p| p[1].abs() < 1e-12));
        for _ in 0..200 {
            let lr =
                crop_local_route(&route, &pose, Some(10), 30.0, OffsetLevel::Hard, &mut rng).unwrap();
            let m = lr.applied_offset[0].hypot(lr.applied_offset[1]);
            assert!((2.5 - 1e-12..=5.0 + 1e-12).contains(&m), "{m}");
        }
    }

    #[test]
    fn crop_far_from_route_fails() {
        let route = discretize_route(&[[0.0, 0.0], [10.0, 0.0]], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = crop_local_route(
            &route,
            &Pose2D::new(5.0, 20.0, 0.0),
            None,
            30.0,
            OffsetLevel::None,
            &mut rng,
        );
        assert!(matches!(r, Err(RouteError::AssociationFailed { .. })));
    }

    fn local(points: Vec<[f64; 2]>) -> LocalRoute {
        LocalRoute {
            points,
            applied_offset: [0.0, 0.0],
            level: OffsetLevel::None,
            start_index: 0,
        }
    }

    #[test]
    fn straight_raster_is_single_center_column() {
        let r = render_route_raster(&local(vec![[0.0, 0.0], [30.0, 0.0]]), 64, 0.5).unwrap();
        let cols: std::collections::BTreeSet<usize> = (0..64 * 64)
            .filter(|&k| r.cells[k] == 1)
            .map(|k| k % 64)
            .collect();
        assert_eq!(cols.len(), 1);
        assert_eq!(*cols.iter().next().unwrap(), r.vehicle_cell().1);
        assert!((58..=62).contains(&r.count()), "{}", r.count());
        assert_eq!(r.get(63, 31), 1);
    }

    #[test]
    fn left_quarter_circle_stays_in_left_half() {
        let radius = 10.0;
        let pts: Vec<[f64; 2]> = (0..=40)
            .map(|k| {
                let a = k as f64 / 40.0 * PI / 2.0;
                [radius * a.sin(), radius * (1.0 - a.cos())]
            })
            .collect();
        let r = render_route_raster(&local(pts), 64, 0.5).unwrap();
        assert!(r.count() > 0);
        assert!((0..64 * 64)
            .filter(|&k| r.cells[k] == 1)
            .all(|k| k % 64 < 32));
    }

    #[test]
    fn small_raster_rejected() {
        assert_eq!(
            render_route_raster(&local(vec![[0.0, 0.0], [1.0, 0.0]]), 8, 0.5),
            Err(RouteError::RasterTooSmall(8))
        );
    }
}
