//! Curvature-arc motion generation over a navigation score map.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2D};
use crate::navscore::{build_score_map, rasterize_scan, CellSet, GridError, GridSpec, KernelParams, NavScoreMap};
use crate::polyline::dist;
use crate::scan::LaserScan;
use crate::track::PoseTrack;

/// Candidate curvatures span `[-MAX_CURVATURE, MAX_CURVATURE]`.
pub const MAX_CURVATURE: f64 = 0.2;
/// Below this speed curvature from a track is undefined.
pub const MIN_SPEED: f64 = 0.1;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("score map carries no information: every candidate scores the map minimum")]
    NoInformation,
    #[error("retained intention is exhausted: no cell lies ahead of the vehicle")]
    IntentionExhausted,
    #[error("retained intention is empty")]
    EmptyRetained,
    #[error("no previous command to hold")]
    NoPreviousCommand,
    #[error("speed {speed:.3} m/s at sample {index} is too low for a curvature")]
    UndefinedCurvature { index: usize, speed: f64 },
    #[error("sample {0} out of range")]
    SampleOutOfRange(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    /// Arc length sampled along each candidate.
    pub horizon: f64,
    pub step: f64,
    /// Sampling stops once the heading change reaches this (radians).
    pub max_heading_change: f64,
    /// Speed passed through to commands.
    pub speed: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            step: 0.25,
            max_heading_change: std::f64::consts::FRAC_PI_4,
            speed: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSource {
    Fresh,
    Retained,
    HoldLast,
}

impl CommandSource {
    pub fn name(self) -> &'static str {
        match self {
            CommandSource::Fresh => "fresh",
            CommandSource::Retained => "retained",
            CommandSource::HoldLast => "hold_last",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionCommand {
    pub curvature: f64,
    pub speed: f64,
    pub source: CommandSource,
    pub score: f64,
}

/// `resolution` curvatures evenly spaced over `[-0.2, 0.2]`, endpoints included.
pub fn candidate_curves(resolution: usize) -> Result<Vec<f64>, PlanError> {
    if resolution < 2 {
        return Err(PlanError::Resolution(resolution));
    }
    let n = (resolution - 1) as f64;
    // Written symmetrically so the middle candidate of an odd count is exactly zero.
    Ok((0..resolution)
        .map(|i| (2.0 * i as f64 - n) / n * MAX_CURVATURE)
        .collect())
}

/// Points on the circular arc from the origin (heading +x), every `step` meters up to
/// the horizon or the heading-change limit.
pub fn arc_points(curvature: f64, params: &PlannerParams) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut k = 1usize;
    loop {
        let s = k as f64 * params.step;
        if s > params.horizon + 1e-9 || (curvature * s).abs() > params.max_heading_change + 1e-12 {
            break;
        }
        out.push(if curvature == 0.0 {
            [s, 0.0]
        } else {
            let a = curvature * s;
            [a.sin() / curvature, (1.0 - a.cos()) / curvature]
        });
        k += 1;
    }
    out
}

/// Mean map value along the arc; samples outside the grid count as the map minimum.
pub fn score_curve(curvature: f64, map: &NavScoreMap, params: &PlannerParams) -> f64 {
    let pts = arc_points(curvature, params);
    if pts.is_empty() {
        return map.min();
    }
    let floor = map.min();
    let sum: f64 = pts.iter().map(|&p| map.sample(p).unwrap_or(floor)).sum();
    sum / pts.len() as f64
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    // (curvature, score): higher score, then smaller |curvature|, then negative curvature.
    let tol = TIE_TOL * a.1.abs().max(b.1.abs()).max(1.0);
    if (a.1 - b.1).abs() > tol {
        return a.1 > b.1;
    }
    if (a.0.abs() - b.0.abs()).abs() > 1e-15 {
        return a.0.abs() < b.0.abs();
    }
    a.0 < b.0
}

pub fn select_command(
    map: &NavScoreMap,
    resolution: usize,
    params: &PlannerParams,
) -> Result<MotionCommand, PlanError> {
    let candidates = candidate_curves(resolution)?;
    let scored: Vec<(f64, f64)> = candidates
        .iter()
        .map(|&k| (k, score_curve(k, map, params)))
        .collect();
    let floor = map.min();
    let tol = TIE_TOL * floor.abs().max(1.0);
    if scored.iter().all(|&(_, s)| (s - floor).abs() <= tol) {
        return Err(PlanError::NoInformation);
    }
    let mut best = scored[0];
    for &c in &scored[1..] {
        if better(c, best) {
            best = c;
        }
    }
    Ok(MotionCommand {
        curvature: best.0,
        speed: params.speed,
        source: CommandSource::Fresh,
        score: best.1,
    })
}

/// Full fresh planning step from intention and obstacle cells.
pub fn plan_from_cells(
    grid: &GridSpec,
    intention: &CellSet,
    obstacles: &CellSet,
    kernel: &KernelParams,
    resolution: usize,
    params: &PlannerParams,
) -> Result<(MotionCommand, NavScoreMap), PlanError> {
    let map = build_score_map(grid, intention, obstacles, kernel)?;
    let cmd = select_command(&map, resolution, params)?;
    Ok((cmd, map))
}

/// Intention captured in one frame, kept for replanning while fresh intention is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct RetainedIntention {
    /// Cell centers in the capture frame.
    pub points: Vec<[f64; 2]>,
    pub capture_pose: Pose2D,
    pub age: f64,
}

impl RetainedIntention {
    pub fn from_cells(grid: &GridSpec, cells: &CellSet, capture_pose: Pose2D) -> Self {
        Self {
            points: cells.iter().map(|&c| grid.center(c)).collect(),
            capture_pose,
            age: 0.0,
        }
    }

    /// Cells occupied after moving by `odom_since_capture` (current pose in the capture frame).
    pub fn cells_after(&self, grid: &GridSpec, odom_since_capture: &Pose2D) -> CellSet {
        self.points
            .iter()
            .filter_map(|&p| grid.cell_of(odom_since_capture.to_local(p)))
            .collect()
    }
}

/// Replan with retained intention moved into the current frame and fused with a fresh scan.
pub fn retain_and_replan(
    retained: &RetainedIntention,
    odom_since_capture: &Pose2D,
    fresh_scan: &LaserScan,
    resolution: usize,
    grid: &GridSpec,
    kernel: &KernelParams,
    params: &PlannerParams,
) -> Result<MotionCommand, PlanError> {
    if retained.points.is_empty() {
        return Err(PlanError::EmptyRetained);
    }
    let ahead = retained
        .points
        .iter()
        .any(|&p| odom_since_capture.to_local(p)[0] > 0.0);
    if !ahead {
        return Err(PlanError::IntentionExhausted);
    }
    let cells = retained.cells_after(grid, odom_since_capture);
    let obstacles = rasterize_scan(fresh_scan, grid);
    let (mut cmd, _) = plan_from_cells(grid, &cells, &obstacles, kernel, resolution, params)?;
    cmd.source = CommandSource::Retained;
    Ok(cmd)
}

/// Repeat the previous command.
pub fn hold_last_baseline(previous: Option<&MotionCommand>) -> Result<MotionCommand, PlanError> {
    let prev = previous.ok_or(PlanError::NoPreviousCommand)?;
    Ok(MotionCommand {
        source: CommandSource::HoldLast,
        ..*prev
    })
}

/// Driving curvature at sample `index`: `w / v` from recorded commands, otherwise
/// heading change over arc length by central differences.
pub fn track_curvature(track: &PoseTrack, index: usize) -> Result<f64, PlanError> {
    let samples = track.samples();
    let s = samples.get(index).ok_or(PlanError::SampleOutOfRange(index))?;
    if let (Some(v), Some(w)) = (s.v, s.w) {
        if v <= MIN_SPEED {
            return Err(PlanError::UndefinedCurvature { index, speed: v });
        }
        return Ok(w / v);
    }
    let lo = index.saturating_sub(1);
    let hi = (index + 1).min(samples.len() - 1);
    if lo == hi {
        return Err(PlanError::UndefinedCurvature { index, speed: 0.0 });
    }
    let mut arc = 0.0;
    for k in lo..hi {
        arc += dist(samples[k].pose.position(), samples[k + 1].pose.position());
    }
    let dt = samples[hi].t - samples[lo].t;
    let speed = if dt > 0.0 { arc / dt } else { 0.0 };
    if speed <= MIN_SPEED {
        return Err(PlanError::UndefinedCurvature { index, speed });
    }
    Ok(wrap_angle(samples[hi].pose.yaw - samples[lo].pose.yaw) / arc)
}
