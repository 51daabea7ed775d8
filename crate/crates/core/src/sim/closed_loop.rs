//! Closed-loop driving: oracle intention, score map, curvature selection, vehicle step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, Pose2D};
use crate::navscore::{project_intention, rasterize_scan, GridSpec, KernelParams};
use crate::planner::{
    hold_last_baseline, plan_from_cells, retain_and_replan, CommandSource, MotionCommand,
    PlanError, PlannerParams, RetainedIntention,
};
use crate::route::{crop_local_route, discretize_route, OffsetLevel};

use super::driver::ProgressTracker;
use super::kinematics::{arc_displacement, step_vehicle, VehicleState};
use super::lidar::{simulate_scan, LaserSpec};
use super::oracle::{Oracle, OracleParams};
use super::world::World;
use super::SimError;

/// Stream offset separating laser noise from localization-offset draws.
pub const SCAN_STREAM: u64 = 0x5CA9_0000_0000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayStrategy {
    Retain,
    HoldLast,
}

/// Fresh intention is unavailable for `frames` frames after `onset_frame`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySpec {
    pub onset_frame: usize,
    pub frames: usize,
    pub strategy: DelayStrategy,
}

impl DelaySpec {
    pub fn covers(&self, frame: usize) -> bool {
        frame > self.onset_frame && frame <= self.onset_frame + self.frames
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosedLoopConfig {
    pub resolution: usize,
    pub dt: f64,
    pub planner: PlannerParams,
    pub kernel: KernelParams,
    pub grid: GridSpec,
    pub camera: CameraModel,
    pub laser: LaserSpec,
    pub oracle: OracleParams,
    pub route_spacing: f64,
    pub window_forward: f64,
    pub offset_level: OffsetLevel,
    pub seed: u64,
    pub delay: Option<DelaySpec>,
    pub max_frames: Option<usize>,
}

impl Default for ClosedLoopConfig {
    fn default() -> Self {
        Self {
            resolution: 7,
            dt: 0.3,
            planner: PlannerParams::default(),
            kernel: KernelParams::default(),
            grid: GridSpec::default(),
            camera: CameraModel::default(),
            laser: LaserSpec::default(),
            oracle: OracleParams::default(),
            route_spacing: 1.0,
            window_forward: 30.0,
            offset_level: OffsetLevel::None,
            seed: 0,
            delay: None,
            max_frames: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosedLoopRun {
    pub poses: Vec<Pose2D>,
    pub commands: Vec<MotionCommand>,
    pub progress: Vec<f64>,
    pub cross_track: Vec<f64>,
    /// First frame whose position was off the road, if any.
    pub off_road_frame: Option<usize>,
    pub reached_goal: bool,
    pub route_length: f64,
}

impl ClosedLoopRun {
    pub fn max_cross_track(&self) -> f64 {
        self.cross_track.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_cross_track_in(&self, frames: std::ops::Range<usize>) -> f64 {
        let end = frames.end.min(self.cross_track.len());
        let start = frames.start.min(end);
        self.cross_track[start..end].iter().copied().fold(0.0, f64::max)
    }
}

/// Drive `route` on `world` with the planner in the loop.
pub fn run_closed_loop(
    world: &World,
    route: &[[f64; 2]],
    config: &ClosedLoopConfig,
) -> Result<ClosedLoopRun, SimError> {
    config.laser.validate()?;
    config.grid.validate()?;
    let roads = world.geometry();
    let oracle = Oracle::new(world, config.oracle);
    let rp = discretize_route(route, config.route_spacing)?;
    let pl = rp.polyline();
    let length = pl.length();
    let (p0, h0) = pl.sample(0.0);
    let mut state = VehicleState::at(Pose2D::new(p0[0], p0[1], h0));
    let mut tracker = ProgressTracker::new(pl);
    let mut offset_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut scan_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SCAN_STREAM);
    let speed = config.planner.speed;
    let max_frames = config
        .max_frames
        .unwrap_or((3.0 * length / (speed * config.dt)) as usize + 50);

    let mut run = ClosedLoopRun {
        poses: Vec::new(),
        commands: Vec::new(),
        progress: Vec::new(),
        cross_track: Vec::new(),
        off_road_frame: None,
        reached_goal: false,
        route_length: length,
    };
    let mut retained: Option<RetainedIntention> = None;
    let mut odom = Pose2D::identity();

    for frame in 0..max_frames {
        let pose = state.pose;
        let t = frame as f64 * config.dt;
        let (s, cte) = tracker.update(pose.position());
        if s >= length - 1e-6 {
            run.reached_goal = true;
            break;
        }
        if !roads.contains(pose.position()) {
            run.off_road_frame = Some(frame);
            break;
        }
        let scan = simulate_scan(
            &roads,
            world.walls_visible,
            &world.obstacles,
            &pose,
            t,
            &config.laser,
            &mut scan_rng,
        );
        let index = ((s / config.route_spacing).round() as usize).min(rp.len() - 1);
        let local = crop_local_route(
            &rp,
            &pose,
            Some(index),
            config.window_forward,
            config.offset_level,
            &mut offset_rng,
        )?;
        let delayed = config.delay.filter(|d| d.covers(frame));
        let last = run.commands.last();
        let planned: Result<MotionCommand, PlanError> = match delayed {
            Some(d) if d.strategy == DelayStrategy::HoldLast => hold_last_baseline(last),
            Some(_) => match &retained {
                Some(r) => retain_and_replan(
                    r,
                    &odom,
                    &scan,
                    config.resolution,
                    &config.grid,
                    &config.kernel,
                    &config.planner,
                ),
                None => hold_last_baseline(last),
            },
            None => {
                let mask = oracle.intention(&pose, &local, &config.camera, t, frame as u64)?;
                let cells = project_intention(&mask, &config.camera, &config.grid);
                let obstacles = rasterize_scan(&scan, &config.grid);
                let res = plan_from_cells(
                    &config.grid,
                    &cells,
                    &obstacles,
                    &config.kernel,
                    config.resolution,
                    &config.planner,
                );
                if config.delay.is_some_and(|d| d.onset_frame == frame) {
                    retained = Some(RetainedIntention::from_cells(&config.grid, &cells, pose));
                    odom = Pose2D::identity();
                }
                res.map(|(c, _)| c)
            }
        };
        let cmd = match planned {
            Ok(c) => c,
            Err(PlanError::Grid(e)) => return Err(e.into()),
            Err(_) => last.copied().map_or(
                MotionCommand {
                    curvature: 0.0,
                    speed,
                    source: CommandSource::HoldLast,
                    score: 0.0,
                },
                |c| MotionCommand {
                    source: CommandSource::HoldLast,
                    ..c
                },
            ),
        };
        run.poses.push(pose);
        run.progress.push(s);
        run.cross_track.push(cte);
        run.commands.push(cmd);
        state = step_vehicle(&state, cmd.speed, cmd.curvature, config.dt);
        if retained.is_some() {
            odom = odom.compose(&arc_displacement(cmd.speed * config.dt, cmd.curvature));
            if let Some(r) = retained.as_mut() {
                r.age += config.dt;
            }
        }
    }
    Ok(run)
}
