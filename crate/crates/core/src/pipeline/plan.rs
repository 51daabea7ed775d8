use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dgrid::DGrid;
use crate::geometry::Pose2D;
use crate::mask::IntentionMask;
use crate::metrics::motion_accuracy;
use crate::navscore::{build_score_map, project_intention, rasterize_scan};
use crate::planner::{
    hold_last_baseline, retain_and_replan, select_command, track_curvature, CommandSource,
    MotionCommand, PlanError, RetainedIntention,
};
use crate::route::{crop_local_route, RoutePoints};
use crate::sim::kinematics::arc_displacement;
use crate::sim::oracle::Oracle;
use crate::sim::{DelayStrategy, World};
use crate::track::{PoseRecord, PoseTrack};

use super::{
    create_dir, frame_file, read_jsonl, write_json, write_jsonl, AlignmentRecord, ManifestRecord,
    PipelineError, Result, RunConfig, RunLayout, ScanRecord, OFFSET_STREAM,
};

/// Where per-frame intention comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    /// Geometric oracle on the recorded world.
    Oracle,
    /// `NNNN.mask.dgrid` files in a directory, one per frame.
    Masks(PathBuf),
    /// The demonstration itself: recorded commands and annotated masks.
    Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub source: MaskSource,
    /// Defaults to [`plan_name`].
    pub name: Option<String>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            source: MaskSource::Oracle,
            name: None,
        }
    }
}

/// One line of a plan's `commands.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCommand {
    pub frame: usize,
    pub t: f64,
    pub curvature: f64,
    pub speed: f64,
    pub score: f64,
    pub source: String,
    pub resolution: usize,
}

/// One line of `sweep.jsonl`: the command at every resolution of `PlanInfo::resolutions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub frame: usize,
    pub curvatures: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub delta_g: usize,
    pub accuracy: f64,
}

/// Contents of `plan.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanInfo {
    pub name: String,
    pub source: String,
    pub masks_dir: Option<String>,
    pub resolution: usize,
    pub resolutions: Vec<usize>,
    pub delta_g: Vec<usize>,
    pub offset_level: String,
    pub delay_frames: usize,
    pub delay_strategy: DelayStrategy,
    pub seed: u64,
    pub frames: usize,
    pub fresh_frames: usize,
    /// Accuracy at `resolution` against the demonstration, per Δg.
    pub comparison: Vec<Comparison>,
}

/// Default plan directory name, e.g. `oracle-r7-none` or `oracle-r7-none-d6-hold_last`.
pub fn plan_name(config: &RunConfig, source: &MaskSource) -> String {
    let base = match source {
        MaskSource::Reference => return "reference".into(),
        MaskSource::Oracle => format!("oracle-r{}-{}", config.resolution, config.offset_level.name()),
        MaskSource::Masks(_) => format!("masks-r{}", config.resolution),
    };
    if config.delay_frames == 0 {
        base
    } else {
        let strategy = match config.delay_strategy {
            DelayStrategy::Retain => "retain",
            DelayStrategy::HoldLast => "hold_last",
        };
        format!("{base}-d{}-{strategy}", config.delay_frames)
    }
}

struct RunData {
    world: World,
    track: PoseTrack,
    route: RoutePoints,
    scans: Vec<ScanRecord>,
    alignment: Vec<AlignmentRecord>,
    manifest: Vec<ManifestRecord>,
}

fn load_run(layout: &RunLayout) -> Result<RunData> {
    let world = World::load(&layout.require("world.json")?)?;
    let poses: Vec<PoseRecord> = read_jsonl(&layout.require("poses.jsonl")?)?;
    let track = PoseTrack::from_records(&poses)?;
    let route_records: Vec<PoseRecord> = read_jsonl(&layout.require("route.jsonl")?)?;
    let route = RoutePoints::from_records(&route_records)?;
    let scans: Vec<ScanRecord> = read_jsonl(&layout.require("scans.jsonl")?)?;
    let alignment: Vec<AlignmentRecord> = read_jsonl(&layout.require("alignment.jsonl")?)?;
    let manifest: Vec<ManifestRecord> = read_jsonl(&layout.require("manifest.jsonl")?)?;
    let n = track.len();
    for (what, len) in [("scans.jsonl", scans.len()), ("alignment.jsonl", alignment.len())] {
        if len != n {
            return Err(PipelineError::LengthMismatch {
                what: what.into(),
                a: len,
                b: n,
            });
        }
    }
    if n == 0 {
        return Err(PipelineError::RunDir {
            path: layout.root.clone(),
            msg: "run has no frames".into(),
        });
    }
    Ok(RunData {
        world,
        track,
        route,
        scans,
        alignment,
        manifest,
    })
}

fn load_mask(path: &Path, frame: usize, config: &RunConfig) -> Result<IntentionMask> {
    if !path.is_file() {
        return Err(PipelineError::MissingFrame {
            frame,
            what: path.display().to_string(),
        });
    }
    let g = DGrid::load(path)?;
    g.expect_shape(config.camera.image_width, config.camera.image_height)?;
    Ok(g.to_mask(frame as u64)?)
}

fn fallback(last: Option<&MotionCommand>, speed: f64) -> MotionCommand {
    match last {
        Some(c) => MotionCommand {
            source: CommandSource::HoldLast,
            ..*c
        },
        None => MotionCommand {
            curvature: 0.0,
            speed,
            source: CommandSource::HoldLast,
            score: 0.0,
        },
    }
}

/// Plan every frame of a recorded run. Writes `plans/NAME/{plan.json, commands.jsonl,
/// sweep.jsonl, masks/}` and returns the plan description.
pub fn cmd_plan(run_dir: &Path, config: &RunConfig, options: &PlanOptions) -> Result<PlanInfo> {
    config.validate()?;
    let layout = RunLayout::new(run_dir);
    let run = load_run(&layout)?;
    let n = run.track.len();
    let samples = run.track.samples();
    let human: Vec<f64> = (0..n)
        .map(|i| track_curvature(&run.track, i))
        .collect::<Result<_, _>>()?;

    let mut resolutions = config.resolutions.clone();
    resolutions.push(config.resolution);
    resolutions.sort_unstable();
    resolutions.dedup();
    let primary = resolutions.binary_search(&config.resolution).unwrap();

    let name = options
        .name
        .clone()
        .unwrap_or_else(|| plan_name(config, &options.source));
    let dir = layout.plan_dir(&name);
    let mask_dir = dir.join("masks");
    create_dir(&mask_dir)?;

    let oracle = Oracle::new(&run.world, config.oracle);
    let mut offset_rng = ChaCha8Rng::seed_from_u64(config.seed ^ OFFSET_STREAM);
    let exported: std::collections::BTreeMap<usize, &ManifestRecord> =
        run.manifest.iter().map(|m| (m.frame, m)).collect();
    let period = config.delay_frames + 1;

    let mut last: Vec<Option<MotionCommand>> = vec![None; resolutions.len()];
    let mut retained: Option<RetainedIntention> = None;
    let mut odom = Pose2D::identity();
    let mut commands = Vec::with_capacity(n);
    let mut sweep = Vec::with_capacity(n);
    let mut fresh_frames = 0;

    for (frame, s) in samples.iter().enumerate() {
        let scan = &run.scans[frame].scan;
        let fresh = frame % period == 0;
        let mut chosen: Vec<MotionCommand> = Vec::with_capacity(resolutions.len());
        if options.source == MaskSource::Reference {
            for _ in &resolutions {
                chosen.push(MotionCommand {
                    curvature: human[frame],
                    speed: config.planner.speed,
                    source: CommandSource::Fresh,
                    score: 0.0,
                });
            }
            if let Some(m) = exported.get(&frame).and_then(|m| m.mask.as_ref()) {
                let mask = load_mask(&layout.file(m), frame, config)?;
                DGrid::from_mask(&mask).save(&mask_dir.join(frame_file(frame, "mask")))?;
            }
        } else if fresh {
            fresh_frames += 1;
            let mask = match &options.source {
                MaskSource::Masks(d) => load_mask(&d.join(frame_file(frame, "mask")), frame, config)?,
                _ => {
                    let local = crop_local_route(
                        &run.route,
                        &s.pose,
                        Some(run.alignment[frame].route_index),
                        config.window_forward,
                        config.offset_level,
                        &mut offset_rng,
                    )?;
                    oracle.intention(&s.pose, &local, &config.camera, s.t, frame as u64)?
                }
            };
            if exported.contains_key(&frame) {
                DGrid::from_mask(&mask).save(&mask_dir.join(frame_file(frame, "mask")))?;
            }
            let cells = project_intention(&mask, &config.camera, &config.grid);
            let obstacles = rasterize_scan(scan, &config.grid);
            let map = build_score_map(&config.grid, &cells, &obstacles, &config.kernel)?;
            for (k, &res) in resolutions.iter().enumerate() {
                chosen.push(match select_command(&map, res, &config.planner) {
                    Ok(c) => c,
                    Err(PlanError::Grid(e)) => return Err(e.into()),
                    Err(_) => fallback(last[k].as_ref(), config.planner.speed),
                });
            }
            retained = Some(RetainedIntention::from_cells(&config.grid, &cells, s.pose));
            odom = Pose2D::identity();
        } else {
            for (k, &res) in resolutions.iter().enumerate() {
                let planned = match (config.delay_strategy, &retained) {
                    (DelayStrategy::Retain, Some(r)) => retain_and_replan(
                        r,
                        &odom,
                        scan,
                        res,
                        &config.grid,
                        &config.kernel,
                        &config.planner,
                    ),
                    _ => hold_last_baseline(last[k].as_ref()),
                };
                chosen.push(match planned {
                    Ok(c) => c,
                    Err(PlanError::Grid(e)) => return Err(e.into()),
                    Err(_) => fallback(last[k].as_ref(), config.planner.speed),
                });
            }
        }
        if let (Some(next), Some(r)) = (samples.get(frame + 1), retained.as_mut()) {
            let v = s.v.unwrap_or(config.planner.speed);
            odom = odom.compose(&arc_displacement(v * (next.t - s.t), human[frame]));
            r.age += next.t - s.t;
        }
        let cmd = chosen[primary];
        commands.push(PlanCommand {
            frame,
            t: s.t,
            curvature: cmd.curvature,
            speed: cmd.speed,
            score: cmd.score,
            source: if options.source == MaskSource::Reference {
                "demonstration".into()
            } else {
                cmd.source.name().into()
            },
            resolution: config.resolution,
        });
        sweep.push(SweepRecord {
            frame,
            curvatures: chosen.iter().map(|c| c.curvature).collect(),
        });
        for (l, c) in last.iter_mut().zip(chosen) {
            *l = Some(c);
        }
    }

    let predicted: Vec<f64> = commands.iter().map(|c| c.curvature).collect();
    let comparison = config
        .delta_g
        .iter()
        .map(|&dg| {
            Ok(Comparison {
                delta_g: dg,
                accuracy: motion_accuracy(&predicted, &human, config.resolution, dg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let info = PlanInfo {
        name,
        source: match &options.source {
            MaskSource::Oracle => "oracle",
            MaskSource::Masks(_) => "masks",
            MaskSource::Reference => "reference",
        }
        .into(),
        masks_dir: match &options.source {
            MaskSource::Masks(d) => Some(d.display().to_string()),
            _ => None,
        },
        resolution: config.resolution,
        resolutions,
        delta_g: config.delta_g.clone(),
        offset_level: config.offset_level.name().into(),
        delay_frames: config.delay_frames,
        delay_strategy: config.delay_strategy,
        seed: config.seed,
        frames: n,
        fresh_frames,
        comparison,
    };
    write_jsonl(&dir.join("commands.jsonl"), &commands)?;
    write_jsonl(&dir.join("sweep.jsonl"), &sweep)?;
    write_json(&dir.join("plan.json"), &info)?;
    Ok(info)
}
