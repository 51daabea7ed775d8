use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dgrid::DGrid;
use crate::mask::MaskClass;
use crate::metrics::{cover_rate, delta_yaw, iou, masked_l1, motion_accuracy, quantize_index};
use crate::planner::track_curvature;
use crate::track::{PoseRecord, PoseTrack};

use super::plan::{Comparison, PlanCommand, SweepRecord};
use super::{
    create_dir, frame_file, read_jsonl, read_text, write_json, write_text, ManifestRecord,
    PipelineError, PlanInfo, Result, RunLayout,
};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalOptions {
    /// Plans to evaluate; empty means every plan in the run.
    pub plans: Vec<String>,
    /// Report directory; defaults to `RUN/eval`.
    pub out: Option<PathBuf>,
}

/// Mean image-space agreement between predicted and annotated masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualMetrics {
    pub frames: usize,
    pub iou: f64,
    pub cover_rate: Option<f64>,
    pub delta_yaw_mean: Option<f64>,
    /// Frames where either mask admitted no center line.
    pub line_failures: usize,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub plan: String,
    pub source: String,
    pub offset_level: String,
    pub delay_frames: usize,
    pub frames: usize,
    pub resolution: usize,
    pub accuracy: Vec<Comparison>,
    pub visual: Option<VisualMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub plan: String,
    pub offset_level: String,
    pub resolution: usize,
    pub delta_g: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub out_dir: PathBuf,
    pub rows: Vec<AccuracyRow>,
    pub summaries: Vec<PlanSummary>,
}

fn list_plans(layout: &RunLayout) -> Result<Vec<String>> {
    let dir = layout.root.join("plans");
    let mut names = Vec::new();
    if dir.is_dir() {
        for entry in std::fs::read_dir(&dir).map_err(super::io_err(&dir))? {
            let entry = entry.map_err(super::io_err(&dir))?;
            if entry.path().join("plan.json").is_file() {
                names.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(PipelineError::RunDir {
            path: layout.root.clone(),
            msg: "no plans to evaluate; run `plan` first".into(),
        });
    }
    Ok(names)
}

fn visual_metrics(
    layout: &RunLayout,
    plan_dir: &Path,
    manifest: &[ManifestRecord],
) -> Result<Option<VisualMetrics>> {
    let (mut n, mut sum_iou, mut sum_l1) = (0usize, 0.0, 0.0);
    let (mut lines, mut sum_cover, mut sum_yaw, mut failures) = (0usize, 0.0, 0.0, 0usize);
    for m in manifest {
        let Some(truth_rel) = &m.mask else { continue };
        let pred_path = plan_dir.join("masks").join(frame_file(m.frame, "mask"));
        if !pred_path.is_file() {
            continue;
        }
        let truth = DGrid::load(&layout.file(truth_rel))?.to_mask(m.frame as u64)?;
        let pred = DGrid::load(&pred_path)?.to_mask(m.frame as u64)?;
        sum_iou += iou(&pred, &truth)?;
        let a: Vec<f64> = pred
            .labels()
            .iter()
            .map(|&l| (l == MaskClass::Intention as u8) as u8 as f64)
            .collect();
        let b: Vec<f64> = truth
            .labels()
            .iter()
            .map(|&l| (l == MaskClass::Intention as u8) as u8 as f64)
            .collect();
        sum_l1 += masked_l1(&a, &b, &vec![true; a.len()])?;
        n += 1;
        match (cover_rate(&pred, &truth), delta_yaw(&pred, &truth)) {
            (Ok(c), Ok(y)) => {
                sum_cover += c;
                sum_yaw += y;
                lines += 1;
            }
            _ => failures += 1,
        }
    }
    if n == 0 {
        return Ok(None);
    }
    let mean = |s: f64, k: usize| (k > 0).then(|| s / k as f64);
    Ok(Some(VisualMetrics {
        frames: n,
        iou: sum_iou / n as f64,
        cover_rate: mean(sum_cover, lines),
        delta_yaw_mean: mean(sum_yaw, lines),
        line_failures: failures,
        l1: sum_l1 / n as f64,
    }))
}

/// Score plans of a run against its demonstration. Writes `accuracy.csv`,
/// `summary.json` and `error_trace.csv` into the report directory.
pub fn cmd_eval(run_dir: &Path, options: &EvalOptions) -> Result<EvalReport> {
    let layout = RunLayout::new(run_dir);
    let poses: Vec<PoseRecord> = read_jsonl(&layout.require("poses.jsonl")?)?;
    let track = PoseTrack::from_records(&poses)?;
    let human: Vec<f64> = (0..track.len())
        .map(|i| track_curvature(&track, i))
        .collect::<Result<_, _>>()?;
    let manifest: Vec<ManifestRecord> = read_jsonl(&layout.require("manifest.jsonl")?)?;
    let plans = if options.plans.is_empty() {
        list_plans(&layout)?
    } else {
        options.plans.clone()
    };

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut trace = String::from("plan,frame,t,pred_index,human_index,error_level\n");
    for name in &plans {
        let dir = layout.plan_dir(name);
        let info_path = dir.join("plan.json");
        if !info_path.is_file() {
            return Err(PipelineError::RunDir {
                path: dir,
                msg: "missing plan.json".into(),
            });
        }
        let info: PlanInfo = serde_json::from_str(&read_text(&info_path)?)?;
        let commands: Vec<PlanCommand> = read_jsonl(&dir.join("commands.jsonl"))?;
        let sweep: Vec<SweepRecord> = read_jsonl(&dir.join("sweep.jsonl"))?;
        for (what, len) in [("commands.jsonl", commands.len()), ("sweep.jsonl", sweep.len())] {
            if len != human.len() {
                return Err(PipelineError::LengthMismatch {
                    what: format!("{name}/{what}"),
                    a: len,
                    b: human.len(),
                });
            }
        }
        for (k, &res) in info.resolutions.iter().enumerate() {
            let pred = sweep
                .iter()
                .map(|s| {
                    s.curvatures.get(k).copied().ok_or(PipelineError::LengthMismatch {
                        what: format!("{name}/sweep.jsonl frame {} resolutions", s.frame),
                        a: s.curvatures.len(),
                        b: info.resolutions.len(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            for &dg in &info.delta_g {
                rows.push(AccuracyRow {
                    plan: name.clone(),
                    offset_level: info.offset_level.clone(),
                    resolution: res,
                    delta_g: dg,
                    accuracy: motion_accuracy(&pred, &human, res, dg)?,
                });
            }
        }
        let predicted: Vec<f64> = commands.iter().map(|c| c.curvature).collect();
        let accuracy = info
            .delta_g
            .iter()
            .map(|&dg| {
                Ok(Comparison {
                    delta_g: dg,
                    accuracy: motion_accuracy(&predicted, &human, info.resolution, dg)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for (c, &h) in commands.iter().zip(&human) {
            let a = quantize_index(c.curvature, info.resolution)?;
            let b = quantize_index(h, info.resolution)?;
            let _ = writeln!(trace, "{name},{},{},{a},{b},{}", c.frame, c.t, a.abs_diff(b));
        }
        summaries.push(PlanSummary {
            plan: name.clone(),
            source: info.source.clone(),
            offset_level: info.offset_level.clone(),
            delay_frames: info.delay_frames,
            frames: info.frames,
            resolution: info.resolution,
            accuracy,
            visual: visual_metrics(&layout, &dir, &manifest)?,
        });
    }

    let out = options.out.clone().unwrap_or_else(|| layout.file("eval"));
    create_dir(&out)?;
    let mut csv = String::from("plan,offset_level,resolution,delta_g,accuracy\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.plan, r.offset_level, r.resolution, r.delta_g, r.accuracy);
    }
    write_text(&out.join("accuracy.csv"), &csv)?;
    write_text(&out.join("error_trace.csv"), &trace)?;
    write_json(&out.join("summary.json"), &serde_json::json!({ "plans": summaries }))?;
    Ok(EvalReport {
        out_dir: out,
        rows,
        summaries,
    })
}
