use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::annotation::{annotate_intention, label_obstacles, AnnotationError};
use crate::dgrid::DGrid;
use crate::route::{discretize_route, dtw_align_points, RoutePoints};
use crate::track::{PoseRecord, PoseTrack};

use super::{
    create_dir, frame_file, read_jsonl, write_jsonl, AlignmentRecord, PipelineError, Result,
    RunConfig, RunLayout, ScanRecord,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignSummary {
    pub track_points: usize,
    pub route_points: usize,
    pub accumulated_cost: f64,
    pub total_cost: f64,
    pub max_distance: f64,
}

/// Align a track file to a route file (both JSON Lines of `{x, y, ...}`). With
/// `spacing` the route is first resampled as a polyline.
pub fn cmd_align(
    track_path: &Path,
    route_path: &Path,
    spacing: Option<f64>,
    out: Option<&Path>,
) -> Result<AlignSummary> {
    let track: Vec<PoseRecord> = read_jsonl(track_path)?;
    let route_records: Vec<PoseRecord> = read_jsonl(route_path)?;
    let route = match spacing {
        Some(s) => {
            let pts: Vec<[f64; 2]> = route_records.iter().map(|r| [r.x, r.y]).collect();
            discretize_route(&pts, s)?
        }
        None => RoutePoints::from_records(&route_records)?,
    };
    let pts: Vec<[f64; 2]> = track.iter().map(|r| [r.x, r.y]).collect();
    let warp = dtw_align_points(&pts, &route.positions())?;
    let matched = warp.matched_route_indices(pts.len());
    let records: Vec<AlignmentRecord> = matched
        .iter()
        .enumerate()
        .map(|(frame, &j)| AlignmentRecord {
            frame,
            route_index: j,
            distance: crate::polyline::dist(pts[frame], route.points[j].position()),
        })
        .collect();
    if let Some(out) = out {
        write_jsonl(out, &records)?;
    }
    Ok(AlignSummary {
        track_points: pts.len(),
        route_points: route.len(),
        accumulated_cost: warp.accumulated_cost,
        total_cost: warp.total_cost,
        max_distance: records.iter().map(|r| r.distance).fold(0.0, f64::max),
    })
}

/// Re-annotate frames of a run with `config`'s camera and annotation parameters.
/// `frames = None` annotates every frame. Returns the frames written; frames without
/// future motion are skipped.
pub fn cmd_annotate(
    run_dir: &Path,
    config: &RunConfig,
    frames: Option<&[usize]>,
    out: Option<&Path>,
) -> Result<Vec<usize>> {
    config.validate()?;
    let layout = RunLayout::new(run_dir);
    let poses: Vec<PoseRecord> = read_jsonl(&layout.require("poses.jsonl")?)?;
    let track = PoseTrack::from_records(&poses)?;
    let scans: Vec<ScanRecord> = read_jsonl(&layout.require("scans.jsonl")?)?;
    if scans.len() != track.len() {
        return Err(PipelineError::LengthMismatch {
            what: "scans.jsonl".into(),
            a: scans.len(),
            b: track.len(),
        });
    }
    let out: PathBuf = out.map_or_else(|| layout.file("annotations"), Path::to_path_buf);
    create_dir(&out)?;
    let all: Vec<usize> = (0..track.len()).collect();
    let mut written = Vec::new();
    for &f in frames.unwrap_or(&all) {
        let mask = match annotate_intention(&track, f, &config.camera, &config.annotation) {
            Ok(m) => label_obstacles(&m, &scans[f].scan, &config.camera),
            Err(AnnotationError::EmptyIntention(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        DGrid::from_mask(&mask).save(&out.join(frame_file(f, "mask")))?;
        written.push(f);
    }
    Ok(written)
}
