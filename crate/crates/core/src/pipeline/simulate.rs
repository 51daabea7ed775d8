use std::collections::BTreeSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::annotation::{annotate_intention, downsample_straight, label_obstacles, AnnotationError};
use crate::dgrid::DGrid;
use crate::polyline::dist;
use crate::route::{crop_local_route, discretize_route, dtw_align, render_route_raster};
use crate::sim::closed_loop::SCAN_STREAM;
use crate::sim::{demo_driver, render_camera, simulate_scan};

use super::{
    create_dir, frame_file, resolve_world, write_jsonl, write_text, AlignmentRecord, CommandRecord,
    ManifestRecord, PipelineError, Result, RunConfig, RunLayout, ScanRecord, OFFSET_STREAM,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub frames: usize,
    pub exported: usize,
    pub annotated: usize,
    pub route_length: f64,
    pub alignment_cost: f64,
}

/// Drive the configured route with the demonstration driver and record a run directory.
/// `out` must not exist or be empty.
pub fn cmd_simulate(config: &RunConfig, data_root: &Path, out: &Path) -> Result<SimulateSummary> {
    config.validate()?;
    if out.exists() && std::fs::read_dir(out).map_err(super::io_err(out))?.next().is_some() {
        return Err(PipelineError::RunDir {
            path: out.to_path_buf(),
            msg: "output directory is not empty".into(),
        });
    }
    let world = resolve_world(&config.world, data_root)?;
    let route = world.route(&config.route)?.to_vec();
    let roads = world.geometry();
    let demo = demo_driver(&roads, &route, &config.demo)?;
    let n = demo.track.len();

    let layout = RunLayout::new(out);
    create_dir(&layout.frames_dir())?;
    write_text(&layout.file("config.json"), &config.to_json())?;
    write_text(&layout.file("world.json"), &(world.to_json() + "\n"))?;

    let rp = discretize_route(&route, config.route_spacing)?;
    write_jsonl(&layout.file("route.jsonl"), &rp.records())?;
    write_jsonl(&layout.file("poses.jsonl"), &demo.track.records())?;

    let warp = dtw_align(&demo.track, &rp)?;
    let matched = warp.matched_route_indices(n);
    let samples = demo.track.samples();
    let alignment: Vec<AlignmentRecord> = matched
        .iter()
        .enumerate()
        .map(|(frame, &j)| AlignmentRecord {
            frame,
            route_index: j,
            distance: dist(samples[frame].pose.position(), rp.points[j].position()),
        })
        .collect();
    write_jsonl(&layout.file("alignment.jsonl"), &alignment)?;

    let commands: Vec<CommandRecord> = samples
        .iter()
        .enumerate()
        .map(|(frame, s)| CommandRecord {
            frame,
            t: s.t,
            curvature: demo.curvatures[frame],
            speed: config.demo.speed,
        })
        .collect();
    write_jsonl(&layout.file("commands.jsonl"), &commands)?;

    let kept: BTreeSet<usize> = downsample_straight(
        &demo.curvatures,
        config.straight_threshold,
        config.straight_keep_every,
    )
    .into_iter()
    .collect();
    let mut scan_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SCAN_STREAM);
    let mut offset_rng = ChaCha8Rng::seed_from_u64(config.seed ^ OFFSET_STREAM);
    let mut scans = Vec::with_capacity(n);
    let mut manifest = Vec::new();
    for (frame, s) in samples.iter().enumerate() {
        let scan = simulate_scan(
            &roads,
            world.walls_visible,
            &world.obstacles,
            &s.pose,
            s.t,
            &config.laser,
            &mut scan_rng,
        );
        if frame % config.export_stride == 0 {
            let road = render_camera(&roads, &s.pose, &config.camera);
            road.to_dgrid()
                .save(&layout.frames_dir().join(frame_file(frame, "road")))?;
            let mask = match annotate_intention(&demo.track, frame, &config.camera, &config.annotation) {
                Ok(m) => Some(label_obstacles(&m, &scan, &config.camera)),
                Err(AnnotationError::EmptyIntention(_)) => None,
                Err(e) => return Err(e.into()),
            };
            if let Some(m) = &mask {
                DGrid::from_mask(m).save(&layout.frames_dir().join(frame_file(frame, "mask")))?;
            }
            let local = crop_local_route(
                &rp,
                &s.pose,
                Some(matched[frame]),
                config.window_forward,
                config.offset_level,
                &mut offset_rng,
            )?;
            let raster = render_route_raster(&local, config.raster_side, config.raster_cell)?;
            DGrid::from_route_raster(&raster)
                .save(&layout.frames_dir().join(frame_file(frame, "route")))?;
            let k = demo.curvatures[frame];
            manifest.push(ManifestRecord {
                frame,
                t: s.t,
                curvature: k,
                straight: k.abs() <= config.straight_threshold,
                train: mask.is_some() && kept.contains(&frame),
                image: RunLayout::frame_rel(frame, "road"),
                mask: mask.is_some().then(|| RunLayout::frame_rel(frame, "mask")),
                route: RunLayout::frame_rel(frame, "route"),
                scan_line: frame,
            });
        }
        scans.push(ScanRecord { frame, t: s.t, scan });
    }
    write_jsonl(&layout.file("scans.jsonl"), &scans)?;
    write_jsonl(&layout.file("manifest.jsonl"), &manifest)?;

    Ok(SimulateSummary {
        frames: n,
        exported: manifest.len(),
        annotated: manifest.iter().filter(|m| m.mask.is_some()).count(),
        route_length: rp.polyline().length(),
        alignment_cost: warp.total_cost,
    })
}
