//! Batch orchestration over run directories.
//!
//! A run directory produced by [`cmd_simulate`] looks like
//!
//! ```text
//! run/
//!   config.json           resolved RunConfig
//!   world.json            the world that was driven
//!   route.jsonl           discretized global route {x, y, yaw}
//!   poses.jsonl           demonstration poses {t, x, y, yaw, v, w}
//!   commands.jsonl        demonstration commands {frame, t, curvature, speed}
//!   alignment.jsonl       DTW association {frame, route_index, distance}
//!   scans.jsonl           laser sweeps {frame, t, bearings, ranges, max_range}
//!   manifest.jsonl        exported frames and their files
//!   frames/NNNN.road.dgrid    rendered road mask (camera stand-in)
//!   frames/NNNN.mask.dgrid    annotated intention mask
//!   frames/NNNN.route.dgrid   local route raster
//!   plans/NAME/...            written by cmd_plan
//!   eval/...                  written by cmd_eval
//! ```

mod eval;
mod plan;
mod simulate;
mod tools;

use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::annotation::AnnotationParams;
use crate::geometry::CameraModel;
use crate::navscore::{GridSpec, KernelParams};
use crate::planner::PlannerParams;
use crate::route::OffsetLevel;
use crate::sim::{courses, DelayStrategy, DemoParams, LaserSpec, OracleParams, World};

pub use eval::{cmd_eval, AccuracyRow, EvalOptions, EvalReport, PlanSummary, VisualMetrics};
pub use plan::{cmd_plan, plan_name, Comparison, MaskSource, PlanCommand, PlanInfo, PlanOptions, SweepRecord};
pub use simulate::{cmd_simulate, SimulateSummary};
pub use tools::{cmd_align, cmd_annotate, AlignSummary};

/// Environment variable that overrides the data root.
pub const DATA_ENV: &str = "DEEPGOAL_DATA";
/// Prefix selecting a built-in world instead of a file.
pub const BUNDLED_PREFIX: &str = "bundled:";

/// Seed stream for localization offsets.
pub const OFFSET_STREAM: u64 = 0x0FF5_E700_0000_0002;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {msg}")]
    RunDir { path: PathBuf, msg: String },
    #[error("frame {frame}: missing {what}")]
    MissingFrame { frame: usize, what: String },
    #[error("{what}: {a} predictions vs {b} demonstration frames")]
    LengthMismatch { what: String, a: usize, b: usize },
    #[error("{path}:{line}: {source}")]
    Jsonl {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Route(#[from] crate::route::RouteError),
    #[error(transparent)]
    Track(#[from] crate::track::TrackError),
    #[error(transparent)]
    Annotation(#[from] crate::annotation::AnnotationError),
    #[error(transparent)]
    Plan(#[from] crate::planner::PlanError),
    #[error(transparent)]
    Metric(#[from] crate::metrics::MetricError),
    #[error(transparent)]
    Grid(#[from] crate::navscore::GridError),
    #[error(transparent)]
    DGrid(#[from] crate::dgrid::DGridError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// Everything a run depends on. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `bundled:NAME` or a world JSON path (relative paths resolve against the data root).
    pub world: String,
    pub route: String,
    pub seed: u64,
    pub resolution: usize,
    pub resolutions: Vec<usize>,
    pub delta_g: Vec<usize>,
    pub offset_level: OffsetLevel,
    /// Frames without fresh intention after every fresh one (0 = no delay).
    pub delay_frames: usize,
    pub delay_strategy: DelayStrategy,
    pub kernel: KernelParams,
    pub planner: PlannerParams,
    pub grid: GridSpec,
    pub camera: CameraModel,
    pub laser: LaserSpec,
    pub demo: DemoParams,
    pub annotation: AnnotationParams,
    pub oracle: OracleParams,
    pub route_spacing: f64,
    pub window_forward: f64,
    pub raster_side: usize,
    pub raster_cell: f64,
    /// Image files are written for every `export_stride`-th frame.
    pub export_stride: usize,
    /// |curvature| at or below which a frame counts as straight driving.
    pub straight_threshold: f64,
    /// One in this many straight frames is marked for training.
    pub straight_keep_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            world: format!("{BUNDLED_PREFIX}fork_cross"),
            route: "left_goal".into(),
            seed: 0,
            resolution: 7,
            resolutions: (3..=23).step_by(2).collect(),
            delta_g: vec![0, 1, 2],
            offset_level: OffsetLevel::None,
            delay_frames: 0,
            delay_strategy: DelayStrategy::Retain,
            kernel: KernelParams::default(),
            planner: PlannerParams::default(),
            grid: GridSpec::default(),
            camera: CameraModel::default(),
            laser: LaserSpec::default(),
            demo: DemoParams::default(),
            annotation: AnnotationParams::default(),
            oracle: OracleParams::default(),
            route_spacing: 1.0,
            window_forward: 30.0,
            raster_side: 64,
            raster_cell: 0.5,
            export_stride: 1,
            straight_threshold: 0.02,
            straight_keep_every: 6,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.resolution < 2 || self.resolutions.iter().any(|&r| r < 2) {
            return bad("resolutions must be at least 2".into());
        }
        if self.resolutions.is_empty() || self.delta_g.is_empty() {
            return bad("resolutions and delta_g must be non-empty".into());
        }
        if !(self.route_spacing > 0.0 && self.window_forward > 0.0 && self.raster_cell > 0.0) {
            return bad("route_spacing, window_forward and raster_cell must be positive".into());
        }
        if self.export_stride == 0 || self.straight_keep_every == 0 {
            return bad("export_stride and straight_keep_every must be at least 1".into());
        }
        self.camera
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.grid.validate()?;
        self.laser.validate()?;
        self.demo.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Root that relative world paths and default run directories live under.
pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Load the world named by a config `world` entry.
pub fn resolve_world(spec: &str, root: &Path) -> Result<World> {
    let world = match spec.strip_prefix(BUNDLED_PREFIX) {
        Some(name) => courses::bundled(name)?,
        None => {
            let p = Path::new(spec);
            let path = if p.is_absolute() { p.to_path_buf() } else { root.join(p) };
            World::load(&path)?
        }
    };
    world.validate()?;
    Ok(world)
}

/// Paths inside a run directory.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn frames_dir(&self) -> PathBuf {
        self.root.join("frames")
    }

    pub fn plan_dir(&self, name: &str) -> PathBuf {
        self.root.join("plans").join(name)
    }

    /// Relative path of a frame file, e.g. `frames/0042.mask.dgrid`.
    pub fn frame_rel(frame: usize, kind: &str) -> String {
        format!("frames/{}", frame_file(frame, kind))
    }

    pub fn require(&self, name: &str) -> Result<PathBuf> {
        let p = self.file(name);
        if !p.is_file() {
            return Err(PipelineError::RunDir {
                path: self.root.clone(),
                msg: format!("missing {name}"),
            });
        }
        Ok(p)
    }
}

/// `NNNN.KIND.dgrid`.
pub fn frame_file(frame: usize, kind: &str) -> String {
    format!("{frame:04}.{kind}.dgrid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub frame: usize,
    pub t: f64,
    pub curvature: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub frame: usize,
    pub route_index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub frame: usize,
    pub t: f64,
    #[serde(flatten)]
    pub scan: crate::scan::LaserScan,
}

/// One exported frame: file locations relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub frame: usize,
    pub t: f64,
    pub curvature: f64,
    pub straight: bool,
    /// Kept after thinning straight driving.
    pub train: bool,
    pub image: String,
    /// `None` when the frame has no future motion to annotate.
    pub mask: Option<String>,
    pub route: String,
    /// Line of `scans.jsonl` holding this frame's sweep (0-based).
    pub scan_line: usize,
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = std::fs::File::open(path).map_err(io_err(path))?;
    crate::track::read_jsonl(BufReader::new(f)).map_err(|e| match e {
        crate::track::TrackError::Parse { line, source } => PipelineError::Jsonl {
            path: path.to_path_buf(),
            line,
            source,
        },
        crate::track::TrackError::Io(source) => PipelineError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => PipelineError::Track(other),
    })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_fill_missing_keys() {
        let cfg: RunConfig = serde_json::from_str(r#"{"route": "right_goal", "seed": 9}"#).unwrap();
        assert_eq!(cfg.route, "right_goal");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.resolution, 7);
        assert_eq!(cfg.resolutions.len(), 11);
        cfg.validate().unwrap();
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = RunConfig {
            export_stride: 0,
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        let cfg = RunConfig {
            resolutions: vec![1],
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bundled_and_file_worlds_resolve() {
        let root = tempfile::tempdir().unwrap();
        assert!(resolve_world("bundled:straight", root.path()).is_ok());
        assert!(resolve_world("bundled:moon", root.path()).is_err());
        let w = courses::straight();
        std::fs::write(root.path().join("w.json"), w.to_json()).unwrap();
        assert_eq!(resolve_world("w.json", root.path()).unwrap(), w);
    }

    #[test]
    fn frame_names_are_zero_padded() {
        assert_eq!(frame_file(7, "mask"), "0007.mask.dgrid");
        assert_eq!(RunLayout::frame_rel(12345, "road"), "frames/12345.road.dgrid");
    }
}
