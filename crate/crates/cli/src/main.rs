use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use intentdrive::pipeline::{
    cmd_align, cmd_annotate, cmd_eval, cmd_plan, cmd_simulate, data_root, EvalOptions, MaskSource,
    PlanOptions, RunConfig, DATA_ENV,
};
use intentdrive::route::OffsetLevel;
use intentdrive::sim::DelayStrategy;

#[derive(Parser)]
#[command(name = "intentdrive", version, about = "Intention-driven planning pipeline on a 2-D driving simulator")]
struct Cli {
    /// Data root for relative world paths and default run directories.
    #[arg(long, env = DATA_ENV, global = true)]
    data_root: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Record a demonstration run directory.
    Simulate(SimulateArgs),
    /// Run the planner over every frame of a run.
    Plan(PlanArgs),
    /// Write accuracy, visual-metric and error-trace reports for a run's plans.
    Eval(EvalArgs),
    /// Align a pose track to a route with DTW.
    Align(AlignArgs),
    /// Re-annotate intention masks of a run.
    Annotate(AnnotateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    None,
    Minor,
    Moderate,
    Hard,
}

impl From<Level> for OffsetLevel {
    fn from(l: Level) -> Self {
        match l {
            Level::None => OffsetLevel::None,
            Level::Minor => OffsetLevel::Minor,
            Level::Moderate => OffsetLevel::Moderate,
            Level::Hard => OffsetLevel::Hard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    HoldLast,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    offset_level: Option<Level>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// `bundled:NAME` or a world JSON file.
    #[arg(long)]
    world: Option<String>,
    #[arg(long)]
    route: Option<String>,
    #[arg(long)]
    export_stride: Option<usize>,
    /// Run directory (default: DATA_ROOT/runs/WORLD-ROUTE-sSEED).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    run: PathBuf,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    resolution: Option<usize>,
    /// Frames without fresh intention after each fresh frame.
    #[arg(long)]
    delay: Option<usize>,
    /// Repeat the last command instead of replanning on retained intention.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// Directory of NNNN.mask.dgrid files used instead of the oracle.
    #[arg(long, conflicts_with = "reference")]
    masks: Option<PathBuf>,
    /// Replay the demonstration (commands and annotated masks).
    #[arg(long)]
    reference: bool,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    run: PathBuf,
    /// Plan to evaluate (repeatable); all plans by default.
    #[arg(long = "plan")]
    plans: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    /// JSON Lines track ({x, y, ...} per line).
    #[arg(long)]
    track: PathBuf,
    /// JSON Lines route.
    #[arg(long)]
    route: PathBuf,
    /// Resample the route at this spacing (meters) first.
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnnotateArgs {
    run: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame to annotate (repeatable); all frames by default.
    #[arg(long = "frame")]
    frames: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn base_config(explicit: Option<&Path>, fallback: Option<&Path>) -> Result<RunConfig> {
    match (explicit, fallback) {
        (Some(p), _) => Ok(RunConfig::load(p)?),
        (None, Some(p)) if p.is_file() => Ok(RunConfig::load(p)?),
        _ => Ok(RunConfig::default()),
    }
}

fn apply_common(cfg: &mut RunConfig, c: &Common) {
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(l) = c.offset_level {
        cfg.offset_level = l.into();
    }
}

/// A run given by path, or by name under `DATA_ROOT/runs`.
fn locate_run(run: &Path, root: &Path) -> PathBuf {
    if run.exists() || run.is_absolute() {
        run.to_path_buf()
    } else {
        root.join("runs").join(run)
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.data_root.unwrap_or_else(data_root);
    match cli.verb {
        Verb::Simulate(a) => {
            let mut cfg = base_config(a.common.config.as_deref(), None)?;
            apply_common(&mut cfg, &a.common);
            if let Some(w) = a.world {
                cfg.world = w;
            }
            if let Some(r) = a.route {
                cfg.route = r;
            }
            if let Some(s) = a.export_stride {
                cfg.export_stride = s;
            }
            let out = a.out.unwrap_or_else(|| {
                let world = cfg.world.rsplit([':', '/']).next().unwrap_or("world");
                let world = world.strip_suffix(".json").unwrap_or(world);
                root.join("runs").join(format!("{world}-{}-s{}", cfg.route, cfg.seed))
            });
            let summary = cmd_simulate(&cfg, &root, &out)
                .with_context(|| format!("simulating into {}", out.display()))?;
            eprintln!("run written to {}", out.display());
            print_json(&summary)
        }
        Verb::Plan(a) => {
            let run = locate_run(&a.run, &root);
            let mut cfg = base_config(a.common.config.as_deref(), Some(&run.join("config.json")))?;
            apply_common(&mut cfg, &a.common);
            if let Some(r) = a.resolution {
                cfg.resolution = r;
            }
            if let Some(d) = a.delay {
                cfg.delay_frames = d;
            }
            if a.baseline.is_some() {
                cfg.delay_strategy = DelayStrategy::HoldLast;
            }
            let source = match (a.masks, a.reference) {
                (Some(d), _) => MaskSource::Masks(d),
                (None, true) => MaskSource::Reference,
                (None, false) => MaskSource::Oracle,
            };
            let info = cmd_plan(&run, &cfg, &PlanOptions { source, name: a.name })
                .with_context(|| format!("planning {}", run.display()))?;
            print_json(&info)
        }
        Verb::Eval(a) => {
            let run = locate_run(&a.run, &root);
            let report = cmd_eval(
                &run,
                &EvalOptions {
                    plans: a.plans,
                    out: a.out,
                },
            )
            .with_context(|| format!("evaluating {}", run.display()))?;
            eprintln!("reports written to {}", report.out_dir.display());
            print_json(&report.summaries)
        }
        Verb::Align(a) => {
            let summary = cmd_align(&a.track, &a.route, a.spacing, a.out.as_deref())?;
            print_json(&summary)
        }
        Verb::Annotate(a) => {
            let run = locate_run(&a.run, &root);
            let cfg = base_config(a.config.as_deref(), Some(&run.join("config.json")))?;
            let frames = (!a.frames.is_empty()).then_some(a.frames.as_slice());
            let written = cmd_annotate(&run, &cfg, frames, a.out.as_deref())?;
            print_json(&serde_json::json!({ "annotated": written.len() }))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
