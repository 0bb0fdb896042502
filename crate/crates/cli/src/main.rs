//! Command-line front end: deterministic experiment execution and report
//! emission for the flow laboratory.

mod commands;
mod manifest;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

use commands::{RunPaths, EXIT_CONFIG};
use manifest::Manifest;

#[derive(Parser)]
#[command(
    name = "iia",
    about = "Flow laboratory for closed primitive 3-forms on the flat six-torus",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment manifest (structured text, sections of key = value).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory for reports and snapshots.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed, recorded in every output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Isotropic grid override (points per axis).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Grid point cap override.
    #[arg(long, global = true)]
    max_points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pointwise and spectral invariant suites.
    Check,
    /// Integrate the flow from a manifest-defined initial state.
    FlowRun,
    /// Sweep constrained variations against the linearized operator.
    Linearize,
    /// Full symplectic-perturbation experiment to a converged structure.
    PerturbAndFlow,
    /// Post-process a stored trajectory into an energy decay report.
    DecayReport,
}

fn init_threads() {
    if let Ok(v) = std::env::var("IIA_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    init_threads();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let mut manifest = match &cli.manifest {
        Some(path) => {
            if !path.exists() {
                eprintln!("manifest not found: {}", path.display());
                return Ok(EXIT_CONFIG);
            }
            match Manifest::load(path) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("config error: {e:#}");
                    return Ok(EXIT_CONFIG);
                }
            }
        }
        None => Manifest::default(),
    };
    if let Some(n) = cli.grid_n {
        manifest.background.grid_n = n;
        manifest.background.dims = None;
    }
    if let Some(cap) = cli.max_points {
        manifest.background.max_points = cap;
    }
    // validate paths before any compute
    if let Some(input) = &manifest.input {
        if !std::path::Path::new(input).is_dir() {
            eprintln!("input trajectory directory not found: {input}");
            return Ok(EXIT_CONFIG);
        }
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| manifest.output.dir.as_ref().map(PathBuf::from));
    let needs_out = !matches!(cli.command, Command::Check);
    let paths = match (&out_dir, needs_out) {
        (Some(dir), _) => Some(RunPaths::prepare(dir)?),
        (None, false) => None,
        (None, true) => {
            eprintln!("an output directory is required: pass --out or set [output] dir");
            return Ok(EXIT_CONFIG);
        }
    };
    if manifest.background.grid().is_err() {
        eprintln!("config error: invalid grid specification");
        return Ok(EXIT_CONFIG);
    }

    let code = match cli.command {
        Command::Check => commands::cmd_check(&manifest, paths.as_ref(), cli.seed)?,
        Command::FlowRun => commands::cmd_flow_run(&manifest, paths.as_ref().unwrap(), cli.seed)?,
        Command::Linearize => commands::cmd_linearize(&manifest, paths.as_ref().unwrap(), cli.seed)?,
        Command::PerturbAndFlow => {
            commands::cmd_perturb_and_flow(&manifest, paths.as_ref().unwrap(), cli.seed)?
        }
        Command::DecayReport => {
            commands::cmd_decay_report(&manifest, paths.as_ref().unwrap(), cli.seed)?
        }
    };
    Ok(code)
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            // degeneracy and non-convergence surface as typed errors
            if let Some(core) = e.downcast_ref::<iia_core::Error>() {
                match core {
                    iia_core::Error::DegenerateState { .. } | iia_core::Error::Degenerate => {
                        eprintln!("flow degeneracy: {core}");
                        std::process::exit(commands::EXIT_DEGENERATE);
                    }
                    iia_core::Error::TooFar { .. }
                    | iia_core::Error::NonConvergence { .. }
                    | iia_core::Error::StepUnderflow { .. } => {
                        eprintln!("non-convergence: {core}");
                        std::process::exit(commands::EXIT_NO_CONVERGENCE);
                    }
                    _ => {}
                }
            }
            eprintln!("error: {e:#}");
            std::process::exit(EXIT_CONFIG);
        }
    }
}
