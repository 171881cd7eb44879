//! `spinres` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration, 3 numerical invariant.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use spinres::esn::EsnVariant;
use spinres::experiment::{
    emit_report, load_manifests, run_esn_comparison, run_experiment, sweep, CellRun, EsnGrid,
    ExperimentConfig, ExperimentError, ExperimentManifest, SweepGrid, CellConfig,
};
use spinres::{ReadoutType, TaskKind, Topology};

#[derive(Parser)]
#[command(name = "spinres", version, about = "Quantum spin reservoir computing experiments")]
struct Cli {
    /// Worker threads for the seed ensemble (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single cell over its seed ensemble.
    Run(RunArgs),
    /// Evaluate every cell of a reservoir grid.
    Sweep(SweepArgs),
    /// Evaluate the ESN baseline variants.
    Esn(EsnArgs),
    /// Rebuild metrics.csv from the manifests in a directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; sets both the structure seed and the input seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Ensemble size.
    #[arg(long)]
    seeds: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write trajectory_<cell>.csv for seed member 0.
    #[arg(long)]
    trajectory: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    topology: Option<Topology>,
    #[arg(long)]
    gamma: Option<f64>,
    /// 1 (all qubits) or 2 (total magnetization).
    #[arg(long)]
    readout: Option<ReadoutType>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Restrict the task axis to one task.
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    topology: Option<Topology>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    readout: Option<ReadoutType>,
}

#[derive(Args)]
struct EsnArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    task: Option<TaskKind>,
    /// Restrict to one variant (esn1, esn3, esn5).
    #[arg(long)]
    variant: Option<EsnVariant>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding manifest_*.json; results are written there too.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Recompute metrics from each manifest's configuration first.
    #[arg(long)]
    rerun: bool,
}

fn read_json<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, ExperimentError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

fn finish(runs: Vec<CellRun>, out: &Path) -> Result<(), ExperimentError> {
    let (manifests, trajectories): (Vec<_>, Vec<_>) =
        runs.into_iter().map(|r| (r.manifest, r.trajectory)).unzip();
    let trajectories: Vec<_> = trajectories.into_iter().flatten().collect();
    let files = emit_report(&manifests, &trajectories, out)?;
    for m in &manifests {
        for metric in &m.metrics {
            println!("{}\t{}\t{:.6e} ± {:.2e}", m.cell, metric.label, metric.mean, metric.std);
        }
    }
    eprintln!(
        "wrote {} ({} manifests, {} trajectories)",
        files.metrics.display(),
        files.manifests.len(),
        files.trajectories.len()
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<(), ExperimentError> {
    let mut cfg: ExperimentConfig = read_json(args.common.config.as_deref())?;
    if let Some(t) = args.task {
        cfg.task = t;
    }
    if let Some(t) = args.topology {
        cfg.topology = t;
    }
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    if let Some(r) = args.readout {
        cfg.readout = r;
    }
    if let Some(s) = args.common.seed {
        cfg.coupling_seed = s;
        cfg.input_seed = s;
    }
    if let Some(n) = args.common.seeds {
        cfg.seed_count = n;
    }
    let manifest = ExperimentManifest::new(CellConfig::Reservoir(cfg));
    let run = run_experiment(&manifest, args.common.trajectory)?;
    finish(vec![run], &args.common.out)
}

fn run_sweep(args: SweepArgs) -> Result<(), ExperimentError> {
    let mut grid: SweepGrid = read_json(args.common.config.as_deref())?;
    if let Some(t) = args.task {
        grid.tasks = vec![t];
    }
    if let Some(t) = args.topology {
        grid.topologies = vec![t];
    }
    if let Some(g) = args.gamma {
        grid.gammas = vec![g];
    }
    if let Some(r) = args.readout {
        grid.readouts = vec![r];
    }
    if let Some(s) = args.common.seed {
        grid.coupling_seed = s;
        grid.input_seed = s;
    }
    if let Some(n) = args.common.seeds {
        grid.seed_count = n;
    }
    finish(sweep(&grid, args.common.trajectory)?, &args.common.out)
}

fn run_esn(args: EsnArgs) -> Result<(), ExperimentError> {
    let mut grid: EsnGrid = read_json(args.common.config.as_deref())?;
    if let Some(t) = args.task {
        grid.tasks = vec![t];
    }
    if let Some(v) = args.variant {
        grid.variants = vec![v];
    }
    if let Some(s) = args.common.seed {
        grid.weight_seed = s;
        grid.input_seed = s;
    }
    if let Some(n) = args.common.seeds {
        grid.seed_count = n;
    }
    finish(run_esn_comparison(&grid, args.common.trajectory)?, &args.common.out)
}

fn report(args: ReportArgs) -> Result<(), ExperimentError> {
    let manifests = load_manifests(&args.out)?;
    if manifests.is_empty() {
        return Err(ExperimentError::Config(format!(
            "no manifest_*.json found in {}",
            args.out.display()
        )));
    }
    let runs = if args.rerun {
        manifests
            .iter()
            .map(|m| run_experiment(m, false))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        manifests
            .into_iter()
            .map(|manifest| CellRun { manifest, trajectory: None })
            .collect()
    };
    finish(runs, &args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Esn(a) => run_esn(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
