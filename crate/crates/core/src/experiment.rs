//! Seeded experiment orchestration and CSV/JSON artifacts.
//!
//! A *cell* is one point of a sweep: (task, topology, readout type, γ) for
//! the qubit reservoir, or (task, variant) for the ESN baseline. Each cell is
//! evaluated over an ensemble of seeds; member `m` uses
//! `coupling_seed + m` / `input_seed + m` (or `weight_seed + m`). Every cell
//! produces one manifest carrying the full configuration, the seeds and the
//! per-seed metrics, so re-running a manifest reproduces it exactly.
//!
//! Scores use only the `n_test` test-phase rows; weights are fitted on the
//! `n_fb` training rows; the `n_pre` rows are discarded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::esn::{run_esn, EsnConfig, EsnVariant};
use crate::readout::{
    assemble_records, fit_records, make_features, nmse, stm_capacity, ReadoutError, ReadoutType,
};
use crate::reservoir::{Reservoir, ReservoirConfig, ReservoirError, Topology, Trajectory};
use crate::tasks::{binary_inputs, delayed_targets, gen_narma_input, gen_narma_target, TaskError, TaskKind};

/// Upper bound on the number of cells a single grid may expand to.
pub const MAX_GRID_CELLS: usize = 10_000;

/// Delay whose prediction is written to STM trajectory files.
pub const TRAJECTORY_STM_DELAY: usize = 1;

pub const METRICS_HEADER: &str = "task,topology,readout_type,gamma,seed_count,mean_metric,std_metric";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure in cell {cell}, seed member {member}: {detail}")]
    Numerical {
        cell: String,
        member: usize,
        detail: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed manifest {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl ExperimentError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// invariant violations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Numerical { .. } => 3,
            ExperimentError::Io { .. } | ExperimentError::Json { .. } => 1,
        }
    }
}

fn numerical(cell: &str, member: usize) -> impl Fn(String) -> ExperimentError + '_ {
    move |detail| ExperimentError::Numerical {
        cell: cell.to_string(),
        member,
        detail,
    }
}

fn classify_reservoir(cell: &str, member: usize, e: ReservoirError) -> ExperimentError {
    match e {
        ReservoirError::Config(msg) => ExperimentError::Config(msg),
        ReservoirError::Qubit(q) => ExperimentError::Config(q.to_string()),
        other => numerical(cell, member)(other.to_string()),
    }
}

/// One reservoir cell. Flat so it maps one-to-one onto the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub topology: Topology,
    pub readout: ReadoutType,
    pub gamma: f64,
    pub n_qubits: usize,
    pub theta0: f64,
    pub n_pre: usize,
    pub n_fb: usize,
    pub n_test: usize,
    pub coupling_seed: u64,
    pub input_seed: u64,
    pub input_qubit: usize,
    pub seed_count: usize,
    pub stm_max_delay: usize,
    pub ridge: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let r = ReservoirConfig::default();
        Self {
            task: TaskKind::Narma(2),
            topology: r.topology,
            readout: ReadoutType::TypeI,
            gamma: r.gamma,
            n_qubits: r.n_qubits,
            theta0: r.theta0,
            n_pre: r.n_pre,
            n_fb: r.n_fb,
            n_test: r.n_test,
            coupling_seed: r.coupling_seed,
            input_seed: r.input_seed,
            input_qubit: r.input_qubit,
            seed_count: 10,
            stm_max_delay: 10,
            ridge: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn reservoir_config(&self, member: usize) -> ReservoirConfig {
        ReservoirConfig {
            n_qubits: self.n_qubits,
            topology: self.topology,
            gamma: self.gamma,
            theta0: self.theta0,
            n_pre: self.n_pre,
            n_fb: self.n_fb,
            n_test: self.n_test,
            coupling_seed: self.coupling_seed.wrapping_add(member as u64),
            input_seed: self.input_seed.wrapping_add(member as u64),
            input_qubit: self.input_qubit,
        }
    }

    pub fn cell_name(&self) -> String {
        format!(
            "{}_{}_type{}_g{}",
            self.task, self.topology, self.readout, self.gamma
        )
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.reservoir_config(0)
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        check_common(self.seed_count, self.stm_max_delay, self.n_pre, self.n_fb, self.ridge)
    }
}

fn check_common(seed_count: usize, max_delay: usize, n_pre: usize, n_fb: usize, ridge: f64) -> Result<(), ExperimentError> {
    if seed_count == 0 {
        return Err(ExperimentError::Config("seed_count must be at least 1".into()));
    }
    if max_delay > n_pre {
        return Err(ExperimentError::Config(format!(
            "stm_max_delay {max_delay} exceeds the preparation length {n_pre}"
        )));
    }
    if n_fb < 2 {
        return Err(ExperimentError::Config("training phase needs at least 2 rows".into()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(ExperimentError::Config(format!("ridge {ridge} must be finite and >= 0")));
    }
    Ok(())
}

/// One ESN cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnRunConfig {
    pub task: TaskKind,
    pub variant: EsnVariant,
    pub n_nodes: usize,
    pub w_scale: f64,
    pub w_in_scale: f64,
    pub weight_seed: u64,
    pub input_seed: u64,
    pub n_pre: usize,
    pub n_fb: usize,
    pub n_test: usize,
    pub seed_count: usize,
    pub stm_max_delay: usize,
    pub ridge: f64,
}

impl Default for EsnRunConfig {
    fn default() -> Self {
        let e = EsnConfig::default();
        let r = ReservoirConfig::default();
        Self {
            task: TaskKind::Stm,
            variant: e.variant,
            n_nodes: e.n_nodes,
            w_scale: e.w_scale,
            w_in_scale: e.w_in_scale,
            weight_seed: e.weight_seed,
            input_seed: r.input_seed,
            n_pre: r.n_pre,
            n_fb: r.n_fb,
            n_test: r.n_test,
            seed_count: 10,
            stm_max_delay: 10,
            ridge: 0.0,
        }
    }
}

impl EsnRunConfig {
    pub fn esn_config(&self, member: usize) -> EsnConfig {
        EsnConfig {
            n_nodes: self.n_nodes,
            variant: self.variant,
            w_scale: self.w_scale,
            w_in_scale: self.w_in_scale,
            weight_seed: self.weight_seed.wrapping_add(member as u64),
        }
    }

    pub fn input_seed(&self, member: usize) -> u64 {
        self.input_seed.wrapping_add(member as u64)
    }

    pub fn total_steps(&self) -> usize {
        self.n_pre + self.n_fb + self.n_test
    }

    pub fn cell_name(&self) -> String {
        format!("{}_{}", self.task, self.variant)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.esn_config(0).validate().map_err(ExperimentError::Config)?;
        if self.n_test == 0 {
            return Err(ExperimentError::Config("phase lengths must be positive".into()));
        }
        check_common(self.seed_count, self.stm_max_delay, self.n_pre, self.n_fb, self.ridge)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CellConfig {
    Reservoir(ExperimentConfig),
    Esn(EsnRunConfig),
}

impl CellConfig {
    pub fn cell_name(&self) -> String {
        match self {
            CellConfig::Reservoir(c) => c.cell_name(),
            CellConfig::Esn(c) => c.cell_name(),
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            CellConfig::Reservoir(c) => c.task,
            CellConfig::Esn(c) => c.task,
        }
    }

    pub fn seed_count(&self) -> usize {
        match self {
            CellConfig::Reservoir(c) => c.seed_count,
            CellConfig::Esn(c) => c.seed_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub member: usize,
    /// Coupling seed for the reservoir, weight seed for the ESN.
    pub structure_seed: u64,
    pub input_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// `narma<n>` or `stm_tau<d>`.
    pub label: String,
    /// `nmse` or `c_stm`.
    pub metric: String,
    pub delay: Option<usize>,
    pub mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std: f64,
    pub per_seed: Vec<f64>,
    /// Seeds whose capacity was undefined (constant series) and scored 0.
    #[serde(default)]
    pub degenerate_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub software_version: String,
    pub cell: String,
    pub config: CellConfig,
    pub seeds: Vec<SeedRecord>,
    pub scoring_window: String,
    pub metrics: Vec<MetricSummary>,
    pub created_unix_s: u64,
}

impl ExperimentManifest {
    /// An unfilled manifest for a configuration.
    pub fn new(config: CellConfig) -> Self {
        let seeds = match &config {
            CellConfig::Reservoir(c) => (0..c.seed_count)
                .map(|m| {
                    let r = c.reservoir_config(m);
                    SeedRecord {
                        member: m,
                        structure_seed: r.coupling_seed,
                        input_seed: r.input_seed,
                    }
                })
                .collect(),
            CellConfig::Esn(c) => (0..c.seed_count)
                .map(|m| SeedRecord {
                    member: m,
                    structure_seed: c.esn_config(m).weight_seed,
                    input_seed: c.input_seed(m),
                })
                .collect(),
        };
        let (n_pre, n_fb, n_test) = match &config {
            CellConfig::Reservoir(c) => (c.n_pre, c.n_fb, c.n_test),
            CellConfig::Esn(c) => (c.n_pre, c.n_fb, c.n_test),
        };
        Self {
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            cell: config.cell_name(),
            config,
            seeds,
            scoring_window: format!(
                "train rows [{}, {}), test rows [{}, {})",
                n_pre,
                n_pre + n_fb,
                n_pre + n_fb,
                n_pre + n_fb + n_test
            ),
            metrics: Vec::new(),
            created_unix_s: 0,
        }
    }
}

/// Per-step data written to a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub cell: String,
    /// Column prefix for node observables (`z` for qubits, `x` for ESN nodes).
    pub node_prefix: &'static str,
    pub trajectory: Trajectory,
    pub predicted: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub manifest: ExperimentManifest,
    pub trajectory: Option<TrajectoryTable>,
}

/// Scores of one seed member on one (task, readout) pair.
#[derive(Debug, Clone, Default)]
struct MemberScores {
    /// One entry per delay for STM, a single entry for NARMA.
    values: Vec<f64>,
    degenerate: Vec<bool>,
    trajectory: Option<(Vec<f64>, Vec<f64>)>,
}

fn score(
    trajectory: &Trajectory,
    task: TaskKind,
    readout: ReadoutType,
    ridge: f64,
    stm_max_delay: usize,
    keep: bool,
) -> Result<MemberScores, String> {
    let inputs: Vec<f64> = trajectory.rows.iter().map(|r| r.input).collect();
    let phases = trajectory.phases();
    let design = make_features(&trajectory.observables(), readout).map_err(|e| e.to_string())?;
    let fit = |targets: &[f64]| {
        let records = assemble_records(design.clone(), &phases, &inputs, targets)?;
        fit_records(&records, ridge)
    };
    let mut out = MemberScores::default();
    match task {
        TaskKind::Stm => {
            for delay in 0..=stm_max_delay {
                let targets = delayed_targets(&inputs, delay);
                let f = fit(&targets).map_err(|e: ReadoutError| e.to_string())?;
                let c = stm_capacity(&f.test_predictions, &f.test_targets).map_err(|e| e.to_string())?;
                out.values.push(c.value);
                out.degenerate.push(c.degenerate);
                if keep && delay == TRAJECTORY_STM_DELAY.min(stm_max_delay) {
                    out.trajectory = Some((f.predictions, targets));
                }
            }
        }
        TaskKind::Narma(order) => {
            let targets = gen_narma_target(&inputs, order).map_err(|e: TaskError| e.to_string())?;
            let f = fit(&targets).map_err(|e| e.to_string())?;
            out.values.push(nmse(&f.test_predictions, &f.test_targets).map_err(|e| e.to_string())?);
            out.degenerate.push(false);
            if keep {
                out.trajectory = Some((f.predictions, targets));
            }
        }
    }
    Ok(out)
}

fn summarize(task: TaskKind, members: &[MemberScores]) -> Vec<MetricSummary> {
    let slots = members.first().map_or(0, |m| m.values.len());
    (0..slots)
        .map(|slot| {
            let per_seed: Vec<f64> = members.iter().map(|m| m.values[slot]).collect();
            let degenerate_seeds = members.iter().filter(|m| m.degenerate[slot]).count();
            let (mean, std) = mean_std(&per_seed);
            let (label, metric, delay) = match task {
                TaskKind::Stm => (format!("stm_tau{slot}"), "c_stm", Some(slot)),
                TaskKind::Narma(n) => (format!("narma{n}"), "nmse", None),
            };
            MetricSummary {
                label,
                metric: metric.to_string(),
                delay,
                mean,
                std,
                per_seed,
                degenerate_seeds,
            }
        })
        .collect()
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Cells sharing a reservoir (same topology, γ and physical parameters)
/// reuse one pair of simulated trajectories per seed.
fn run_reservoir_group(
    cells: &[ExperimentConfig],
    with_trajectories: bool,
) -> Result<Vec<CellRun>, ExperimentError> {
    let base = &cells[0];
    let seed_count = base.seed_count;
    let need_stm = cells.iter().any(|c| c.task == TaskKind::Stm);
    let need_narma = cells.iter().any(|c| c.task != TaskKind::Stm);
    let group_name = format!("{}_g{}", base.topology, base.gamma);

    type Member = Vec<(MemberScores, Option<Trajectory>)>;
    let members: Vec<Member> = (0..seed_count)
        .into_par_iter()
        .map(|m| -> Result<Member, ExperimentError> {
            let rc = base.reservoir_config(m);
            let reservoir = Reservoir::new(&rc).map_err(|e| classify_reservoir(&group_name, m, e))?;
            let total = rc.total_steps();
            let run = |inputs: Vec<f64>| {
                reservoir
                    .run_sequence(&inputs)
                    .map_err(|e| classify_reservoir(&group_name, m, e))
            };
            let stm = need_stm.then(|| run(binary_inputs(total, rc.input_seed))).transpose()?;
            let narma = need_narma.then(|| run(gen_narma_input(total))).transpose()?;
            cells
                .iter()
                .map(|c| {
                    let traj = if c.task == TaskKind::Stm { &stm } else { &narma };
                    let traj = traj.as_ref().expect("trajectory for requested task");
                    let keep = with_trajectories && m == 0;
                    let s = score(traj, c.task, c.readout, c.ridge, c.stm_max_delay, keep)
                        .map_err(numerical(&c.cell_name(), m))?;
                    Ok((s, keep.then(|| traj.clone())))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let created = now_unix();
    Ok(cells
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let scores: Vec<MemberScores> = members.iter().map(|m| m[ci].0.clone()).collect();
            let mut manifest = ExperimentManifest::new(CellConfig::Reservoir(c.clone()));
            manifest.metrics = summarize(c.task, &scores);
            manifest.created_unix_s = created;
            let trajectory = members[0][ci].1.clone().and_then(|trajectory| {
                let (predicted, target) = scores[0].trajectory.clone()?;
                Some(TrajectoryTable {
                    cell: c.cell_name(),
                    node_prefix: "z",
                    trajectory,
                    predicted,
                    target,
                })
            });
            CellRun { manifest, trajectory }
        })
        .collect())
}

fn run_esn_cell(config: &EsnRunConfig, with_trajectory: bool) -> Result<CellRun, ExperimentError> {
    config.validate()?;
    let cell = config.cell_name();
    let members: Vec<(MemberScores, Option<Trajectory>)> = (0..config.seed_count)
        .into_par_iter()
        .map(|m| {
            let total = config.total_steps();
            let inputs = match config.task {
                TaskKind::Stm => binary_inputs(total, config.input_seed(m)),
                TaskKind::Narma(_) => gen_narma_input(total),
            };
            let traj = run_esn(&config.esn_config(m), &inputs, config.n_pre, config.n_fb);
            let keep = with_trajectory && m == 0;
            let s = score(&traj, config.task, ReadoutType::TypeI, config.ridge, config.stm_max_delay, keep)
                .map_err(numerical(&cell, m))?;
            Ok((s, keep.then_some(traj)))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let scores: Vec<MemberScores> = members.iter().map(|m| m.0.clone()).collect();
    let mut manifest = ExperimentManifest::new(CellConfig::Esn(config.clone()));
    manifest.metrics = summarize(config.task, &scores);
    manifest.created_unix_s = now_unix();
    let trajectory = members[0].1.clone().and_then(|trajectory| {
        let (predicted, target) = scores[0].trajectory.clone()?;
        Some(TrajectoryTable {
            cell: cell.clone(),
            node_prefix: "x",
            trajectory,
            predicted,
            target,
        })
    });
    Ok(CellRun { manifest, trajectory })
}

/// Runs (or re-runs) the configuration recorded in a manifest and returns it
/// with metrics filled in.
pub fn run_experiment(manifest_in: &ExperimentManifest, with_trajectory: bool) -> Result<CellRun, ExperimentError> {
    match &manifest_in.config {
        CellConfig::Reservoir(c) => {
            c.validate()?;
            let mut runs = run_reservoir_group(std::slice::from_ref(c), with_trajectory)?;
            Ok(runs.remove(0))
        }
        CellConfig::Esn(c) => run_esn_cell(c, with_trajectory),
    }
}

/// Axes of a reservoir sweep plus the shared physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    pub topologies: Vec<Topology>,
    pub readouts: Vec<ReadoutType>,
    pub tasks: Vec<TaskKind>,
    pub stm_max_delay: usize,
    pub seed_count: usize,
    pub n_qubits: usize,
    pub theta0: f64,
    pub n_pre: usize,
    pub n_fb: usize,
    pub n_test: usize,
    pub coupling_seed: u64,
    pub input_seed: u64,
    pub input_qubit: usize,
    pub ridge: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        let c = ExperimentConfig::default();
        Self {
            gammas: vec![0.1, 0.01],
            topologies: vec![Topology::Linear, Topology::Ring],
            readouts: vec![ReadoutType::TypeI, ReadoutType::TypeII],
            tasks: vec![
                TaskKind::Stm,
                TaskKind::Narma(2),
                TaskKind::Narma(5),
                TaskKind::Narma(10),
                TaskKind::Narma(15),
                TaskKind::Narma(20),
            ],
            stm_max_delay: c.stm_max_delay,
            seed_count: c.seed_count,
            n_qubits: c.n_qubits,
            theta0: c.theta0,
            n_pre: c.n_pre,
            n_fb: c.n_fb,
            n_test: c.n_test,
            coupling_seed: c.coupling_seed,
            input_seed: c.input_seed,
            input_qubit: c.input_qubit,
            ridge: c.ridge,
        }
    }
}

impl SweepGrid {
    pub fn cell_count(&self) -> usize {
        [self.gammas.len(), self.topologies.len(), self.readouts.len(), self.tasks.len()]
            .iter()
            .fold(1usize, |acc, &n| acc.saturating_mul(n))
    }

    /// Cells in (topology, γ, task, readout) order.
    pub fn cells(&self) -> Result<Vec<ExperimentConfig>, ExperimentError> {
        for (name, len) in [
            ("gammas", self.gammas.len()),
            ("topologies", self.topologies.len()),
            ("readouts", self.readouts.len()),
            ("tasks", self.tasks.len()),
        ] {
            if len == 0 {
                return Err(ExperimentError::Config(format!("sweep axis '{name}' is empty")));
            }
        }
        let count = self.cell_count();
        if count > MAX_GRID_CELLS {
            return Err(ExperimentError::Config(format!(
                "sweep expands to {count} cells, limit is {MAX_GRID_CELLS}"
            )));
        }
        let mut cells = Vec::with_capacity(count);
        for &topology in &self.topologies {
            for &gamma in &self.gammas {
                for &task in &self.tasks {
                    for &readout in &self.readouts {
                        let c = ExperimentConfig {
                            task,
                            topology,
                            readout,
                            gamma,
                            n_qubits: self.n_qubits,
                            theta0: self.theta0,
                            n_pre: self.n_pre,
                            n_fb: self.n_fb,
                            n_test: self.n_test,
                            coupling_seed: self.coupling_seed,
                            input_seed: self.input_seed,
                            input_qubit: self.input_qubit,
                            seed_count: self.seed_count,
                            stm_max_delay: self.stm_max_delay,
                            ridge: self.ridge,
                        };
                        c.validate()?;
                        cells.push(c);
                    }
                }
            }
        }
        Ok(cells)
    }
}

pub fn sweep(grid: &SweepGrid, with_trajectories: bool) -> Result<Vec<CellRun>, ExperimentError> {
    let cells = grid.cells()?;
    let mut groups: BTreeMap<(Topology, u64), Vec<ExperimentConfig>> = BTreeMap::new();
    for c in cells {
        groups.entry((c.topology, c.gamma.to_bits())).or_default().push(c);
    }
    let mut out = Vec::new();
    for group in groups.values() {
        out.extend(run_reservoir_group(group, with_trajectories)?);
    }
    Ok(out)
}

/// ESN comparison grid: variants × tasks sharing weight and input seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnGrid {
    pub variants: Vec<EsnVariant>,
    pub tasks: Vec<TaskKind>,
    pub n_nodes: usize,
    pub w_scale: f64,
    pub w_in_scale: f64,
    pub weight_seed: u64,
    pub input_seed: u64,
    pub n_pre: usize,
    pub n_fb: usize,
    pub n_test: usize,
    pub seed_count: usize,
    pub stm_max_delay: usize,
    pub ridge: f64,
}

impl Default for EsnGrid {
    fn default() -> Self {
        let c = EsnRunConfig::default();
        Self {
            variants: EsnVariant::ALL.to_vec(),
            tasks: vec![
                TaskKind::Stm,
                TaskKind::Narma(2),
                TaskKind::Narma(5),
                TaskKind::Narma(10),
                TaskKind::Narma(15),
            ],
            n_nodes: c.n_nodes,
            w_scale: c.w_scale,
            w_in_scale: c.w_in_scale,
            weight_seed: c.weight_seed,
            input_seed: c.input_seed,
            n_pre: c.n_pre,
            n_fb: c.n_fb,
            n_test: c.n_test,
            seed_count: c.seed_count,
            stm_max_delay: c.stm_max_delay,
            ridge: c.ridge,
        }
    }
}

impl EsnGrid {
    pub fn cells(&self) -> Result<Vec<EsnRunConfig>, ExperimentError> {
        if self.variants.is_empty() {
            return Err(ExperimentError::Config("ESN variant list is empty".into()));
        }
        if self.tasks.is_empty() {
            return Err(ExperimentError::Config("ESN task list is empty".into()));
        }
        if self.variants.len() * self.tasks.len() > MAX_GRID_CELLS {
            return Err(ExperimentError::Config("ESN grid too large".into()));
        }
        let mut cells = Vec::new();
        for &task in &self.tasks {
            for &variant in &self.variants {
                let c = EsnRunConfig {
                    task,
                    variant,
                    n_nodes: self.n_nodes,
                    w_scale: self.w_scale,
                    w_in_scale: self.w_in_scale,
                    weight_seed: self.weight_seed,
                    input_seed: self.input_seed,
                    n_pre: self.n_pre,
                    n_fb: self.n_fb,
                    n_test: self.n_test,
                    seed_count: self.seed_count,
                    stm_max_delay: self.stm_max_delay,
                    ridge: self.ridge,
                };
                c.validate()?;
                cells.push(c);
            }
        }
        Ok(cells)
    }
}

pub fn run_esn_comparison(grid: &EsnGrid, with_trajectories: bool) -> Result<Vec<CellRun>, ExperimentError> {
    grid.cells()?
        .iter()
        .map(|c| run_esn_cell(c, with_trajectories))
        .collect()
}

/// One line of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub task: String,
    pub topology: String,
    pub readout_type: String,
    pub gamma: Option<f64>,
    pub seed_count: usize,
    pub mean_metric: f64,
    pub std_metric: f64,
    sort_key: (u8, u8, usize, usize, String, String, u64),
}

impl MetricsRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.task,
            self.topology,
            self.readout_type,
            self.gamma.map(|g| g.to_string()).unwrap_or_default(),
            self.seed_count,
            format_number(self.mean_metric),
            format_number(self.std_metric),
        )
    }
}

/// 17 significant digits in scientific notation; round-trips any f64.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn metrics_rows(manifests: &[ExperimentManifest]) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    for m in manifests {
        let (kind_rank, topology, readout_type, gamma) = match &m.config {
            CellConfig::Reservoir(c) => (0u8, c.topology.to_string(), c.readout.to_string(), Some(c.gamma)),
            CellConfig::Esn(c) => (1u8, "esn".to_string(), c.variant.to_string(), None),
        };
        let (task_rank, order) = match m.config.task() {
            TaskKind::Stm => (0u8, 0usize),
            TaskKind::Narma(n) => (1u8, n),
        };
        for metric in &m.metrics {
            rows.push(MetricsRow {
                task: metric.label.clone(),
                topology: topology.clone(),
                readout_type: readout_type.clone(),
                gamma,
                seed_count: metric.per_seed.len(),
                mean_metric: metric.mean,
                std_metric: metric.std,
                sort_key: (
                    kind_rank,
                    task_rank,
                    order,
                    metric.delay.unwrap_or(0),
                    topology.clone(),
                    readout_type.clone(),
                    // Larger γ first.
                    u64::MAX - gamma.map_or(0, |g| g.to_bits()),
                ),
            });
        }
    }
    rows.sort_by(|a, b| a.sort_key.cmp(&b.sort_key));
    rows
}

pub fn render_metrics_csv(manifests: &[ExperimentManifest]) -> String {
    let mut out = String::new();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for row in metrics_rows(manifests) {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn render_trajectory_csv(table: &TrajectoryTable) -> String {
    let width = table.trajectory.rows.first().map_or(0, |r| r.observables.len());
    let mut out = String::from("step,phase,s_k");
    for i in 1..=width {
        let _ = write!(out, ",{}_{}", table.node_prefix, i);
    }
    out.push_str(",y_pred,y_target\n");
    for ((row, p), t) in table.trajectory.rows.iter().zip(&table.predicted).zip(&table.target) {
        let _ = write!(out, "{},{},{}", row.step, row.phase, format_number(row.input));
        for v in &row.observables {
            let _ = write!(out, ",{}", format_number(*v));
        }
        let _ = writeln!(out, ",{},{}", format_number(*p), format_number(*t));
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub metrics: PathBuf,
    pub manifests: Vec<PathBuf>,
    pub trajectories: Vec<PathBuf>,
}

/// Writes `metrics.csv`, one `manifest_<cell>.json` per manifest and one
/// `trajectory_<cell>.csv` per table into `out_dir`.
pub fn emit_report(
    manifests: &[ExperimentManifest],
    trajectories: &[TrajectoryTable],
    out_dir: &Path,
) -> Result<ReportFiles, ExperimentError> {
    if manifests.is_empty() {
        return Err(ExperimentError::Config("nothing to report".into()));
    }
    fs::create_dir_all(out_dir).map_err(|source| ExperimentError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let metrics = out_dir.join("metrics.csv");
    write_file(&metrics, &render_metrics_csv(manifests))?;
    let mut manifest_paths = Vec::new();
    for m in manifests {
        let path = out_dir.join(format!("manifest_{}.json", m.cell));
        let json = serde_json::to_string_pretty(m).expect("manifest serializes");
        write_file(&path, &(json + "\n"))?;
        manifest_paths.push(path);
    }
    let mut trajectory_paths = Vec::new();
    for t in trajectories {
        let path = out_dir.join(format!("trajectory_{}.csv", t.cell));
        write_file(&path, &render_trajectory_csv(t))?;
        trajectory_paths.push(path);
    }
    Ok(ReportFiles {
        metrics,
        manifests: manifest_paths,
        trajectories: trajectory_paths,
    })
}

/// Reads every `manifest_*.json` in a directory, sorted by file name.
pub fn load_manifests(dir: &Path) -> Result<Vec<ExperimentManifest>, ExperimentError> {
    let io_err = |source| ExperimentError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("manifest_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|source| ExperimentError::Json { path, source })
        })
        .collect()
}
