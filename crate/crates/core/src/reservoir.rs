//! Heisenberg-coupled qubit reservoir with reset dissipation.
//!
//! One time step with input `s` maps
//!
//! ```text
//! ρ ↦ (1 − γ) · U R(s) ρ R(s)† U† + γ ρ₀,    R(s) = exp(+iπ s X_q / 2),  U = exp(−iΔt H)
//! ```
//!
//! and then reads `⟨Z_i⟩ = Tr(Z_i ρ)` for every qubit. The input pulse comes
//! first, then free evolution, then mixing toward `ρ₀ = |0…0⟩⟨0…0|`, then the
//! measurement. `U` is fixed for a whole run and is computed once.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eigen, ComplexMatrix, HermitianEigen, LinalgError};
use crate::qubit::{self, heisenberg_term, QubitError, QubitIndex};

/// Tolerance for the trace and Hermiticity checks done on every step.
pub const STATE_TOL: f64 = 1e-10;

/// Random stream reserved for coupling draws; inputs and ESN weights use
/// other streams of the same generator family.
pub const COUPLING_STREAM: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReservoirError {
    #[error("invalid reservoir configuration: {0}")]
    Config(String),
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("state invariant violated at step {step}: {detail}")]
    Invariant { step: usize, detail: String },
    #[error(transparent)]
    Qubit(#[from] QubitError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Linear,
    Ring,
}

impl Topology {
    /// Nearest-neighbour bonds `(i, i+1)`, plus `(N, 1)` for a ring.
    pub fn edges(self, n_qubits: usize) -> Result<Vec<(QubitIndex, QubitIndex)>, ReservoirError> {
        if n_qubits < 2 {
            return Err(ReservoirError::Config(format!(
                "a coupled register needs at least 2 qubits, got {n_qubits}"
            )));
        }
        if self == Topology::Ring && n_qubits < 3 {
            return Err(ReservoirError::Config(
                "a ring needs at least 3 qubits".to_string(),
            ));
        }
        let mut edges = Vec::with_capacity(n_qubits);
        for i in 1..n_qubits {
            edges.push((
                QubitIndex::new(i, n_qubits)?,
                QubitIndex::new(i + 1, n_qubits)?,
            ));
        }
        if self == Topology::Ring {
            edges.push((
                QubitIndex::new(n_qubits, n_qubits)?,
                QubitIndex::new(1, n_qubits)?,
            ));
        }
        Ok(edges)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Linear => "linear",
            Topology::Ring => "ring",
        })
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "chain" => Ok(Topology::Linear),
            "ring" => Ok(Topology::Ring),
            other => Err(format!("unknown topology '{other}' (expected linear or ring)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: QubitIndex,
    pub j: QubitIndex,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub n_qubits: usize,
    pub bonds: Vec<Bond>,
}

impl CouplingSet {
    /// Hand-built coupling set; every `J` must lie in `[0, 1]`.
    pub fn new(n_qubits: usize, bonds: Vec<Bond>) -> Result<Self, ReservoirError> {
        for b in &bonds {
            if !(0.0..=1.0).contains(&b.coupling) {
                return Err(ReservoirError::Config(format!(
                    "coupling {} on bond ({}, {}) outside [0, 1]",
                    b.coupling, b.i, b.j
                )));
            }
            if b.i == b.j {
                return Err(QubitError::SelfCoupling(b.i.get()).into());
            }
            QubitIndex::new(b.i.get().max(b.j.get()), n_qubits)?;
        }
        Ok(Self { n_qubits, bonds })
    }

    pub fn max_coupling(&self) -> f64 {
        self.bonds.iter().map(|b| b.coupling).fold(0.0, f64::max)
    }
}

/// Draws `J ~ U[0, 1)` for every topology edge and rescales so `max J = 1`.
pub fn sample_couplings(
    topology: Topology,
    n_qubits: usize,
    seed: u64,
) -> Result<CouplingSet, ReservoirError> {
    let edges = topology.edges(n_qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(COUPLING_STREAM);
    let raw: Vec<f64> = edges.iter().map(|_| rng.gen::<f64>()).collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    let bonds = edges
        .into_iter()
        .zip(raw)
        .map(|((i, j), r)| Bond {
            i,
            j,
            coupling: if max > 0.0 { r / max } else { 0.0 },
        })
        .collect();
    Ok(CouplingSet { n_qubits, bonds })
}

/// `H = Σ_bonds J_ij (X_iX_j + Y_iY_j + Z_iZ_j)`.
pub fn build_hamiltonian(c: &CouplingSet) -> Result<ComplexMatrix, ReservoirError> {
    let mut h = ComplexMatrix::zeros(1 << c.n_qubits);
    for b in &c.bonds {
        h = &h + &(&heisenberg_term(b.i, b.j, c.n_qubits)? * b.coupling);
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub n_qubits: usize,
    pub topology: Topology,
    pub gamma: f64,
    pub theta0: f64,
    pub n_pre: usize,
    pub n_fb: usize,
    pub n_test: usize,
    pub coupling_seed: u64,
    pub input_seed: u64,
    /// Qubit receiving the input pulses.
    pub input_qubit: usize,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            n_qubits: 6,
            topology: Topology::Linear,
            gamma: 0.1,
            theta0: 0.5,
            n_pre: 200,
            n_fb: 200,
            n_test: 40,
            coupling_seed: 1,
            input_seed: 1,
            input_qubit: 1,
        }
    }
}

impl ReservoirConfig {
    /// Free-evolution time per step, `π θ₀`.
    pub fn dt(&self) -> f64 {
        PI * self.theta0
    }

    pub fn total_steps(&self) -> usize {
        self.n_pre + self.n_fb + self.n_test
    }

    pub fn phase_of(&self, step: usize) -> Phase {
        if step < self.n_pre {
            Phase::Prep
        } else if step < self.n_pre + self.n_fb {
            Phase::Train
        } else {
            Phase::Test
        }
    }

    pub fn validate(&self) -> Result<(), ReservoirError> {
        let bad = |msg: String| Err(ReservoirError::Config(msg));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if !(self.dt() > 0.0 && self.dt().is_finite()) {
            return bad(format!("theta0 {} gives a non-positive time step", self.theta0));
        }
        if self.n_pre == 0 || self.n_fb == 0 || self.n_test == 0 {
            return bad("phase lengths must be positive".to_string());
        }
        self.topology.edges(self.n_qubits)?;
        QubitIndex::new(self.input_qubit, self.n_qubits)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Prep,
    Train,
    Test,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Prep => "prep",
            Phase::Train => "train",
            Phase::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub rho: ComplexMatrix,
    pub step: usize,
}

impl ReservoirState {
    pub fn new(rho: ComplexMatrix) -> Self {
        Self { rho, step: 0 }
    }

    /// Trace, Hermiticity and diagonal-sign checks. These are cheap enough
    /// to run every step; the full spectrum check is [`Self::min_eigenvalue`].
    pub fn check(&self) -> Result<(), ReservoirError> {
        let fail = |detail: String| {
            Err(ReservoirError::Invariant {
                step: self.step,
                detail,
            })
        };
        if !self.rho.is_finite() {
            return fail("non-finite density matrix entry".to_string());
        }
        let tr = self.rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() >= STATE_TOL {
            return fail(format!("trace {tr} differs from 1"));
        }
        let herm = self.rho.hermitian_defect();
        if herm >= STATE_TOL {
            return fail(format!("Hermiticity defect {herm:.3e}"));
        }
        if let Some(d) = self.rho.diagonal().iter().find(|d| d.re < -STATE_TOL) {
            return fail(format!("negative population {}", d.re));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> Result<f64, ReservoirError> {
        Ok(hermitian_eigen(&self.rho)?.eigenvalues[0])
    }

    pub fn purity(&self) -> f64 {
        self.rho.trace_product_re(&self.rho)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub z_expect: Vec<f64>,
}

/// `½ Σ |λ_k(a − b)|`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, ReservoirError> {
    let eig = hermitian_eigen(&(a - b))?;
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// The pieces of one step that stay fixed over a run.
#[derive(Debug, Clone)]
pub struct StepKernel {
    n_qubits: usize,
    propagator: ComplexMatrix,
    gamma: f64,
    rho0: ComplexMatrix,
    input_mask: usize,
    z_signs: Vec<Vec<f64>>,
}

impl StepKernel {
    pub fn new(
        propagator: ComplexMatrix,
        gamma: f64,
        rho0: ComplexMatrix,
        input_qubit: QubitIndex,
    ) -> Result<Self, ReservoirError> {
        let dim = propagator.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(ReservoirError::Config(format!(
                "propagator dimension {dim} is not a qubit register"
            )));
        }
        if rho0.dim() != dim {
            return Err(LinalgError::DimensionMismatch {
                left: dim,
                right: rho0.dim(),
            }
            .into());
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(ReservoirError::Config(format!("gamma {gamma} outside [0, 1]")));
        }
        let defect = propagator.unitarity_defect();
        if defect >= crate::linalg::FROBENIUS_TOL {
            return Err(ReservoirError::Config(format!(
                "propagator is not unitary (defect {defect:.3e})"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let input_qubit = QubitIndex::new(input_qubit.get(), n_qubits)?;
        let z_signs = (1..=n_qubits)
            .map(|i| qubit::z_signs(QubitIndex::new(i, n_qubits).expect("in range"), n_qubits))
            .collect();
        Ok(Self {
            n_qubits,
            propagator,
            gamma,
            rho0,
            input_mask: 1 << input_qubit.bit(n_qubits),
            z_signs,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `U · R(s)`. `R(s) = cos(πs/2) I + i sin(πs/2) X_q`, and right-multiplying
    /// by `X_q` just permutes columns, so no dense product is needed.
    fn pulsed_propagator(&self, s: f64) -> ComplexMatrix {
        let half = PI * s / 2.0;
        let (sin, cos) = half.sin_cos();
        if sin == 0.0 {
            return self.propagator.scale(Complex64::new(cos, 0.0));
        }
        let u = &self.propagator;
        let n = u.dim();
        let isin = Complex64::new(0.0, sin);
        let mut w = ComplexMatrix::zeros(n);
        for r in 0..n {
            for b in 0..n {
                w[(r, b)] = u[(r, b)] * cos + u[(r, b ^ self.input_mask)] * isin;
            }
        }
        w
    }

    pub fn measure(&self, rho: &ComplexMatrix) -> StepOutput {
        let diag = rho.diagonal();
        let z_expect = self
            .z_signs
            .iter()
            .map(|signs| signs.iter().zip(&diag).map(|(s, d)| s * d.re).sum())
            .collect();
        StepOutput { z_expect }
    }

    /// Advances one step without checking the incoming state.
    pub fn advance(&self, state: &ReservoirState, s: f64) -> Result<(ReservoirState, StepOutput), ReservoirError> {
        if !s.is_finite() {
            return Err(QubitError::NonFiniteAngle(s).into());
        }
        let w = self.pulsed_propagator(s);
        let evolved = w.conjugate_hermitian(&state.rho)?;
        let rho = &(&evolved * (1.0 - self.gamma)) + &(&self.rho0 * self.gamma);
        let out = self.measure(&rho);
        Ok((
            ReservoirState {
                rho,
                step: state.step + 1,
            },
            out,
        ))
    }

    /// Checks the incoming state, then advances one step.
    pub fn step(&self, state: &ReservoirState, s: f64) -> Result<(ReservoirState, StepOutput), ReservoirError> {
        if state.rho.dim() != self.propagator.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.propagator.dim(),
                right: state.rho.dim(),
            }
            .into());
        }
        state.check()?;
        self.advance(state, s)
    }
}

/// One dissipative step with the input pulse on qubit 1.
pub fn step(
    state: &ReservoirState,
    s_k: f64,
    u: &ComplexMatrix,
    gamma: f64,
    rho0: &ComplexMatrix,
) -> Result<(ReservoirState, StepOutput), ReservoirError> {
    let n_qubits = u.dim().trailing_zeros() as usize;
    let kernel = StepKernel::new(u.clone(), gamma, rho0.clone(), QubitIndex::new(1, n_qubits)?)?;
    kernel.step(state, s_k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub phase: Phase,
    pub input: f64,
    /// Per-node observables after this step (`⟨Z_i⟩` for the qubit reservoir).
    pub observables: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn observables(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.observables.clone()).collect()
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.rows.iter().map(|r| r.phase).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A fully assembled reservoir: couplings, Hamiltonian spectrum and step kernel.
#[derive(Debug, Clone)]
pub struct Reservoir {
    config: ReservoirConfig,
    couplings: CouplingSet,
    spectrum: HermitianEigen,
    kernel: StepKernel,
}

impl Reservoir {
    pub fn new(config: &ReservoirConfig) -> Result<Self, ReservoirError> {
        config.validate()?;
        let couplings = sample_couplings(config.topology, config.n_qubits, config.coupling_seed)?;
        Self::with_couplings(config, couplings)
    }

    pub fn with_couplings(config: &ReservoirConfig, couplings: CouplingSet) -> Result<Self, ReservoirError> {
        config.validate()?;
        if couplings.n_qubits != config.n_qubits {
            return Err(ReservoirError::Config(format!(
                "couplings built for {} qubits, config has {}",
                couplings.n_qubits, config.n_qubits
            )));
        }
        let hamiltonian = build_hamiltonian(&couplings)?;
        let spectrum = hermitian_eigen(&hamiltonian)?;
        let propagator = spectrum.unitary_exp(config.dt());
        let kernel = StepKernel::new(
            propagator,
            config.gamma,
            qubit::ground_density(config.n_qubits)?,
            QubitIndex::new(config.input_qubit, config.n_qubits)?,
        )?;
        Ok(Self {
            config: config.clone(),
            couplings,
            spectrum,
            kernel,
        })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn couplings(&self) -> &CouplingSet {
        &self.couplings
    }

    pub fn spectrum(&self) -> &HermitianEigen {
        &self.spectrum
    }

    pub fn kernel(&self) -> &StepKernel {
        &self.kernel
    }

    pub fn initial_state(&self) -> ReservoirState {
        ReservoirState::new(qubit::ground_density(self.config.n_qubits).expect("validated register"))
    }

    /// Runs the full prep/train/test sequence from the ground state.
    pub fn run_sequence(&self, inputs: &[f64]) -> Result<Trajectory, ReservoirError> {
        let expected = self.config.total_steps();
        if inputs.len() != expected {
            return Err(ReservoirError::InputLength {
                expected,
                got: inputs.len(),
            });
        }
        let mut state = self.initial_state();
        let mut rows = Vec::with_capacity(expected);
        for (k, &s) in inputs.iter().enumerate() {
            let (next, out) = self.kernel.step(&state, s)?;
            rows.push(TrajectoryRow {
                step: k,
                phase: self.config.phase_of(k),
                input: s,
                observables: out.z_expect,
            });
            state = next;
        }
        state.check()?;
        Ok(Trajectory { rows })
    }
}

pub fn run_sequence(config: &ReservoirConfig, inputs: &[f64]) -> Result<Trajectory, ReservoirError> {
    Reservoir::new(config)?.run_sequence(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_exp;
    use crate::qubit::{ground_density, rotation_x};

    fn small_config(n: usize, gamma: f64) -> ReservoirConfig {
        ReservoirConfig {
            n_qubits: n,
            gamma,
            n_pre: 5,
            n_fb: 5,
            n_test: 5,
            ..ReservoirConfig::default()
        }
    }

    #[test]
    fn edge_counts() {
        assert_eq!(Topology::Linear.edges(6).unwrap().len(), 5);
        assert_eq!(Topology::Ring.edges(6).unwrap().len(), 6);
        let ring = Topology::Ring.edges(4).unwrap();
        assert_eq!((ring[3].0.get(), ring[3].1.get()), (4, 1));
        assert!(Topology::Ring.edges(2).is_err());
        assert!(Topology::Linear.edges(1).is_err());
    }

    #[test]
    fn couplings_are_deterministic_and_normalized() {
        let a = sample_couplings(Topology::Linear, 6, 42).unwrap();
        let b = sample_couplings(Topology::Linear, 6, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.max_coupling(), 1.0);
        assert!(a.bonds.iter().all(|b| (0.0..=1.0).contains(&b.coupling)));
        assert_ne!(a, sample_couplings(Topology::Linear, 6, 43).unwrap());
        assert_eq!(sample_couplings(Topology::Ring, 6, 42).unwrap().bonds.len(), 6);
    }

    #[test]
    fn hamiltonian_examples() {
        let empty = CouplingSet::new(3, vec![]).unwrap();
        assert_eq!(build_hamiltonian(&empty).unwrap(), ComplexMatrix::zeros(8));

        let single = CouplingSet::new(
            2,
            vec![Bond {
                i: QubitIndex::new(1, 2).unwrap(),
                j: QubitIndex::new(2, 2).unwrap(),
                coupling: 1.0,
            }],
        )
        .unwrap();
        let h = build_hamiltonian(&single).unwrap();
        let e = hermitian_eigen(&h).unwrap();
        for (a, b) in e.eigenvalues.iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }

        let h6 = build_hamiltonian(&sample_couplings(Topology::Ring, 6, 3).unwrap()).unwrap();
        assert!(h6.hermitian_defect() < 1e-12);
        assert!(h6.trace().norm() < 1e-12);
    }

    #[test]
    fn coupling_set_validation() {
        let q = |i| QubitIndex::new(i, 3).unwrap();
        assert!(CouplingSet::new(3, vec![Bond { i: q(1), j: q(2), coupling: 1.5 }]).is_err());
        assert!(CouplingSet::new(3, vec![Bond { i: q(2), j: q(2), coupling: 0.5 }]).is_err());
        assert!(CouplingSet::new(2, vec![Bond { i: q(1), j: q(3), coupling: 0.5 }]).is_err());
    }

    #[test]
    fn full_reset_returns_ground_state() {
        let n = 3;
        let h = build_hamiltonian(&sample_couplings(Topology::Linear, n, 9).unwrap()).unwrap();
        let u = unitary_exp(&h, PI / 2.0).unwrap();
        let rho0 = ground_density(n).unwrap();
        let state = ReservoirState::new(rho0.clone());
        let (next, out) = step(&state, 0.7, &u, 1.0, &rho0).unwrap();
        assert!(next.rho.max_abs_diff(&rho0) < 1e-15);
        assert_eq!(out.z_expect, vec![1.0; n]);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn identity_evolution_leaves_state_unchanged() {
        let n = 2;
        let u = ComplexMatrix::identity(4);
        let rho0 = ground_density(n).unwrap();
        // A mixed, non-diagonal state.
        let r = rotation_x(0.3, n).unwrap();
        let mut rho = r.matmul(&rho0).unwrap().matmul(&r.adjoint()).unwrap();
        rho = &(&rho * 0.5) + &(&ComplexMatrix::identity(4) * 0.125);
        let state = ReservoirState::new(rho.clone());
        let (next, _) = step(&state, 0.0, &u, 0.0, &rho0).unwrap();
        assert!(next.rho.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn single_qubit_flip_reads_minus_one() {
        let rho0 = ground_density(1).unwrap();
        let state = ReservoirState::new(rho0.clone());
        let (_, out) = step(&state, 1.0, &ComplexMatrix::identity(2), 0.0, &rho0).unwrap();
        assert!((out.z_expect[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pulsed_propagator_matches_dense_rotation() {
        let n = 3;
        let h = build_hamiltonian(&sample_couplings(Topology::Ring, n, 5).unwrap()).unwrap();
        let u = unitary_exp(&h, 0.9).unwrap();
        for q in 1..=n {
            let qi = QubitIndex::new(q, n).unwrap();
            let kernel = StepKernel::new(u.clone(), 0.1, ground_density(n).unwrap(), qi).unwrap();
            for s in [0.0, 0.07, 0.5, 1.0, -0.3] {
                let dense = u.matmul(&qubit::rotation_x_on(s, qi, n).unwrap()).unwrap();
                assert!(kernel.pulsed_propagator(s).max_abs_diff(&dense) < 1e-15);
            }
        }
    }

    #[test]
    fn step_rejects_bad_state() {
        let rho0 = ground_density(1).unwrap();
        let bad = ReservoirState::new(&rho0 * 2.0);
        let err = step(&bad, 0.0, &ComplexMatrix::identity(2), 0.1, &rho0).unwrap_err();
        assert!(matches!(err, ReservoirError::Invariant { .. }));

        let mut skew = rho0.clone();
        skew[(0, 1)] = Complex64::new(0.1, 0.0);
        let err = step(&ReservoirState::new(skew), 0.0, &ComplexMatrix::identity(2), 0.1, &rho0)
            .unwrap_err();
        assert!(matches!(err, ReservoirError::Invariant { .. }));
    }

    #[test]
    fn step_rejects_non_unitary_propagator() {
        let rho0 = ground_density(1).unwrap();
        let u = &ComplexMatrix::identity(2) * 1.1;
        assert!(matches!(
            step(&ReservoirState::new(rho0.clone()), 0.0, &u, 0.1, &rho0),
            Err(ReservoirError::Config(_))
        ));
    }

    #[test]
    fn run_sequence_shapes_and_phases() {
        let cfg = small_config(3, 0.1);
        let inputs = vec![0.0; cfg.total_steps()];
        let traj = run_sequence(&cfg, &inputs).unwrap();
        assert_eq!(traj.len(), 15);
        assert_eq!(traj.rows[0].phase, Phase::Prep);
        assert_eq!(traj.rows[5].phase, Phase::Train);
        assert_eq!(traj.rows[14].phase, Phase::Test);
        // The ground state is stationary under zero input.
        for row in &traj.rows {
            for z in &row.observables {
                assert!((z - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(traj, run_sequence(&cfg, &inputs).unwrap());
        assert!(matches!(
            run_sequence(&cfg, &inputs[1..]),
            Err(ReservoirError::InputLength { expected: 15, got: 14 })
        ));
    }

    #[test]
    fn initial_measurement_is_all_up() {
        let r = Reservoir::new(&small_config(4, 0.1)).unwrap();
        let out = r.kernel().measure(&r.initial_state().rho);
        assert_eq!(out.z_expect, vec![1.0; 4]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ReservoirConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.total_steps(), 440);
        cfg.gamma = 1.5;
        assert!(cfg.validate().is_err());
        cfg = ReservoirConfig { theta0: 0.0, ..ReservoirConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = ReservoirConfig { n_test: 0, ..ReservoirConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = ReservoirConfig { input_qubit: 7, ..ReservoirConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unitary_evolution_conserves_purity() {
        let cfg = small_config(3, 0.0);
        let r = Reservoir::new(&cfg).unwrap();
        let mut state = r.initial_state();
        for k in 0..50 {
            let s = if k % 3 == 0 { 1.0 } else { 0.21 };
            state = r.kernel().step(&state, s).unwrap().0;
            assert!((state.purity() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = ground_density(1).unwrap();
        let mut b = ComplexMatrix::zeros(2);
        b[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }
}
