//! Exact density-matrix simulation of reservoir computing on a small array of
//! Heisenberg-coupled spin qubits with reset dissipation, plus the linear
//! readouts, benchmark tasks, echo-state-network baseline and experiment
//! runner built around it.
//!
//! Basis convention: qubit 1 is the most significant bit of a basis index and
//! `|0⟩` is the spin-down ground state with `⟨Z⟩ = +1`.

pub mod esn;
pub mod experiment;
pub mod linalg;
pub mod qubit;
pub mod readout;
pub mod reservoir;
pub mod tasks;

pub use linalg::{ComplexMatrix, HermitianEigen};
pub use readout::{FeatureRecord, ReadoutType, ReadoutWeights};
pub use reservoir::{Phase, Reservoir, ReservoirConfig, ReservoirState, Topology, Trajectory};
pub use tasks::TaskKind;
