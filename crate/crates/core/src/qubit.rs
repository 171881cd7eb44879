//! Many-qubit operators built from single-qubit Pauli matrices.
//!
//! Basis convention used throughout the crate: the computational basis index
//! `b = b₁b₂…b_N` in binary, with qubit 1 as the most significant bit and
//! `|0⟩` the spin-down ground state. `Z|0⟩ = +|0⟩`, so the ground state has
//! `⟨Z_i⟩ = +1` for every qubit.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{ComplexMatrix, LinalgError};

/// Largest register size the dense simulator accepts.
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QubitError {
    #[error("qubit index {index} out of range 1..={n_qubits}")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("register size {0} outside 1..={MAX_QUBITS}")]
    InvalidRegister(usize),
    #[error("coupling between qubit {0} and itself")]
    SelfCoupling(usize),
    #[error("rotation parameter {0} is not finite")]
    NonFiniteAngle(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];

    pub fn matrix(self) -> ComplexMatrix {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let data = match self {
            PauliAxis::X => vec![o, one, one, o],
            PauliAxis::Y => vec![o, -i, i, o],
            PauliAxis::Z => vec![one, o, o, -one],
        };
        ComplexMatrix::from_row_major(data).expect("2x2 Pauli matrix")
    }
}

/// 1-based qubit label, checked against the register size at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QubitIndex(usize);

impl QubitIndex {
    pub fn new(index: usize, n_qubits: usize) -> Result<Self, QubitError> {
        check_register(n_qubits)?;
        if index == 0 || index > n_qubits {
            return Err(QubitError::IndexOutOfRange { index, n_qubits });
        }
        Ok(Self(index))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Bit position of this qubit inside a basis index of an `n`-qubit register.
    pub fn bit(self, n_qubits: usize) -> usize {
        n_qubits - self.0
    }
}

impl fmt::Display for QubitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_register(n_qubits: usize) -> Result<(), QubitError> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(QubitError::InvalidRegister(n_qubits));
    }
    Ok(())
}

fn check_index(i: QubitIndex, n_qubits: usize) -> Result<(), QubitError> {
    check_register(n_qubits)?;
    if i.0 > n_qubits {
        return Err(QubitError::IndexOutOfRange {
            index: i.0,
            n_qubits,
        });
    }
    Ok(())
}

/// `I ⊗ … ⊗ σ ⊗ … ⊗ I` with `σ` at position `i` (position 1 leftmost).
pub fn pauli_embed(
    axis: PauliAxis,
    i: QubitIndex,
    n_qubits: usize,
) -> Result<ComplexMatrix, QubitError> {
    check_index(i, n_qubits)?;
    let id = ComplexMatrix::identity(2);
    let sigma = axis.matrix();
    let mut out = ComplexMatrix::identity(1);
    for pos in 1..=n_qubits {
        let factor = if pos == i.0 { &sigma } else { &id };
        out = out.kron(factor)?;
    }
    Ok(out)
}

/// `X_iX_j + Y_iY_j + Z_iZ_j` on an `n`-qubit register.
pub fn heisenberg_term(
    i: QubitIndex,
    j: QubitIndex,
    n_qubits: usize,
) -> Result<ComplexMatrix, QubitError> {
    if i == j {
        return Err(QubitError::SelfCoupling(i.0));
    }
    let dim = 1usize << n_qubits;
    let mut out = ComplexMatrix::zeros(dim);
    for axis in PauliAxis::ALL {
        let a = pauli_embed(axis, i, n_qubits)?;
        let b = pauli_embed(axis, j, n_qubits)?;
        out = &out + &a.matmul(&b)?;
    }
    Ok(out)
}

/// `exp(+iπ s X_q / 2)` on input qubit `q`, identity elsewhere.
pub fn rotation_x_on(
    s: f64,
    qubit: QubitIndex,
    n_qubits: usize,
) -> Result<ComplexMatrix, QubitError> {
    if !s.is_finite() {
        return Err(QubitError::NonFiniteAngle(s));
    }
    let half = PI * s / 2.0;
    let x = pauli_embed(PauliAxis::X, qubit, n_qubits)?;
    let id = ComplexMatrix::identity(x.dim());
    Ok(&(&id * half.cos()) + &x.scale(Complex64::new(0.0, half.sin())))
}

/// `exp(+iπ s X₁ / 2)`: the input pulse on qubit 1.
pub fn rotation_x(s: f64, n_qubits: usize) -> Result<ComplexMatrix, QubitError> {
    rotation_x_on(s, QubitIndex::new(1, n_qubits)?, n_qubits)
}

/// `|0…0⟩⟨0…0|`.
pub fn ground_density(n_qubits: usize) -> Result<ComplexMatrix, QubitError> {
    check_register(n_qubits)?;
    let mut rho = ComplexMatrix::zeros(1 << n_qubits);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    Ok(rho)
}

/// Diagonal of `Z_i` as ±1 signs, indexed by basis state.
pub fn z_signs(i: QubitIndex, n_qubits: usize) -> Vec<f64> {
    let bit = i.bit(n_qubits);
    (0..1usize << n_qubits)
        .map(|b| if (b >> bit) & 1 == 0 { 1.0 } else { -1.0 })
        .collect()
}
