//! Linear readouts trained by least squares, and the two scores used to
//! judge them (NMSE and STM capacity).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{symmetric_eigen, LinalgError};
use crate::reservoir::Phase;

/// Relative eigenvalue cutoff of the Gram matrix below which a direction is
/// treated as rank deficient.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadoutError {
    #[error("no feature rows")]
    Empty,
    #[error("ragged feature matrix: row {row} has {got} columns, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("{rows} rows cannot determine {cols} weights")]
    Underdetermined { rows: usize, cols: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("ridge parameter {0} must be finite and non-negative")]
    BadRidge(f64),
    #[error("target has zero energy; NMSE is undefined")]
    ZeroTarget,
    #[error("non-finite value in readout data")]
    NonFinite,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReadoutType {
    /// Every `⟨Z_i⟩` plus an intercept.
    #[serde(rename = "I")]
    TypeI,
    /// Site-averaged `⟨Z⟩` plus an intercept.
    #[serde(rename = "II")]
    TypeII,
}

impl ReadoutType {
    pub fn weight_count(self, n_nodes: usize) -> usize {
        match self {
            ReadoutType::TypeI => n_nodes + 1,
            ReadoutType::TypeII => 2,
        }
    }
}

impl fmt::Display for ReadoutType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReadoutType::TypeI => "I",
            ReadoutType::TypeII => "II",
        })
    }
}

impl FromStr for ReadoutType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "1" | "I" | "TYPEI" => Ok(ReadoutType::TypeI),
            "2" | "II" | "TYPEII" => Ok(ReadoutType::TypeII),
            other => Err(format!("unknown readout type '{other}' (expected 1 or 2)")),
        }
    }
}

/// One time step as seen by the readout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub step: usize,
    pub phase: Phase,
    pub features: Vec<f64>,
    pub input: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    /// Intercept first.
    pub w: Vec<f64>,
    pub residual_rms: f64,
    /// `λ_max / λ_min` of the (regularized) Gram matrix; infinite when singular.
    pub condition: f64,
    /// Whether the minimum-norm pseudo-inverse path was taken.
    pub rank_deficient: bool,
}

fn check_rectangular(rows: &[Vec<f64>]) -> Result<usize, ReadoutError> {
    let cols = rows.first().ok_or(ReadoutError::Empty)?.len();
    for (row, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(ReadoutError::Ragged {
                row,
                expected: cols,
                got: r.len(),
            });
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(ReadoutError::NonFinite);
        }
    }
    Ok(cols)
}

/// Design matrix for a readout type: `(1, z_1, …, z_N)` or `(1, mean z)`.
pub fn make_features(z_rows: &[Vec<f64>], kind: ReadoutType) -> Result<Vec<Vec<f64>>, ReadoutError> {
    let cols = check_rectangular(z_rows)?;
    if cols == 0 {
        return Err(ReadoutError::Empty);
    }
    Ok(z_rows
        .iter()
        .map(|z| match kind {
            ReadoutType::TypeI => std::iter::once(1.0).chain(z.iter().copied()).collect(),
            ReadoutType::TypeII => vec![1.0, z.iter().sum::<f64>() / cols as f64],
        })
        .collect())
}

/// Minimizes `‖F w − y‖² + ridge ‖w‖²` through the normal equations.
///
/// The Gram matrix is diagonalized first; when its spectrum is well separated
/// from zero the system is solved by Cholesky, otherwise by the minimum-norm
/// pseudo-inverse that drops eigenvalues below `PINV_CUTOFF · λ_max`.
#[allow(clippy::needless_range_loop)]
pub fn train_weights(features: &[Vec<f64>], targets: &[f64], ridge: f64) -> Result<ReadoutWeights, ReadoutError> {
    let cols = check_rectangular(features)?;
    let rows = features.len();
    if rows != targets.len() {
        return Err(ReadoutError::LengthMismatch {
            left: rows,
            right: targets.len(),
        });
    }
    if rows < cols {
        return Err(ReadoutError::Underdetermined { rows, cols });
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(ReadoutError::BadRidge(ridge));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(ReadoutError::NonFinite);
    }

    let mut gram = vec![vec![0.0; cols]; cols];
    let mut rhs = vec![0.0; cols];
    for (f, &y) in features.iter().zip(targets) {
        for a in 0..cols {
            rhs[a] += f[a] * y;
            for b in a..cols {
                gram[a][b] += f[a] * f[b];
            }
        }
    }
    for a in 0..cols {
        gram[a][a] += ridge;
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }

    let (eigenvalues, eigenvectors) = symmetric_eigen(&gram)?;
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let lambda_min = eigenvalues.first().copied().unwrap_or(0.0);
    let condition = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };
    let cutoff = PINV_CUTOFF * lambda_max;

    let (w, rank_deficient) = match (lambda_min > cutoff).then(|| cholesky_solve(&gram, &rhs)).flatten() {
        Some(w) => (w, false),
        None => {
            let mut w = vec![0.0; cols];
            for (lambda, v) in eigenvalues.iter().zip(&eigenvectors) {
                if *lambda <= cutoff || *lambda <= 0.0 {
                    continue;
                }
                let coeff = v.iter().zip(&rhs).map(|(a, b)| a * b).sum::<f64>() / lambda;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi += coeff * vi;
                }
            }
            (w, true)
        }
    };

    let sq: f64 = features
        .iter()
        .zip(targets)
        .map(|(f, y)| (dot(f, &w) - y).powi(2))
        .sum();
    Ok(ReadoutWeights {
        w,
        residual_rms: (sq / rows as f64).sqrt(),
        condition,
        rank_deficient,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`; `None` if a pivot
/// is not positive.
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

pub fn predict(weights: &ReadoutWeights, features: &[Vec<f64>]) -> Result<Vec<f64>, ReadoutError> {
    features
        .iter()
        .map(|f| {
            if f.len() != weights.w.len() {
                Err(ReadoutError::LengthMismatch {
                    left: f.len(),
                    right: weights.w.len(),
                })
            } else {
                Ok(dot(f, &weights.w))
            }
        })
        .collect()
}

/// `Σ(ȳ − y)² / Σ ȳ²`.
pub fn nmse(predicted: &[f64], target: &[f64]) -> Result<f64, ReadoutError> {
    if predicted.len() != target.len() {
        return Err(ReadoutError::LengthMismatch {
            left: predicted.len(),
            right: target.len(),
        });
    }
    if target.is_empty() {
        return Err(ReadoutError::Empty);
    }
    let energy: f64 = target.iter().map(|t| t * t).sum();
    if energy == 0.0 {
        return Err(ReadoutError::ZeroTarget);
    }
    let err: f64 = predicted.iter().zip(target).map(|(p, t)| (t - p).powi(2)).sum();
    Ok(err / energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub value: f64,
    /// Set when either series is constant and the correlation is undefined.
    pub degenerate: bool,
}

/// Squared Pearson correlation. A constant series scores 0 and is flagged.
pub fn stm_capacity(predicted: &[f64], target: &[f64]) -> Result<Capacity, ReadoutError> {
    if predicted.len() != target.len() {
        return Err(ReadoutError::LengthMismatch {
            left: predicted.len(),
            right: target.len(),
        });
    }
    if predicted.len() < 2 {
        return Err(ReadoutError::Underdetermined {
            rows: predicted.len(),
            cols: 2,
        });
    }
    let n = predicted.len() as f64;
    let mp = predicted.iter().sum::<f64>() / n;
    let mt = target.iter().sum::<f64>() / n;
    let (mut cov, mut vp, mut vt) = (0.0, 0.0, 0.0);
    for (p, t) in predicted.iter().zip(target) {
        let (dp, dt) = (p - mp, t - mt);
        cov += dp * dt;
        vp += dp * dp;
        vt += dt * dt;
    }
    // Relative threshold: a series whose spread is pure rounding noise is constant.
    let flat = |v: f64, m: f64| v <= (f64::EPSILON * m.abs().max(f64::MIN_POSITIVE)).powi(2) * n * 16.0;
    if vp == 0.0 || vt == 0.0 || flat(vp, mp) || flat(vt, mt) {
        return Ok(Capacity {
            value: 0.0,
            degenerate: true,
        });
    }
    let r2 = (cov * cov) / (vp * vt);
    Ok(Capacity {
        value: r2.clamp(0.0, 1.0),
        degenerate: false,
    })
}

/// A trained readout scored on the test phase.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub weights: ReadoutWeights,
    /// Predictions for every record, in order.
    pub predictions: Vec<f64>,
    pub test_predictions: Vec<f64>,
    pub test_targets: Vec<f64>,
}

/// Trains on the `Train` records only and predicts every record.
/// `features` in each record must already be a design row (intercept included).
pub fn fit_records(records: &[FeatureRecord], ridge: f64) -> Result<FitOutcome, ReadoutError> {
    let (train_x, train_y): (Vec<Vec<f64>>, Vec<f64>) = records
        .iter()
        .filter(|r| r.phase == Phase::Train)
        .map(|r| (r.features.clone(), r.target))
        .unzip();
    let weights = train_weights(&train_x, &train_y, ridge)?;
    let all_x: Vec<Vec<f64>> = records.iter().map(|r| r.features.clone()).collect();
    let predictions = predict(&weights, &all_x)?;
    let (test_predictions, test_targets) = records
        .iter()
        .zip(&predictions)
        .filter(|(r, _)| r.phase == Phase::Test)
        .map(|(r, p)| (*p, r.target))
        .unzip();
    Ok(FitOutcome {
        weights,
        predictions,
        test_predictions,
        test_targets,
    })
}

/// Pairs design rows with phases, inputs and targets.
pub fn assemble_records(
    design: Vec<Vec<f64>>,
    phases: &[Phase],
    inputs: &[f64],
    targets: &[f64],
) -> Result<Vec<FeatureRecord>, ReadoutError> {
    let n = design.len();
    for len in [phases.len(), inputs.len(), targets.len()] {
        if len != n {
            return Err(ReadoutError::LengthMismatch { left: n, right: len });
        }
    }
    Ok(design
        .into_iter()
        .enumerate()
        .map(|(k, features)| FeatureRecord {
            step: k,
            phase: phases[k],
            features,
            input: inputs[k],
            target: targets[k],
        })
        .collect())
}
