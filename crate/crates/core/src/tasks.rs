//! Benchmark sequences: delayed recall of random bits (STM) and NARMA-n.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Random stream for binary input draws.
pub const INPUT_STREAM: u64 = 1;

/// Frequencies of the three multiplied sines in the NARMA drive.
pub const NARMA_ALPHAS: [f64; 3] = [2.11, 3.73, 4.11];
/// Period normalization of the NARMA drive.
pub const NARMA_PERIOD: f64 = 100.0;

/// Divergence guard for the NARMA recurrence.
pub const NARMA_BOUND: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("NARMA order {0} is below 2")]
    BadOrder(usize),
    #[error("NARMA-{order} target diverged at step {step} (|y| = {value:.3e})")]
    Diverged { order: usize, step: usize, value: f64 },
    #[error("unknown task '{0}'")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TaskKind {
    /// Delayed recall; the delay is chosen at scoring time.
    Stm,
    Narma(usize),
}

impl TaskKind {
    pub fn uses_binary_input(self) -> bool {
        matches!(self, TaskKind::Stm)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Stm => f.write_str("stm"),
            TaskKind::Narma(n) => write!(f, "narma{n}"),
        }
    }
}

impl FromStr for TaskKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, TaskError> {
        let lower = s.to_ascii_lowercase();
        if lower == "stm" {
            return Ok(TaskKind::Stm);
        }
        match lower.strip_prefix("narma").map(str::parse::<usize>) {
            Some(Ok(n)) if n >= 2 => Ok(TaskKind::Narma(n)),
            _ => Err(TaskError::Unknown(s.to_string())),
        }
    }
}

impl TryFrom<String> for TaskKind {
    type Error = TaskError;

    fn try_from(s: String) -> Result<Self, TaskError> {
        s.parse()
    }
}

impl From<TaskKind> for String {
    fn from(t: TaskKind) -> String {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePair {
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

/// I.i.d. fair bits as `0.0` / `1.0`.
pub fn binary_inputs(length: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INPUT_STREAM);
    (0..length).map(|_| if rng.gen::<bool>() { 1.0 } else { 0.0 }).collect()
}

/// `target_k = input_{k−τ}`, zero before the start of the sequence.
pub fn delayed_targets(inputs: &[f64], tau_b: usize) -> Vec<f64> {
    (0..inputs.len())
        .map(|k| if k >= tau_b { inputs[k - tau_b] } else { 0.0 })
        .collect()
}

pub fn gen_stm(length: usize, tau_b: usize, seed: u64) -> SequencePair {
    let inputs = binary_inputs(length, seed);
    let targets = delayed_targets(&inputs, tau_b);
    SequencePair { inputs, targets }
}

/// `s_k = 0.1 [sin(2πα₀k/T) sin(2πα₁k/T) sin(2πα₂k/T) + 1]`, `k = 0, 1, …`
pub fn gen_narma_input(length: usize) -> Vec<f64> {
    (0..length)
        .map(|k| {
            let product: f64 = NARMA_ALPHAS
                .iter()
                .map(|a| (2.0 * PI * a * k as f64 / NARMA_PERIOD).sin())
                .product();
            0.1 * (product + 1.0)
        })
        .collect()
}

/// Coefficients of `y_{k+1} = a y_k + b y_k Σ_{j<n} y_{k−j} + c s_{k−n+1} s_k + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarmaCoefficients {
    pub linear: f64,
    pub window: f64,
    pub drive: f64,
    pub offset: f64,
}

impl Default for NarmaCoefficients {
    fn default() -> Self {
        Self {
            linear: 0.3,
            window: 0.05,
            drive: 1.5,
            offset: 0.1,
        }
    }
}

pub fn gen_narma_target(inputs: &[f64], order: usize) -> Result<Vec<f64>, TaskError> {
    gen_narma_target_with(inputs, order, NarmaCoefficients::default())
}

/// NARMA-n targets aligned with the inputs: `targets[0] = y_0 = 0` and
/// `targets[k+1]` is driven by `s_k` and `s_{k−n+1}`.
pub fn gen_narma_target_with(
    inputs: &[f64],
    order: usize,
    coeff: NarmaCoefficients,
) -> Result<Vec<f64>, TaskError> {
    if order < 2 {
        return Err(TaskError::BadOrder(order));
    }
    let len = inputs.len();
    let mut y = vec![0.0; len];
    let s = |i: isize| if i < 0 { 0.0 } else { inputs[i as usize] };
    for k in 0..len.saturating_sub(1) {
        let lo = (k + 1).saturating_sub(order);
        let window: f64 = y[lo..=k].iter().sum();
        let lag = k as isize - order as isize + 1;
        let next = coeff.linear * y[k]
            + coeff.window * y[k] * window
            + coeff.drive * s(lag) * s(k as isize)
            + coeff.offset;
        if !next.is_finite() || next.abs() > NARMA_BOUND {
            return Err(TaskError::Diverged {
                order,
                step: k + 1,
                value: next.abs(),
            });
        }
        y[k + 1] = next;
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub length: usize,
    /// Only used by STM.
    pub seed: u64,
}

impl TaskSpec {
    /// Inputs driving the reservoir for this task.
    pub fn inputs(&self) -> Vec<f64> {
        match self.kind {
            TaskKind::Stm => binary_inputs(self.length, self.seed),
            TaskKind::Narma(_) => gen_narma_input(self.length),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn stm_examples() {
        let p = gen_stm(50, 0, 9);
        assert_eq!(p.inputs, p.targets);
        assert!(p.inputs.iter().all(|&x| x == 0.0 || x == 1.0));

        let p = gen_stm(20, 20, 9);
        assert!(p.targets.iter().all(|&t| t == 0.0));

        assert_eq!(delayed_targets(&[1.0, 0.0, 1.0, 1.0], 1), vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(gen_stm(64, 3, 5), gen_stm(64, 3, 5));
        assert_ne!(gen_stm(64, 3, 5).inputs, gen_stm(64, 3, 6).inputs);
    }

    #[test]
    fn stm_bits_are_balanced() {
        let bits = binary_inputs(10_000, 1);
        let ones = bits.iter().sum::<f64>();
        assert!((ones - 5000.0).abs() < 250.0);
    }

    #[test]
    fn narma_input_examples() {
        let s = gen_narma_input(440);
        assert_eq!(s[0], 0.1);
        assert!(s.iter().all(|&x| (0.0..=0.2).contains(&x)));
        assert_eq!(NARMA_ALPHAS, [2.11, 3.73, 4.11]);
        assert_eq!(NARMA_PERIOD, 100.0);
    }

    #[test]
    fn narma_input_has_no_repeated_ten_grams() {
        let s = gen_narma_input(440);
        let grams: HashSet<Vec<u64>> = s
            .windows(10)
            .map(|w| w.iter().map(|x| x.to_bits()).collect())
            .collect();
        assert_eq!(grams.len(), 431);
    }

    #[test]
    fn narma_zero_input_converges_to_quadratic_root() {
        // Independent oracle: the fixed point of y = 0.3y + 0.05·y·(2y) + 0.1,
        // i.e. the smaller root of 0.1y² − 0.7y + 0.1 = 0.
        let oracle = (0.7 - (0.49f64 - 0.04).sqrt()) / 0.2;
        assert!((oracle - 0.145_898).abs() < 1e-6);
        let y = gen_narma_target(&vec![0.0; 400], 2).unwrap();
        assert!((y[399] - oracle).abs() < 1e-12);
    }

    #[test]
    fn narma_first_steps() {
        let s = gen_narma_input(10);
        let y = gen_narma_target(&s, 2).unwrap();
        assert_eq!(y[0], 0.0);
        // y_1 = 1.5·s_{−1}·s_0 + 0.1 with s_{−1} = 0.
        assert!((y[1] - 0.1).abs() < 1e-15);
        // y_2 = 0.3·0.1 + 0.05·0.1·(0.1 + 0) + 1.5·s_0·s_1 + 0.1
        let expect = 0.03 + 0.05 * 0.1 * 0.1 + 1.5 * s[0] * s[1] + 0.1;
        assert!((y[2] - expect).abs() < 1e-15);
    }

    #[test]
    fn narma_targets_stay_below_one() {
        let s = gen_narma_input(440);
        for n in [2, 5, 10, 15, 20] {
            let y = gen_narma_target(&s, n).unwrap();
            let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max < 1.0, "NARMA{n} max {max}");
        }
    }

    #[test]
    fn narma_drive_uses_only_two_inputs() {
        // Perturbing an input that neither drive term reads leaves the next value unchanged.
        let s = gen_narma_input(30);
        let y = gen_narma_target(&s, 2).unwrap();
        let mut perturbed = s.clone();
        perturbed[10] += 0.05;
        let y2 = gen_narma_target(&perturbed, 2).unwrap();
        assert_eq!(&y[..=10], &y2[..=10]);
        assert_ne!(y[11], y2[11]);
        // With the y-history pinned, y_{k+1} depends on s_{k−1}, s_k only.
        let k = 20;
        let window = y[k] + y[k - 1];
        let rebuilt = 0.3 * y[k] + 0.05 * y[k] * window + 1.5 * s[k - 1] * s[k] + 0.1;
        assert!((rebuilt - y[k + 1]).abs() < 1e-15);
    }

    #[test]
    fn narma_errors() {
        assert_eq!(gen_narma_target(&[0.1], 1), Err(TaskError::BadOrder(1)));
        let wild = NarmaCoefficients { linear: 3.0, ..NarmaCoefficients::default() };
        assert!(matches!(
            gen_narma_target_with(&gen_narma_input(100), 2, wild),
            Err(TaskError::Diverged { .. })
        ));
    }

    #[test]
    fn task_names_round_trip() {
        for name in ["stm", "narma2", "narma5", "narma10", "narma15", "narma20"] {
            let t: TaskKind = name.parse().unwrap();
            assert_eq!(t.to_string(), name);
        }
        assert!("narma1".parse::<TaskKind>().is_err());
        assert!("parity".parse::<TaskKind>().is_err());
        let json = serde_json::to_string(&TaskKind::Narma(10)).unwrap();
        assert_eq!(json, "\"narma10\"");
    }
}
