//! Echo-state network baseline whose update can reach back several steps.
//!
//! ```text
//! x_k = tanh( W (x_{k−1} [+ x_{k−3}] [+ x_{k−5}]) + w_in s_k )
//! ```
//!
//! ESN1 uses only the previous state, ESN3 adds the state three steps back,
//! ESN5 adds the one five steps back. All variants draw identical `W` and
//! `w_in` from the same seed, so only the history combination differs.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::reservoir::{Phase, Trajectory, TrajectoryRow};

/// Random stream for ESN weight draws.
pub const WEIGHT_STREAM: u64 = 2;

const HISTORY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EsnVariant {
    Esn1,
    Esn3,
    Esn5,
}

impl EsnVariant {
    pub const ALL: [EsnVariant; 3] = [EsnVariant::Esn1, EsnVariant::Esn3, EsnVariant::Esn5];

    /// How many steps back each summed history term sits.
    pub fn lags(self) -> &'static [usize] {
        match self {
            EsnVariant::Esn1 => &[1],
            EsnVariant::Esn3 => &[1, 3],
            EsnVariant::Esn5 => &[1, 3, 5],
        }
    }
}

impl fmt::Display for EsnVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EsnVariant::Esn1 => "esn1",
            EsnVariant::Esn3 => "esn3",
            EsnVariant::Esn5 => "esn5",
        })
    }
}

impl FromStr for EsnVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "esn1" | "1" => Ok(EsnVariant::Esn1),
            "esn3" | "3" => Ok(EsnVariant::Esn3),
            "esn5" | "5" => Ok(EsnVariant::Esn5),
            other => Err(format!("unknown ESN variant '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnConfig {
    pub n_nodes: usize,
    pub variant: EsnVariant,
    /// Recurrent weights are uniform on `[0, w_scale]`.
    pub w_scale: f64,
    /// Input weights are uniform on `[0, w_in_scale]`.
    pub w_in_scale: f64,
    pub weight_seed: u64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            n_nodes: 6,
            variant: EsnVariant::Esn1,
            w_scale: 0.4,
            w_in_scale: 0.4,
            weight_seed: 1,
        }
    }
}

impl EsnConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_nodes == 0 {
            return Err("ESN needs at least one node".to_string());
        }
        if !(self.w_scale > 0.0 && self.w_in_scale > 0.0) {
            return Err(format!(
                "ESN weight scales must be positive (w_scale {}, w_in_scale {})",
                self.w_scale, self.w_in_scale
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnWeights {
    /// `n × n`, row `i` feeds node `i`.
    pub recurrent: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl EsnWeights {
    /// Draws weights from the seed. The variant plays no part, so every
    /// variant with the same seed shares them.
    pub fn sample(config: &EsnConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.weight_seed);
        rng.set_stream(WEIGHT_STREAM);
        let n = config.n_nodes;
        let recurrent = (0..n)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() * config.w_scale).collect())
            .collect();
        let input = (0..n).map(|_| rng.gen::<f64>() * config.w_in_scale).collect();
        Self { recurrent, input }
    }
}

/// The last five states, most recent first. Starts at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnState {
    history: VecDeque<Vec<f64>>,
}

impl EsnState {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            history: (0..HISTORY).map(|_| vec![0.0; n_nodes]).collect(),
        }
    }

    /// `states[0]` is `x_{k−1}`, `states[4]` is `x_{k−5}`.
    pub fn from_history(states: Vec<Vec<f64>>) -> Self {
        assert_eq!(states.len(), HISTORY, "ESN history holds exactly five states");
        Self {
            history: states.into(),
        }
    }

    /// State `lag` steps back (`lag` in 1..=5).
    pub fn lagged(&self, lag: usize) -> &[f64] {
        &self.history[lag - 1]
    }
}

pub fn esn_step(
    state: &EsnState,
    s_k: f64,
    config: &EsnConfig,
    weights: &EsnWeights,
) -> (EsnState, Vec<f64>) {
    let n = weights.input.len();
    let mut combined = vec![0.0; n];
    for &lag in config.variant.lags() {
        for (c, x) in combined.iter_mut().zip(state.lagged(lag)) {
            *c += x;
        }
    }
    let x: Vec<f64> = weights
        .recurrent
        .iter()
        .zip(&weights.input)
        .map(|(row, w_in)| {
            let drive: f64 = row.iter().zip(&combined).map(|(w, c)| w * c).sum();
            (drive + w_in * s_k).tanh()
        })
        .collect();
    let mut history = state.history.clone();
    history.pop_back();
    history.push_front(x.clone());
    (EsnState { history }, x)
}

/// Runs the network from a zero history, tagging rows with the same
/// prep/train/test split as the qubit reservoir.
pub fn run_esn(config: &EsnConfig, inputs: &[f64], n_pre: usize, n_fb: usize) -> Trajectory {
    run_esn_from(config, EsnState::zeros(config.n_nodes), inputs, n_pre, n_fb)
}

pub fn run_esn_from(
    config: &EsnConfig,
    initial: EsnState,
    inputs: &[f64],
    n_pre: usize,
    n_fb: usize,
) -> Trajectory {
    let weights = EsnWeights::sample(config);
    let mut state = initial;
    let rows = inputs
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let (next, x) = esn_step(&state, s, config, &weights);
            state = next;
            TrajectoryRow {
                step: k,
                phase: if k < n_pre {
                    Phase::Prep
                } else if k < n_pre + n_fb {
                    Phase::Train
                } else {
                    Phase::Test
                },
                input: s,
                observables: x,
            }
        })
        .collect();
    Trajectory { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::binary_inputs;

    fn config(variant: EsnVariant) -> EsnConfig {
        EsnConfig {
            variant,
            weight_seed: 17,
            ..EsnConfig::default()
        }
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let cfg = config(EsnVariant::Esn5);
        let w = EsnWeights {
            recurrent: vec![vec![0.0; 6]; 6],
            input: vec![0.0; 6],
        };
        let (_, x) = esn_step(&EsnState::zeros(6), 0.9, &cfg, &w);
        assert_eq!(x, vec![0.0; 6]);
    }

    #[test]
    fn single_input_weight() {
        let cfg = config(EsnVariant::Esn1);
        let mut input = vec![0.0; 6];
        input[0] = 1.0;
        let w = EsnWeights {
            recurrent: EsnWeights::sample(&cfg).recurrent,
            input,
        };
        let (_, x) = esn_step(&EsnState::zeros(6), 0.1, &cfg, &w);
        assert_eq!(x[0], 0.1f64.tanh());
        assert!(x[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn states_stay_inside_tanh_range() {
        for v in EsnVariant::ALL {
            let traj = run_esn(&config(v), &binary_inputs(300, 4), 100, 100);
            for row in &traj.rows {
                assert!(row.observables.iter().all(|x| x.abs() < 1.0));
            }
        }
    }

    #[test]
    fn weights_are_shared_across_variants_and_in_range() {
        let a = EsnWeights::sample(&config(EsnVariant::Esn1));
        let b = EsnWeights::sample(&config(EsnVariant::Esn5));
        assert_eq!(a, b);
        assert!(a.recurrent.iter().flatten().all(|w| (0.0..=0.4).contains(w)));
        assert!(a.input.iter().all(|w| (0.0..=0.4).contains(w)));
    }

    #[test]
    fn run_is_deterministic() {
        let inputs = binary_inputs(50, 2);
        let cfg = config(EsnVariant::Esn3);
        assert_eq!(run_esn(&cfg, &inputs, 10, 20), run_esn(&cfg, &inputs, 10, 20));
        let traj = run_esn(&cfg, &inputs, 10, 20);
        assert_eq!(traj.rows[9].phase, Phase::Prep);
        assert_eq!(traj.rows[10].phase, Phase::Train);
        assert_eq!(traj.rows[30].phase, Phase::Test);
    }

    #[test]
    fn esn1_ignores_deep_history() {
        let cfg = config(EsnVariant::Esn1);
        let w = EsnWeights::sample(&cfg);
        let base = EsnState::zeros(6);
        let mut deep = vec![vec![0.0; 6]; 5];
        deep[2] = vec![0.7; 6];
        deep[4] = vec![-0.5; 6];
        let (_, a) = esn_step(&base, 0.3, &cfg, &w);
        let (_, b) = esn_step(&EsnState::from_history(deep.clone()), 0.3, &cfg, &w);
        assert_eq!(a, b);

        let cfg3 = config(EsnVariant::Esn3);
        let (_, c) = esn_step(&EsnState::from_history(deep), 0.3, &cfg3, &w);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_input_keeps_zero_trajectory() {
        let traj = run_esn(&config(EsnVariant::Esn5), &[0.0; 40], 10, 10);
        assert!(traj.rows.iter().all(|r| r.observables.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn history_shifts_by_one() {
        let cfg = config(EsnVariant::Esn5);
        let w = EsnWeights::sample(&cfg);
        let (s1, x1) = esn_step(&EsnState::zeros(6), 1.0, &cfg, &w);
        let (s2, x2) = esn_step(&s1, 0.0, &cfg, &w);
        assert_eq!(s2.lagged(1), x2.as_slice());
        assert_eq!(s2.lagged(2), x1.as_slice());
        assert_eq!(s2.lagged(3), &[0.0; 6]);
    }

    #[test]
    fn esn1_forgets_initial_history() {
        let cfg = config(EsnVariant::Esn1);
        let inputs = binary_inputs(100, 8);
        let other = EsnState::from_history(vec![vec![0.9; 6]; 5]);
        let a = run_esn(&cfg, &inputs, 0, 100);
        let b = run_esn_from(&cfg, other, &inputs, 0, 100);
        let last = |t: &Trajectory| t.rows.last().unwrap().observables.clone();
        let dist = last(&a)
            .iter()
            .zip(last(&b))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(dist < 1e-6, "distance {dist}");
    }

    #[test]
    fn config_validation() {
        assert!(EsnConfig::default().validate().is_ok());
        assert!(EsnConfig { n_nodes: 0, ..EsnConfig::default() }.validate().is_err());
        assert!(EsnConfig { w_scale: 0.0, ..EsnConfig::default() }.validate().is_err());
    }
}
