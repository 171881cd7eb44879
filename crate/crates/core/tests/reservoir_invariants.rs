use num_complex::Complex64;
use proptest::prelude::*;

use spinres::linalg::{hermitian_eigen, ComplexMatrix};
use spinres::qubit::{ground_density, rotation_x};
use spinres::reservoir::{step, Reservoir, ReservoirConfig, ReservoirState, Topology};

fn config(n_qubits: usize, topology: Topology, gamma: f64, seed: u64, steps: usize) -> ReservoirConfig {
    ReservoirConfig {
        n_qubits,
        topology,
        gamma,
        n_pre: 1,
        n_fb: steps.saturating_sub(2).max(1),
        n_test: 1,
        coupling_seed: seed,
        ..ReservoirConfig::default()
    }
}

fn topology_for(n: usize, ring: bool) -> Topology {
    if ring && n >= 3 {
        Topology::Ring
    } else {
        Topology::Linear
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn states_remain_density_matrices(
        n in 2usize..=4,
        ring in any::<bool>(),
        gamma in 0.0f64..=1.0,
        seed in 0u64..1000,
        inputs in prop::collection::vec(0.0f64..=1.0, 3..30),
    ) {
        let cfg = config(n, topology_for(n, ring), gamma, seed, inputs.len());
        let inputs = &inputs[..cfg.total_steps()];
        let r = Reservoir::new(&cfg).unwrap();
        let mut state = r.initial_state();
        for &s in inputs {
            let (next, out) = r.kernel().step(&state, s).unwrap();
            state = next;
            prop_assert!((state.rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            prop_assert!(state.rho.hermitian_defect() < 1e-10);
            prop_assert!(out.z_expect.iter().all(|z| z.abs() <= 1.0 + 1e-12));
        }
        let min = hermitian_eigen(&state.rho).unwrap().eigenvalues[0];
        prop_assert!(min > -1e-10, "min eigenvalue {}", min);
    }

    #[test]
    fn fast_step_matches_dense_formula(
        n in 2usize..=4,
        gamma in 0.0f64..=1.0,
        seed in 0u64..1000,
        inputs in prop::collection::vec(0.0f64..=1.0, 1..8),
    ) {
        let cfg = config(n, Topology::Linear, gamma, seed, 3);
        let r = Reservoir::new(&cfg).unwrap();
        let u = r.spectrum().unitary_exp(cfg.dt());
        let rho0 = ground_density(n).unwrap();
        let mut fast = ReservoirState::new(rho0.clone());
        let mut dense = rho0.clone();
        for &s in &inputs {
            fast = step(&fast, s, &u, gamma, &rho0).unwrap().0;
            let ur = u.matmul(&rotation_x(s, n).unwrap()).unwrap();
            let evolved = ur.matmul(&dense).unwrap().matmul(&ur.adjoint()).unwrap();
            dense = &(&evolved * (1.0 - gamma)) + &(&rho0 * gamma);
        }
        prop_assert!(fast.rho.max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn heisenberg_evolution_conserves_total_magnetization(
        n in 2usize..=4,
        ring in any::<bool>(),
        seed in 0u64..1000,
        kick in 0.05f64..0.95,
        idle in 2usize..12,
    ) {
        // One input pulse, then free evolution: without dissipation or input
        // the sum of <Z_i> is constant.
        let cfg = config(n, topology_for(n, ring), 0.0, seed, 3);
        let r = Reservoir::new(&cfg).unwrap();
        let (mut state, first) = r.kernel().step(&r.initial_state(), kick).unwrap();
        let total: f64 = first.z_expect.iter().sum();
        for _ in 0..idle {
            let (next, out) = r.kernel().step(&state, 0.0).unwrap();
            state = next;
            prop_assert!((out.z_expect.iter().sum::<f64>() - total).abs() < 1e-10);
        }
    }
}

#[test]
fn run_sequence_is_reproducible_and_seed_sensitive() {
    let cfg = ReservoirConfig {
        n_qubits: 4,
        n_pre: 10,
        n_fb: 10,
        n_test: 5,
        ..ReservoirConfig::default()
    };
    let inputs: Vec<f64> = (0..25).map(|k| (k % 3) as f64 / 2.0).collect();
    let a = Reservoir::new(&cfg).unwrap().run_sequence(&inputs).unwrap();
    let b = Reservoir::new(&cfg).unwrap().run_sequence(&inputs).unwrap();
    assert_eq!(a, b);
    let other = ReservoirConfig {
        coupling_seed: 2,
        ..cfg.clone()
    };
    let c = Reservoir::new(&other).unwrap().run_sequence(&inputs).unwrap();
    assert_ne!(a.observables(), c.observables());
}

#[test]
fn rejects_wrong_input_length() {
    let cfg = ReservoirConfig {
        n_qubits: 2,
        ..ReservoirConfig::default()
    };
    let r = Reservoir::new(&cfg).unwrap();
    assert!(r.run_sequence(&[0.0; 10]).is_err());
}

#[test]
fn mismatched_state_dimension_is_rejected() {
    let cfg = ReservoirConfig {
        n_qubits: 3,
        ..ReservoirConfig::default()
    };
    let r = Reservoir::new(&cfg).unwrap();
    let wrong = ReservoirState::new(ComplexMatrix::identity(4));
    assert!(r.kernel().step(&wrong, 0.5).is_err());
}
