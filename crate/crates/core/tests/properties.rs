use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use udsim::channels::random_channel;
use udsim::dilation::{compile_tree, povm_to_kraus, verify_circuit};
use udsim::discrimination::{build_symmetric_povm, evaluate_povm, symmetric_states, symmetric_ud_bound, uniform_priors};
use udsim::experiments::block_pauli_ud;
use udsim::hilbert::HilbertDim;
use udsim::noisesim::{propagate_exact, NoiseModel};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_channels_compile(seed in any::<u64>(), d in 2usize..6, rank in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(d, rank, &mut rng).unwrap();
        prop_assert!(ch.tp_deviation() < 1e-10);
        let circuit = compile_tree(&ch).unwrap();
        prop_assert!(circuit.max_unitarity_deviation() < 1e-9);
        prop_assert!(verify_circuit(&circuit, &ch).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn symmetric_povm_is_valid(alpha in 0.4f64..2.0, count in 2usize..6) {
        let dim = HilbertDim::new(2, 30).unwrap();
        let states = symmetric_states(alpha, count, dim).unwrap();
        let povm = build_symmetric_povm(&states).unwrap();
        prop_assert!(povm.resolution_deviation() < 1e-10);
        prop_assert!(povm.min_effect_eigenvalue() > -1e-10);
        let bound = symmetric_ud_bound(alpha, count).unwrap().bound;
        let circuit = compile_tree(&povm_to_kraus(&povm).unwrap()).unwrap();
        prop_assert!(circuit.max_unitarity_deviation() < 1e-9);
        let mut p_con = 0.0;
        for (n, s) in states.iter().enumerate() {
            p_con += s.density().expectation(&povm.effects()[n]) / count as f64;
        }
        prop_assert!((p_con - bound).abs() < 1e-8);
    }

    #[test]
    fn noisy_reports_are_distributions(eta in 0.05f64..0.95, gate in 0.2f64..5.0) {
        let e = block_pauli_ud(eta).unwrap();
        let plan = e.plan(1, 0).unwrap();
        let r = propagate_exact(&plan, &NoiseModel::default().with_gate_time(gate)).unwrap();
        for row in r.conditional() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&p| p >= -1e-12));
        }
        let ideal = evaluate_povm(&e.povm, &e.channels, &e.probe, &uniform_priors(3)).unwrap();
        prop_assert!((ideal.p_con() - eta).abs() < 1e-12);
    }
}
