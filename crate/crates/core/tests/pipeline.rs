use udsim::experiments::{block_dephasing_ud, block_pauli_ud, displacement_ud, Experiment};
use udsim::metrics::distance_d;
use udsim::noisesim::{leaf_distributions, propagate_exact, NoiseModel, NoiseToggles};

fn built_in() -> Vec<Experiment> {
    vec![
        displacement_ud(1.6, 4, 40).unwrap(),
        displacement_ud(1.2, 6, 40).unwrap(),
        block_dephasing_ud(3).unwrap(),
        block_dephasing_ud(4).unwrap(),
        block_pauli_ud(0.1).unwrap(),
        block_pauli_ud(0.5).unwrap(),
    ]
}

#[test]
fn noiseless_pipeline_reproduces_born_rule() {
    for e in built_in() {
        let plan = e.plan(1, 0).unwrap();
        let exact = propagate_exact(&plan, &NoiseModel::noiseless()).unwrap();
        let ideal = e.ideal_report().unwrap();
        assert!(distance_d(&exact, &ideal).unwrap() < 1e-9, "{}", e.name);
    }
}

#[test]
fn noisy_propagation_preserves_probability() {
    for e in built_in() {
        let plan = e.plan(1, 0).unwrap();
        let mut model = NoiseModel::default();
        model.toggles.readout_error = true;
        for dist in leaf_distributions(&plan, &model).unwrap() {
            assert!((dist.total() - 1.0).abs() < 1e-9, "{}", e.name);
            assert!(dist.weights.iter().flatten().all(|&w| w >= 0.0));
        }
    }
}

#[test]
fn readout_toggle_off_matches_identity_confusion() {
    let e = block_pauli_ud(0.3).unwrap();
    let plan = e.plan(1, 0).unwrap();
    let off = NoiseModel::default();
    let mut identity = NoiseModel::default().with_toggles(NoiseToggles {
        readout_error: true,
        ..NoiseToggles::default()
    });
    identity.readout_confusion = [[1.0, 0.0], [0.0, 1.0]];
    let a = propagate_exact(&plan, &off).unwrap();
    let b = propagate_exact(&plan, &identity).unwrap();
    for (ra, rb) in a.conditional().iter().zip(b.conditional()) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn longer_gates_hurt_more() {
    let e = displacement_ud(1.6, 4, 40).unwrap();
    let plan = e.plan(1, 0).unwrap();
    let ideal = e.ideal_report().unwrap();
    let d: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&g| {
            let r = propagate_exact(&plan, &NoiseModel::default().with_gate_time(g)).unwrap();
            distance_d(&r, &ideal).unwrap()
        })
        .collect();
    assert!(d.windows(2).all(|w| w[1] > w[0]), "{d:?}");
}
