//! Error budget for the four-fold displacement set and the block-Pauli set,
//! and its dependence on the gate duration.

use udsim::experiments::{block_pauli_ud, displacement_ud, Experiment};
use udsim::noisesim::{error_budget, NoiseModel};

fn report(exp: &Experiment) -> udsim::Result<()> {
    let ideal = exp.ideal_report()?;
    let plan = exp.plan(1, 0)?;
    println!("{}", exp.name);
    let b = error_budget(&plan, &NoiseModel::default(), &ideal)?;
    for row in &b.rows {
        let procs: Vec<String> = row.proc_infid.iter().map(|p| format!("{p:.4}")).collect();
        println!(
            "  {:<12} D {:.4}  state infid {:.4}  process infid [{}]",
            row.config,
            row.distance,
            row.state_infid,
            procs.join(", ")
        );
    }
    for g in [1.0, 2.0, 4.0] {
        let b = error_budget(&plan, &NoiseModel::default().with_gate_time(g), &ideal)?;
        println!(
            "  gate {g} us: D full {:.4}, ancilla share {:.4}, system share {:.4}",
            b.distance("full"),
            b.ancilla_contribution,
            b.system_contribution
        );
    }
    println!();
    Ok(())
}

fn main() -> udsim::Result<()> {
    report(&displacement_ud(1.6, 4, 40)?)?;
    report(&block_pauli_ud(0.5)?)
}
