//! Four displacements with |alpha| = 1.6: ideal report, exact noisy
//! propagation and 50,000 sampled shots.

use udsim::experiments::displacement_ud;
use udsim::noisesim::{propagate_exact, sample_shots, NoiseModel};

fn main() -> udsim::Result<()> {
    let exp = displacement_ud(1.6, 4, 40)?;
    let ideal = exp.ideal_report()?;
    let plan = exp.plan(50_000, 1)?;
    let noise = NoiseModel::default();
    let exact = propagate_exact(&plan, &noise)?;
    let sampled = sample_shots(&plan, &noise)?.report;

    println!("{}", exp.name);
    for (label, r) in [("ideal", &ideal), ("exact", &exact), ("sampled", &sampled)] {
        println!(
            "{label:>8}: P_con {:.4}  P_inc {:.4}  P_err {:.4}",
            r.p_con(),
            r.p_inc(),
            r.p_err()
        );
    }
    println!("\nconditional probabilities under noise (rows: operation, last column: I)");
    for row in exact.conditional() {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.4}")).collect();
        println!("  {}", cells.join("  "));
    }
    Ok(())
}
