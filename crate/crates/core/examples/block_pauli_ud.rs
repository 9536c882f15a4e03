//! Block-Pauli X, Y, Z: conclusive probability against the error rate,
//! ideal and with device noise.

use udsim::experiments::block_pauli_ud;
use udsim::noisesim::{propagate_exact, NoiseModel};

fn main() -> udsim::Result<()> {
    let noise = NoiseModel::default();
    println!("{:>5} {:>10} {:>10} {:>10}", "eta", "ideal", "noisy", "P_err");
    for k in 1..=9 {
        let eta = 0.1 * k as f64;
        let exp = block_pauli_ud(eta)?;
        let ideal = exp.ideal_report()?;
        let noisy = propagate_exact(&exp.plan(1, 0)?, &noise)?;
        println!(
            "{eta:>5.1} {:>10.4} {:>10.4} {:>10.4}",
            ideal.p_con(),
            noisy.p_con(),
            noisy.p_err()
        );
    }
    Ok(())
}
