//! Optimal conclusive probability for N phase-symmetric displacements,
//! checked against the POVM that attains it.

use udsim::discrimination::{build_symmetric_povm, symmetric_states, symmetric_ud_bound};
use udsim::hilbert::HilbertDim;

fn main() -> udsim::Result<()> {
    let dim = HilbertDim::new(2, 40)?;
    for count in [4, 6] {
        println!("N = {count}");
        println!("{:>6} {:>10} {:>10}", "|alpha|", "bound", "POVM P_con");
        for k in 0..=8 {
            let alpha = 0.4 + 0.2 * k as f64;
            let bound = symmetric_ud_bound(alpha, count)?.bound;
            let states = symmetric_states(alpha, count, dim)?;
            let povm = build_symmetric_povm(&states)?;
            let p_con: f64 = states
                .iter()
                .zip(povm.effects())
                .map(|(s, e)| s.density().expectation(e))
                .sum::<f64>()
                / count as f64;
            println!("{alpha:>6.2} {bound:>10.6} {p_con:>10.6}");
        }
        println!();
    }
    Ok(())
}
