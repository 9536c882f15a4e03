//! Support criterion for a fixed probe, and a seeded search for a probe
//! that makes a set discriminable.

use udsim::channels::{block_pauli, BlockPauliParams, PauliKind};
use udsim::discrimination::{probe_search, ud_feasibility};
use udsim::hilbert::{HilbertDim, StateVector};

fn main() -> udsim::Result<()> {
    let dim = HilbertDim::qudit(4)?;
    let channels = PauliKind::ALL
        .iter()
        .map(|&k| block_pauli(&BlockPauliParams::standard(0.3, k), dim))
        .collect::<udsim::Result<Vec<_>>>()?;

    // |0> alone: X and Y send it to the same level
    let fock = StateVector::from_real(&[1.0, 0.0, 0.0, 0.0])?;
    println!("probe |0>: feasible {:?}", ud_feasibility(&channels, &fock)?.feasible());

    match probe_search(&channels, 1000, 7)? {
        Some(found) => {
            println!(
                "search: {} of 1000 random probes feasible, best P_con {:.4}",
                found.feasible_trials,
                found.p_con()
            );
            for (k, a) in found.probe.amplitudes().iter().enumerate() {
                println!("  psi_{k} = {:+.4} {:+.4}i", a.re, a.im);
            }
        }
        None => println!("search: no feasible probe"),
    }
    Ok(())
}
