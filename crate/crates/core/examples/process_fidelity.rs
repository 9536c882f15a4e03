//! Chi matrices in the Heisenberg-Weyl basis and process fidelities
//! between block-Pauli operations.

use udsim::channels::{block_pauli, BlockPauliParams, PauliKind};
use udsim::hilbert::HilbertDim;
use udsim::metrics::{chi_from_channel, process_fidelity};

fn main() -> udsim::Result<()> {
    let dim = HilbertDim::qudit(4)?;
    let chis = PauliKind::ALL
        .iter()
        .map(|&k| Ok(chi_from_channel(&block_pauli(&BlockPauliParams::standard(0.5, k), dim)?)))
        .collect::<udsim::Result<Vec<_>>>()?;
    let identity = chi_from_channel(&block_pauli(&BlockPauliParams::standard(0.0, PauliKind::X), dim)?);

    println!("trace of chi: {:.12}", chis[0].trace());
    println!("F_P against identity:");
    for (kind, chi) in PauliKind::ALL.iter().zip(&chis) {
        println!("  {kind}: {:.6}", process_fidelity(&identity, chi)?);
    }
    println!("pairwise F_P at eta = 0.5:");
    for i in 0..3 {
        for j in i + 1..3 {
            println!(
                "  {} vs {}: {:.6}",
                PauliKind::ALL[i],
                PauliKind::ALL[j],
                process_fidelity(&chis[i], &chis[j])?
            );
        }
    }
    Ok(())
}
