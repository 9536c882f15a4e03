//! Compile a random channel into a two-layer circuit of joint unitaries,
//! check it and print the outcome map.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use udsim::channels::random_channel;
use udsim::dilation::{compile_channel, verify_circuit};

fn main() -> udsim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let channel = random_channel(3, 4, &mut rng)?;
    let circuit = compile_channel(&channel)?;

    println!("dim {} depth {}", circuit.dim(), circuit.depth());
    println!("max unitarity deviation {:.2e}", circuit.max_unitarity_deviation());
    println!("process fidelity {:.12}", verify_circuit(&circuit, &channel)?);
    for entry in circuit.outcome_map() {
        println!("  bits {} -> Kraus {:?}", entry.bits, entry.kraus);
    }
    let json = serde_json::to_string(&circuit.to_json()).map_err(udsim::Error::from)?;
    println!("circuit JSON: {} bytes", json.len());
    Ok(())
}
