//! Block-dephasing pair (d = 3) and triple (d = 4): support analysis, the
//! measurement and its ideal statistics.

use udsim::discrimination::ud_feasibility;
use udsim::experiments::block_dephasing_ud;

fn main() -> udsim::Result<()> {
    for d in [3, 4] {
        let exp = block_dephasing_ud(d)?;
        let analysis = ud_feasibility(&exp.channels, &exp.probe)?;
        println!("{}", exp.name);
        println!(
            "  support dim {} / without each operation {:?}",
            analysis.s().len(),
            analysis.s_n().iter().map(Vec::len).collect::<Vec<_>>()
        );
        for (k, e) in exp.povm.effects().iter().enumerate() {
            println!("  E_{k} =");
            for i in 0..d {
                let row: Vec<String> = (0..d).map(|j| format!("{:+.4}", e.matrix()[(i, j)].re)).collect();
                println!("    {}", row.join(" "));
            }
        }
        let r = exp.ideal_report()?;
        println!("  P_con {:.6}  P_err {:.1e}\n", r.p_con(), r.p_err());
    }
    Ok(())
}
