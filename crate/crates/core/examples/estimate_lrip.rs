//! Lower restricted isometry defect: exact for scaled identities, a search
//! lower bound otherwise. More measurements never raise it.

use lowrank_envelope::certificates;
use lowrank_envelope::problem;
use lowrank_envelope::{LinearOp, Result, RngSeed};

fn main() -> Result<()> {
    let id = LinearOp::scaled_identity(0.9, 6, 6)?;
    let d = certificates::estimate_delta(&id, 2, 1, 0)?;
    println!("0.9 * identity: delta_2 = {} ({})", d.delta, d.provenance);

    for m in [40, 80, 160, 320] {
        let op = problem::gen_gaussian_op(m, 6, 6, 1.0 / (m as f64).sqrt(), RngSeed::new(4, 0))?;
        for k in [1, 2] {
            let d = certificates::estimate_delta(&op, k, 10, 1)?;
            println!("m = {m:>3}: |A| = {:.3}, delta_{k} >= {:.4} ({})", op.norm(), d.delta, d.provenance);
        }
    }
    Ok(())
}
