//! A 2×2 instance with no best rank-1 solution: the isometry defect is
//! essentially 1, the reference search diverges in norm, and the
//! rank-penalty solver ends on a point that is not a rank-1 minimizer.

use lowrank_envelope::certificates;
use lowrank_envelope::problem;
use lowrank_envelope::solvers::{self, SolveConfig};
use lowrank_envelope::{Regularizer, Result};

fn main() -> Result<()> {
    let inst = problem::pathological_instance();
    let d = certificates::estimate_delta(inst.op(), 1, 10, 0)?;
    println!("delta_1 >= {:.6} ({})", d.delta, d.provenance);

    let oracle = solvers::best_rank_k_oracle(&inst, 1, 4, 0)?;
    println!(
        "rank-1 search: residual {:.3e}, |X| = {:.3e}, norm blowup {}",
        oracle.residual,
        oracle.x.norm(),
        oracle.norm_blowup
    );

    let mu = 0.1;
    let (norm_inst, reg) = problem::normalize(&inst, &Regularizer::mu_rank(mu)?)?;
    let r = solvers::solve_fbs(&norm_inst, &reg, &SolveConfig::default())?;
    println!("rank penalty mu = {mu}: rank {}, fit {:.4}, converged {}", r.rank, inst.data_fit(&r.x)?, r.converged);
    println!("X =\n{}", r.x);
    Ok(())
}
