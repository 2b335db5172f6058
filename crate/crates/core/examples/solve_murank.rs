//! Rank-penalized recovery from Gaussian measurements with forward-backward
//! splitting, after normalizing the operator to norm below one.

use lowrank_envelope::problem::{self, NoiseSpec};
use lowrank_envelope::solvers::{self, SolveConfig};
use lowrank_envelope::{Regularizer, Result, RngSeed};

fn main() -> Result<()> {
    let seed = 7;
    let op = problem::gen_gaussian_op(120, 10, 10, 1.0 / 120f64.sqrt(), RngSeed::new(seed, 0))?;
    let x0 = problem::gen_low_rank(10, 10, 2, 1.0, RngSeed::new(seed, 1))?;
    let inst = problem::gen_instance(op, x0.clone(), NoiseSpec::Std(0.05), RngSeed::new(seed, 2))?;
    println!("operator norm before normalization: {:.4}", inst.op().norm());

    for mu in [0.01, 0.5, 5.0, 50.0] {
        let (norm_inst, reg) = problem::normalize(&inst, &Regularizer::mu_rank(mu)?)?;
        let r = solvers::solve_fbs(&norm_inst, &reg, &SolveConfig::default())?;
        println!(
            "mu = {mu:>6}: rank {}, fit {:.3e}, |X - X0| = {:.4}, {} iterations, converged {}",
            r.rank,
            inst.data_fit(&r.x)?,
            (&r.x - &x0).norm(),
            r.iterations,
            r.converged
        );
    }
    Ok(())
}
