//! ADMM and forward-backward splitting on the same envelope problem.

use lowrank_envelope::problem::{self, NoiseSpec};
use lowrank_envelope::solvers::{self, Algorithm, SolveConfig};
use lowrank_envelope::{Regularizer, Result, RngSeed};

fn main() -> Result<()> {
    let op = problem::gen_gaussian_op(80, 8, 8, 1.0 / 80f64.sqrt(), RngSeed::new(1, 0))?;
    let x0 = problem::gen_low_rank(8, 8, 2, 1.0, RngSeed::new(1, 1))?;
    let inst = problem::gen_instance(op, x0, NoiseSpec::Std(0.05), RngSeed::new(1, 2))?;
    let (inst, reg) = problem::normalize(&inst, &Regularizer::mu_rank(0.5)?)?;

    for algorithm in [Algorithm::Fbs, Algorithm::Admm] {
        let cfg = SolveConfig {
            algorithm,
            ..SolveConfig::default()
        };
        let r = solvers::solve(&inst, &reg, &cfg)?;
        println!(
            "{algorithm:?}: objective {:.10}, rank {}, {} iterations, converged {}",
            r.objective(),
            r.rank,
            r.iterations,
            r.converged
        );
    }
    Ok(())
}
