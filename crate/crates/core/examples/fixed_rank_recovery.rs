//! Fixed-rank envelope against the best rank-K reference solution.

use lowrank_envelope::problem::{self, NoiseSpec};
use lowrank_envelope::solvers::{self, SolveConfig};
use lowrank_envelope::{Regularizer, Result, RngSeed};

fn main() -> Result<()> {
    let seed = 3;
    let k = 3;
    let op = problem::gen_gaussian_op(150, 10, 10, 1.0 / 150f64.sqrt(), RngSeed::new(seed, 0))?;
    let x0 = problem::gen_low_rank(10, 10, k, 1.0, RngSeed::new(seed, 1))?;
    let inst = problem::gen_instance(op, x0.clone(), NoiseSpec::Norm(0.5), RngSeed::new(seed, 2))?;
    let (inst, reg) = problem::normalize(&inst, &Regularizer::fixed_rank(k)?)?;

    let env = solvers::solve_fbs(&inst, &reg, &SolveConfig::default())?;
    let oracle = solvers::best_rank_k_oracle(&inst, k, 8, seed)?;
    let range = problem::range_oracle_solution(inst.op(), inst.b(), &x0)?;

    println!("envelope:      rank {}, fit {:.6e}, converged {}", env.rank, inst.data_fit(&env.x)?, env.converged);
    println!("best rank-{k}:   fit {:.6e} (exact: {})", oracle.residual.powi(2), oracle.exact);
    println!("range oracle:  fit {:.6e}", inst.data_fit(&range)?);
    println!("|X_env - X_best| = {:.3e}", (&env.x - &oracle.x).norm());
    println!("|X_env - X0|     = {:.4}", (&env.x - &x0).norm());
    Ok(())
}
