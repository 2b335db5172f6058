//! Smallest nuclear-norm weight giving a target rank, found by bisection,
//! next to the fixed-rank envelope at the same rank.

use lowrank_envelope::problem::{self, NoiseSpec};
use lowrank_envelope::solvers::{self, SolveConfig};
use lowrank_envelope::{Regularizer, Result, RngSeed};

fn main() -> Result<()> {
    let k = 2;
    let op = problem::gen_gaussian_op(75, 10, 10, 1.0 / 75f64.sqrt(), RngSeed::new(5, 0))?;
    let x0 = problem::gen_low_rank(10, 10, k, 1.0, RngSeed::new(5, 1))?;
    let raw = problem::gen_instance(op, x0.clone(), NoiseSpec::Norm(1.0), RngSeed::new(5, 2))?;
    let (inst, reg) = problem::normalize(&raw, &Regularizer::fixed_rank(k)?)?;

    let cfg = SolveConfig::default();
    let hi = 1.01 * solvers::nuclear_zero_threshold(&inst)?;
    let b = solvers::solve_nuclear_bisection(&inst, k, (0.0, hi), &cfg)?;
    println!("bisection: {} probes, lambda = {:.6}", b.probes.len(), b.lambda);
    for (lambda, rank) in &b.probes {
        println!("  lambda {lambda:.6} -> rank {rank}");
    }
    let env = solvers::solve_fbs(&inst, &reg, &cfg)?;
    println!("nuclear:  fit {:.4}, |X - X0| = {:.4}", raw.data_fit(&b.result.x)?, (&b.result.x - &x0).norm());
    println!("envelope: fit {:.4}, |X - X0| = {:.4}", raw.data_fit(&env.x)?, (&env.x - &x0).norm());
    Ok(())
}
