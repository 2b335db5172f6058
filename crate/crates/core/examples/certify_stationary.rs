//! Certifying a computed point: with a scaled identity operator the
//! isometry defect is known exactly and the uniqueness conditions can be
//! decided; with a Gaussian operator only a lower bound is available and
//! the verdict stays inconclusive.

use lowrank_envelope::certificates::{self, DeltaEstimate};
use lowrank_envelope::problem::{self, NoiseSpec};
use lowrank_envelope::solvers::{self, SolveConfig};
use lowrank_envelope::spectral;
use lowrank_envelope::{LinearOp, Regularizer, Result, RngSeed};

fn main() -> Result<()> {
    let mu = 1.0;
    let delta = 0.19;
    // rank 2 with σ₂ comfortably above √μ/(1 − δ)
    let base = spectral::svd(&problem::gen_low_rank(10, 10, 10, 1.0, RngSeed::new(8, 0))?)?;
    let mut sigma = vec![0.0; 10];
    sigma[0] = 4.0;
    sigma[1] = 2.0;
    let x0 = base.compose(&sigma);

    let op = LinearOp::scaled_identity(0.9, 10, 10)?;
    let inst = problem::gen_instance(op, x0.clone(), NoiseSpec::None, RngSeed::new(8, 1))?;
    let r = solvers::solve_fbs(&inst, &Regularizer::mu_rank(mu)?, &SolveConfig::default())?;
    let report = certificates::check_theorem_murank(&inst, &r.x, mu, DeltaEstimate::exact(delta))?;
    println!("scaled identity, |X - X0| = {:.2e}", (&r.x - &x0).norm());
    print!("{report}");

    let op = problem::gen_gaussian_op(150, 10, 10, 1.0 / 150f64.sqrt(), RngSeed::new(8, 2))?;
    let raw = problem::gen_instance(op, x0, NoiseSpec::None, RngSeed::new(8, 3))?;
    let (inst, reg) = problem::normalize(&raw, &Regularizer::mu_rank(mu)?)?;
    let r = solvers::solve_fbs(&inst, &reg, &SolveConfig::default())?;
    let d = certificates::estimate_delta(inst.op(), 4, 5, 0)?;
    let report = certificates::check_theorem_murank(&inst, &r.x, reg.param(), d)?;
    println!("\nGaussian operator");
    print!("{report}");
    Ok(())
}
