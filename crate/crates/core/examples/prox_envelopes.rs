//! Values and proximal maps of the two quadratic envelopes, on vectors and
//! on matrices through their singular values.

use lowrank_envelope::envelopes::{self, ProxParams, Regularizer};
use lowrank_envelope::{Matrix, Result};

fn main() -> Result<()> {
    let p = ProxParams::new(4.0)?;
    let y = [2.0, 0.75, 0.4];

    println!("y = {y:?}, rho = {}", p.rho());
    println!("mu-rank envelope (mu = 1):");
    println!("  value at y = {}", envelopes::q2_mucard_value(&y, 1.0));
    println!("  prox       = {:?}", envelopes::prox_q2_mucard(&y, 1.0, p));
    println!("  hard threshold at 1 = {:?}", envelopes::hard_threshold_vec(&y, 1.0).values);

    println!("fixed-rank envelope (K = 1):");
    println!("  value at y = {}", envelopes::q2_iotak_value(&y, 1));
    println!("  prox       = {:?}", envelopes::prox_q2_iotak(&y, 1, p));
    // equal entries: the prox pulls both to a common level
    println!("  prox of (1, 1) = {:?}", envelopes::prox_q2_iotak(&[1.0, 1.0], 1, p));

    println!("nuclear soft threshold at 0.5 = {:?}", envelopes::prox_nuclear_vec(&y, 0.5));

    let x = Matrix::from_row_slice(2, 3, &[3.0, 0.0, 1.0, 0.5, 1.0, 0.0]);
    let reg = Regularizer::mu_rank(1.0)?;
    println!("matrix X ={x:.4}");
    println!("Q2(mu rank)(X) = {}", envelopes::reg_value_matrix(&x, &reg)?);
    println!("prox(X) ={:.4}", envelopes::reg_prox_matrix(&x, &reg, p)?);
    Ok(())
}
