//! Writing and reading instance and matrix files.

use lowrank_envelope::io;
use lowrank_envelope::problem::{self, NoiseSpec};
use lowrank_envelope::{Result, RngSeed};

fn main() -> Result<()> {
    let op = problem::gen_gaussian_op(4, 2, 2, 0.5, RngSeed::new(1, 0))?;
    let x0 = problem::gen_low_rank(2, 2, 1, 1.0, RngSeed::new(1, 1))?;
    let inst = problem::gen_instance(op, x0, NoiseSpec::Std(0.01), RngSeed::new(1, 2))?;
    let text = io::instance_to_string(&inst);
    print!("{text}");
    let back = io::parse_instance(&text)?;
    println!("round trip exact: {}", back == inst);
    Ok(())
}
