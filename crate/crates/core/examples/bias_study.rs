//! Entrywise bias of the fixed-rank envelope and nuclear estimators over
//! repeated noise draws of fixed norm.

use lowrank_envelope::experiments::{self, BiasSpec, Scale, DEFAULT_SEED};
use lowrank_envelope::Result;

fn main() -> Result<()> {
    let summary = experiments::run_bias_experiment(&BiasSpec::preset(Scale::Desk, DEFAULT_SEED))?;
    for line in summary.aggregate_lines() {
        println!("{line}");
    }
    println!("first entries (mean ± 2 standard errors):");
    let se = 2.0 / (summary.instances as f64).sqrt();
    for e in summary.entries.iter().take(5) {
        println!(
            "  ({}, {}): envelope {:+.4} ± {:.4}   nuclear {:+.4} ± {:.4}",
            e.row,
            e.col,
            e.mean_env,
            se * e.sd_env,
            e.mean_nuc,
            se * e.sd_nuc
        );
    }
    Ok(())
}
