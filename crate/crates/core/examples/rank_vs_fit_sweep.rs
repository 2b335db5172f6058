//! Rank against data fit over 100 weights for the rank-penalty envelope
//! and the nuclear norm, at desk scale. Writes the results CSV to the path
//! given as the first argument, if any.

use std::path::Path;

use lowrank_envelope::experiments::{self, Scale, SweepSpec, DEFAULT_SEED};
use lowrank_envelope::Result;

fn main() -> Result<()> {
    let spec = SweepSpec::preset(Scale::Desk, DEFAULT_SEED);
    let records = experiments::run_rank_vs_fit(&spec)?;
    let env = experiments::min_fit_by_rank(&records, "murank");
    let nuc = experiments::min_fit_by_rank(&records, "nuclear");
    println!("rank  envelope fit   nuclear fit");
    for rank in 0..=spec.instance.n1 {
        let e = env.iter().find(|r| r.0 == rank).map(|r| format!("{:.6e}", r.1));
        let n = nuc.iter().find(|r| r.0 == rank).map(|r| format!("{:.6e}", r.1));
        if e.is_some() || n.is_some() {
            println!("{rank:>4}  {:>12}   {:>12}", e.unwrap_or_default(), n.unwrap_or_default());
        }
    }
    println!(
        "largest fit spread among envelope records of equal rank: {:.2e}",
        experiments::max_fit_spread_within_rank(&records, "murank")
    );
    if let Some(p) = std::env::args().nth(1) {
        experiments::emit_csv(&records, Path::new(&p))?;
        println!("wrote {p}");
    }
    Ok(())
}
