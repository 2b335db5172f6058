//! Data fit and ground-truth distance of the fixed-rank envelope and the
//! bisected nuclear norm as the noise norm grows.

use lowrank_envelope::experiments::{self, NoiseSweepSpec, Scale, DEFAULT_SEED};
use lowrank_envelope::Result;

fn main() -> Result<()> {
    let records = experiments::run_noise_sweep(&NoiseSweepSpec::preset(Scale::Desk, DEFAULT_SEED))?;
    println!("|eps|   env fit     nuc fit     env dist  nuc dist");
    for pair in records.chunks(2) {
        let (e, n) = (&pair[0], &pair[1]);
        println!(
            "{:<6.3}  {:<10.4e}  {:<10.4e}  {:<8.4}  {:<8.4}",
            e.noise_norm, e.data_fit, n.data_fit, e.gt_dist, n.gt_dist
        );
    }
    Ok(())
}
