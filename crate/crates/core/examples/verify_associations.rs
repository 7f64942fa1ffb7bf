//! Runs every equivalence check on a small batch and prints the report.
//!
//! `cargo run --example verify_associations -- <seed> <trials>`

use ssimdecomp::associations::{run_checks, Check, Distribution, TrialConfig};

fn main() -> ssimdecomp::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    for dist in [Distribution::Gaussian01, Distribution::Uniform01] {
        let cfg = TrialConfig::new(seed, 16, 10, 3, trials).with_distribution(dist);
        let report = run_checks(&cfg, &Check::ALL)?;
        print!("{}", report.render());
        println!();
    }
    Ok(())
}
