//! Greedy against exhaustive atom selection on a random dictionary, under
//! each cost function.

use ssimdecomp::associations::{TrialConfig, TrialGenerator};
use ssimdecomp::selection::{exhaustive_select, greedy_select, subset_count, CostKind};

fn main() -> ssimdecomp::Result<()> {
    let cfg = TrialConfig::new(11, 16, 12, 3, 1);
    let trial = TrialGenerator::new(&cfg)?.trial(0)?;
    println!("{} atoms, sparsity {}, {} subsets", cfg.n, cfg.m, subset_count(cfg.n, cfg.m));
    for kind in CostKind::ALL {
        let g = greedy_select(&trial.dict, &trial.target, cfg.m, kind)?;
        let e = exhaustive_select(&trial.dict, &trial.target, cfg.m, kind)?;
        println!(
            "{kind:<4} greedy {:?} cost={:.6} scores={:.4?} | exhaustive {:?} cost={:.6}",
            g.subset.indices(),
            g.final_cost.value,
            g.step_scores,
            e.subset.indices(),
            e.final_cost.value,
        );
    }
    Ok(())
}
