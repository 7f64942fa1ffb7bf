//! Compares a block against shifted, scaled and noisy variants under every
//! block metric.

use ssimdecomp::blockstats::{self, DEFAULT_EPS1, DEFAULT_EPS2};
use ssimdecomp::Block;

fn main() -> ssimdecomp::Result<()> {
    let y = Block::new(vec![52.0, 55.0, 61.0, 66.0, 70.0, 61.0, 64.0, 73.0, 63.0])?;
    let variants = [
        ("identical", y.as_slice().to_vec()),
        ("shift +10", y.as_slice().iter().map(|v| v + 10.0).collect()),
        ("contrast x2", y.as_slice().iter().map(|v| 2.0 * v - 60.0).collect()),
        ("inverted", y.as_slice().iter().map(|v| 124.0 - v).collect()),
        ("noisy", y.as_slice().iter().enumerate().map(|(i, v)| v + [3.0, -2.0, 1.0][i % 3]).collect()),
    ];
    println!("{:<12} {:>10} {:>10} {:>8} {:>10} {:>10}", "variant", "mse", "psnr", "pcc", "ssim", "ssim_eps");
    for (name, samples) in variants {
        let x = Block::new(samples)?;
        println!(
            "{:<12} {:>10.3} {:>10.3} {:>8.4} {:>10.4} {:>10.4}",
            name,
            blockstats::mse(&x, &y)?,
            blockstats::psnr(&x, &y, 255.0)?,
            blockstats::pcc(&x, &y)?,
            blockstats::ssim(&x, &y)?,
            blockstats::ssim_eps(&x, &y, DEFAULT_EPS1, DEFAULT_EPS2)?,
        );
    }
    Ok(())
}
