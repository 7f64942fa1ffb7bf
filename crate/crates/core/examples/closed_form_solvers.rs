//! Fits one target with the MSE and SSIM closed forms on the same atoms and
//! prints the quantities that tie the two schemes together.

use ssimdecomp::blockstats::{covariance, pcc, stats};
use ssimdecomp::solvers::{reconstruct, solve_mse, solve_ssim};
use ssimdecomp::{AtomSubset, Block, Dictionary, Orientation};

fn main() -> ssimdecomp::Result<()> {
    let dict = Dictionary::from_rows(
        vec![
            vec![1.0, 2.0, 0.0, -1.0, 3.0, 1.0],
            vec![0.0, 1.0, 1.0, 2.0, -2.0, 0.5],
            vec![2.0, -1.0, 0.0, 1.0, 1.0, -3.0],
        ],
        "example",
    )?;
    let y = Block::new(vec![10.0, 14.0, 9.0, 8.0, 16.0, 7.0])?;
    let subset = AtomSubset::new(vec![0, 1, 2])?;
    let sy = stats(&y);

    let m = solve_mse(&dict, &subset, &y)?;
    let xm = reconstruct(&dict, &m)?;
    let r = pcc(&xm, &y)?;
    println!("mse  coeffs={:?} offset={:.6}", m.coeffs, m.offset);
    println!("     var(x)={:.6} cov(x,y)={:.6}", stats(&xm).variance, covariance(&xm, &y)?);
    println!("     mse={:.6} var(y)(1-r^2)={:.6}", m.achieved.mse, sy.variance * (1.0 - r * r));

    for o in [Orientation::Maximize, Orientation::Minimize] {
        let s = solve_ssim(&dict, &subset, &y, o)?;
        let xs = reconstruct(&dict, &s)?;
        let ratios: Vec<f64> = m.coeffs.iter().zip(&s.coeffs).map(|(a, b)| a / b).collect();
        println!("ssim {o:?} coeffs={:?} offset={:.6}", s.coeffs, s.offset);
        println!("     var(x)={:.6} var(y)={:.6} ssim={:.6}", stats(&xs).variance, sy.variance, s.achieved.ssim.unwrap_or(f64::NAN));
        println!("     s_mse/s_ssim={ratios:?} r={r:.6}");
    }
    Ok(())
}
