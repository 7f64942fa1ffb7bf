//! Builds a dictionary from random patches of one image, saves it, and uses
//! it to code a second image.

use ssimdecomp::codes::decompose_image;
use ssimdecomp::dictionary::build_random_patches;
use ssimdecomp::selection::CostKind;
use ssimdecomp::{DecomposeOptions, Dictionary, GrayImage};

fn stripes(w: usize, h: usize, phase: usize) -> ssimdecomp::Result<GrayImage> {
    let px = (0..h)
        .flat_map(|y| (0..w).map(move |x| (((x + 2 * y + phase) % 9) * 25 + (x * y) % 5) as f64))
        .collect();
    GrayImage::new(w, h, px)
}

fn main() -> ssimdecomp::Result<()> {
    let train = stripes(48, 48, 0)?;
    let dict = build_random_patches(&train, 4, 40, 2024)?;
    let text = dict.save();
    println!("{} atoms of length {}, checksum {:016x}", dict.len(), dict.p(), dict.checksum());
    println!("{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
    assert_eq!(Dictionary::parse(&text)?, dict);

    let test = stripes(32, 32, 4)?;
    for m in [1, 2, 4, 8] {
        let (_, s) = decompose_image(&test, &dict, &DecomposeOptions::new(m, CostKind::Ssim))?;
        println!("m={m} mean_mse={:.3} mean_ssim={:.5} mean_pcc={:.5}", s.mean_mse, s.mean_ssim, s.mean_pcc);
    }
    Ok(())
}
