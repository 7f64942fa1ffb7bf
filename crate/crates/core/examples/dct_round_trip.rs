//! Decomposes a synthetic image over the 8x8 DCT basis at several
//! sparsities and reconstructs it.
//!
//! `cargo run --example dct_round_trip -- [out.pgm]` writes the sparsest
//! reconstruction when a path is given.

use ssimdecomp::codes::{decompose_image, reconstruct_image, CodesFile};
use ssimdecomp::dictionary::build_dct;
use ssimdecomp::imageio::{read_pgm, write_pgm};
use ssimdecomp::selection::CostKind;
use ssimdecomp::{DecomposeOptions, GrayImage, PgmFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h) = (70, 45);
    let px = (0..h)
        .flat_map(|y| (0..w).map(move |x| (128.0 + 90.0 * ((x * x + y * y) as f64 / 300.0).sin()).round()))
        .collect();
    let img = GrayImage::new(w, h, px)?;
    let dict = build_dct(8)?;

    let mut sparsest = None;
    for m in [63, 16, 4] {
        for cost in [CostKind::Mse, CostKind::Ssim] {
            let (codes, summary) = decompose_image(&img, &dict, &DecomposeOptions::new(m, cost))?;
            let text = codes.render();
            let rebuilt = reconstruct_image(&CodesFile::parse(&text)?, &dict)?;
            let exact = read_pgm(&write_pgm(&rebuilt, PgmFormat::P5))? == img;
            println!(
                "m={m:<2} cost={cost:<4} mean_mse={:.4e} mean_ssim={:.5} bit_exact={exact} codes={} bytes",
                summary.mean_mse,
                summary.mean_ssim,
                text.len()
            );
            sparsest = Some(rebuilt);
        }
    }
    if let (Some(path), Some(img)) = (std::env::args().nth(1), sparsest) {
        std::fs::write(&path, write_pgm(&img, PgmFormat::P5))?;
        println!("wrote {path}");
    }
    Ok(())
}
