//! Closed-form affine coefficients for the MSE and SSIM schemes.
//!
//! Both schemes share the offset rule `o = μy − Σ sₖμₖ`, which makes the
//! approximation's mean equal the target's. With `w = Σ⁻¹c`:
//!
//! * MSE: `s = w`, giving `σx² = σxy` and `MSE = σy²(1 − r²)`.
//! * SSIM: `σxy = ±σy·√(cᵀΣ⁻¹c)` and `s = (σy²/σxy)·w`, giving `σx² = σy²`
//!   and `SSIM = r` (maximize) or `−r` (minimize).

use crate::blockstats::{self, Block};
use crate::covsys::{self, AtomSubset};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::selection::CostKind;

/// Below `DEGENERATE_SCORE_REL · σy²` the SSIM closed form is undefined.
pub const DEGENERATE_SCORE_REL: f64 = 1e-12;

/// Which root of the SSIM stationarity condition to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Target SSIM = +1.
    #[default]
    Maximize,
    /// Target SSIM = −1.
    Minimize,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Maximize => 1.0,
            Orientation::Minimize => -1.0,
        }
    }
}

/// Assessments of a reconstruction against its target. `ssim` and `pcc` are
/// `None` where undefined (constant reconstruction, zero means).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Achieved {
    pub mse: f64,
    pub ssim: Option<f64>,
    pub pcc: Option<f64>,
}

impl Achieved {
    pub fn measure(x: &Block, y: &Block) -> Result<Self> {
        Ok(Self {
            mse: blockstats::mse(x, y)?,
            ssim: blockstats::ssim(x, y).ok(),
            pcc: blockstats::pcc(x, y).ok(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub subset: AtomSubset,
    pub coeffs: Vec<f64>,
    pub offset: f64,
    pub cost_kind: CostKind,
    pub achieved: Achieved,
}

pub fn solve_mse(dict: &Dictionary, subset: &AtomSubset, y: &Block) -> Result<Decomposition> {
    let sys = covsys::assemble(dict, subset, y)?;
    let weights = covsys::solve_weights(&sys)?;
    mse_from_weights(dict, subset, y, weights)
}

pub fn solve_ssim(
    dict: &Dictionary,
    subset: &AtomSubset,
    y: &Block,
    orientation: Orientation,
) -> Result<Decomposition> {
    if y.is_constant() {
        return Err(Error::ZeroVarianceTarget);
    }
    let sys = covsys::assemble(dict, subset, y)?;
    let factor = sys.factor()?;
    let z = factor.forward(sys.sigma_y());
    let score: f64 = z.iter().map(|v| v * v).sum();
    let weights = factor.backward(&z);
    ssim_from_weights(dict, subset, y, sys.sigma_y2(), weights, score, orientation)
}

pub(crate) fn mse_from_weights(
    dict: &Dictionary,
    subset: &AtomSubset,
    y: &Block,
    weights: Vec<f64>,
) -> Result<Decomposition> {
    finish(dict, subset, y, weights, CostKind::Mse)
}

/// SSIM coefficients from `w = Σ⁻¹c` and the score `cᵀw`.
pub(crate) fn ssim_from_weights(
    dict: &Dictionary,
    subset: &AtomSubset,
    y: &Block,
    var_y: f64,
    weights: Vec<f64>,
    score: f64,
    orientation: Orientation,
) -> Result<Decomposition> {
    if blockstats::is_zero_variance(var_y, y.stats().mean) {
        return Err(Error::ZeroVarianceTarget);
    }
    if score.is_nan() || score <= DEGENERATE_SCORE_REL * var_y {
        return Err(Error::DegenerateCorrelation);
    }
    let cov_xy = orientation.sign() * var_y.sqrt() * score.sqrt();
    let scale = var_y / cov_xy;
    let coeffs = weights.into_iter().map(|w| scale * w).collect();
    finish(dict, subset, y, coeffs, CostKind::Ssim)
}

fn finish(dict: &Dictionary, subset: &AtomSubset, y: &Block, coeffs: Vec<f64>, cost_kind: CostKind) -> Result<Decomposition> {
    let offset = mean_matching_offset(dict, subset.indices(), &coeffs, y)?;
    let x = reconstruct_parts(dict, subset.indices(), &coeffs, offset)?;
    let achieved = Achieved::measure(&x, y)?;
    Ok(Decomposition { subset: subset.clone(), coeffs, offset, cost_kind, achieved })
}

/// `o = μy − Σ sₖμₖ`.
pub fn mean_matching_offset(dict: &Dictionary, indices: &[usize], coeffs: &[f64], y: &Block) -> Result<f64> {
    let mut offset = y.stats().mean;
    for (&i, s) in indices.iter().zip(coeffs) {
        offset -= s * dict.atom(i)?.stats().mean;
    }
    Ok(offset)
}

pub fn reconstruct(dict: &Dictionary, d: &Decomposition) -> Result<Block> {
    reconstruct_parts(dict, d.subset.indices(), &d.coeffs, d.offset)
}

/// `x = Σ sₖ·atom[iₖ] + o·1`. An empty index list yields the constant block `o`.
pub fn reconstruct_parts(dict: &Dictionary, indices: &[usize], coeffs: &[f64], offset: f64) -> Result<Block> {
    if indices.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: indices.len(), found: coeffs.len() });
    }
    let mut x = vec![offset; dict.p()];
    for (&i, &s) in indices.iter().zip(coeffs) {
        for (xi, ai) in x.iter_mut().zip(dict.atom(i)?.as_slice()) {
            *xi += s * ai;
        }
    }
    Block::new(x)
}
