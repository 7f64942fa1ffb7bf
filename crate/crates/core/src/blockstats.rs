//! Block statistics and the three assessments used as decomposition costs:
//! mean squared error, Pearson correlation, and SSIM (both the stabilized
//! form with positive constants and the constant-free form).
//!
//! Variances and covariances use the population convention (divide by `p`).

use crate::error::{Error, Result};

/// Relative threshold below which a variance counts as zero.
pub const ZERO_VARIANCE_REL: f64 = 1e-12;

/// A fixed-length block of finite real samples, `p >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block(Vec<f64>);

impl Block {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::InvalidBlock(format!(
                "length {} is below the minimum of 2",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidBlock(format!("sample {i} is not finite")));
        }
        Ok(Self(data))
    }

    pub fn constant(value: f64, len: usize) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn stats(&self) -> BlockStats {
        stats(self)
    }

    /// True when the variance is negligible relative to `max(1, mean²)`.
    pub fn is_constant(&self) -> bool {
        self.stats().is_zero_variance()
    }
}

impl AsRef<[f64]> for Block {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Block {
    type Error = Error;

    fn try_from(data: Vec<f64>) -> Result<Self> {
        Self::new(data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStats {
    pub mean: f64,
    /// Population variance, `scatter / p`.
    pub variance: f64,
    /// Sum of squared deviations from the mean.
    pub scatter: f64,
}

impl BlockStats {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn is_zero_variance(&self) -> bool {
        is_zero_variance(self.variance, self.mean)
    }
}

pub(crate) fn is_zero_variance(variance: f64, mean: f64) -> bool {
    variance < ZERO_VARIANCE_REL * (mean * mean).max(1.0)
}

fn mean_of(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

pub fn stats(b: &Block) -> BlockStats {
    let data = b.as_slice();
    let mean = mean_of(data);
    let scatter: f64 = data.iter().map(|v| (v - mean) * (v - mean)).sum();
    BlockStats {
        mean,
        variance: scatter / data.len() as f64,
        scatter,
    }
}

fn check_lengths(a: &Block, b: &Block) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Unnormalized cross scatter `Σ(a_i − ā)(b_i − b̄)`.
fn cross_scatter(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean_of(a), mean_of(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum()
}

pub fn covariance(a: &Block, b: &Block) -> Result<f64> {
    check_lengths(a, b)?;
    Ok(cross_scatter(a.as_slice(), b.as_slice()) / a.len() as f64)
}

/// Pearson correlation coefficient. Undefined when either block is constant.
pub fn pcc(a: &Block, b: &Block) -> Result<f64> {
    check_lengths(a, b)?;
    let (sa, sb) = (stats(a), stats(b));
    if sa.is_zero_variance() || sb.is_zero_variance() {
        return Err(Error::ZeroVariance);
    }
    Ok(cross_scatter(a.as_slice(), b.as_slice()) / (sa.scatter.sqrt() * sb.scatter.sqrt()))
}

pub fn mse(a: &Block, b: &Block) -> Result<f64> {
    check_lengths(a, b)?;
    let sum: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (y - x) * (y - x))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB. Identical blocks yield `f64::INFINITY`.
pub fn psnr(a: &Block, b: &Block, peak: f64) -> Result<f64> {
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::InvalidConfig(format!("psnr peak must be positive, got {peak}")));
    }
    Ok(psnr_from_mse(mse(a, b)?, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (peak * peak / mse).log10()
}

/// Standard SSIM constants for 8-bit data, `(0.01·255)²` and `(0.03·255)²`.
pub const DEFAULT_EPS1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
pub const DEFAULT_EPS2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// SSIM with stabilizing constants:
/// `[(2μaμb + e1)/(μa² + μb² + e1)] · [(2σab + e2)/(σa² + σb² + e2)]`.
pub fn ssim_eps(a: &Block, b: &Block, e1: f64, e2: f64) -> Result<f64> {
    check_lengths(a, b)?;
    if !(e1 > 0.0 && e2 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "ssim constants must be positive, got e1={e1} e2={e2}"
        )));
    }
    let (sa, sb) = (stats(a), stats(b));
    let cov = covariance(a, b)?;
    let luminance = (2.0 * sa.mean * sb.mean + e1) / (sa.mean * sa.mean + sb.mean * sb.mean + e1);
    let structure = (2.0 * cov + e2) / (sa.variance + sb.variance + e2);
    Ok(luminance * structure)
}

/// Constant-free SSIM, `4μaμbσab / ((μa² + μb²)(σa² + σb²))`.
pub fn ssim(a: &Block, b: &Block) -> Result<f64> {
    check_lengths(a, b)?;
    let (sa, sb) = (stats(a), stats(b));
    if sa.is_zero_variance() && sb.is_zero_variance() {
        return Err(Error::DegenerateInput("both blocks have zero variance"));
    }
    let mean_sq = sa.mean * sa.mean + sb.mean * sb.mean;
    if mean_sq == 0.0 {
        return Err(Error::DegenerateInput("both blocks have zero mean"));
    }
    let cov = covariance(a, b)?;
    Ok(4.0 * sa.mean * sb.mean * cov / (mean_sq * (sa.variance + sb.variance)))
}

/// SSIM for a pair whose means agree, `2σab / (σa² + σb²)`. This is the
/// limit of [`ssim`] as the means coincide, and is defined even at zero mean.
pub fn ssim_mean_matched(a: &Block, b: &Block) -> Result<f64> {
    check_lengths(a, b)?;
    let (sa, sb) = (stats(a), stats(b));
    let denom = sa.variance + sb.variance;
    if denom == 0.0 {
        return Err(Error::DegenerateInput("both blocks have zero variance"));
    }
    Ok(2.0 * covariance(a, b)? / denom)
}
