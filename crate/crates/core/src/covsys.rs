//! The symmetric covariance system shared by the MSE and SSIM schemes.
//!
//! For a subset of atoms and a target `y` the system holds the atom
//! covariance matrix `Σ`, the cross-covariance vector `c` (atom vs. target)
//! and the target variance. Both closed-form solvers reduce to
//! `w = Σ⁻¹c`, and the quantity every cost function maximizes at selection
//! time is the projection score `cᵀΣ⁻¹c`.

use crate::blockstats::{self, Block};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};

/// Relative pivot threshold: a squared pivot below
/// `PIVOT_REL · trace(Σ) / m` marks the system as singular.
pub const PIVOT_REL: f64 = 1e-10;

/// Ordered, duplicate-free list of atom indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomSubset(Vec<usize>);

impl AtomSubset {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubset(format!("duplicate indices in {indices:?}")));
        }
        Ok(Self(indices))
    }

    /// Checks every index against a dictionary of `n` atoms.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, len: n }),
            None => Ok(()),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sorted(&self) -> AtomSubset {
        let mut v = self.0.clone();
        v.sort_unstable();
        AtomSubset(v)
    }

    pub fn with(&self, index: usize) -> Result<AtomSubset> {
        let mut v = self.0.clone();
        v.push(index);
        AtomSubset::new(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovSystem {
    m: usize,
    /// Row-major `m × m`.
    sigma: Vec<f64>,
    sigma_y: Vec<f64>,
    sigma_y2: f64,
}

impl CovSystem {
    pub fn new(sigma: Vec<f64>, sigma_y: Vec<f64>, sigma_y2: f64) -> Result<Self> {
        let m = sigma_y.len();
        if m == 0 {
            return Err(Error::InvalidSystem("empty system".into()));
        }
        if sigma.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, found: sigma.len() });
        }
        if sigma.iter().chain(&sigma_y).any(|v| !v.is_finite()) || !sigma_y2.is_finite() || sigma_y2 < 0.0 {
            return Err(Error::InvalidSystem("non-finite or negative entries".into()));
        }
        for i in 0..m {
            if sigma[i * m + i].is_nan() || sigma[i * m + i] <= 0.0 {
                return Err(Error::InvalidSystem(format!("diagonal entry {i} is not positive")));
            }
            for j in 0..i {
                let (a, b) = (sigma[i * m + j], sigma[j * m + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                    return Err(Error::InvalidSystem(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { m, sigma, sigma_y, sigma_y2 })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.m + j]
    }

    pub fn sigma_matrix(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma_y(&self) -> &[f64] {
        &self.sigma_y
    }

    pub fn sigma_y2(&self) -> f64 {
        self.sigma_y2
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.sigma(i, i)).sum()
    }

    pub fn factor(&self) -> Result<CholeskyFactor> {
        CholeskyFactor::factor(&self.sigma, self.m)
    }
}

/// Lower-triangular Cholesky factor that can grow one row at a time.
///
/// A grown factor is identical to factoring the bordered matrix from
/// scratch, and the singularity test always uses the trace of the full
/// current matrix so both routes accept and reject the same systems.
#[derive(Debug, Clone, Default)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
    trace: f64,
    min_pivot: f64,
}

impl CholeskyFactor {
    pub fn new() -> Self {
        Self { dim: 0, lower: Vec::new(), trace: 0.0, min_pivot: f64::INFINITY }
    }

    pub fn factor(matrix: &[f64], dim: usize) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: matrix.len() });
        }
        let mut f = Self::new();
        let mut row = Vec::with_capacity(dim);
        for k in 0..dim {
            row.clear();
            row.extend_from_slice(&matrix[k * dim..k * dim + k]);
            f.push_unchecked(&row, matrix[k * dim + k]);
        }
        f.check()?;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Returns a factor of the matrix bordered by `column` (covariances with
    /// the existing rows) and `diag`.
    pub fn extended(&self, column: &[f64], diag: f64) -> Result<Self> {
        let mut f = self.clone();
        f.push_unchecked(column, diag);
        f.check()?;
        Ok(f)
    }

    fn push_unchecked(&mut self, column: &[f64], diag: f64) {
        debug_assert_eq!(column.len(), self.dim);
        let z = self.forward(column);
        let pivot = diag - z.iter().map(|v| v * v).sum::<f64>();
        let pivot = if pivot.is_nan() { f64::NEG_INFINITY } else { pivot };
        let n = self.dim + 1;
        let mut lower = vec![0.0; n * n];
        for i in 0..self.dim {
            lower[i * n..i * n + self.dim].copy_from_slice(&self.lower[i * self.dim..(i + 1) * self.dim]);
        }
        lower[self.dim * n..self.dim * n + self.dim].copy_from_slice(&z);
        lower[self.dim * n + self.dim] = pivot.max(0.0).sqrt();
        self.lower = lower;
        self.dim = n;
        self.trace += diag;
        self.min_pivot = self.min_pivot.min(pivot);
    }

    fn check(&self) -> Result<()> {
        let threshold = PIVOT_REL * self.trace / self.dim as f64;
        if self.min_pivot.is_nan() || self.min_pivot < threshold || self.min_pivot <= 0.0 {
            return Err(Error::NearSingular { pivot: self.min_pivot, threshold });
        }
        Ok(())
    }

    /// Solves `L z = rhs`.
    pub fn forward(&self, rhs: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        for i in 0..self.dim {
            let s: f64 = (0..i).map(|k| self.at(i, k) * z[k]).sum();
            z[i] = (rhs[i] - s) / self.at(i, i);
        }
        z
    }

    /// Solves `Lᵀ w = z`.
    pub fn backward(&self, z: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for i in (0..self.dim).rev() {
            let s: f64 = (i + 1..self.dim).map(|k| self.at(k, i) * w[k]).sum();
            w[i] = (z[i] - s) / self.at(i, i);
        }
        w
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(rhs))
    }
}

pub fn assemble(dict: &Dictionary, subset: &AtomSubset, y: &Block) -> Result<CovSystem> {
    subset.validate(dict.len())?;
    if y.len() != dict.p() {
        return Err(Error::DimensionMismatch { expected: dict.p(), found: y.len() });
    }
    let m = subset.len();
    let atoms: Vec<&Block> = subset.indices().iter().map(|&i| &dict.atoms()[i]).collect();
    for (&index, atom) in subset.indices().iter().zip(&atoms) {
        if atom.is_constant() {
            return Err(Error::ZeroVarianceAtom(index));
        }
    }
    let mut sigma = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let c = blockstats::covariance(atoms[i], atoms[j])?;
            sigma[i * m + j] = c;
            sigma[j * m + i] = c;
        }
    }
    let sigma_y = atoms
        .iter()
        .map(|a| blockstats::covariance(a, y))
        .collect::<Result<Vec<_>>>()?;
    CovSystem::new(sigma, sigma_y, y.stats().variance)
}

/// `w = Σ⁻¹c` via Cholesky factorization.
pub fn solve_weights(sys: &CovSystem) -> Result<Vec<f64>> {
    Ok(sys.factor()?.solve(sys.sigma_y()))
}

/// Projection score `cᵀΣ⁻¹c`, evaluated as `‖L⁻¹c‖²` so it is never negative.
pub fn score(sys: &CovSystem) -> Result<f64> {
    let z = sys.factor()?.forward(sys.sigma_y());
    Ok(z.iter().map(|v| v * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dict(rows: &[&[f64]]) -> Dictionary {
        Dictionary::from_rows(rows.iter().map(|r| r.to_vec()).collect(), "test").unwrap()
    }

    fn blk(v: &[f64]) -> Block {
        Block::new(v.to_vec()).unwrap()
    }

    fn identity(m: usize) -> Vec<f64> {
        let mut s = vec![0.0; m * m];
        for i in 0..m {
            s[i * m + i] = 1.0;
        }
        s
    }

    #[test]
    fn subset_validation() {
        assert!(AtomSubset::new(vec![]).is_err());
        assert!(AtomSubset::new(vec![1, 2, 1]).is_err());
        let s = AtomSubset::new(vec![3, 0]).unwrap();
        assert_eq!(s.validate(3), Err(Error::IndexOutOfRange { index: 3, len: 3 }));
        assert!(s.validate(4).is_ok());
        assert_eq!(s.sorted().indices(), &[0, 3]);
    }

    #[test]
    fn assemble_single_atom() {
        let d = dict(&[&[0.0, 1.0, 2.0]]);
        let sys = assemble(&d, &AtomSubset::new(vec![0]).unwrap(), &blk(&[0.0, 2.0, 5.0])).unwrap();
        assert!((sys.sigma(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((sys.sigma_y()[0] - 5.0 / 3.0).abs() < 1e-15);
        assert!((sys.sigma_y2() - 38.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn duplicate_atoms_assemble_but_fail_to_solve() {
        let d = dict(&[&[0.0, 1.0, 2.0, 7.0], &[0.0, 1.0, 2.0, 7.0]]);
        let y = blk(&[1.0, 0.0, 3.0, 2.0]);
        let sys = assemble(&d, &AtomSubset::new(vec![0, 1]).unwrap(), &y).unwrap();
        assert!(matches!(solve_weights(&sys), Err(Error::NearSingular { .. })));
        assert!(matches!(score(&sys), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn target_equal_to_atom() {
        let d = dict(&[&[0.0, 1.0, 2.0, 7.0], &[3.0, 1.0, 2.0, 1.0]]);
        let y = d.atoms()[0].clone();
        let sys = assemble(&d, &AtomSubset::new(vec![0, 1]).unwrap(), &y).unwrap();
        assert_eq!(sys.sigma_y()[0], sys.sigma(0, 0));
    }

    #[test]
    fn assemble_errors() {
        let d = dict(&[&[0.0, 1.0, 2.0]]);
        let sub = AtomSubset::new(vec![0]).unwrap();
        assert!(matches!(assemble(&d, &sub, &blk(&[1.0, 2.0])), Err(Error::DimensionMismatch { .. })));
        let sub = AtomSubset::new(vec![1]).unwrap();
        assert!(matches!(assemble(&d, &sub, &blk(&[1.0, 2.0, 3.0])), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn solve_examples() {
        let sys = CovSystem::new(vec![2.0 / 3.0], vec![5.0 / 3.0], 38.0 / 9.0).unwrap();
        let w = solve_weights(&sys).unwrap();
        assert!((w[0] - 2.5).abs() < 1e-15);
        assert!((score(&sys).unwrap() - 25.0 / 6.0).abs() < 1e-14);

        let v = vec![1.5, -2.0, 0.25, 4.0];
        let sys = CovSystem::new(identity(4), v.clone(), 30.0).unwrap();
        assert_eq!(solve_weights(&sys).unwrap(), v);

        let sys = CovSystem::new(vec![1.0, 1.0, 1.0, 1.0], vec![0.3, -0.2], 1.0).unwrap();
        assert!(matches!(solve_weights(&sys), Err(Error::NearSingular { .. })));

        let sys = CovSystem::new(identity(3), vec![0.0; 3], 2.0).unwrap();
        assert_eq!(score(&sys).unwrap(), 0.0);
    }

    #[test]
    fn exact_representation_scores_full_variance() {
        let d = dict(&[&[0.0, 1.0, 2.0, 4.0]]);
        let y = blk(&[5.0, 8.0, 11.0, 17.0]);
        let sys = assemble(&d, &AtomSubset::new(vec![0]).unwrap(), &y).unwrap();
        let s = score(&sys).unwrap();
        assert!((s - sys.sigma_y2()).abs() <= 1e-12 * sys.sigma_y2());
    }

    #[test]
    fn system_validation() {
        assert!(CovSystem::new(vec![1.0, 0.5, 0.4, 1.0], vec![1.0, 1.0], 1.0).is_err());
        assert!(CovSystem::new(vec![0.0], vec![1.0], 1.0).is_err());
        assert!(CovSystem::new(vec![1.0], vec![1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn grown_factor_matches_direct_factor() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let direct = CholeskyFactor::factor(&a, 3).unwrap();
        let grown = CholeskyFactor::new()
            .extended(&[], 4.0)
            .unwrap()
            .extended(&[1.0], 3.0)
            .unwrap()
            .extended(&[0.5, 0.2], 2.0)
            .unwrap();
        assert_eq!(direct.lower, grown.lower);
    }

    /// Random `m × p` atoms and a target; returns the assembled system.
    fn random_system() -> impl Strategy<Value = CovSystem> {
        (1usize..6, 8usize..20)
            .prop_flat_map(|(m, p)| {
                (
                    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, p), m),
                    prop::collection::vec(-10.0f64..10.0, p),
                )
            })
            .prop_filter_map("solvable", |(rows, y)| {
                let m = rows.len();
                let d = Dictionary::from_rows(rows, "prop").ok()?;
                let sub = AtomSubset::new((0..m).collect()).ok()?;
                let sys = assemble(&d, &sub, &Block::new(y).ok()?).ok()?;
                sys.factor().ok()?;
                Some(sys)
            })
    }

    proptest! {
        #[test]
        fn score_is_dot_of_weights(sys in random_system()) {
            let w = solve_weights(&sys).unwrap();
            let dot: f64 = w.iter().zip(sys.sigma_y()).map(|(a, b)| a * b).sum();
            let s = score(&sys).unwrap();
            prop_assert!((s - dot).abs() <= 1e-9 * s.abs().max(sys.sigma_y2()));
            // residual bound
            let m = sys.dim();
            let ymax = sys.sigma_y().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..m {
                let r: f64 = (0..m).map(|j| sys.sigma(i, j) * w[j]).sum::<f64>() - sys.sigma_y()[i];
                prop_assert!(r.abs() <= 1e-9 * (1.0 + ymax));
            }
        }

        #[test]
        fn score_is_bounded_by_target_variance(sys in random_system()) {
            let s = score(&sys).unwrap();
            prop_assert!(s >= 0.0);
            prop_assert!(s <= sys.sigma_y2() + 1e-9);
            prop_assert!(s.sqrt() / sys.sigma_y2().sqrt() <= 1.0 + 1e-9);
        }

        #[test]
        fn score_is_order_invariant(sys in random_system(), seed in any::<u64>()) {
            let m = sys.dim();
            let mut perm: Vec<usize> = (0..m).collect();
            // Deterministic shuffle from the seed.
            let mut state = seed;
            for i in (1..m).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (state >> 33) as usize % (i + 1));
            }
            let sigma: Vec<f64> = (0..m * m).map(|k| sys.sigma(perm[k / m], perm[k % m])).collect();
            let sy: Vec<f64> = perm.iter().map(|&i| sys.sigma_y()[i]).collect();
            let permuted = CovSystem::new(sigma, sy, sys.sigma_y2()).unwrap();
            let (a, b) = (score(&sys).unwrap(), score(&permuted).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
        }

        #[test]
        fn weights_are_scale_invariant(sys in random_system()) {
            let w = solve_weights(&sys).unwrap();
            let s = score(&sys).unwrap();
            for c in [0.5, 2.0, 10.0] {
                let scaled = CovSystem::new(
                    sys.sigma_matrix().iter().map(|v| v * c).collect(),
                    sys.sigma_y().iter().map(|v| v * c).collect(),
                    sys.sigma_y2() * c,
                ).unwrap();
                let ws = solve_weights(&scaled).unwrap();
                let wmax = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for (a, b) in w.iter().zip(&ws) {
                    prop_assert!((a - b).abs() <= 1e-9 * wmax.max(1e-300));
                }
                prop_assert!((score(&scaled).unwrap() - c * s).abs() <= 1e-9 * c * s.max(1e-300));
            }
        }
    }
}
