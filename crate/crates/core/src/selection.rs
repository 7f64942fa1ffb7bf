//! Choosing which atoms represent a target.
//!
//! Every candidate subset is judged by the cost its own scheme actually
//! achieves after solving for coefficients: MSE of the MSE fit, |SSIM| of
//! the SSIM fit, or |r| of the MSE fit. The three rankings coincide because
//! each cost is a monotone function of the projection score, but the code
//! paths stay separate so that agreement can be checked rather than assumed.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rayon::prelude::*;

use crate::blockstats::{self, Block};
use crate::covsys::{self, AtomSubset, CholeskyFactor};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::solvers::{self, Decomposition, Orientation};

/// Candidates whose costs differ by less than this (relative) are tied.
pub const TIE_REL: f64 = 1e-12;

/// Upper bound on the number of subsets [`exhaustive_select`] will enumerate.
pub const MAX_SUBSETS: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    Mse,
    Ssim,
    Pcc,
}

impl CostKind {
    pub const ALL: [CostKind; 3] = [CostKind::Mse, CostKind::Ssim, CostKind::Pcc];

    pub fn tag(self) -> &'static str {
        match self {
            CostKind::Mse => "mse",
            CostKind::Ssim => "ssim",
            CostKind::Pcc => "pcc",
        }
    }

    pub fn orientation(self) -> CostOrientation {
        match self {
            CostKind::Mse => CostOrientation::LowerIsBetter,
            CostKind::Ssim | CostKind::Pcc => CostOrientation::HigherIsBetter,
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.tag())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(CostKind::Mse),
            "ssim" => Ok(CostKind::Ssim),
            "pcc" => Ok(CostKind::Pcc),
            _ => Err(Error::InvalidConfig(format!("unknown cost {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostOrientation {
    LowerIsBetter,
    HigherIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostValue {
    pub value: f64,
    pub orientation: CostOrientation,
}

impl CostValue {
    /// Strictly better by more than `rel` of the larger magnitude.
    pub fn better_than(&self, other: &CostValue, rel: f64) -> bool {
        let margin = rel * self.value.abs().max(other.value.abs());
        match self.orientation {
            CostOrientation::LowerIsBetter => self.value < other.value - margin,
            CostOrientation::HigherIsBetter => self.value > other.value + margin,
        }
    }

    pub fn ties(&self, other: &CostValue, rel: f64) -> bool {
        !self.better_than(other, rel) && !other.better_than(self, rel)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Selection order for greedy search, sorted for exhaustive search.
    pub subset: AtomSubset,
    /// Projection score after each greedy step (a single entry for exhaustive).
    pub step_scores: Vec<f64>,
    pub final_cost: CostValue,
}

/// The cost a scheme achieves with reconstruction `x` of target `y`.
pub fn cost_of(kind: CostKind, x: &Block, y: &Block) -> Result<CostValue> {
    let value = match kind {
        CostKind::Mse => blockstats::mse(x, y)?,
        CostKind::Ssim => match blockstats::ssim(x, y) {
            Ok(v) => v.abs(),
            // Both means zero: the SSIM fit matches means, so use the
            // equal-mean limit of the formula.
            Err(Error::DegenerateInput(_)) => blockstats::ssim_mean_matched(x, y)?.abs(),
            Err(e) => return Err(e),
        },
        CostKind::Pcc => match blockstats::pcc(x, y) {
            Ok(v) => v.abs(),
            Err(Error::ZeroVariance) => return Err(Error::DegenerateCorrelation),
            Err(e) => return Err(e),
        },
    };
    Ok(CostValue { value, orientation: kind.orientation() })
}

/// Solves the subset under `kind`'s own scheme and measures the result.
pub fn evaluate_cost(dict: &Dictionary, subset: &AtomSubset, y: &Block, kind: CostKind) -> Result<CostValue> {
    let d = match kind {
        CostKind::Mse | CostKind::Pcc => solvers::solve_mse(dict, subset, y)?,
        CostKind::Ssim => solvers::solve_ssim(dict, subset, y, Orientation::Maximize)?,
    };
    cost_of(kind, &solvers::reconstruct(dict, &d)?, y)
}

/// Errors that make a subset unusable without aborting the search.
fn is_skippable(e: &Error) -> bool {
    matches!(e, Error::NearSingular { .. } | Error::DegenerateCorrelation)
}

fn check_request(dict: &Dictionary, y: &Block, m: usize) -> Result<()> {
    if m == 0 || m > dict.len() {
        return Err(Error::InvalidConfig(format!("sparsity {m} outside 1..={}", dict.len())));
    }
    if y.len() != dict.p() {
        return Err(Error::DimensionMismatch { expected: dict.p(), found: y.len() });
    }
    if y.is_constant() {
        return Err(Error::ZeroVarianceTarget);
    }
    Ok(())
}

/// Index of the best entry; earlier entries win ties.
fn pick_best<T>(entries: &[(T, CostValue)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, (_, cost)) in entries.iter().enumerate() {
        match best {
            Some(b) if !cost.better_than(&entries[b].1, TIE_REL) => {}
            _ => best = Some(k),
        }
    }
    best
}

struct Candidate {
    factor: CholeskyFactor,
    score: f64,
}

/// Greedy forward selection (the orthogonal-matching-pursuit analog): at
/// each step add the atom whose inclusion gives the best achieved cost.
/// Candidates that make the system singular or uncorrelated are skipped.
pub fn greedy_select(dict: &Dictionary, y: &Block, m: usize, kind: CostKind) -> Result<SelectionResult> {
    check_request(dict, y, m)?;
    let n = dict.len();
    let atoms = dict.atoms();
    let gram: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| blockstats::covariance(&atoms[i], &atoms[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let cross: Vec<f64> = atoms.iter().map(|a| blockstats::covariance(a, y)).collect::<Result<_>>()?;
    let var_y = y.stats().variance;

    let mut selected: Vec<usize> = Vec::with_capacity(m);
    let mut factor = CholeskyFactor::new();
    let mut step_scores = Vec::with_capacity(m);
    let mut final_cost = None;

    for _ in 0..m {
        let candidates: Vec<usize> = (0..n).filter(|j| !selected.contains(j)).collect();
        let evaluated: Vec<Option<(Candidate, CostValue)>> = candidates
            .par_iter()
            .map(|&j| {
                let column: Vec<f64> = selected.iter().map(|&s| gram[s][j]).collect();
                let grown = match factor.extended(&column, gram[j][j]) {
                    Ok(f) => f,
                    Err(e) if is_skippable(&e) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let rhs: Vec<f64> = selected.iter().chain(std::iter::once(&j)).map(|&s| cross[s]).collect();
                let z = grown.forward(&rhs);
                let score: f64 = z.iter().map(|v| v * v).sum();
                let weights = grown.backward(&z);
                let subset = AtomSubset::new(selected.iter().copied().chain(std::iter::once(j)).collect())?;
                let fit = match kind {
                    CostKind::Mse | CostKind::Pcc => solvers::mse_from_weights(dict, &subset, y, weights),
                    CostKind::Ssim => {
                        solvers::ssim_from_weights(dict, &subset, y, var_y, weights, score, Orientation::Maximize)
                    }
                };
                let cost = fit
                    .and_then(|d| solvers::reconstruct(dict, &d))
                    .and_then(|x| cost_of(kind, &x, y));
                match cost {
                    Ok(c) => Ok(Some((Candidate { factor: grown, score }, c))),
                    Err(e) if is_skippable(&e) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;

        let usable: Vec<(usize, Candidate, CostValue)> = candidates
            .into_iter()
            .zip(evaluated)
            .filter_map(|(j, e)| e.map(|(c, v)| (j, c, v)))
            .collect();
        let ranked: Vec<(usize, CostValue)> = usable.iter().map(|(j, _, v)| (*j, *v)).collect();
        let Some(best) = pick_best(&ranked) else {
            return Err(Error::NotEnoughUsableAtoms { usable: selected.len(), requested: m });
        };
        let (j, cand, cost) = usable.into_iter().nth(best).expect("index from pick_best");
        selected.push(j);
        factor = cand.factor;
        step_scores.push(cand.score);
        final_cost = Some(cost);
    }

    Ok(SelectionResult {
        subset: AtomSubset::new(selected)?,
        step_scores,
        final_cost: final_cost.expect("m >= 1"),
    })
}

/// Number of `m`-subsets of `n` items, saturating at `u128::MAX`.
pub fn subset_count(n: usize, m: usize) -> u128 {
    if m > n {
        return 0;
    }
    let k = m.min(n - m) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(n as u128 - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Cost of every `m`-subset in lexicographic order; unusable subsets carry
/// their error.
pub fn enumerate_costs(
    dict: &Dictionary,
    y: &Block,
    m: usize,
    kind: CostKind,
) -> Result<Vec<(AtomSubset, Result<CostValue>)>> {
    check_request(dict, y, m)?;
    let count = subset_count(dict.len(), m);
    if count > MAX_SUBSETS {
        return Err(Error::CombinatorialBlowup { count, limit: MAX_SUBSETS });
    }
    let subsets: Vec<AtomSubset> = (0..dict.len())
        .combinations(m)
        .map(AtomSubset::new)
        .collect::<Result<_>>()?;
    Ok(subsets
        .into_par_iter()
        .map(|s| {
            let c = evaluate_cost(dict, &s, y, kind);
            (s, c)
        })
        .collect())
}

/// Brute-force optimum over all `m`-subsets. Ties go to the
/// lexicographically smallest index list.
pub fn exhaustive_select(dict: &Dictionary, y: &Block, m: usize, kind: CostKind) -> Result<SelectionResult> {
    let all = enumerate_costs(dict, y, m, kind)?;
    best_of(dict, y, m, all)
}

pub(crate) fn best_of(
    dict: &Dictionary,
    y: &Block,
    m: usize,
    all: Vec<(AtomSubset, Result<CostValue>)>,
) -> Result<SelectionResult> {
    let mut usable = Vec::with_capacity(all.len());
    for (s, c) in all {
        match c {
            Ok(c) => usable.push((s, c)),
            Err(e) if is_skippable(&e) => {}
            Err(e) => return Err(e),
        }
    }
    let Some(best) = pick_best(&usable) else {
        return Err(Error::NotEnoughUsableAtoms { usable: 0, requested: m });
    };
    let (subset, final_cost) = usable.swap_remove(best);
    let score = covsys::score(&covsys::assemble(dict, &subset, y)?)?;
    Ok(SelectionResult { subset, step_scores: vec![score], final_cost })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Search {
    #[default]
    Greedy,
    Exhaustive,
}

/// Which closed form supplies the stored coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffScheme {
    Mse,
    Ssim,
}

impl CoeffScheme {
    /// MSE coefficients for MSE and PCC costs, SSIM coefficients for SSIM.
    pub fn default_for(kind: CostKind) -> Self {
        match kind {
            CostKind::Ssim => CoeffScheme::Ssim,
            CostKind::Mse | CostKind::Pcc => CoeffScheme::Mse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    pub sparsity: usize,
    pub cost: CostKind,
    pub search: Search,
    pub coeffs: CoeffScheme,
    pub orientation: Orientation,
}

impl DecomposeOptions {
    pub fn new(sparsity: usize, cost: CostKind) -> Self {
        Self {
            sparsity,
            cost,
            search: Search::Greedy,
            coeffs: CoeffScheme::default_for(cost),
            orientation: Orientation::Maximize,
        }
    }
}

/// Selects atoms for `y` and solves for the requested coefficients. The
/// returned decomposition carries the selection cost tag.
pub fn decompose(dict: &Dictionary, y: &Block, opts: &DecomposeOptions) -> Result<Decomposition> {
    let selection = match opts.search {
        Search::Greedy => greedy_select(dict, y, opts.sparsity, opts.cost)?,
        Search::Exhaustive => exhaustive_select(dict, y, opts.sparsity, opts.cost)?,
    };
    let mut d = match opts.coeffs {
        CoeffScheme::Mse => solvers::solve_mse(dict, &selection.subset, y)?,
        CoeffScheme::Ssim => solvers::solve_ssim(dict, &selection.subset, y, opts.orientation)?,
    };
    d.cost_kind = opts.cost;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockstats::covariance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn blk(v: &[f64]) -> Block {
        Block::new(v.to_vec()).unwrap()
    }

    fn gaussian(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
        (0..p).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn random_dict(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dictionary {
        Dictionary::from_rows((0..n).map(|_| gaussian(rng, p)).collect(), "rand").unwrap()
    }

    #[test]
    fn cost_kind_tags() {
        for k in CostKind::ALL {
            assert_eq!(k.tag().parse::<CostKind>().unwrap(), k);
        }
        assert!("l1".parse::<CostKind>().is_err());
    }

    #[test]
    fn cost_comparison() {
        let lo = |v| CostValue { value: v, orientation: CostOrientation::LowerIsBetter };
        let hi = |v| CostValue { value: v, orientation: CostOrientation::HigherIsBetter };
        assert!(lo(1.0).better_than(&lo(2.0), TIE_REL));
        assert!(hi(2.0).better_than(&hi(1.0), TIE_REL));
        assert!(lo(1.0).ties(&lo(1.0 + 1e-14), TIE_REL));
    }

    #[test]
    fn perfect_match_selected_under_every_cost() {
        let d = Dictionary::from_rows(vec![vec![0.0, 3.0, 1.0, 2.0], vec![1.0, 0.0, 4.0, 2.0]], "").unwrap();
        let y = d.atoms()[0].clone();
        for k in CostKind::ALL {
            assert_eq!(greedy_select(&d, &y, 1, k).unwrap().subset.indices(), &[0]);
            assert_eq!(exhaustive_select(&d, &y, 1, k).unwrap().subset.indices(), &[0]);
        }
    }

    #[test]
    fn evaluate_cost_examples() {
        let d = Dictionary::from_rows(vec![vec![0.0, 1.0, 2.0]], "").unwrap();
        let one = AtomSubset::new(vec![0]).unwrap();
        let exact = blk(&[5.0, 8.0, 11.0]);
        assert!(evaluate_cost(&d, &one, &exact, CostKind::Mse).unwrap().value < 1e-26);
        assert!((evaluate_cost(&d, &one, &exact, CostKind::Ssim).unwrap().value - 1.0).abs() < 1e-12);
        assert!((evaluate_cost(&d, &one, &exact, CostKind::Pcc).unwrap().value - 1.0).abs() < 1e-12);

        let y = blk(&[0.0, 2.0, 5.0]);
        let c = evaluate_cost(&d, &one, &y, CostKind::Mse).unwrap();
        assert!((c.value - 1.0 / 18.0).abs() < 1e-14);
        assert_eq!(c.orientation, CostOrientation::LowerIsBetter);

        let d = Dictionary::from_rows(vec![vec![1.0, 0.0, -1.0, 0.0]], "").unwrap();
        let y = blk(&[3.0, 4.0, 3.0, 2.0]);
        assert_eq!(evaluate_cost(&d, &one, &y, CostKind::Pcc), Err(Error::DegenerateCorrelation));
        assert_eq!(evaluate_cost(&d, &one, &y, CostKind::Ssim), Err(Error::DegenerateCorrelation));
    }

    #[test]
    fn exhaustive_finds_exact_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = random_dict(&mut rng, 4, 10);
        let y: Vec<f64> = d.atoms()[2].as_slice().iter().zip(d.atoms()[3].as_slice()).map(|(a, b)| a + b).collect();
        let y = Block::new(y).unwrap();
        let r = exhaustive_select(&d, &y, 2, CostKind::Mse).unwrap();
        assert_eq!(r.subset.indices(), &[2, 3]);
        assert!(r.final_cost.value < 1e-20);
        assert_eq!(exhaustive_select(&d, &y, 2, CostKind::Ssim).unwrap().subset.indices(), &[2, 3]);
        assert_eq!(exhaustive_select(&d, &y, 2, CostKind::Pcc).unwrap().subset.indices(), &[2, 3]);
    }

    #[test]
    fn single_atom_is_forced() {
        let d = Dictionary::from_rows(vec![vec![0.0, 1.0, 3.0]], "").unwrap();
        let y = blk(&[1.0, 0.0, 2.0]);
        assert_eq!(exhaustive_select(&d, &y, 1, CostKind::Ssim).unwrap().subset.indices(), &[0]);
    }

    #[test]
    fn full_sparsity_takes_every_atom() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random_dict(&mut rng, 5, 12);
        let y = Block::new(gaussian(&mut rng, 12)).unwrap();
        for k in CostKind::ALL {
            assert_eq!(greedy_select(&d, &y, 5, k).unwrap().subset.sorted().indices(), &[0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn orthogonal_atoms_are_taken_by_normalized_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = 12;
        // Gram-Schmidt on centered random vectors gives zero pairwise covariance.
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for _ in 0..6 {
            let mut v = gaussian(&mut rng, p);
            let mean = v.iter().sum::<f64>() / p as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            for u in &rows {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                let nn: f64 = u.iter().map(|a| a * a).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot / nn * b);
            }
            // Unequal norms so normalization matters.
            let s = rng.random_range(0.5..3.0);
            rows.push(v.into_iter().map(|x| x * s).collect());
        }
        let d = Dictionary::from_rows(rows, "orth").unwrap();
        let y = Block::new(gaussian(&mut rng, p)).unwrap();
        let key = |i: usize| {
            let c = covariance(&d.atoms()[i], &y).unwrap();
            c * c / d.atoms()[i].stats().variance
        };
        let mut expected: Vec<usize> = (0..6).collect();
        expected.sort_by(|&a, &b| key(b).partial_cmp(&key(a)).unwrap());
        for k in CostKind::ALL {
            let g = greedy_select(&d, &y, 6, k).unwrap();
            assert_eq!(g.subset.indices(), expected.as_slice(), "{k}");
            // For diagonal Σ greedy is optimal at every sparsity.
            for m in 1..=6 {
                let e = exhaustive_select(&d, &y, m, k).unwrap();
                let mut first: Vec<usize> = expected[..m].to_vec();
                first.sort();
                assert_eq!(e.subset.indices(), first.as_slice());
            }
        }
    }

    #[test]
    fn duplicate_atoms_are_skipped() {
        let d = Dictionary::from_rows(
            vec![vec![0.0, 1.0, 2.0, 5.0], vec![0.0, 1.0, 2.0, 5.0], vec![1.0, 0.0, 0.0, 1.0]],
            "",
        )
        .unwrap();
        let y = blk(&[0.0, 1.0, 2.0, 4.0]);
        let g = greedy_select(&d, &y, 2, CostKind::Mse).unwrap();
        assert_eq!(g.subset.indices(), &[0, 2]);
        assert!(matches!(greedy_select(&d, &y, 3, CostKind::Mse), Err(Error::NotEnoughUsableAtoms { .. })));
        let e = exhaustive_select(&d, &y, 2, CostKind::Mse).unwrap();
        assert_eq!(e.subset.indices(), &[0, 2]);
    }

    #[test]
    fn request_validation() {
        let d = Dictionary::from_rows(vec![vec![0.0, 1.0, 3.0]], "").unwrap();
        let y = blk(&[1.0, 0.0, 2.0]);
        assert!(greedy_select(&d, &y, 0, CostKind::Mse).is_err());
        assert!(greedy_select(&d, &y, 2, CostKind::Mse).is_err());
        assert_eq!(greedy_select(&d, &blk(&[4.0; 3]), 1, CostKind::Mse), Err(Error::ZeroVarianceTarget));
        assert_eq!(subset_count(10, 3), 120);
        assert_eq!(subset_count(3, 4), 0);
        assert_eq!(subset_count(200, 100), u128::MAX);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let big = random_dict(&mut rng, 40, 4);
        let y = Block::new(gaussian(&mut rng, 4)).unwrap();
        assert!(matches!(exhaustive_select(&big, &y, 20, CostKind::Mse), Err(Error::CombinatorialBlowup { .. })));
    }

    /// Greedy on the naive path: every candidate goes through the full
    /// assemble/factor/solve route of `evaluate_cost`.
    fn naive_greedy(d: &Dictionary, y: &Block, m: usize, k: CostKind) -> (Vec<usize>, f64) {
        let mut sel: Vec<usize> = Vec::new();
        let mut last = 0.0;
        for _ in 0..m {
            let mut best: Option<(usize, CostValue)> = None;
            for j in 0..d.len() {
                if sel.contains(&j) {
                    continue;
                }
                let mut s = sel.clone();
                s.push(j);
                let Ok(c) = evaluate_cost(d, &AtomSubset::new(s).unwrap(), y, k) else { continue };
                if best.is_none_or(|(_, b)| c.better_than(&b, TIE_REL)) {
                    best = Some((j, c));
                }
            }
            let (j, c) = best.unwrap();
            sel.push(j);
            last = c.value;
        }
        (sel, last)
    }

    #[test]
    fn incremental_greedy_matches_naive_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let d = random_dict(&mut rng, 9, 14);
            let y = Block::new(gaussian(&mut rng, 14)).unwrap();
            for k in CostKind::ALL {
                let g = greedy_select(&d, &y, 4, k).unwrap();
                let (sel, cost) = naive_greedy(&d, &y, 4, k);
                assert_eq!(g.subset.indices(), sel.as_slice());
                assert!((g.final_cost.value - cost).abs() <= 1e-9 * cost.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn greedy_scores_are_monotone_and_match_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = random_dict(&mut rng, 10, 16);
            let y = Block::new(gaussian(&mut rng, 16)).unwrap();
            let g = greedy_select(&d, &y, 5, CostKind::Pcc).unwrap();
            for w in g.step_scores.windows(2) {
                assert!(w[1] >= w[0] * (1.0 - 1e-12));
            }
            let r = g.final_cost.value;
            let last = *g.step_scores.last().unwrap();
            assert!((last.sqrt() / y.stats().std_dev() - r).abs() <= 1e-9);
        }
    }

    #[test]
    fn decompose_uses_requested_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = random_dict(&mut rng, 6, 9);
        let y = Block::new(gaussian(&mut rng, 9)).unwrap();
        let mut opts = DecomposeOptions::new(2, CostKind::Pcc);
        let a = decompose(&d, &y, &opts).unwrap();
        assert_eq!(a.cost_kind, CostKind::Pcc);
        let mse = solvers::solve_mse(&d, &a.subset, &y).unwrap();
        assert_eq!(a.coeffs, mse.coeffs);
        opts.coeffs = CoeffScheme::Ssim;
        opts.search = Search::Exhaustive;
        let b = decompose(&d, &y, &opts).unwrap();
        let ssim = solvers::solve_ssim(&d, &b.subset, &y, Orientation::Maximize).unwrap();
        assert_eq!(b.coeffs, ssim.coeffs);
    }

    #[test]
    fn deterministic_across_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let d = random_dict(&mut rng, 12, 16);
        let y = Block::new(gaussian(&mut rng, 16)).unwrap();
        let a = greedy_select(&d, &y, 4, CostKind::Ssim).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| greedy_select(&d, &y, 4, CostKind::Ssim).unwrap());
        assert_eq!(a, b);
        let a = exhaustive_select(&d, &y, 3, CostKind::Mse).unwrap();
        let b = pool.install(|| exhaustive_select(&d, &y, 3, CostKind::Mse).unwrap());
        assert_eq!(a, b);
    }
}
