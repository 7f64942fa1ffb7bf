//! Seeded randomized verification of the relationships between the MSE,
//! SSIM and correlation decomposition schemes:
//!
//! * selection: the MSE-optimal and SSIM-optimal subsets coincide;
//! * cost: both schemes reach the same |r|, and the MSE-optimal subset also
//!   maximizes |r| and |SSIM| over all subsets;
//! * ratio: `s_mse[k] / s_ssim[k] = r` for every coefficient;
//! * identities: `σx² = σxy` and `MSE = σy²(1 − r²)` for the MSE fit,
//!   `σx² = σy²` and `σxy² = σy²·score` for the SSIM fit.
//!
//! Each check runs the two solvers independently and compares their
//! outputs; nothing is derived from one scheme by rescaling the other.
//! Trials are independent, run in parallel, and are folded in index order.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::blockstats::{self, Block};
use crate::covsys::{self, AtomSubset};
use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::imageio::{self, GrayImage};
use crate::selection::{self, CostKind, CostValue};
use crate::solvers::{self, Orientation};

/// Default relative tolerance for every identity.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Coefficients below this magnitude are treated as zero in ratio checks.
pub const ZERO_COEFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform01,
    Gaussian01,
    /// Random `l × l` patches (with `p = l²`) of a PGM image.
    ImagePatches(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub seed: u64,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub distribution: Distribution,
    pub tolerance: f64,
}

impl TrialConfig {
    pub fn new(seed: u64, p: usize, n: usize, m: usize, trials: usize) -> Self {
        Self { seed, p, n, m, trials, distribution: Distribution::Gaussian01, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn with_distribution(mut self, distribution: Distribution) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.p < 2 {
            return bad(format!("block length {} below 2", self.p));
        }
        if self.m == 0 || self.m > self.n {
            return bad(format!("sparsity {} outside 1..={}", self.m, self.n));
        }
        if self.trials == 0 {
            return bad("at least one trial is required".into());
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad(format!("tolerance {} is not positive", self.tolerance));
        }
        Ok(())
    }
}

/// One random instance: a dictionary and a target block.
#[derive(Debug, Clone)]
pub struct Trial {
    pub dict: Dictionary,
    pub target: Block,
}

enum Source {
    Uniform,
    Gaussian,
    Patches { image: GrayImage, edge: usize },
}

/// Produces the reproducible trial sequence of a [`TrialConfig`]. Trial `i`
/// draws from its own ChaCha stream, so trials can be generated in any order.
pub struct TrialGenerator {
    seed: u64,
    p: usize,
    n: usize,
    source: Source,
}

impl TrialGenerator {
    pub fn new(cfg: &TrialConfig) -> Result<Self> {
        cfg.validate()?;
        let source = match &cfg.distribution {
            Distribution::Uniform01 => Source::Uniform,
            Distribution::Gaussian01 => Source::Gaussian,
            Distribution::ImagePatches(path) => {
                let edge = (cfg.p as f64).sqrt().round() as usize;
                if edge * edge != cfg.p {
                    return Err(Error::InvalidConfig(format!("patch trials need a square block length, got {}", cfg.p)));
                }
                let bytes = std::fs::read(path)
                    .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
                let image = imageio::read_pgm(&bytes)?;
                if image.width() < edge || image.height() < edge {
                    return Err(Error::ImageSmallerThanBlock { width: image.width(), height: image.height(), edge });
                }
                Source::Patches { image, edge }
            }
        };
        Ok(Self { seed: cfg.seed, p: cfg.p, n: cfg.n, source })
    }

    pub fn trial(&self, index: usize) -> Result<Trial> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let draw = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
            Ok(match &self.source {
                Source::Uniform => (0..self.p).map(|_| rng.random::<f64>()).collect(),
                Source::Gaussian => (0..self.p).map(|_| rng.sample(StandardNormal)).collect(),
                Source::Patches { image, edge } => {
                    let x = rng.random_range(0..=image.width() - edge);
                    let y = rng.random_range(0..=image.height() - edge);
                    image.patch(x, y, *edge)?.into_inner()
                }
            })
        };
        let rows = (0..self.n).map(|_| draw(&mut rng)).collect::<Result<Vec<_>>>()?;
        let target = Block::new(draw(&mut rng)?)?;
        let dict = Dictionary::from_rows(rows, format!("trial {index} seed={}", self.seed))?;
        Ok(Trial { dict, target })
    }
}

/// Outcome of one check over a batch. `pass + fail + skipped = trials`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub worst_deviation: f64,
    /// Passing trials where distinct optima tied within tolerance.
    pub ties: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    /// Recorded but not asserted quantities, e.g. the largest offset gap.
    pub observations: BTreeMap<&'static str, f64>,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            pass: 0,
            fail: 0,
            skipped: 0,
            worst_deviation: 0.0,
            ties: 0,
            skip_reasons: BTreeMap::new(),
            observations: BTreeMap::new(),
        }
    }

    pub fn total(&self) -> usize {
        self.pass + self.fail + self.skipped
    }

    fn record(&mut self, v: Verdict) {
        match v {
            Verdict::Pass { deviation, tie } => {
                self.pass += 1;
                self.ties += tie as usize;
                self.worst_deviation = self.worst_deviation.max(deviation);
            }
            Verdict::Fail { deviation } => {
                self.fail += 1;
                // NaN deviations must still surface as the worst case.
                self.worst_deviation = if deviation.is_nan() { f64::NAN } else { self.worst_deviation.max(deviation) };
            }
            Verdict::Skip(reason) => {
                self.skipped += 1;
                *self.skip_reasons.entry(reason).or_default() += 1;
            }
        }
    }

    fn observe(&mut self, key: &'static str, value: f64) {
        let e = self.observations.entry(key).or_insert(0.0);
        *e = e.max(value);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssocReport {
    pub config: TrialConfig,
    pub checks: Vec<CheckOutcome>,
    pub elapsed: Duration,
}

impl AssocReport {
    /// True when no check failed on any non-skipped trial.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.fail == 0)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn merge(mut self, other: AssocReport) -> AssocReport {
        self.checks.extend(other.checks);
        self.elapsed += other.elapsed;
        self
    }

    /// One `name: pass/fail/skipped worst` line per check, then a
    /// `key=value` trailer.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "{}: {}/{}/{} {:.3e}", c.name, c.pass, c.fail, c.skipped, c.worst_deviation);
        }
        out.push_str("--\n");
        let cfg = &self.config;
        let dist = match &cfg.distribution {
            Distribution::Uniform01 => "uniform".to_string(),
            Distribution::Gaussian01 => "gaussian".to_string(),
            Distribution::ImagePatches(p) => format!("patches:{}", p.display()),
        };
        let _ = writeln!(
            out,
            "seed={}\np={}\nn={}\nm={}\ntrials={}\ndist={dist}\ntolerance={:e}",
            cfg.seed, cfg.p, cfg.n, cfg.m, cfg.trials, cfg.tolerance
        );
        for c in &self.checks {
            let _ = writeln!(out, "{}.pass={}", c.name, c.pass);
            let _ = writeln!(out, "{}.fail={}", c.name, c.fail);
            let _ = writeln!(out, "{}.skipped={}", c.name, c.skipped);
            let _ = writeln!(out, "{}.worst={:e}", c.name, c.worst_deviation);
            let _ = writeln!(out, "{}.ties={}", c.name, c.ties);
            for (reason, count) in &c.skip_reasons {
                let _ = writeln!(out, "{}.skip.{reason}={count}", c.name);
            }
            for (key, value) in &c.observations {
                let _ = writeln!(out, "{}.{key}={value:e}", c.name);
            }
        }
        let _ = writeln!(out, "status={}", if self.passed() { "pass" } else { "fail" });
        let _ = writeln!(out, "elapsed_ms={}", self.elapsed.as_millis());
        out
    }
}

impl fmt::Display for AssocReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Verdict {
    Pass { deviation: f64, tie: bool },
    Fail { deviation: f64 },
    Skip(String),
}

impl Verdict {
    fn within(deviation: f64, limit: f64) -> Self {
        if deviation <= limit {
            Verdict::Pass { deviation, tie: false }
        } else {
            Verdict::Fail { deviation }
        }
    }
}

fn skip_reason(e: &Error) -> String {
    match e {
        Error::NearSingular { .. } => "near-singular".into(),
        Error::ZeroVarianceTarget => "zero-variance-target".into(),
        Error::ZeroVarianceAtom(_) => "zero-variance-atom".into(),
        Error::DegenerateCorrelation => "degenerate-correlation".into(),
        Error::NotEnoughUsableAtoms { .. } => "no-usable-subset".into(),
        other => other.to_string().replace(' ', "-"),
    }
}

/// A per-trial probe yields one verdict per outcome plus observations.
type Probe<'a> = dyn Fn(&Trial, f64) -> Result<(Vec<Verdict>, Vec<(usize, &'static str, f64)>)> + Sync + 'a;

fn run_check(cfg: &TrialConfig, names: &[&'static str], probe: &Probe<'_>) -> Result<AssocReport> {
    let started = Instant::now();
    let generator = TrialGenerator::new(cfg)?;
    let per_trial: Vec<_> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| match generator.trial(i).and_then(|t| probe(&t, cfg.tolerance)) {
            Ok(r) => r,
            Err(e) => (vec![Verdict::Skip(skip_reason(&e)); names.len()], Vec::new()),
        })
        .collect();
    let mut checks: Vec<CheckOutcome> = names.iter().map(|&n| CheckOutcome::new(n)).collect();
    for (verdicts, observations) in per_trial {
        debug_assert_eq!(verdicts.len(), checks.len());
        for (c, v) in checks.iter_mut().zip(verdicts) {
            c.record(v);
        }
        for (k, key, value) in observations {
            checks[k].observe(key, value);
        }
    }
    if let Some(c) = checks.iter().find(|c| c.skipped == cfg.trials) {
        return Err(Error::VacuousCheck(c.name.to_string()));
    }
    Ok(AssocReport { config: cfg.clone(), checks, elapsed: started.elapsed() })
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn ensure_enumerable(cfg: &TrialConfig) -> Result<()> {
    cfg.validate()?;
    let count = selection::subset_count(cfg.n, cfg.m);
    if count > selection::MAX_SUBSETS {
        return Err(Error::CombinatorialBlowup { count, limit: selection::MAX_SUBSETS });
    }
    Ok(())
}

type Enumerated = Vec<(AtomSubset, Result<CostValue>)>;

fn cost_at(all: &Enumerated, subset: &AtomSubset) -> Option<f64> {
    all.iter().find(|(s, _)| s == subset).and_then(|(_, c)| c.as_ref().ok()).map(|c| c.value)
}

fn best_value(all: &Enumerated) -> Option<f64> {
    all.iter().filter_map(|(_, c)| c.as_ref().ok()).map(|c| c.value).reduce(f64::max)
}

fn optimal_subset(t: &Trial, m: usize, kind: CostKind) -> Result<(AtomSubset, Enumerated)> {
    let all = selection::enumerate_costs(&t.dict, &t.target, m, kind)?;
    let best = selection::best_of(&t.dict, &t.target, m, all.clone())?;
    Ok((best.subset, all))
}

pub const SELECTION: &str = "selection-equivalence";
pub const COST: &str = "cost-equivalence";
pub const RATIO: &str = "coefficient-ratio";
pub const MSE_VARIANCE: &str = "identity-mse-variance-equals-covariance";
pub const MSE_RESIDUAL: &str = "identity-mse-residual";
pub const SSIM_VARIANCE: &str = "identity-ssim-variance-equals-target";
pub const SSIM_COVARIANCE: &str = "identity-ssim-covariance-squared";

/// Exhaustive MSE and SSIM searches must land on the same subset, or on
/// subsets whose costs tie within tolerance under both schemes.
pub fn check_selection_equivalence(cfg: &TrialConfig) -> Result<AssocReport> {
    ensure_enumerable(cfg)?;
    let m = cfg.m;
    run_check(cfg, &[SELECTION], &|t, tol| {
        let (by_mse, mse_all) = optimal_subset(t, m, CostKind::Mse)?;
        let (by_ssim, ssim_all) = optimal_subset(t, m, CostKind::Ssim)?;
        if by_mse == by_ssim {
            return Ok((vec![Verdict::Pass { deviation: 0.0, tie: false }], vec![]));
        }
        let (Some(ma), Some(mb), Some(sa), Some(sb)) = (
            cost_at(&mse_all, &by_mse),
            cost_at(&mse_all, &by_ssim),
            cost_at(&ssim_all, &by_mse),
            cost_at(&ssim_all, &by_ssim),
        ) else {
            return Ok((vec![Verdict::Fail { deviation: f64::INFINITY }], vec![]));
        };
        let deviation = rel_gap(ma, mb).max(rel_gap(sa, sb));
        let verdict = if deviation <= tol {
            Verdict::Pass { deviation, tie: true }
        } else {
            Verdict::Fail { deviation }
        };
        Ok((vec![verdict], vec![]))
    })
}

/// On the MSE-optimal subset both schemes reach the same |r|, and that
/// subset maximizes |r| and |SSIM| over every enumerated subset.
pub fn check_cost_equivalence(cfg: &TrialConfig) -> Result<AssocReport> {
    ensure_enumerable(cfg)?;
    let m = cfg.m;
    run_check(cfg, &[COST], &|t, tol| {
        let (dict, y) = (&t.dict, &t.target);
        let (best, _) = optimal_subset(t, m, CostKind::Mse)?;
        let x_mse = solvers::reconstruct(dict, &solvers::solve_mse(dict, &best, y)?)?;
        let x_ssim = solvers::reconstruct(dict, &solvers::solve_ssim(dict, &best, y, Orientation::Maximize)?)?;
        let r_mse = blockstats::pcc(&x_mse, y).map_err(|_| Error::DegenerateCorrelation)?;
        let r_ssim = blockstats::pcc(&x_ssim, y).map_err(|_| Error::DegenerateCorrelation)?;
        let deviation = (r_mse.abs() - r_ssim.abs()).abs();

        let pcc_all = selection::enumerate_costs(dict, y, m, CostKind::Pcc)?;
        let ssim_all = selection::enumerate_costs(dict, y, m, CostKind::Ssim)?;
        let shortfall = |all: &Enumerated| -> f64 {
            match (cost_at(all, &best), best_value(all)) {
                (Some(here), Some(top)) => ((top - here) / top.abs().max(f64::MIN_POSITIVE)).max(0.0),
                _ => f64::INFINITY,
            }
        };
        let pcc_gap = shortfall(&pcc_all);
        let ssim_gap = shortfall(&ssim_all);
        let verdict = if deviation <= tol && pcc_gap <= tol && ssim_gap <= tol {
            Verdict::Pass { deviation, tie: pcc_gap > 0.0 || ssim_gap > 0.0 }
        } else {
            Verdict::Fail { deviation: deviation.max(pcc_gap).max(ssim_gap) }
        };
        Ok((vec![verdict], vec![(0, "max_pcc_shortfall", pcc_gap), (0, "max_ssim_shortfall", ssim_gap)]))
    })
}

/// Componentwise `s_mse / s_ssim` equals `r` (and `−r` for the minimizing
/// SSIM root); zero coefficients coincide across schemes.
pub fn check_coefficient_ratio(cfg: &TrialConfig) -> Result<AssocReport> {
    ensure_enumerable(cfg)?;
    let m = cfg.m;
    run_check(cfg, &[RATIO], &|t, tol| {
        let (dict, y) = (&t.dict, &t.target);
        let (best, _) = optimal_subset(t, m, CostKind::Mse)?;
        let mse = solvers::solve_mse(dict, &best, y)?;
        let max = solvers::solve_ssim(dict, &best, y, Orientation::Maximize)?;
        let min = solvers::solve_ssim(dict, &best, y, Orientation::Minimize)?;
        let x = solvers::reconstruct(dict, &mse)?;
        let r = blockstats::pcc(&x, y).map_err(|_| Error::DegenerateCorrelation)?;

        let mut deviation = 0.0f64;
        let mut zeros_agree = true;
        for (ssim, expected) in [(&max, r), (&min, -r)] {
            for (sm, ss) in mse.coeffs.iter().zip(&ssim.coeffs) {
                if ss.abs() > ZERO_COEFF {
                    deviation = deviation.max((sm / ss - expected).abs() / expected.abs());
                } else if sm.abs() > ZERO_COEFF {
                    zeros_agree = false;
                }
            }
        }
        let verdict = if zeros_agree { Verdict::within(deviation, tol) } else { Verdict::Fail { deviation: f64::INFINITY } };
        let offset_gap = (mse.offset - max.offset).abs();
        Ok((vec![verdict], vec![(0, "max_offset_gap", offset_gap)]))
    })
}

/// The four closed-form identities, on the greedy MSE subset of each trial.
pub fn check_identities(cfg: &TrialConfig) -> Result<AssocReport> {
    cfg.validate()?;
    let m = cfg.m;
    let names = [MSE_VARIANCE, MSE_RESIDUAL, SSIM_VARIANCE, SSIM_COVARIANCE];
    run_check(cfg, &names, &|t, tol| {
        let (dict, y) = (&t.dict, &t.target);
        let subset = selection::greedy_select(dict, y, m, CostKind::Mse)?.subset;
        let var_y = y.stats().variance;

        let x = solvers::reconstruct(dict, &solvers::solve_mse(dict, &subset, y)?)?;
        let var_x = x.stats().variance;
        let cov_xy = blockstats::covariance(&x, y)?;
        // A constant fit has zero correlation.
        let r = blockstats::pcc(&x, y).unwrap_or(0.0);
        let mse = blockstats::mse(&x, y)?;
        let mut verdicts = vec![
            Verdict::within((var_x - cov_xy).abs() / var_y, tol),
            Verdict::within((mse - var_y * (1.0 - r * r)).abs() / var_y, tol),
        ];

        match solvers::solve_ssim(dict, &subset, y, Orientation::Maximize) {
            Ok(d) => {
                let xs = solvers::reconstruct(dict, &d)?;
                let cov_s = blockstats::covariance(&xs, y)?;
                let score = covsys::score(&covsys::assemble(dict, &subset, y)?)?;
                verdicts.push(Verdict::within((xs.stats().variance - var_y).abs() / var_y, tol));
                verdicts.push(Verdict::within((cov_s * cov_s - var_y * score).abs() / (var_y * var_y), tol));
            }
            Err(e @ Error::DegenerateCorrelation) => {
                verdicts.push(Verdict::Skip(skip_reason(&e)));
                verdicts.push(Verdict::Skip(skip_reason(&e)));
            }
            Err(e) => return Err(e),
        }
        Ok((verdicts, vec![]))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Selection,
    Cost,
    Ratio,
    Identities,
}

impl Check {
    pub const ALL: [Check; 4] = [Check::Selection, Check::Cost, Check::Ratio, Check::Identities];

    pub fn run(self, cfg: &TrialConfig) -> Result<AssocReport> {
        match self {
            Check::Selection => check_selection_equivalence(cfg),
            Check::Cost => check_cost_equivalence(cfg),
            Check::Ratio => check_coefficient_ratio(cfg),
            Check::Identities => check_identities(cfg),
        }
    }
}

/// Runs the given checks in order and concatenates their reports.
pub fn run_checks(cfg: &TrialConfig, checks: &[Check]) -> Result<AssocReport> {
    let mut report = AssocReport { config: cfg.clone(), checks: Vec::new(), elapsed: Duration::ZERO };
    for c in checks {
        report = report.merge(c.run(cfg)?);
    }
    Ok(report)
}
