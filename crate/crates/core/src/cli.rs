//! Command-line front end. Exit codes: 0 success, 1 a verification check
//! failed, 2 bad flags, 3 I/O or malformed files, 4 domain errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::associations::{self, Check, Distribution, TrialConfig};
use crate::blockstats;
use crate::codes::{self, CodesFile};
use crate::dictionary::{self, Dictionary};
use crate::error::Error;
use crate::imageio::{self, GrayImage, PgmFormat};
use crate::selection::{CoeffScheme, CostKind, DecomposeOptions, Search};
use crate::solvers::Orientation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ssimdecomp", version, about = "Sparse MSE/SSIM/PCC decomposition of image blocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a dictionary from random image patches or the 2-D DCT basis.
    DictBuild(DictBuildArgs),
    /// Decompose every block of an image over a dictionary.
    Decompose(DecomposeArgs),
    /// Rebuild an image from a codes file.
    Reconstruct(ReconstructArgs),
    /// Compare two images with MSE, PSNR, block SSIM and block PCC.
    Metrics(MetricsArgs),
    /// Run the cost-function equivalence checks on random trials.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct DictBuildArgs {
    #[arg(long, value_name = "PGM", conflicts_with = "dct")]
    from_image: Option<PathBuf>,
    #[arg(long)]
    dct: bool,
    #[arg(long, value_name = "L")]
    block: usize,
    #[arg(long, value_name = "N")]
    atoms: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CostArg {
    Mse,
    Ssim,
    Pcc,
}

impl From<CostArg> for CostKind {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::Mse => CostKind::Mse,
            CostArg::Ssim => CostKind::Ssim,
            CostArg::Pcc => CostKind::Pcc,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CoeffArg {
    Mse,
    Ssim,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SearchArg {
    Greedy,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrientationArg {
    Max,
    Min,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long, value_name = "PGM")]
    image: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    #[arg(long, value_name = "M")]
    sparsity: usize,
    #[arg(long, value_enum)]
    cost: CostArg,
    #[arg(long, value_enum)]
    coeffs: Option<CoeffArg>,
    #[arg(long, value_enum, default_value = "greedy")]
    search: SearchArg,
    #[arg(long, value_enum, default_value = "max")]
    orientation: OrientationArg,
    #[arg(long, value_name = "CODES")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    P2,
    P5,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long)]
    codes: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    #[arg(long, value_name = "PGM")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "p5")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long = "ref", value_name = "PGM")]
    reference: PathBuf,
    #[arg(long, value_name = "PGM")]
    test: PathBuf,
    #[arg(long, value_name = "L")]
    block: usize,
    #[arg(long, default_value_t = blockstats::DEFAULT_EPS1)]
    eps1: f64,
    #[arg(long, default_value_t = blockstats::DEFAULT_EPS2)]
    eps2: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CheckArg {
    All,
    Selection,
    Cost,
    Ratio,
    Identities,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "P")]
    dim: usize,
    #[arg(long, value_name = "N")]
    atoms: usize,
    #[arg(long, value_name = "M")]
    sparsity: usize,
    #[arg(long, value_name = "T")]
    trials: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: DistArg,
    #[arg(long, value_enum, default_value = "all")]
    check: CheckArg,
}

/// A failed command: exit code plus the message for standard error.
struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) => EXIT_USAGE,
            Error::MalformedHeader(_)
            | Error::TruncatedData { .. }
            | Error::UnsupportedMaxval(_)
            | Error::MalformedPixel { .. }
            | Error::MalformedDictFile(_)
            | Error::MalformedCodes(_) => EXIT_IO,
            _ => EXIT_DOMAIN,
        };
        Failure(code, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn read_file(path: &Path) -> std::result::Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure(EXIT_IO, format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> std::result::Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure(EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

fn read_image(path: &Path) -> std::result::Result<GrayImage, Failure> {
    Ok(imageio::read_pgm(&read_file(path)?)?)
}

fn read_dict(path: &Path) -> std::result::Result<Dictionary, Failure> {
    Ok(Dictionary::load(&read_file(path)?)?)
}

fn say(out: &mut dyn Write, line: String) -> std::result::Result<(), Failure> {
    writeln!(out, "{line}").map_err(|e| Failure(EXIT_IO, format!("cannot write output: {e}")))
}

fn dict_build(a: DictBuildArgs, out: &mut dyn Write) -> CmdResult {
    if a.block < 2 {
        return Err(usage(format!("--block {} below 2", a.block)));
    }
    let dict = match (&a.from_image, a.dct) {
        (None, true) => {
            if a.atoms.is_some() || a.seed.is_some() {
                return Err(usage("--atoms and --seed apply only to --from-image"));
            }
            dictionary::build_dct(a.block)?
        }
        (Some(path), false) => {
            let (Some(n), Some(seed)) = (a.atoms, a.seed) else {
                return Err(usage("--from-image requires --atoms and --seed"));
            };
            if n == 0 {
                return Err(usage("--atoms must be positive"));
            }
            dictionary::build_random_patches(&read_image(path)?, a.block, n, seed)?
        }
        _ => return Err(usage("exactly one of --from-image or --dct is required")),
    };
    write_file(&a.out, dict.save().as_bytes())?;
    say(out, format!("atoms={} p={}", dict.len(), dict.p()))?;
    Ok(EXIT_OK)
}

fn decompose(a: DecomposeArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    if a.sparsity == 0 {
        return Err(usage("--sparsity must be positive"));
    }
    let dict = read_dict(&a.dict)?;
    if a.sparsity > dict.len() {
        return Err(usage(format!("--sparsity {} exceeds {} atoms", a.sparsity, dict.len())));
    }
    let img = read_image(&a.image)?;
    let cost = CostKind::from(a.cost);
    let mut opts = DecomposeOptions::new(a.sparsity, cost);
    opts.search = match a.search {
        SearchArg::Greedy => Search::Greedy,
        SearchArg::Exhaustive => Search::Exhaustive,
    };
    opts.coeffs = match a.coeffs {
        None => CoeffScheme::default_for(cost),
        Some(CoeffArg::Mse) => CoeffScheme::Mse,
        Some(CoeffArg::Ssim) => CoeffScheme::Ssim,
    };
    opts.orientation = match a.orientation {
        OrientationArg::Max => Orientation::Maximize,
        OrientationArg::Min => Orientation::Minimize,
    };
    let (codes, summary) = codes::decompose_image(&img, &dict, &opts)?;
    write_file(&a.out, codes.render().as_bytes())?;
    if summary.degenerate_blocks > 0 {
        let _ = writeln!(
            err,
            "warning: {} block(s) uncorrelated with every atom stored as offset-only",
            summary.degenerate_blocks
        );
    }
    say(
        out,
        format!("mean_mse={:?} mean_ssim={:?} mean_pcc={:?}", summary.mean_mse, summary.mean_ssim, summary.mean_pcc),
    )?;
    Ok(EXIT_OK)
}

fn reconstruct(a: ReconstructArgs) -> CmdResult {
    let text = String::from_utf8(read_file(&a.codes)?)
        .map_err(|_| Failure(EXIT_IO, "codes file is not UTF-8".into()))?;
    let codes = CodesFile::parse(&text)?;
    let dict = read_dict(&a.dict)?;
    let img = codes::reconstruct_image(&codes, &dict)?;
    let format = match a.format {
        FormatArg::P2 => PgmFormat::P2,
        FormatArg::P5 => PgmFormat::P5,
    };
    write_file(&a.out, &imageio::write_pgm(&img, format))?;
    Ok(EXIT_OK)
}

fn metrics(a: MetricsArgs, out: &mut dyn Write) -> CmdResult {
    if a.block < 2 {
        return Err(usage(format!("--block {} below 2", a.block)));
    }
    if !(a.eps1 >= 0.0 && a.eps2 >= 0.0) {
        return Err(usage("--eps1 and --eps2 must be non-negative"));
    }
    let r = read_image(&a.reference)?;
    let t = read_image(&a.test)?;
    if (r.width(), r.height()) != (t.width(), t.height()) {
        return Err(Failure(
            EXIT_DOMAIN,
            format!("image sizes differ: {}x{} vs {}x{}", r.width(), r.height(), t.width(), t.height()),
        ));
    }
    let mse = r.pixels().iter().zip(t.pixels()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / r.pixels().len() as f64;
    let psnr = blockstats::psnr_from_mse(mse, 255.0);
    let (gr, gt) = (imageio::tile(&r, a.block)?, imageio::tile(&t, a.block)?);
    let (mut ssim_sum, mut pcc_sum, mut pcc_count) = (0.0, 0.0, 0usize);
    for (x, y) in gr.blocks.iter().zip(&gt.blocks) {
        ssim_sum += blockstats::ssim_eps(x, y, a.eps1, a.eps2)?;
        if !x.is_constant() && !y.is_constant() {
            pcc_sum += blockstats::pcc(x, y)?;
            pcc_count += 1;
        }
    }
    let mean_ssim = ssim_sum / gr.blocks.len() as f64;
    let mean_pcc = if pcc_count == 0 { f64::NAN } else { pcc_sum / pcc_count as f64 };
    say(out, format!("mse={mse:?} psnr={psnr:?} mean_ssim={mean_ssim:?} mean_pcc={mean_pcc:?}"))?;
    Ok(EXIT_OK)
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let mut cfg = TrialConfig::new(a.seed, a.dim, a.atoms, a.sparsity, a.trials);
    cfg.distribution = match a.dist {
        DistArg::Uniform => Distribution::Uniform01,
        DistArg::Gaussian => Distribution::Gaussian01,
    };
    let checks: &[Check] = match a.check {
        CheckArg::All => &Check::ALL,
        CheckArg::Selection => &[Check::Selection],
        CheckArg::Cost => &[Check::Cost],
        CheckArg::Ratio => &[Check::Ratio],
        CheckArg::Identities => &[Check::Identities],
    };
    let report = associations::run_checks(&cfg, checks)?;
    out.write_all(report.render().as_bytes()).map_err(|e| Failure(EXIT_IO, format!("cannot write output: {e}")))?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::DictBuild(a) => dict_build(a, out),
        Command::Decompose(a) => decompose(a, out, err),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Metrics(a) => metrics(a, out),
        Command::Verify(a) => verify(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
