use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block has zero variance")]
    ZeroVariance,
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("invalid covariance system: {0}")]
    InvalidSystem(String),
    #[error("covariance system is near singular (pivot {pivot:e} below {threshold:e})")]
    NearSingular { pivot: f64, threshold: f64 },
    #[error("atom {0} has zero variance")]
    ZeroVarianceAtom(usize),
    #[error("target block has zero variance")]
    ZeroVarianceTarget,
    #[error("target is uncorrelated with the selected atoms")]
    DegenerateCorrelation,
    #[error("atom index {index} out of range for dictionary of {len} atoms")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid atom subset: {0}")]
    InvalidSubset(String),
    #[error("only {usable} usable atoms, {requested} requested")]
    NotEnoughUsableAtoms { usable: usize, requested: usize },
    #[error("{count} subsets exceed the enumeration limit of {limit}")]
    CombinatorialBlowup { count: u128, limit: u128 },
    #[error("every trial of check `{0}` was skipped")]
    VacuousCheck(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated PGM data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported PGM maxval {0}")]
    UnsupportedMaxval(u32),
    #[error("PGM sample {value} exceeds maxval {maxval}")]
    MalformedPixel { value: u32, maxval: u32 },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("image of {width}x{height} is smaller than a {edge}x{edge} block")]
    ImageSmallerThanBlock { width: usize, height: usize, edge: usize },
    #[error("inconsistent block grid: {0}")]
    InconsistentGrid(String),

    #[error("too many constant patches ({attempts} attempts)")]
    TooManyConstantPatches { attempts: usize },
    #[error("malformed dictionary file: {0}")]
    MalformedDictFile(String),
    #[error("malformed codes file: {0}")]
    MalformedCodes(String),
    #[error("dictionary checksum {found:016x} does not match codes header {expected:016x}")]
    ChecksumMismatch { expected: u64, found: u64 },
}
