//! Sparse linear decomposition of image blocks under three cost functions:
//! mean squared error, SSIM, and Pearson correlation.
//!
//! A target block `y` is approximated as `x = Σ sₖ·atomₖ + o·1` using `m`
//! atoms from a [`Dictionary`]. The MSE and SSIM schemes both have closed
//! forms built on the same covariance system ([`covsys`]), and all three
//! costs select atoms by the same projection score. The [`associations`]
//! module checks these relationships on seeded random batches.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```bash
//! cargo run --example block_metrics
//! cargo run --example closed_form_solvers
//! cargo run --example atom_selection
//! cargo run --example dct_round_trip
//! cargo run --example patch_dictionary
//! cargo run --example verify_associations
//! ```

pub mod associations;
pub mod blockstats;
pub mod cli;
pub mod codes;
pub mod covsys;
pub mod dictionary;
pub mod error;
pub mod imageio;
pub mod selection;
pub mod solvers;

pub use blockstats::{Block, BlockStats};
pub use covsys::{AtomSubset, CovSystem};
pub use dictionary::Dictionary;
pub use error::{Error, Result};
pub use imageio::{BlockGrid, GrayImage, PgmFormat};
pub use selection::{CostKind, DecomposeOptions, SelectionResult};
pub use solvers::{Decomposition, Orientation};
