//! Rank selection for non-negative matrix factorization.
//!
//! The crate factorizes a non-negative matrix `A ≈ WH` many times from nested
//! random starting points, stacks the signed residuals of every run at a given
//! rank, and summarizes their spread with the mean coordinatewise interquartile
//! range (MCI). Ranks where the MCI stays flat and then jumps are reported as
//! *islands of stability*. Seven classic rank-selection baselines are provided
//! for comparison, together with a deterministic sweep driver that writes JSON
//! and CSV reports.
//!
//! Module map:
//!
//! * [`matcore`]: dense matrices, file formats, the Swimmer generator, row
//!   shuffling and Wold holdout masks.
//! * [`solver`]: sequential coordinate descent and multiplicative updates.
//! * [`masked`]: coordinate descent with held-out entries, the masked error and
//!   the per-iteration cost model.
//! * [`init`]: progressive random initialization.
//! * [`rsic`]: residual stacks, MCI curves and island detection.
//! * [`baselines`]: elbow, consensus, permutation, split-half ARI and
//!   imputation cross-validation selectors.
//! * [`sweep`]: the rank-sweep orchestrator and report writer behind the CLI.

pub mod baselines;
pub mod error;
pub mod init;
pub mod masked;
pub mod matcore;
pub mod rng;
pub mod rsic;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use init::{make_init_set, slice_init, InitSet};
pub use masked::{estimate_iteration_cost, masked_error, masked_fit, masked_scd_step};
pub use matcore::{DenseMatrix, MaskMatrix};
pub use rsic::{MciCurve, ResidualStack};
pub use solver::{fit, mu_step, objective, relative_residual, scd_step, Algorithm, FactorPair};

/// Zero guard shared by both solvers: floor for multiplicative-update
/// denominators and skip threshold for coordinate-descent diagonals.
pub const ZERO_GUARD: f64 = 1e-16;
