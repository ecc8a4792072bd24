//! Stochastic trust-region-ish optimization with Barzilai–Borwein steplengths.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: LIBSVM ingestion, min-max normalisation and dataset metadata checks.
//! - [`problem`]: finite-sum objectives (logistic regression, diagonal quadratics,
//!   a noisy-gradient wrapper) and mini-batch sampling.
//! - [`optimizer`]: the TRishBB iteration, its three steplength updaters, the
//!   first-order TRish baseline and SGD-BB.
//! - [`theory`]: convergence constants, admissibility conditions, asymptotic
//!   limits and Monte-Carlo checks on synthetic quadratics.
//! - [`harness`]: hyper-parameter grids, gradient-norm estimation, seeded
//!   sweeps, aggregation and CSV/JSON output.
//!
//! Feature indices are 1-based in LIBSVM files and 0-based everywhere else.

pub mod data;
pub mod harness;
pub mod optimizer;
pub mod problem;
pub mod rng;
pub mod theory;
pub mod vector;

pub use data::{Dataset, SparseExample};
pub use optimizer::{run, RunOptions, RunOutput, TripletConfig, Variant};
pub use problem::{Batch, FiniteSumProblem, LogisticRegression, NoisyGradient, QuadraticProblem};
