//! Estimation of diurnal (time-of-day) spot correlation curves from bivariate
//! high-frequency price panels, together with nonparametric tests for
//! deterministic diurnal variation in the correlation process.
//!
//! The crate is organised around a small pipeline:
//!
//! 1. [`market_data`] ingests tick data or pre-gridded prices and builds
//!    equidistant log-price panels.
//! 2. [`spot`] computes jump-truncated block realized covariance matrices,
//!    localized bipower variation and truncation thresholds.
//! 3. [`diurnal`] averages the block panel across days into normalized
//!    diurnal covariance and correlation curves.
//! 4. [`longrun`] provides HAC long-run covariance estimators, both pointwise
//!    per grid block and as a full cross-grid covariance kernel.
//! 5. [`testing`] assembles the pivotal and nonpivotal test statistics and
//!    their null distributions.
//! 6. [`simulation`] generates bivariate jump-diffusion panels with known
//!    diurnal volatility and correlation components.
//! 7. [`experiments`] drives Monte Carlo rejection tables and the
//!    minimum-variance hedging study.

// Negated comparisons like `!(x > 0.0)` are deliberate NaN guards in the
// config validators; the direct `<=` rewrite would accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diurnal;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod longrun;
pub mod market_data;
pub mod pipeline;
pub mod seeding;
pub mod simulation;
pub mod spot;
pub mod testing;

pub use diurnal::DiurnalCurves;
pub use error::{Error, Result};
pub use grid::Grid;
pub use longrun::{HacConfig, Kernel};
pub use market_data::{IncrementPanel, LogPricePanel, TickSeries};
pub use pipeline::{EstimationConfig, TestRunConfig};
pub use simulation::{SimConfig, SimOutput};
pub use spot::{BlockSpec, CovTriple, SpotCovariancePanel, TruncationConfig};
pub use testing::{Method, NullDistribution, TestReport};
