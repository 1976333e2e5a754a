//! Quantile regression trees and the baselines they are compared against.
//!
//! A quantile regression tree (QRT) is a model tree: CART-style recursive
//! partitioning where every candidate split is scored by the pinball loss
//! of two freshly fitted child linear quantile regressions, and every leaf
//! predicts through its own linear quantile model. The crate also ships the
//! three comparison models (global quantile regression, OLS, a mean-based
//! decision tree), dataset utilities (CSV ingestion, a synthetic generator,
//! seeded splitting), and MAE/MSE/pinball evaluation reports.

pub mod error;
mod linalg;
pub mod solver;

pub use error::{Error, Result};
pub use solver::{LinearQuantileModel, QuantileLevel, SolverConfig};
