//! Decision-tree ensembles with sparse-aware split search, output-space random
//! projections, gradient boosting variants and L1 compression of forests.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`] dense / CSC / CSR containers,
//! * [`datasets`] synthetic generators, loaders and splitting,
//! * [`projections`] random projection matrices of the output space,
//! * [`tree`] multi-output CART growth, prediction and relabelling,
//! * [`forest`] bagging, random forests, extra-trees and their projected variants,
//! * [`boosting`] gradient boosting with multi-output and projected weak models,
//! * [`compression`] node-indicator lifting and forward stagewise pruning,
//! * [`metrics`] classification, ranking and regression scores,
//! * [`harness`] bias-variance estimation, grid search, benchmarks and export.

pub mod boosting;
pub mod compression;
pub mod datasets;
pub mod error;
pub mod forest;
pub mod harness;
pub mod matrix;
pub mod metrics;
pub mod projections;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
