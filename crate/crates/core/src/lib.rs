//! Benchmarking toolkit for probabilistic surrogate models on small molecular
//! datasets.
//!
//! The crate covers the full campaign pipeline: SMILES parsing into molecular
//! graphs ([`smiles`]), Morgan fingerprints and physicochemical descriptors
//! ([`featurize`]), exact Gaussian processes and natural-gradient boosting
//! with a uniform fit/predict contract ([`models`]), performance and
//! calibration metrics with bootstrap confidence intervals ([`metrics`]),
//! random/stratified/cluster dataset splits ([`splits`]), simulated
//! Bayesian-optimization campaigns over fixed candidate pools ([`bo`]), and
//! experiment orchestration with reproducibility manifests ([`harness`]).
//!
//! Everything is deterministic given `(data, seed)`: parallel sections only
//! ever map indexed work items and merge them in index order, so results are
//! identical for any worker count (including the sequential fallback build
//! without the `parallel` feature).

pub mod bo;
pub mod featurize;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod par;
pub mod smiles;
pub mod splits;
pub mod stats;
