//! Probabilistic surrogate models with a uniform fit/predict contract:
//! exact Gaussian processes (RBF and Tanimoto kernels, regression and Laplace
//! binary classification) and natural-gradient boosting (Gaussian and
//! Bernoulli outputs).

pub mod distribution;
pub mod gp;
pub mod ngboost;
pub mod tree;

pub use distribution::Family;
pub use gp::{GpClassifier, GpRegressor, KernelKind, KernelParams};
pub use ngboost::{NgBoostConfig, NgBoostModel};

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featurize::{FeatureKind, FeatureMatrix};
use crate::stats::derived_rng;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("kernel matrix is not positive definite after maximum jitter")]
    SingularKernel,
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("feature kind mismatch: model expects {expected}, got {got}")]
    FeatureKindMismatch { expected: FeatureKind, got: FeatureKind },
    #[error("invalid distribution parameters")]
    InvalidParams,
    #[error("needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("validation set is empty")]
    EmptyValidation,
    #[error("checkpoint format version {found} is not supported (current {current})")]
    CheckpointVersion { found: u32, current: u32 },
}

/// Per-candidate predictive mean and spread. For binary classification the
/// mean carries the class-1 probability and the uncertainty is the
/// probability itself; stddev is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorPrediction {
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Regression,
    Binary,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Regression => f.write_str("regression"),
            Task::Binary => f.write_str("binary"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Gp,
    NgBoost,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Gp => f.write_str("gp"),
            ModelKind::NgBoost => f.write_str("ngboost"),
        }
    }
}

/// A fitted model, ready for prediction. Fitted-ness is guaranteed by
/// construction: values of this type only come out of successful fits or
/// checkpoint loads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FittedModel {
    GpRegression(GpRegressor),
    GpBinary(GpClassifier),
    NgBoost(NgBoostModel),
}

impl FittedModel {
    /// Uniform prediction dispatch; output length equals the query length.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<PosteriorPrediction>, ModelError> {
        match self {
            FittedModel::GpRegression(m) => m.predict(x),
            FittedModel::GpBinary(m) => m.predict(x),
            FittedModel::NgBoost(m) => m.predict(x),
        }
    }

    pub fn feature_kind(&self) -> FeatureKind {
        match self {
            FittedModel::GpRegression(m) => m.feature_kind(),
            FittedModel::GpBinary(m) => m.feature_kind(),
            FittedModel::NgBoost(m) => m.feature_kind(),
        }
    }

    pub fn task(&self) -> Task {
        match self {
            FittedModel::GpRegression(_) => Task::Regression,
            FittedModel::GpBinary(_) => Task::Binary,
            FittedModel::NgBoost(m) => match m.family() {
                Family::Gaussian => Task::Regression,
                Family::Bernoulli => Task::Binary,
            },
        }
    }
}

/// Fits a model of the requested kind. The GP kernel follows the feature
/// kind (fingerprints -> Tanimoto, descriptors -> RBF). `val` feeds NGBoost
/// early stopping and the GP classification hyperparameter grid; GP
/// regression selects hyperparameters by marginal likelihood and ignores it.
pub fn fit_model(
    kind: ModelKind,
    task: Task,
    x: &FeatureMatrix,
    y: &[f64],
    val: Option<(&FeatureMatrix, &[f64])>,
    seed: u64,
) -> Result<FittedModel, ModelError> {
    match (kind, task) {
        (ModelKind::Gp, Task::Regression) => {
            GpRegressor::fit(x, y, KernelKind::for_features(x.kind()), seed)
                .map(FittedModel::GpRegression)
        }
        (ModelKind::Gp, Task::Binary) => {
            GpClassifier::fit(x, y, KernelKind::for_features(x.kind()), val, seed)
                .map(FittedModel::GpBinary)
        }
        (ModelKind::NgBoost, task) => {
            let family = match task {
                Task::Regression => Family::Gaussian,
                Task::Binary => Family::Bernoulli,
            };
            NgBoostModel::fit(x, y, family, NgBoostConfig::default(), val, seed)
                .map(FittedModel::NgBoost)
        }
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    model: FittedModel,
}

/// Writes a versioned checkpoint sufficient to reload and predict
/// bit-identically.
pub fn save_checkpoint(path: &Path, model: &FittedModel) -> std::io::Result<()> {
    let ckpt = Checkpoint { format_version: CHECKPOINT_VERSION, model: model.clone() };
    let json = serde_json::to_string(&ckpt).expect("checkpoint serializes");
    std::fs::write(path, json)
}

pub fn load_checkpoint(path: &Path) -> std::io::Result<FittedModel> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    if ckpt.format_version != CHECKPOINT_VERSION {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            ModelError::CheckpointVersion {
                found: ckpt.format_version,
                current: CHECKPOINT_VERSION,
            }
            .to_string(),
        ));
    }
    Ok(ckpt.model)
}

/// Deterministic validation carve-out: shuffles indices by seed and reserves
/// `frac` of them (at least 1, at most n-1). Stratified keeps per-class
/// proportions within one item.
pub(crate) fn carve_validation(
    y: &[f64],
    frac: f64,
    stratified: bool,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let n = y.len();
    let mut rng = derived_rng(seed, 0x56414c);
    let mut val = Vec::new();
    if stratified {
        for class in [0.0, 1.0] {
            let mut members: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
            members.shuffle(&mut rng);
            let take = ((members.len() as f64 * frac).round() as usize)
                .clamp(usize::from(members.len() > 1), members.len().saturating_sub(1));
            val.extend_from_slice(&members[..take]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let take = ((n as f64 * frac).round() as usize).clamp(1, n - 1);
        val.extend_from_slice(&idx[..take]);
    }
    val.sort_unstable();
    let in_val: std::collections::HashSet<usize> = val.iter().copied().collect();
    let train: Vec<usize> = (0..n).filter(|i| !in_val.contains(i)).collect();
    (train, val)
}
