//! Natural-gradient boosting: staged ensembles of depth-bounded regression
//! trees, one per distribution parameter, fit to Fisher-preconditioned
//! gradients with early stopping on validation NLL.

use serde::{Deserialize, Serialize};

use super::distribution::Family;
use super::tree::{fit_tree, FeatureIndex, RegressionTree};
use super::{ModelError, PosteriorPrediction};
use crate::featurize::{FeatureKind, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NgBoostConfig {
    pub max_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Stages without validation-NLL improvement before stopping.
    pub patience: usize,
}

impl Default for NgBoostConfig {
    fn default() -> Self {
        NgBoostConfig { max_trees: 2000, max_depth: 3, learning_rate: 0.01, patience: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NgBoostModel {
    family: Family,
    init_params: Vec<f64>,
    learning_rate: f64,
    /// One tree per distribution parameter per kept stage.
    stages: Vec<Vec<RegressionTree>>,
    feature_kind: FeatureKind,
    /// Validation NLL per stage count (index 0 = initial parameters only).
    val_nll: Vec<f64>,
}

impl NgBoostModel {
    /// Staged boosting on natural gradients with early stopping when the
    /// validation NLL fails to improve for `patience` consecutive stages.
    /// The returned model is truncated at the best validation stage.
    ///
    /// Without an explicit validation set, a deterministic seeded 15%
    /// carve-out of the training data (stratified for Bernoulli) is used.
    pub fn fit(
        x: &FeatureMatrix,
        y: &[f64],
        family: Family,
        config: NgBoostConfig,
        val: Option<(&FeatureMatrix, &[f64])>,
        seed: u64,
    ) -> Result<NgBoostModel, ModelError> {
        if x.len() != y.len() || x.len() < 10 {
            return Err(ModelError::TooFewPoints { needed: 10, got: x.len().min(y.len()) });
        }
        let (fit_x, fit_y, val_x, val_y) = match val {
            Some((vx, vy)) => {
                if vx.is_empty() {
                    return Err(ModelError::EmptyValidation);
                }
                (x.clone(), y.to_vec(), vx.clone(), vy.to_vec())
            }
            None => {
                let stratified = family == Family::Bernoulli;
                let (train_idx, val_idx) = super::carve_validation(y, 0.15, stratified, seed);
                let fy: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
                let vy: Vec<f64> = val_idx.iter().map(|&i| y[i]).collect();
                (x.select(&train_idx), fy, x.select(&val_idx), vy)
            }
        };
        if family == Family::Bernoulli {
            let pos = fit_y.iter().filter(|&&v| v == 1.0).count();
            if pos == 0 || pos == fit_y.len() {
                return Err(ModelError::DegenerateLabels);
            }
        }

        let n = fit_x.len();
        let k = family.n_params();
        let init_params = family.init_params(&fit_y);
        let index = FeatureIndex::build(&fit_x);
        let rows: Vec<usize> = (0..n).collect();

        // Row-major parameter matrices for the train and validation sets.
        let mut train_params: Vec<f64> = init_params
            .iter()
            .cycle()
            .take(n * k)
            .copied()
            .collect();
        let mut val_params: Vec<f64> = init_params
            .iter()
            .cycle()
            .take(val_x.len() * k)
            .copied()
            .collect();
        // The cycle above repeats [p0, p1, p0, p1, ...] which is already
        // row-major for row-length k.

        let mean_val_nll = |params: &[f64]| -> f64 {
            val_y
                .iter()
                .enumerate()
                .map(|(i, &yi)| family.nll(&params[i * k..(i + 1) * k], yi))
                .sum::<f64>()
                / val_y.len() as f64
        };

        let mut val_nll = vec![mean_val_nll(&val_params)];
        let mut stages: Vec<Vec<RegressionTree>> = Vec::new();
        let mut best_stage = 0usize;
        let mut grad_col = vec![0.0; n];

        for stage in 1..=config.max_trees {
            // Natural gradients for every training row.
            let mut grads = vec![0.0; n * k];
            for i in 0..n {
                let g = family.natural_gradient(&train_params[i * k..(i + 1) * k], fit_y[i])?;
                grads[i * k..(i + 1) * k].copy_from_slice(&g);
            }

            let mut stage_trees = Vec::with_capacity(k);
            for j in 0..k {
                for i in 0..n {
                    grad_col[i] = grads[i * k + j];
                }
                let tree = fit_tree(&fit_x, &index, &grad_col, &rows, config.max_depth);
                for i in 0..n {
                    train_params[i * k + j] -= config.learning_rate * tree.predict_row(&fit_x, i);
                }
                for i in 0..val_x.len() {
                    val_params[i * k + j] -= config.learning_rate * tree.predict_row(&val_x, i);
                }
                stage_trees.push(tree);
            }
            stages.push(stage_trees);

            let nll = mean_val_nll(&val_params);
            val_nll.push(nll);
            if nll < val_nll[best_stage] {
                best_stage = stage;
            }
            if stage - best_stage >= config.patience {
                break;
            }
        }

        stages.truncate(best_stage);
        val_nll.truncate(best_stage.max(0) + 1);
        Ok(NgBoostModel {
            family,
            init_params,
            learning_rate: config.learning_rate,
            stages,
            feature_kind: x.kind(),
            val_nll,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.feature_kind
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// Validation NLL per stage count, index 0 being the marginal fit.
    pub fn val_nll_curve(&self) -> &[f64] {
        &self.val_nll
    }

    /// Predictions using only the first `n_stages` stages.
    pub fn predict_at_stage(
        &self,
        x: &FeatureMatrix,
        n_stages: usize,
    ) -> Result<Vec<PosteriorPrediction>, ModelError> {
        if x.kind() != self.feature_kind {
            return Err(ModelError::FeatureKindMismatch {
                expected: self.feature_kind,
                got: x.kind(),
            });
        }
        let k = self.family.n_params();
        let mut out = Vec::with_capacity(x.len());
        let mut params = vec![0.0; k];
        for row in 0..x.len() {
            params.copy_from_slice(&self.init_params);
            for stage in self.stages.iter().take(n_stages) {
                for (j, tree) in stage.iter().enumerate() {
                    params[j] -= self.learning_rate * tree.predict_row(x, row);
                }
            }
            out.push(self.family.predict(&params));
        }
        Ok(out)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<PosteriorPrediction>, ModelError> {
        self.predict_at_stage(x, self.stages.len())
    }
}
