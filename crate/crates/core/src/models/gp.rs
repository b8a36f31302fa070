//! Exact Gaussian processes.
//!
//! Regression: RBF kernel on dense descriptors or Tanimoto kernel on
//! fingerprints, hyperparameters (lengthscale, signal variance, noise)
//! maximizing the log marginal likelihood by Adam ascent on log-space
//! parameters from 5 restarts. Targets are centered and scaled to unit
//! variance internally; predictions are un-scaled on output.
//!
//! Binary classification: Laplace approximation to the Bernoulli-likelihood
//! posterior around a constant prior mean at the empirical log-odds, with
//! probit-corrected predictive probabilities. Kernel hyperparameters come
//! from a small grid selected by validation log-loss.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ModelError, PosteriorPrediction};
use crate::featurize::{tanimoto_same_width, FeatureKind, FeatureMatrix};
use crate::par;
use crate::stats::{derived_rng, logistic, median};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Rbf,
    Tanimoto,
}

impl KernelKind {
    pub fn for_features(kind: FeatureKind) -> KernelKind {
        match kind {
            FeatureKind::Fingerprint => KernelKind::Tanimoto,
            FeatureKind::Descriptor => KernelKind::Rbf,
        }
    }

    fn expected_feature_kind(self) -> FeatureKind {
        match self {
            KernelKind::Rbf => FeatureKind::Descriptor,
            KernelKind::Tanimoto => FeatureKind::Fingerprint,
        }
    }
}

/// Log-space kernel hyperparameters. `log_lengthscale` is ignored by the
/// Tanimoto kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub log_lengthscale: f64,
    pub log_signal: f64,
    pub log_noise: f64,
}

impl KernelParams {
    pub fn lengthscale(&self) -> f64 {
        self.log_lengthscale.exp()
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise.exp()
    }
}

const LOG_PARAM_MIN: f64 = -11.5;
const LOG_PARAM_MAX: f64 = 7.0;
const RESTARTS: usize = 5;
const RESTART_ITERS: usize = 60;
const POLISH_ITERS: usize = 100;

fn check_kind(kernel: KernelKind, x: &FeatureMatrix) -> Result<(), ModelError> {
    if x.kind() != kernel.expected_feature_kind() {
        return Err(ModelError::FeatureKindMismatch {
            expected: kernel.expected_feature_kind(),
            got: x.kind(),
        });
    }
    Ok(())
}

/// Unit-signal kernel matrix between two feature sets: exp(-d^2 / (2 l^2))
/// for RBF, Tanimoto similarity for fingerprints.
fn base_cross(kernel: KernelKind, a: &FeatureMatrix, b: &FeatureMatrix, lengthscale: f64) -> DMatrix<f64> {
    let (n, m) = (a.len(), b.len());
    let buf = match (kernel, a, b) {
        (KernelKind::Tanimoto, FeatureMatrix::Fingerprints(fa), FeatureMatrix::Fingerprints(fb)) => {
            par::fill_rows(n, m, |i, row| {
                for (j, out) in row.iter_mut().enumerate() {
                    *out = tanimoto_same_width(&fa[i], &fb[j]);
                }
            })
        }
        (KernelKind::Rbf, FeatureMatrix::Dense(da), FeatureMatrix::Dense(db)) => {
            let inv = 1.0 / (2.0 * lengthscale * lengthscale);
            par::fill_rows(n, m, |i, row| {
                let ra = da.row(i);
                for (j, out) in row.iter_mut().enumerate() {
                    let d2: f64 = ra.iter().zip(db.row(j)).map(|(x, y)| (x - y).powi(2)).sum();
                    *out = (-d2 * inv).exp();
                }
            })
        }
        _ => unreachable!("feature kind validated against kernel"),
    };
    DMatrix::from_fn(n, m, |i, j| buf[i * m + j])
}

/// Squared-distance matrix for dense features (precomputed once per fit so
/// the RBF kernel can be re-evaluated cheaply as the lengthscale moves).
fn squared_distances(x: &FeatureMatrix) -> DMatrix<f64> {
    let FeatureMatrix::Dense(m) = x else {
        unreachable!("squared distances only for dense features")
    };
    let n = m.rows();
    let buf = par::fill_rows(n, n, |i, row| {
        let ri = m.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = ri.iter().zip(m.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
        }
    });
    DMatrix::from_fn(n, n, |i, j| buf[i * n + j])
}

/// Median pairwise distance over a deterministic subsample, the RBF
/// lengthscale anchor.
fn median_heuristic(x: &FeatureMatrix) -> f64 {
    let FeatureMatrix::Dense(m) = x else { return 1.0 };
    let stride = (m.rows() / 256).max(1);
    let rows: Vec<usize> = (0..m.rows()).step_by(stride).collect();
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let d2: f64 = m.row(i).iter().zip(m.row(j)).map(|(x, y)| (x - y).powi(2)).sum();
            dists.push(d2.sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    median(&dists).max(1e-3)
}

/// Cholesky with escalating jitter 1e-8 -> 1e-4 on the diagonal.
fn cholesky_with_jitter(k: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>, ModelError> {
    if let Some(chol) = Cholesky::new(k.clone()) {
        return Ok(chol);
    }
    let mut jitter = 1e-8;
    while jitter <= 1e-4 {
        let mut kj = k.clone();
        for i in 0..k.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(kj) {
            return Ok(chol);
        }
        jitter *= 10.0;
    }
    Err(ModelError::SingularKernel)
}

/// Log marginal likelihood and its gradient in (log l, log s2, log noise).
struct LmlState {
    lml: f64,
    grad: [f64; 3],
}

fn lml_and_grad(
    kernel: KernelKind,
    d2: Option<&DMatrix<f64>>,
    base_tanimoto: Option<&DMatrix<f64>>,
    params: &KernelParams,
    y: &DVector<f64>,
) -> Result<LmlState, ModelError> {
    let n = y.len();
    let s2 = params.signal_variance();
    let noise = params.noise_variance();
    let c = match kernel {
        KernelKind::Tanimoto => base_tanimoto.expect("tanimoto base").clone(),
        KernelKind::Rbf => {
            let l2 = 2.0 * params.lengthscale() * params.lengthscale();
            d2.expect("distance matrix").map(|v| (-v / l2).exp())
        }
    };
    let mut k = &c * s2;
    for i in 0..n {
        k[(i, i)] += noise;
    }
    let chol = cholesky_with_jitter(&k)?;
    let alpha = chol.solve(y);
    let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
    let lml = -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    let kinv = chol.inverse();
    // M = alpha alpha^T - K^{-1}; grad_j = 1/2 sum(M .* dK/dtheta_j).
    let mut grad_ls = 0.0;
    let mut grad_s2 = 0.0;
    let mut grad_noise = 0.0;
    let l2 = params.lengthscale() * params.lengthscale();
    for j in 0..n {
        for i in 0..n {
            let m_ij = alpha[i] * alpha[j] - kinv[(i, j)];
            let dk_s2 = s2 * c[(i, j)];
            grad_s2 += m_ij * dk_s2;
            if kernel == KernelKind::Rbf {
                grad_ls += m_ij * dk_s2 * d2.unwrap()[(i, j)] / l2;
            }
        }
        grad_noise += (alpha[j] * alpha[j] - kinv[(j, j)]) * noise;
    }
    Ok(LmlState { lml, grad: [0.5 * grad_ls, 0.5 * grad_s2, 0.5 * grad_noise] })
}

/// Adam ascent over the log-space parameters; returns the best parameters
/// seen and their LML.
fn optimize_lml(
    kernel: KernelKind,
    d2: Option<&DMatrix<f64>>,
    base_tanimoto: Option<&DMatrix<f64>>,
    y: &DVector<f64>,
    start: KernelParams,
    max_iters: usize,
) -> (KernelParams, f64) {
    let mut theta = [start.log_lengthscale, start.log_signal, start.log_noise];
    let mut m = [0.0; 3];
    let mut v = [0.0; 3];
    let (lr, b1, b2, eps) = (0.08, 0.9, 0.999, 1e-8);
    let mut best = (start, f64::NEG_INFINITY);
    let mut prev_lml = f64::NEG_INFINITY;
    let mut stall = 0;
    for t in 1..=max_iters {
        let params = KernelParams {
            log_lengthscale: theta[0],
            log_signal: theta[1],
            log_noise: theta[2],
        };
        let Ok(state) = lml_and_grad(kernel, d2, base_tanimoto, &params, y) else {
            break;
        };
        if state.lml > best.1 {
            best = (params, state.lml);
        }
        if (state.lml - prev_lml).abs() < 1e-6 * state.lml.abs().max(1.0) {
            stall += 1;
            if stall >= 5 {
                break;
            }
        } else {
            stall = 0;
        }
        prev_lml = state.lml;
        let active = if kernel == KernelKind::Rbf { 0..3 } else { 1..3 };
        for j in active {
            m[j] = b1 * m[j] + (1.0 - b1) * state.grad[j];
            v[j] = b2 * v[j] + (1.0 - b2) * state.grad[j] * state.grad[j];
            let m_hat = m[j] / (1.0 - b1.powi(t as i32));
            let v_hat = v[j] / (1.0 - b2.powi(t as i32));
            theta[j] = (theta[j] + lr * m_hat / (v_hat.sqrt() + eps)).clamp(LOG_PARAM_MIN, LOG_PARAM_MAX);
        }
    }
    best
}

/// Exact GP regressor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpRegressor {
    kernel: KernelKind,
    params: KernelParams,
    x_train: FeatureMatrix,
    /// K^{-1} y on the centered/scaled target scale.
    alpha: Vec<f64>,
    /// Lower Cholesky factor of K + noise I, row-major.
    chol_l: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    lml: f64,
}

impl GpRegressor {
    /// Fits with hyperparameters maximizing the log marginal likelihood via
    /// multi-restart gradient ascent (restart 0 from defaults, the rest from
    /// seeded log-uniform draws).
    pub fn fit(
        x: &FeatureMatrix,
        y: &[f64],
        kernel: KernelKind,
        seed: u64,
    ) -> Result<GpRegressor, ModelError> {
        check_kind(kernel, x)?;
        if x.len() != y.len() || x.len() < 2 {
            return Err(ModelError::TooFewPoints { needed: 2, got: x.len().min(y.len()) });
        }
        let (y_mean, y_scale, yc) = scale_targets(y);
        let yv = DVector::from_vec(yc);

        let (d2, base_t) = match kernel {
            KernelKind::Rbf => (Some(squared_distances(x)), None),
            KernelKind::Tanimoto => (None, Some(base_cross(kernel, x, x, 1.0))),
        };
        let med = median_heuristic(x);

        let starts: Vec<KernelParams> = (0..RESTARTS)
            .map(|r| {
                if r == 0 {
                    KernelParams {
                        log_lengthscale: med.ln(),
                        log_signal: 0.0,
                        log_noise: (0.1f64).ln(),
                    }
                } else {
                    let mut rng = derived_rng(seed, r as u64);
                    KernelParams {
                        log_lengthscale: (med * rng.gen_range(0.3..3.0)).ln(),
                        log_signal: rng.gen_range(0.1f64.ln()..10f64.ln()),
                        log_noise: rng.gen_range(1e-3f64.ln()..1f64.ln()),
                    }
                }
            })
            .collect();

        let results = par::run_indexed(RESTARTS, |r| {
            optimize_lml(kernel, d2.as_ref(), base_t.as_ref(), &yv, starts[r], RESTART_ITERS)
        });
        let mut best = results[0];
        for r in &results[1..] {
            if r.1 > best.1 {
                best = *r;
            }
        }
        let (params, _) = optimize_lml(kernel, d2.as_ref(), base_t.as_ref(), &yv, best.0, POLISH_ITERS);

        Self::assemble(x.clone(), kernel, params, y_mean, y_scale, &yv)
    }

    /// Fits the posterior at fixed hyperparameters (no optimization). This is
    /// the oracle-comparison path; it also accepts a single training point.
    pub fn with_hyperparams(
        x: &FeatureMatrix,
        y: &[f64],
        kernel: KernelKind,
        params: KernelParams,
    ) -> Result<GpRegressor, ModelError> {
        check_kind(kernel, x)?;
        if x.is_empty() || x.len() != y.len() {
            return Err(ModelError::TooFewPoints { needed: 1, got: x.len().min(y.len()) });
        }
        let (y_mean, y_scale, yc) = scale_targets(y);
        let yv = DVector::from_vec(yc);
        Self::assemble(x.clone(), kernel, params, y_mean, y_scale, &yv)
    }

    fn assemble(
        x_train: FeatureMatrix,
        kernel: KernelKind,
        params: KernelParams,
        y_mean: f64,
        y_scale: f64,
        yc: &DVector<f64>,
    ) -> Result<GpRegressor, ModelError> {
        let n = x_train.len();
        let mut k = base_cross(kernel, &x_train, &x_train, params.lengthscale()) * params.signal_variance();
        for i in 0..n {
            k[(i, i)] += params.noise_variance();
        }
        let chol = cholesky_with_jitter(&k)?;
        let alpha = chol.solve(yc);
        let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
        let lml = -0.5 * yc.dot(&alpha)
            - 0.5 * log_det
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        let l = chol.l();
        Ok(GpRegressor {
            kernel,
            params,
            x_train,
            alpha: alpha.iter().copied().collect(),
            chol_l: l.transpose().iter().copied().collect(), // row-major lower
            y_mean,
            y_scale,
            lml,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.kernel.expected_feature_kind()
    }

    /// Posterior mean and latent variance (no observation noise), in target
    /// units.
    pub fn predict_latent(&self, x: &FeatureMatrix) -> Result<Vec<(f64, f64)>, ModelError> {
        check_kind(self.kernel, x)?;
        if x.is_empty() {
            return Ok(Vec::new());
        }
        let n = self.x_train.len();
        let m = x.len();
        let s2 = self.params.signal_variance();
        let k_star = base_cross(self.kernel, &self.x_train, x, self.params.lengthscale()) * s2;
        // mean_c = K*^T alpha
        let alpha = DVector::from_vec(self.alpha.clone());
        let mean_c = k_star.transpose() * &alpha;
        // v = L^{-1} K*; latent = s2 - colnorm^2(v)
        let l = DMatrix::from_fn(n, n, |i, j| self.chol_l[i * n + j]);
        let v = l.solve_lower_triangular(&k_star).ok_or(ModelError::SingularKernel)?;
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let explained: f64 = (0..n).map(|i| v[(i, j)] * v[(i, j)]).sum();
            let latent = (s2 - explained).max(0.0);
            out.push((
                self.y_mean + self.y_scale * mean_c[j],
                self.y_scale * self.y_scale * latent,
            ));
        }
        Ok(out)
    }

    /// Posterior predictions for observations: stddev includes the fitted
    /// observation noise.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<PosteriorPrediction>, ModelError> {
        let noise = self.params.noise_variance() * self.y_scale * self.y_scale;
        Ok(self
            .predict_latent(x)?
            .into_iter()
            .map(|(mean, latent)| PosteriorPrediction { mean, stddev: (latent + noise).sqrt() })
            .collect())
    }
}

fn scale_targets(y: &[f64]) -> (f64, f64, Vec<f64>) {
    let mean = crate::stats::mean(y);
    let std = crate::stats::std_dev(y);
    let scale = if std > 0.0 { std } else { 1.0 };
    (mean, scale, y.iter().map(|v| (v - mean) / scale).collect())
}

/// Laplace-approximate GP binary classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpClassifier {
    kernel: KernelKind,
    params: KernelParams,
    x_train: FeatureMatrix,
    /// y - sigmoid(f) at the posterior mode.
    grad_at_mode: Vec<f64>,
    sqrt_w: Vec<f64>,
    /// Lower Cholesky factor of B = I + W^0.5 K W^0.5, row-major.
    chol_b_l: Vec<f64>,
    /// Constant latent prior mean: empirical log-odds of class 1.
    prior_mean: f64,
}

impl GpClassifier {
    /// Fits with hyperparameters chosen by validation log-loss over a small
    /// grid. When no validation set is supplied, a deterministic stratified
    /// 15% carve-out of the training data selects the grid point and the
    /// winner is refit on everything.
    pub fn fit(
        x: &FeatureMatrix,
        y: &[f64],
        kernel: KernelKind,
        val: Option<(&FeatureMatrix, &[f64])>,
        seed: u64,
    ) -> Result<GpClassifier, ModelError> {
        check_kind(kernel, x)?;
        if x.len() != y.len() || x.len() < 2 {
            return Err(ModelError::TooFewPoints { needed: 2, got: x.len().min(y.len()) });
        }
        let n_pos = y.iter().filter(|&&v| v == 1.0).count();
        if n_pos == 0 || n_pos == y.len() {
            return Err(ModelError::DegenerateLabels);
        }

        let med = median_heuristic(x);
        let grid: Vec<KernelParams> = match kernel {
            KernelKind::Tanimoto => [0.25, 1.0, 4.0, 16.0]
                .iter()
                .map(|&s2| KernelParams {
                    log_lengthscale: 0.0,
                    log_signal: f64::ln(s2),
                    log_noise: f64::NEG_INFINITY,
                })
                .collect(),
            KernelKind::Rbf => {
                let mut g = Vec::new();
                for &ls in &[0.5, 1.0, 2.0] {
                    for &s2 in &[1.0, 4.0] {
                        g.push(KernelParams {
                            log_lengthscale: (med * ls).ln(),
                            log_signal: f64::ln(s2),
                            log_noise: f64::NEG_INFINITY,
                        });
                    }
                }
                g
            }
        };

        let (fit_x, fit_y, val_x, val_y, refit_all) = match val {
            Some((vx, vy)) => {
                check_kind(kernel, vx)?;
                if vx.is_empty() {
                    return Err(ModelError::EmptyValidation);
                }
                (x.clone(), y.to_vec(), vx.clone(), vy.to_vec(), false)
            }
            None => {
                let (train_idx, val_idx) = super::carve_validation(y, 0.15, true, seed);
                let fy: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
                let vy: Vec<f64> = val_idx.iter().map(|&i| y[i]).collect();
                (x.select(&train_idx), fy, x.select(&val_idx), vy, true)
            }
        };
        if fit_y.iter().filter(|&&v| v == 1.0).count() == 0
            || fit_y.iter().filter(|&&v| v == 0.0).count() == 0
        {
            return Err(ModelError::DegenerateLabels);
        }

        let candidates = par::run_indexed(grid.len(), |g| {
            GpClassifier::fit_fixed(&fit_x, &fit_y, kernel, grid[g]).map(|model| {
                let loss = model.validation_log_loss(&val_x, &val_y);
                (model, loss)
            })
        });
        let mut best: Option<(usize, f64)> = None;
        for (g, cand) in candidates.iter().enumerate() {
            if let Ok((_, loss)) = cand {
                if best.map_or(true, |(_, b)| *loss < b) {
                    best = Some((g, *loss));
                }
            }
        }
        let (g, _) = best.ok_or(ModelError::SingularKernel)?;
        if refit_all {
            GpClassifier::fit_fixed(x, y, kernel, grid[g])
        } else {
            candidates
                .into_iter()
                .nth(g)
                .expect("grid index in range")
                .map(|(model, _)| model)
        }
    }

    /// Laplace mode finding at fixed hyperparameters (GPML Algorithm 3.1
    /// around a constant prior mean).
    pub fn fit_fixed(
        x: &FeatureMatrix,
        y: &[f64],
        kernel: KernelKind,
        params: KernelParams,
    ) -> Result<GpClassifier, ModelError> {
        check_kind(kernel, x)?;
        let n = x.len();
        let p_hat = crate::stats::mean(y).clamp(1e-6, 1.0 - 1e-6);
        let prior_mean = (p_hat / (1.0 - p_hat)).ln();
        let k = base_cross(kernel, x, x, params.lengthscale()) * params.signal_variance();

        let mut f = DVector::from_element(n, prior_mean);
        let yv = DVector::from_vec(y.to_vec());
        let mut chol_b: Option<Cholesky<f64, nalgebra::Dyn>> = None;
        let mut sqrt_w = DVector::zeros(n);
        let mut objective = f64::NEG_INFINITY;
        for _ in 0..100 {
            let p = f.map(logistic);
            let w = p.map(|pi| (pi * (1.0 - pi)).max(1e-10));
            sqrt_w = w.map(f64::sqrt);
            // B = I + W^0.5 K W^0.5
            let mut b = DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * k[(i, j)] * sqrt_w[j]);
            for i in 0..n {
                b[(i, i)] += 1.0;
            }
            let chol = cholesky_with_jitter(&b)?;
            let grad = &yv - &p;
            // b_vec = W (f - m) + grad
            let fm = &f - DVector::from_element(n, prior_mean);
            let b_vec = w.component_mul(&fm) + &grad;
            let k_b = &k * &b_vec;
            let inner = chol.solve(&sqrt_w.component_mul(&k_b));
            let a = &b_vec - sqrt_w.component_mul(&inner);
            f = DVector::from_element(n, prior_mean) + &k * &a;
            // Objective: -1/2 a^T (f - m) + sum log p(y_i | f_i).
            let fm_new = &f - DVector::from_element(n, prior_mean);
            let log_lik: f64 = (0..n)
                .map(|i| {
                    let t = f[i];
                    let softplus = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
                    yv[i] * t - softplus
                })
                .sum();
            let obj = -0.5 * a.dot(&fm_new) + log_lik;
            chol_b = Some(chol);
            if (obj - objective).abs() < 1e-9 * obj.abs().max(1.0) {
                objective = obj;
                break;
            }
            objective = obj;
        }
        let chol = chol_b.ok_or(ModelError::SingularKernel)?;
        let p = f.map(logistic);
        let grad_at_mode: Vec<f64> = (0..n).map(|i| yv[i] - p[i]).collect();
        let l = chol.l();
        Ok(GpClassifier {
            kernel,
            params,
            x_train: x.clone(),
            grad_at_mode,
            sqrt_w: sqrt_w.iter().copied().collect(),
            chol_b_l: l.transpose().iter().copied().collect(),
            prior_mean,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.kernel.expected_feature_kind()
    }

    /// Probit-corrected class-1 probabilities.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<PosteriorPrediction>, ModelError> {
        check_kind(self.kernel, x)?;
        if x.is_empty() {
            return Ok(Vec::new());
        }
        let n = self.x_train.len();
        let m = x.len();
        let s2 = self.params.signal_variance();
        let k_star = base_cross(self.kernel, &self.x_train, x, self.params.lengthscale()) * s2;
        let grad = DVector::from_vec(self.grad_at_mode.clone());
        let mu = k_star.transpose() * &grad;
        // v = L^{-1} (W^0.5 K*); var = k** - colnorm^2(v)
        let l = DMatrix::from_fn(n, n, |i, j| self.chol_b_l[i * n + j]);
        let mut scaled = k_star.clone();
        for j in 0..m {
            for i in 0..n {
                scaled[(i, j)] *= self.sqrt_w[i];
            }
        }
        let v = l.solve_lower_triangular(&scaled).ok_or(ModelError::SingularKernel)?;
        let mut out = Vec::with_capacity(m);
        for j in 0..m {
            let explained: f64 = (0..n).map(|i| v[(i, j)] * v[(i, j)]).sum();
            let var = (s2 - explained).max(0.0);
            let latent_mean = self.prior_mean + mu[j];
            // Probit approximation to the logistic-Gaussian integral.
            let p = logistic(latent_mean / (1.0 + std::f64::consts::PI * var / 8.0).sqrt());
            out.push(PosteriorPrediction { mean: p, stddev: 0.0 });
        }
        Ok(out)
    }

    fn validation_log_loss(&self, x: &FeatureMatrix, y: &[f64]) -> f64 {
        let preds = self.predict(x).expect("validated feature kind");
        let mut loss = 0.0;
        for (pred, &label) in preds.iter().zip(y) {
            let p = pred.mean.clamp(1e-7, 1.0 - 1e-7);
            loss -= label * p.ln() + (1.0 - label) * (1.0 - p).ln();
        }
        loss / y.len() as f64
    }
}
