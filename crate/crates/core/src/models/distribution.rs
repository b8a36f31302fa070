//! Predictive distribution families for natural-gradient boosting:
//! Gaussian(mu, log sigma) for regression and Bernoulli(log-odds) for binary
//! classification.

use serde::{Deserialize, Serialize};

use super::{ModelError, PosteriorPrediction};
use crate::stats::logistic;

/// Clamp for the Bernoulli natural gradient, which blows up as p approaches
/// the label.
const BERNOULLI_GRAD_CLAMP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Parameters [mu, log sigma].
    Gaussian,
    /// Parameter [theta] (log-odds of class 1).
    Bernoulli,
}

impl Family {
    pub fn n_params(self) -> usize {
        match self {
            Family::Gaussian => 2,
            Family::Bernoulli => 1,
        }
    }

    /// Marginal-fit initial parameters from the training targets.
    pub fn init_params(self, y: &[f64]) -> Vec<f64> {
        match self {
            Family::Gaussian => {
                let mean = crate::stats::mean(y);
                let std = crate::stats::std_dev(y).max(1e-8);
                vec![mean, std.ln()]
            }
            Family::Bernoulli => {
                let p = crate::stats::mean(y).clamp(1e-6, 1.0 - 1e-6);
                vec![(p / (1.0 - p)).ln()]
            }
        }
    }

    /// Negative log-likelihood of one observation.
    pub fn nll(self, params: &[f64], y: f64) -> f64 {
        match self {
            Family::Gaussian => {
                let (mu, log_sigma) = (params[0], params[1]);
                let sigma2 = (2.0 * log_sigma).exp();
                0.5 * ((y - mu).powi(2) / sigma2 + 2.0 * log_sigma + (2.0 * std::f64::consts::PI).ln())
            }
            Family::Bernoulli => {
                let theta = params[0];
                // -[y*theta - log(1 + e^theta)] in a softplus-stable form.
                let softplus = if theta > 0.0 {
                    theta + (-theta).exp().ln_1p()
                } else {
                    theta.exp().ln_1p()
                };
                softplus - y * theta
            }
        }
    }

    /// Fisher-preconditioned gradient of the negative log-likelihood in
    /// parameter space.
    ///
    /// Gaussian(mu, log sigma): (mu - y, (1 - (y-mu)^2/sigma^2)/2).
    /// Bernoulli(theta): (p - y)/(p(1-p)), clamped to |.| <= 1e4.
    pub fn natural_gradient(self, params: &[f64], y: f64) -> Result<Vec<f64>, ModelError> {
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::InvalidParams);
        }
        match self {
            Family::Gaussian => {
                let (mu, log_sigma) = (params[0], params[1]);
                let sigma2 = (2.0 * log_sigma).exp();
                if !(sigma2 > 0.0) {
                    return Err(ModelError::InvalidParams);
                }
                Ok(vec![mu - y, 0.5 * (1.0 - (y - mu).powi(2) / sigma2)])
            }
            Family::Bernoulli => {
                let p = logistic(params[0]);
                let denom = (p * (1.0 - p)).max(1e-12);
                Ok(vec![((p - y) / denom).clamp(-BERNOULLI_GRAD_CLAMP, BERNOULLI_GRAD_CLAMP)])
            }
        }
    }

    /// Turns fitted parameters into a posterior prediction.
    pub fn predict(self, params: &[f64]) -> PosteriorPrediction {
        match self {
            Family::Gaussian => PosteriorPrediction {
                mean: params[0],
                stddev: params[1].exp(),
            },
            Family::Bernoulli => PosteriorPrediction {
                mean: logistic(params[0]),
                stddev: 0.0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn gaussian_stationary_mean() {
        let g = Family::Gaussian.natural_gradient(&[2.0, 0.3], 2.0).unwrap();
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn gaussian_unit_example() {
        // mu=0, sigma=1, y=1: Fisher-matrix oracle F = diag(1/sigma^2, 2).
        let g = Family::Gaussian.natural_gradient(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(g, vec![-1.0, 0.0]);
    }

    #[test]
    fn bernoulli_midpoint_example() {
        // theta=0 (p=0.5), y=1: (0.5 - 1)/0.25 = -2.
        let g = Family::Bernoulli.natural_gradient(&[0.0], 1.0).unwrap();
        assert_eq!(g, vec![-2.0]);
    }

    #[test]
    fn bernoulli_clamps_extremes() {
        let g = Family::Bernoulli.natural_gradient(&[40.0], 0.0).unwrap();
        assert_eq!(g[0], 1e4);
        let g = Family::Bernoulli.natural_gradient(&[-40.0], 1.0).unwrap();
        assert_eq!(g[0], -1e4);
    }

    #[test]
    fn invalid_params_rejected() {
        assert_eq!(
            Family::Gaussian.natural_gradient(&[f64::NAN, 0.0], 1.0),
            Err(ModelError::InvalidParams)
        );
        assert_eq!(
            Family::Bernoulli.natural_gradient(&[f64::INFINITY], 1.0),
            Err(ModelError::InvalidParams)
        );
    }

    /// Finite-difference NLL gradient preconditioned by the closed-form
    /// Fisher matrix, compared against the closed-form natural gradient over
    /// random draws.
    #[test]
    fn matches_fisher_preconditioned_finite_differences() {
        let mut rng = crate::stats::derived_rng(31, 0);
        let h = 1e-6;
        for _ in 0..100 {
            // Gaussian case.
            let params = [rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)];
            let y: f64 = rng.gen_range(-3.0..3.0);
            let grad_mu = (Family::Gaussian.nll(&[params[0] + h, params[1]], y)
                - Family::Gaussian.nll(&[params[0] - h, params[1]], y))
                / (2.0 * h);
            let grad_ls = (Family::Gaussian.nll(&[params[0], params[1] + h], y)
                - Family::Gaussian.nll(&[params[0], params[1] - h], y))
                / (2.0 * h);
            let sigma2 = (2.0 * params[1]).exp();
            // F = diag(1/sigma^2, 2) for (mu, log sigma).
            let expected = [sigma2 * grad_mu, grad_ls / 2.0];
            let got = Family::Gaussian.natural_gradient(&params, y).unwrap();
            assert!((got[0] - expected[0]).abs() < 1e-5, "{got:?} vs {expected:?}");
            assert!((got[1] - expected[1]).abs() < 1e-5, "{got:?} vs {expected:?}");

            // Bernoulli case.
            let theta = rng.gen_range(-3.0..3.0);
            let yb = f64::from(rng.gen_bool(0.5));
            let grad = (Family::Bernoulli.nll(&[theta + h], yb)
                - Family::Bernoulli.nll(&[theta - h], yb))
                / (2.0 * h);
            let p = logistic(theta);
            let fisher = p * (1.0 - p);
            let got = Family::Bernoulli.natural_gradient(&[theta], yb).unwrap();
            assert!((got[0] - grad / fisher).abs() < 1e-5);
        }
    }

    #[test]
    fn predictions_have_positive_spread() {
        let p = Family::Gaussian.predict(&[1.5, -0.7]);
        assert_eq!(p.mean, 1.5);
        assert!(p.stddev > 0.0);
        let p = Family::Bernoulli.predict(&[0.0]);
        assert_eq!(p.mean, 0.5);
    }
}
