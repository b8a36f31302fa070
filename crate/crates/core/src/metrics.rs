//! Performance and calibration metrics: R², AUROC, regression reliability
//! curves with absolute miscalibration area, classification reliability bins
//! with expected calibration error, and percentile bootstrap confidence
//! intervals.

use rand::Rng;
use thiserror::Error;

use crate::par;
use crate::stats::{derived_rng, inv_norm_cdf};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("truth vector is constant; R^2 undefined")]
    ConstantTruth,
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("predictive stddev must be positive")]
    NonpositiveSigma,
    #[error("input lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("bootstrap exhausted {0} resample attempts")]
    ResampleExhausted(usize),
}

fn check_len(a: usize, b: usize) -> Result<(), MetricError> {
    if a == 0 {
        return Err(MetricError::EmptySample);
    }
    if a != b {
        return Err(MetricError::LengthMismatch { a, b });
    }
    Ok(())
}

/// Coefficient of determination, 1 - SS_res/SS_tot.
pub fn r_squared(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricError> {
    check_len(y.len(), y_hat.len())?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ConstantTruth);
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(t, p)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Area under the ROC curve via the Mann-Whitney midrank formulation;
/// tied scores contribute 1/2.
pub fn auroc(y: &[f64], scores: &[f64]) -> Result<f64, MetricError> {
    check_len(y.len(), scores.len())?;
    let n_pos = y.iter().filter(|&&v| v == 1.0).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Midranks over tied score groups; accumulate positive-rank sum.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if y[idx] == 1.0 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Regression reliability curve: per quantile q, the fraction of
/// standardized errors inside the symmetric Gaussian q-quantile band.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityCurve {
    quantiles: Vec<f64>,
    values: Vec<f64>,
}

impl ReliabilityCurve {
    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Builds a curve from explicit values on the standard grid (test and
    /// aggregation surface).
    pub fn from_values(values: Vec<f64>) -> Self {
        let quantiles = quantile_grid();
        assert_eq!(values.len(), quantiles.len());
        ReliabilityCurve { quantiles, values }
    }
}

/// The fixed 101-point quantile grid in [0, 1].
pub fn quantile_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

pub fn regression_reliability(
    y: &[f64],
    y_hat: &[f64],
    sigma: &[f64],
) -> Result<ReliabilityCurve, MetricError> {
    check_len(y.len(), y_hat.len())?;
    check_len(y.len(), sigma.len())?;
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return Err(MetricError::NonpositiveSigma);
    }
    let z: Vec<f64> = y
        .iter()
        .zip(y_hat)
        .zip(sigma)
        .map(|((t, p), s)| ((p - t) / s).abs())
        .collect();
    let n = z.len() as f64;
    let quantiles = quantile_grid();
    let values = quantiles
        .iter()
        .map(|&q| {
            let threshold = if q >= 1.0 {
                f64::INFINITY
            } else {
                inv_norm_cdf((1.0 + q) / 2.0)
            };
            z.iter().filter(|&&zi| zi < threshold).count() as f64 / n
        })
        .collect();
    Ok(ReliabilityCurve { quantiles, values })
}

/// Absolute miscalibration area: trapezoidal integral of |C(q) - q|.
pub fn ama(curve: &ReliabilityCurve) -> f64 {
    let q = &curve.quantiles;
    let c = &curve.values;
    let mut area = 0.0;
    for i in 1..q.len() {
        let left = (c[i - 1] - q[i - 1]).abs();
        let right = (c[i] - q[i]).abs();
        area += 0.5 * (left + right) * (q[i] - q[i - 1]);
    }
    area
}

pub const CALIBRATION_BINS: usize = 10;

/// Confidence-binned classification reliability: M = 10 uniform intervals
/// over [0.5, 1.0] of the predicted-class confidence max(p, 1-p).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBins {
    conf: Vec<f64>,
    acc: Vec<f64>,
    counts: Vec<usize>,
}

impl CalibrationBins {
    pub fn conf(&self) -> &[f64] {
        &self.conf
    }

    pub fn acc(&self) -> &[f64] {
        &self.acc
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Builds bins directly (test surface).
    pub fn from_parts(conf: Vec<f64>, acc: Vec<f64>, counts: Vec<usize>) -> Self {
        assert_eq!(conf.len(), CALIBRATION_BINS);
        assert_eq!(acc.len(), CALIBRATION_BINS);
        assert_eq!(counts.len(), CALIBRATION_BINS);
        CalibrationBins { conf, acc, counts }
    }
}

/// Bins predictions by confidence. The implied class is 1 when p >= 0.5;
/// bin edges are right-open except the last.
pub fn classification_reliability(y: &[f64], p: &[f64]) -> Result<CalibrationBins, MetricError> {
    check_len(y.len(), p.len())?;
    let mut conf_sum = vec![0.0; CALIBRATION_BINS];
    let mut correct = vec![0usize; CALIBRATION_BINS];
    let mut counts = vec![0usize; CALIBRATION_BINS];
    for (&label, &prob) in y.iter().zip(p) {
        debug_assert!((0.0..=1.0).contains(&prob));
        let implied = if prob >= 0.5 { 1.0 } else { 0.0 };
        let confidence = prob.max(1.0 - prob);
        let bin = (((confidence - 0.5) / 0.05) as usize).min(CALIBRATION_BINS - 1);
        conf_sum[bin] += confidence;
        counts[bin] += 1;
        if implied == label {
            correct[bin] += 1;
        }
    }
    let conf = conf_sum
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let acc = correct
        .iter()
        .zip(&counts)
        .map(|(&k, &c)| if c > 0 { k as f64 / c as f64 } else { 0.0 })
        .collect();
    Ok(CalibrationBins { conf, acc, counts })
}

/// Expected calibration error: bin-count-weighted |acc - conf|.
pub fn ece(bins: &CalibrationBins) -> f64 {
    let n = bins.total();
    if n == 0 {
        return 0.0;
    }
    bins.counts
        .iter()
        .zip(&bins.acc)
        .zip(&bins.conf)
        .map(|((&c, a), f)| c as f64 / n as f64 * (a - f).abs())
        .sum()
}

/// Percentile bootstrap interval for an arbitrary metric over resampled
/// index sets.
///
/// The metric closure receives a with-replacement resample of `0..n` and
/// returns `None` when the resample violates its preconditions (for example
/// a single-class draw); such resamples are redrawn, up to 10 attempts each
/// (10 * n_boot attempts in total). Resamples draw from per-index derived RNG
/// streams, so the result is independent of parallel scheduling.
pub fn bootstrap_ci<F>(
    metric: F,
    n: usize,
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), MetricError>
where
    F: Fn(&[usize]) -> Option<f64> + Sync + Send,
{
    if n == 0 {
        return Err(MetricError::EmptySample);
    }
    assert!(n_boot > 0 && level > 0.0 && level < 1.0);
    const MAX_ATTEMPTS_PER_RESAMPLE: usize = 10;

    let values: Vec<Option<f64>> = par::run_indexed(n_boot, |i| {
        let mut rng = derived_rng(seed, i as u64);
        let mut indices = vec![0usize; n];
        for _ in 0..MAX_ATTEMPTS_PER_RESAMPLE {
            indices.iter_mut().for_each(|v| *v = rng.gen_range(0..n));
            if let Some(value) = metric(&indices) {
                return Some(value);
            }
        }
        None
    });
    let mut ok = Vec::with_capacity(n_boot);
    for v in values {
        match v {
            Some(x) => ok.push(x),
            None => {
                return Err(MetricError::ResampleExhausted(MAX_ATTEMPTS_PER_RESAMPLE * n_boot))
            }
        }
    }
    ok.sort_by(|a, b| a.total_cmp(b));
    let alpha = (1.0 - level) / 2.0;
    Ok((percentile(&ok, alpha), percentile(&ok, 1.0 - alpha)))
}

/// Linear-interpolation percentile over a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn r_squared_examples() {
        let y = [0.0, 1.0, 2.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        let mean = [1.0, 1.0, 1.0];
        assert_eq!(r_squared(&y, &mean).unwrap(), 0.0);
        let zeros = [0.0, 0.0, 0.0];
        assert_eq!(r_squared(&y, &zeros).unwrap(), -1.5);
        assert_eq!(r_squared(&[2.0, 2.0], &[1.0, 3.0]), Err(MetricError::ConstantTruth));
    }

    #[test]
    fn r_squared_affine_invariance() {
        let mut rng = derived_rng(11, 0);
        let y: Vec<f64> = (0..40).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let p: Vec<f64> = y.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
        let base = r_squared(&y, &p).unwrap();
        let (a, b) = (2.5, -7.0);
        let ya: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let pa: Vec<f64> = p.iter().map(|v| a * v + b).collect();
        assert!((r_squared(&ya, &pa).unwrap() - base).abs() < 1e-12);
    }

    /// Brute-force pairwise oracle for AUROC.
    fn auroc_pairs(y: &[f64], s: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            if yi != 1.0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj != 0.0 {
                    continue;
                }
                den += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    #[test]
    fn auroc_examples() {
        let y = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(auroc(&y, &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(auroc(&y, &[0.5, 0.5, 0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(auroc(&y, &[0.1, 0.6, 0.5, 0.9]).unwrap(), 0.75);
        assert_eq!(auroc(&[1.0, 1.0], &[0.1, 0.2]), Err(MetricError::DegenerateLabels));
    }

    #[test]
    fn auroc_matches_bruteforce_on_random_sets() {
        let mut rng = derived_rng(23, 0);
        for case in 0..200 {
            let n = rng.gen_range(3..=20);
            let mut y: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_bool(0.5))).collect();
            // Guarantee both classes.
            y[0] = 0.0;
            y[1] = 1.0;
            // Coarse scores to force plenty of ties.
            let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 / 4.0).collect();
            let fast = auroc(&y, &s).unwrap();
            let slow = auroc_pairs(&y, &s);
            assert_eq!(fast, slow, "case {case}");
        }
    }

    #[test]
    fn auroc_rank_invariance() {
        let y = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let s = [0.1, 0.7, 0.3, 0.9, 0.4, 0.2];
        let base = auroc(&y, &s).unwrap();
        let squashed: Vec<f64> = s.iter().map(|v| (5.0 * v).tanh()).collect();
        assert_eq!(auroc(&y, &squashed).unwrap(), base);
    }

    #[test]
    fn reliability_perfect_predictions() {
        let y = [1.0, 2.0, 3.0];
        let sigma = [0.5, 0.5, 0.5];
        let curve = regression_reliability(&y, &y, &sigma).unwrap();
        assert_eq!(curve.values()[0], 0.0, "strict inequality at q=0");
        assert!(curve.values()[1..].iter().all(|&c| c == 1.0));
    }

    #[test]
    fn reliability_single_point_step() {
        let z = inv_norm_cdf(0.75) + 1e-9;
        let curve = regression_reliability(&[0.0], &[z], &[1.0]).unwrap();
        for (&q, &c) in curve.quantiles().iter().zip(curve.values()) {
            if q < 0.5 {
                assert_eq!(c, 0.0, "q={q}");
            } else if q > 0.5 {
                assert_eq!(c, 1.0, "q={q}");
            } else {
                assert_eq!(c, 0.0, "the defining quantile uses strict <");
            }
        }
    }

    #[test]
    fn reliability_monte_carlo_oracle() {
        // Standard normal Z-scores are perfectly calibrated by construction.
        let n = 100_000;
        let mut rng = derived_rng(7, 0);
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y_hat = vec![0.0; n];
        let sigma = vec![1.0; n];
        let curve = regression_reliability(&y, &y_hat, &sigma).unwrap();
        let max_dev = curve
            .quantiles()
            .iter()
            .zip(curve.values())
            .map(|(q, c)| (c - q).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 0.01, "max |C(q) - q| = {max_dev}");
        assert!(ama(&curve) < 0.01);
    }

    #[test]
    fn reliability_monotone_and_nonpositive_sigma() {
        let mut rng = derived_rng(9, 0);
        let y: Vec<f64> = (0..50).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p: Vec<f64> = y.iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect();
        let s = vec![0.8; 50];
        let curve = regression_reliability(&y, &p, &s).unwrap();
        for w in curve.values().windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(*curve.values().last().unwrap(), 1.0);
        let bad = vec![0.0; 50];
        assert_eq!(
            regression_reliability(&y, &p, &bad),
            Err(MetricError::NonpositiveSigma)
        );
    }

    #[test]
    fn ama_examples() {
        // Perfectly calibrated curve.
        let perfect = ReliabilityCurve::from_values(quantile_grid());
        assert_eq!(ama(&perfect), 0.0);
        // Maximal underconfidence: C = 1 everywhere; |1 - q| is linear so the
        // trapezoid rule is exact.
        let maximal = ReliabilityCurve::from_values(vec![1.0; 101]);
        assert!((ama(&maximal) - 0.5).abs() < 1e-12);
        // Piecewise: C = 0 on [0, 0.5], then linear to 1. Analytic area 0.25.
        let piecewise = ReliabilityCurve::from_values(
            quantile_grid()
                .iter()
                .map(|&q| if q <= 0.5 { 0.0 } else { 2.0 * (q - 0.5) })
                .collect(),
        );
        assert!((ama(&piecewise) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn classification_bins_examples() {
        // All confident and correct: one occupied bin with conf = acc = 1.
        let y = vec![1.0; 20];
        let p = vec![1.0; 20];
        let bins = classification_reliability(&y, &p).unwrap();
        assert_eq!(bins.counts()[9], 20);
        assert_eq!(bins.counts()[..9].iter().sum::<usize>(), 0);
        assert_eq!(bins.conf()[9], 1.0);
        assert_eq!(bins.acc()[9], 1.0);

        // p = 0.5 exactly: implied class 1, first interval.
        let bins = classification_reliability(&[1.0], &[0.5]).unwrap();
        assert_eq!(bins.counts()[0], 1);
        assert_eq!(bins.acc()[0], 1.0);

        // Constructed: confidence 0.55, 55% of labels match class 1.
        let n = 2000;
        let y: Vec<f64> = (0..n).map(|i| f64::from(i % 20 < 11)).collect();
        let p = vec![0.55; n];
        let bins = classification_reliability(&y, &p).unwrap();
        let occupied = bins.counts().iter().position(|&c| c > 0).unwrap();
        assert_eq!(bins.counts()[occupied], n);
        assert!((bins.acc()[occupied] - bins.conf()[occupied]).abs() <= 0.03);
    }

    #[test]
    fn ece_examples() {
        let y = vec![1.0; 10];
        let p = vec![1.0; 10];
        let bins = classification_reliability(&y, &p).unwrap();
        assert_eq!(ece(&bins), 0.0);

        // One bin, conf 1.0, acc 0.0.
        let y = vec![0.0; 10];
        let bins = classification_reliability(&y, &p).unwrap();
        assert_eq!(ece(&bins), 1.0);

        // Hand-weighted: (10*0.1 + 30*0.2) / 40 = 0.175.
        let mut conf = vec![0.0; 10];
        let mut acc = vec![0.0; 10];
        let mut counts = vec![0usize; 10];
        conf[2] = 0.6;
        acc[2] = 0.5;
        counts[2] = 10;
        conf[7] = 0.9;
        acc[7] = 0.7;
        counts[7] = 30;
        let bins = CalibrationBins::from_parts(conf, acc, counts);
        assert!((ece(&bins) - 0.175).abs() < 1e-12);
    }

    #[test]
    fn ece_of_calibrated_synthetic_classifier() {
        // p drawn uniformly, y ~ Bernoulli(p): calibrated by construction.
        let n = 10_000;
        let mut rng = derived_rng(41, 0);
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: Vec<f64> = p.iter().map(|&pi| f64::from(rng.gen_bool(pi))).collect();
        let bins = classification_reliability(&y, &p).unwrap();
        assert!(ece(&bins) <= 0.03, "ece = {}", ece(&bins));
    }

    #[test]
    fn bootstrap_constant_metric_zero_width() {
        let (lo, hi) = bootstrap_ci(|_| Some(0.42), 50, 200, 0.95, 3).unwrap();
        assert_eq!((lo, hi), (0.42, 0.42));
    }

    #[test]
    fn bootstrap_contains_point_estimate() {
        let mut rng = derived_rng(5, 0);
        for case in 0..100 {
            let n = 60;
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p: Vec<f64> = y.iter().map(|v| v + rng.gen_range(-0.6..0.6)).collect();
            let point = r_squared(&y, &p).unwrap();
            let (lo, hi) = bootstrap_ci(
                |idx| {
                    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                    let ps: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
                    r_squared(&ys, &ps).ok()
                },
                n,
                500,
                0.95,
                case,
            )
            .unwrap();
            assert!(lo <= point && point <= hi, "case {case}: {point} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn bootstrap_seed_stability() {
        let mut rng = derived_rng(17, 0);
        let n = 500;
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let p: Vec<f64> = y
            .iter()
            .map(|v| {
                let e: f64 = StandardNormal.sample(&mut rng);
                v + 0.3 * e
            })
            .collect();
        let run = |seed| {
            bootstrap_ci(
                |idx| {
                    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                    let ps: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
                    r_squared(&ys, &ps).ok()
                },
                n,
                1000,
                0.95,
                seed,
            )
            .unwrap()
        };
        let (lo1, hi1) = run(100);
        let (lo2, hi2) = run(200);
        assert!((lo1 - lo2).abs() < 0.02, "{lo1} vs {lo2}");
        assert!((hi1 - hi2).abs() < 0.02, "{hi1} vs {hi2}");
        // Determinism for an identical seed.
        assert_eq!(run(100), run(100));
    }

    #[test]
    fn bootstrap_redraws_and_exhaustion() {
        // Metric that rejects resamples without both classes: tiny sample
        // with 1 positive; most draws need redrawing yet succeed.
        let y = [0.0, 0.0, 0.0, 1.0];
        let s = [0.1, 0.2, 0.3, 0.9];
        let result = bootstrap_ci(
            |idx| {
                let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                let ss: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
                auroc(&ys, &ss).ok()
            },
            4,
            100,
            0.95,
            9,
        );
        assert!(result.is_ok());

        // A metric that always rejects exhausts the attempt budget.
        let never = bootstrap_ci(|_| None::<f64>, 4, 10, 0.95, 9);
        assert_eq!(never, Err(MetricError::ResampleExhausted(100)));
    }
}
