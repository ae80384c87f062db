//! Exact Gaussian path simulation on small grids and Monte Carlo checks of
//! the finite-past predictor.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LrdError, Result};
use crate::model::LrdModel;
use crate::prediction::{error_variance, DiscretePredictor, ErrorMode, FinitePredictor, Predictor};
use crate::quad::{compensated_sum, QuadratureConfig};

/// One simulated path, `values[i] = X(grid_times[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PathSample {
    pub grid_times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub replicate_index: u64,
}

/// `E[X(t)X(s)] = ½{σ²(|t|) + σ²(|s|) − σ²(|t−s|)}`.
pub fn covariance(model: &LrdModel, t: f64, s: f64, q: &QuadratureConfig) -> Result<f64> {
    let v = |x: f64| if x == 0.0 { Ok(0.0) } else { model.variogram(x.abs(), q) };
    Ok(0.5 * (v(t)? + v(s)? - v(t - s)?))
}

fn check_grid(grid: &[f64]) -> Result<usize> {
    if grid.windows(2).any(|p| !(p[1] > p[0])) || grid.iter().any(|x| !x.is_finite()) {
        return invalid("grid times must be finite and strictly increasing");
    }
    grid.iter()
        .position(|&x| x == 0.0)
        .ok_or_else(|| LrdError::InvalidArgument("grid must contain 0".into()))
}

/// Covariance of `X` on `grid`, variogram evaluated once per distinct lag.
pub fn covariance_matrix(model: &LrdModel, grid: &[f64], q: &QuadratureConfig) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let mut lags: Vec<f64> = grid.iter().map(|x| x.abs()).collect();
    for i in 0..n {
        for j in 0..i {
            lags.push(grid[i] - grid[j]);
        }
    }
    lags.retain(|&x| x > 0.0);
    lags.sort_by(f64::total_cmp);
    lags.dedup();
    let values: Vec<f64> = lags
        .par_iter()
        .map(|&x| model.variogram(x, q))
        .collect::<Result<_>>()?;
    let table: HashMap<u64, f64> = lags.iter().map(|x| x.to_bits()).zip(values).collect();
    let v = |x: f64| if x == 0.0 { 0.0 } else { table[&x.abs().to_bits()] };
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (grid[i], grid[j]);
        let diff = if i >= j { a - b } else { b - a };
        0.5 * (v(a) + v(b) - v(diff))
    }))
}

/// Lower Cholesky factor of the grid covariance with `t = 0` removed.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    grid: Vec<f64>,
    zero: usize,
    factor: DMatrix<f64>,
    covariance: DMatrix<f64>,
    jitter: f64,
}

impl PathSimulator {
    pub fn new(model: &LrdModel, grid: &[f64], q: &QuadratureConfig) -> Result<Self> {
        let zero = check_grid(grid)?;
        let covariance = covariance_matrix(model, grid, q)?;
        let keep: Vec<usize> = (0..grid.len()).filter(|&i| i != zero).collect();
        let m = keep.len();
        let reduced = DMatrix::from_fn(m, m, |i, j| covariance[(keep[i], keep[j])]);
        let scale = reduced.diagonal().iter().copied().fold(0.0, f64::max);
        let mut jitter = 0.0;
        let factor = loop {
            let mut a = reduced.clone();
            for i in 0..m {
                a[(i, i)] += jitter;
            }
            if let Some(ch) = Cholesky::new(a) {
                break ch.unpack();
            }
            jitter = if jitter == 0.0 { 1e-12 * scale } else { jitter * 100.0 };
            if jitter > 1e-6 * scale {
                return Err(LrdError::Factorization { jitter });
            }
            log::warn!("covariance not positive definite; adding jitter {jitter:e}");
        };
        Ok(PathSimulator {
            grid: grid.to_vec(),
            zero,
            factor,
            covariance,
            jitter,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Diagonal shift added before factorization, 0 if none was needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Path for `(seed, replicate)`; the replicate selects a ChaCha stream.
    pub fn sample(&self, seed: u64, replicate: u64) -> PathSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replicate);
        let m = self.factor.nrows();
        let z = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let x = &self.factor * z;
        let mut values = Vec::with_capacity(self.grid.len());
        values.extend(x.iter().take(self.zero));
        values.push(0.0);
        values.extend(x.iter().skip(self.zero));
        PathSample {
            grid_times: self.grid.clone(),
            values,
            seed,
            replicate_index: replicate,
        }
    }
}

/// Single path; for many replicates build a [`PathSimulator`] once.
pub fn simulate(
    model: &LrdModel,
    grid: &[f64],
    seed: u64,
    replicate: u64,
    q: &QuadratureConfig,
) -> Result<PathSample> {
    Ok(PathSimulator::new(model, grid, q)?.sample(seed, replicate))
}

/// Uniform grid `lo, lo+step, …, hi`, which must contain 0.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    let count = |len: f64| -> Result<usize> {
        let k = (len / step).round();
        if (len - k * step).abs() > 1e-9 * step.max(len) {
            return invalid(format!("grid step {step} does not divide {len}"));
        }
        Ok(k as usize)
    };
    if !(step > 0.0 && lo <= 0.0 && hi > 0.0) {
        return invalid("uniform grid needs lo ≤ 0 < hi and step > 0");
    }
    let below = count(-lo)?;
    let above = count(hi)?;
    Ok((0..=below + above).map(|i| (i as f64 - below as f64) * step).collect())
}

/// Monte Carlo summary for one window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McReport {
    pub replicates: usize,
    pub grid_step: f64,
    pub empirical_mse: f64,
    pub theoretical_var: f64,
    /// Standard error of `empirical_mse`.
    pub standard_error: f64,
    pub empirical_bias: f64,
    pub bias_standard_error: f64,
    /// Exact MSE of the discretized predictor on this grid.
    pub discretized_mse: f64,
    /// `|discretized_mse − theoretical_var|`.
    pub discretization_allowance: f64,
    /// MSE of the trivial predictor `X(t1)`.
    pub trivial_mse: f64,
    /// `(s, corr(r, X(s)))` at interior observed points.
    pub residual_correlations: Vec<(f64, f64)>,
    pub correlation_standard_error: f64,
    pub jitter: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl McReport {
    pub fn mse_consistent(&self) -> bool {
        (self.empirical_mse - self.theoretical_var).abs()
            <= 3.0 * self.standard_error + self.discretization_allowance
    }

    pub fn unbiased(&self) -> bool {
        self.empirical_bias.abs() <= 3.0 * self.bias_standard_error
    }

    pub fn orthogonal(&self) -> bool {
        self.residual_correlations
            .iter()
            .all(|(_, r)| r.abs() <= 3.0 * self.correlation_standard_error)
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = compensated_sum(a.iter().copied()) / n;
    let mb = compensated_sum(b.iter().copied()) / n;
    let cov = compensated_sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let va = compensated_sum(a.iter().map(|x| (x - ma).powi(2)));
    let vb = compensated_sum(b.iter().map(|y| (y - mb).powi(2)));
    cov / (va * vb).sqrt()
}

/// Simulate on `[−t0, T]`, apply the discretized finite-past predictor and
/// compare residual statistics with the theoretical error variance.
pub fn validate_prediction(
    pred: &FinitePredictor,
    grid_step: f64,
    replicates: usize,
    seed: u64,
    q: &QuadratureConfig,
) -> Result<McReport> {
    if replicates < 2 {
        return invalid("validation needs at least 2 replicates");
    }
    let w = *pred.window();
    let ar = pred.table().ar();
    let model = ar.model();
    let grid = uniform_grid(-w.t0, w.big_t, grid_step)?;
    if !grid.iter().any(|&x| (x - w.t1).abs() <= 1e-9 * grid_step) {
        return invalid("grid step must divide t1");
    }
    let theoretical = error_variance(ar, Some(pred), &w, ErrorMode::FinitePast, q)?.total;
    let sim = PathSimulator::new(model, &grid, q)?;
    let disc = DiscretePredictor::new(pred, &grid)?;
    let target = grid.len() - 1;
    let anchor = disc.anchor;

    let mut lam = disc.weights(grid.len());
    for x in lam.iter_mut() {
        *x = -*x;
    }
    lam[target] += 1.0;
    let lam = DVector::from_vec(lam);
    let discretized_mse = (lam.transpose() * sim.covariance() * &lam)[(0, 0)];
    let trivial_mse = model.variogram(w.t3(), q)?;

    let start = grid.iter().position(|&x| x >= -w.t0 - 1e-12).unwrap_or(0);
    let probes: Vec<usize> = (1..=5)
        .map(|k| start + k * (anchor - start) / 6)
        .map(|j| if grid[j] == 0.0 { j + 1 } else { j })
        .collect();

    let draws: Vec<(f64, f64, Vec<f64>)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let path = sim.sample(seed, r);
            let resid = path.values[target] - disc.apply(&path.values);
            let trivial = path.values[target] - path.values[anchor];
            (resid, trivial, probes.iter().map(|&j| path.values[j]).collect())
        })
        .collect();
    let residuals: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let squares: Vec<f64> = residuals.iter().map(|r| r * r).collect();
    let (empirical_mse, standard_error) = mean_and_se(&squares);
    let (empirical_bias, bias_standard_error) = mean_and_se(&residuals);
    let residual_correlations = probes
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let xs: Vec<f64> = draws.iter().map(|d| d.2[k]).collect();
            (grid[j], correlation(&residuals, &xs))
        })
        .collect();
    let empirical_trivial = compensated_sum(draws.iter().map(|d| d.1 * d.1)) / replicates as f64;
    let mut warnings: Vec<String> = disc.warning.into_iter().collect();
    if empirical_mse >= empirical_trivial {
        warnings.push(format!(
            "predictor MSE {empirical_mse:e} not below trivial-predictor MSE {empirical_trivial:e}"
        ));
    }
    Ok(McReport {
        replicates,
        grid_step,
        empirical_mse,
        theoretical_var: theoretical,
        standard_error,
        empirical_bias,
        bias_standard_error,
        discretized_mse,
        discretization_allowance: (discretized_mse - theoretical).abs(),
        trivial_mse,
        residual_correlations,
        correlation_standard_error: 1.0 / (replicates as f64).sqrt(),
        jitter: sim.jitter(),
        warnings,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_basics() {
        let m = LrdModel::fbm(0.75).unwrap();
        let q = QuadratureConfig::default();
        assert!((covariance(&m, 1.0, 1.0, &q).unwrap() - 1.063_846).abs() < 1e-6);
        assert_eq!(covariance(&m, 0.7, 0.0, &q).unwrap(), 0.0);
        let a = covariance(&m, 0.3, -1.2, &q).unwrap();
        let b = covariance(&m, -1.2, 0.3, &q).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trivial_grid_and_determinism() {
        let m = LrdModel::fbm(0.75).unwrap();
        let q = QuadratureConfig::default();
        let p = simulate(&m, &[0.0], 1, 0, &q).unwrap();
        assert_eq!(p.values, vec![0.0]);
        let grid = uniform_grid(-1.0, 1.0, 0.125).unwrap();
        let a = simulate(&m, &grid, 7, 3, &q).unwrap();
        let b = simulate(&m, &grid, 7, 3, &q).unwrap();
        let c = simulate(&m, &grid, 7, 4, &q).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert_eq!(a.values[8], 0.0);
    }

    #[test]
    fn grid_checks() {
        assert!(uniform_grid(-1.0, 2.0, 0.3).is_err());
        assert_eq!(uniform_grid(-1.0, 1.0, 0.5).unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let m = LrdModel::fbm(0.75).unwrap();
        assert!(PathSimulator::new(&m, &[0.5, 1.0], &QuadratureConfig::default()).is_err());
    }
}
