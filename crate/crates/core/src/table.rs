//! Log-log interpolation tables for positive power-law-like functions.

use rayon::prelude::*;

use crate::error::{LrdError, Result};

/// Values of a single-signed function on a log-uniform grid, interpolated by
/// cubic Hermite in `(ln t, ln |f|)` and extrapolated as a power law with the
/// end slopes.
#[derive(Debug, Clone)]
pub struct LogTable {
    ln_lo: f64,
    step: f64,
    logs: Vec<f64>,
    slopes: Vec<f64>,
    sign: f64,
}

impl LogTable {
    /// Tabulate `f` with `per_decade` nodes per decade over `[lo, hi]`.
    ///
    /// If `slope` is given it must return `t f'(t) / f(t)`; otherwise slopes
    /// come from five-point differences of the log values.
    pub fn build<F>(lo: f64, hi: f64, per_decade: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let ln_lo = lo.ln();
        let n = ((hi / lo).log10() * per_decade as f64).ceil() as usize + 1;
        let step = (hi.ln() - ln_lo) / (n - 1) as f64;
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| f((ln_lo + i as f64 * step).exp()))
            .collect::<Result<_>>()?;
        Self::from_values(ln_lo, step, &values)
    }

    /// Two tables on the same grid from a function returning both values.
    pub fn build_pair<F>(lo: f64, hi: f64, per_decade: usize, f: F) -> Result<(Self, Self)>
    where
        F: Fn(f64) -> Result<(f64, f64)> + Sync,
    {
        let ln_lo = lo.ln();
        let n = ((hi / lo).log10() * per_decade as f64).ceil() as usize + 1;
        let step = (hi.ln() - ln_lo) / (n - 1) as f64;
        let pairs: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| f((ln_lo + i as f64 * step).exp()))
            .collect::<Result<_>>()?;
        let first: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let second: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        Ok((
            Self::from_values(ln_lo, step, &first)?,
            Self::from_values(ln_lo, step, &second)?,
        ))
    }

    pub fn from_values(ln_lo: f64, step: f64, values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 5 {
            return Err(LrdError::InvalidArgument(
                "table needs at least 5 nodes".into(),
            ));
        }
        let sign = values[0].signum();
        let bad: Vec<f64> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.is_finite() && v.signum() == sign && **v != 0.0))
            .map(|(i, _)| (ln_lo + i as f64 * step).exp())
            .collect();
        if !bad.is_empty() {
            return Err(LrdError::InversionUnstable { nodes: bad });
        }
        let logs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
        let mut slopes = vec![0.0; n];
        for i in 0..n {
            slopes[i] = if i >= 2 && i + 2 < n {
                (logs[i - 2] - 8.0 * logs[i - 1] + 8.0 * logs[i + 1] - logs[i + 2]) / (12.0 * step)
            } else if i < 2 {
                (-25.0 * logs[i] + 48.0 * logs[i + 1] - 36.0 * logs[i + 2] + 16.0 * logs[i + 3]
                    - 3.0 * logs[i + 4])
                    / (12.0 * step)
            } else {
                (25.0 * logs[i] - 48.0 * logs[i - 1] + 36.0 * logs[i - 2] - 16.0 * logs[i - 3]
                    + 3.0 * logs[i - 4])
                    / (12.0 * step)
            };
        }
        Ok(LogTable {
            ln_lo,
            step,
            logs,
            slopes,
            sign,
        })
    }

    pub fn lo(&self) -> f64 {
        self.ln_lo.exp()
    }

    pub fn hi(&self) -> f64 {
        (self.ln_lo + (self.logs.len() - 1) as f64 * self.step).exp()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.logs.iter().enumerate().map(|(i, l)| {
            (
                (self.ln_lo + i as f64 * self.step).exp(),
                self.sign * l.exp(),
            )
        })
    }

    /// Local log-log slope at `t`.
    pub fn slope(&self, t: f64) -> f64 {
        let x = (t.ln() - self.ln_lo) / self.step;
        let last = self.logs.len() - 1;
        if x <= 0.0 {
            return self.slopes[0];
        }
        if x >= last as f64 {
            return self.slopes[last];
        }
        let i = (x.floor() as usize).min(last - 1);
        let u = x - i as f64;
        let (y0, y1) = (self.logs[i], self.logs[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let d = (6.0 * u * u - 6.0 * u) * y0
            + (3.0 * u * u - 4.0 * u + 1.0) * m0
            + (-6.0 * u * u + 6.0 * u) * y1
            + (3.0 * u * u - 2.0 * u) * m1;
        d / self.step
    }

    pub fn eval(&self, t: f64) -> f64 {
        let lt = t.ln();
        let x = (lt - self.ln_lo) / self.step;
        let last = self.logs.len() - 1;
        let ly = if x <= 0.0 {
            self.logs[0] + self.slopes[0] * (lt - self.ln_lo)
        } else if x >= last as f64 {
            self.logs[last] + self.slopes[last] * (x - last as f64) * self.step
        } else {
            let i = (x.floor() as usize).min(last - 1);
            let u = x - i as f64;
            let u2 = u * u;
            let u3 = u2 * u;
            (2.0 * u3 - 3.0 * u2 + 1.0) * self.logs[i]
                + (u3 - 2.0 * u2 + u) * self.slopes[i] * self.step
                + (-2.0 * u3 + 3.0 * u2) * self.logs[i + 1]
                + (u3 - u2) * self.slopes[i + 1] * self.step
        };
        self.sign * ly.exp()
    }
}
