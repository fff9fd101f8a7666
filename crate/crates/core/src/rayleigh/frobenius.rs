//! Local solutions of the real Rayleigh equation at a critical layer.
//!
//! With `t = x2 - s` and `U(s) = c`, the equation reads `y'' = (r(t)/t) y`
//! for an analytic `r`. The regular solution is `phi1 = t + ...`; the second
//! one is `phi2 = C phi1 log|t| + psi` with `C = U''(s)/U'(s)`, `psi(0) = 1`.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct LocalSeries {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_coeff: f64,
}

/// Values `(phi1, phi1', phi2, phi2')` at `t`.
pub(crate) type Basis = [f64; 4];

impl LocalSeries {
    /// `a` holds Taylor coefficients of `U(s + t)`; `a[0]` is ignored and
    /// `a.len()` must be at least `terms + 3`.
    pub fn new(a: &[f64], k2: f64, terms: usize) -> Self {
        let m_max = terms;
        let p: Vec<f64> = (0..=m_max).map(|n| a.get(n + 1).copied().unwrap_or(0.0)).collect();
        let q: Vec<f64> = (0..=m_max)
            .map(|n| {
                let curv = ((n + 2) * (n + 1)) as f64 * a.get(n + 2).copied().unwrap_or(0.0);
                let shift = if n == 0 { 0.0 } else { k2 * a[n] };
                curv + shift
            })
            .collect();
        let mut r = vec![0.0; m_max + 1];
        for n in 0..=m_max {
            let conv: f64 = (1..=n).map(|j| p[j] * r[n - j]).sum();
            r[n] = (q[n] - conv) / p[0];
        }
        let log_coeff = r[0];

        let mut alpha = vec![0.0; m_max + 1];
        let mut beta = vec![0.0; m_max + 1];
        alpha[1] = 1.0;
        beta[0] = 1.0;
        for m in 1..m_max {
            let mm = (m * (m + 1)) as f64;
            let sa: f64 = (1..=m).map(|j| r[m - j] * alpha[j]).sum();
            alpha[m + 1] = sa / mm;
            let sb: f64 = (0..=m).map(|j| r[m - j] * beta[j]).sum();
            beta[m + 1] = (sb - log_coeff * (2 * m + 1) as f64 * alpha[m + 1]) / mm;
        }
        Self { alpha, beta, log_coeff }
    }

    #[cfg(test)]
    pub fn log_coeff(&self) -> f64 {
        self.log_coeff
    }

    /// Size of the trailing terms (and their derivatives) at radius `delta`.
    pub fn tail(&self, delta: f64) -> f64 {
        let n = self.alpha.len();
        (n.saturating_sub(4)..n)
            .map(|i| {
                let w = self.alpha[i].abs() + self.beta[i].abs();
                let d = delta.powi(i as i32 - 1);
                w * d * (delta + i as f64)
            })
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, t: f64) -> Basis {
        let mut f1 = 0.0;
        let mut d1 = 0.0;
        let mut g = 0.0;
        let mut dg = 0.0;
        for n in (0..self.alpha.len()).rev() {
            f1 = f1 * t + self.alpha[n];
            g = g * t + self.beta[n];
            if n >= 1 {
                d1 = d1 * t + n as f64 * self.alpha[n];
                dg = dg * t + n as f64 * self.beta[n];
            }
        }
        // f1 / t without cancellation
        let f1_over_t = {
            let mut acc = 0.0;
            for n in (1..self.alpha.len()).rev() {
                acc = acc * t + self.alpha[n];
            }
            acc
        };
        let l = t.abs().ln();
        let c = self.log_coeff;
        let phi2 = c * f1 * l + g;
        let dphi2 = c * (d1 * l + f1_over_t) + dg;
        [f1, d1, phi2, dphi2]
    }
}

/// Largest radius `delta <= delta_max` with series tail below `tol`.
pub(crate) fn patch_radius(series: &LocalSeries, delta_max: f64, tol: f64) -> Result<f64> {
    if !(delta_max > 0.0) {
        return Err(Error::SeriesRadiusTooSmall { radius: delta_max });
    }
    let mut delta = delta_max;
    for _ in 0..40 {
        if series.tail(delta) <= tol {
            return Ok(delta);
        }
        delta *= 0.5;
    }
    Err(Error::SeriesRadiusTooSmall { radius: delta })
}
