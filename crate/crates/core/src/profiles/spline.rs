//! Not-a-knot cubic spline used by tabulated wind profiles.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// C² piecewise cubic interpolant with not-a-knot end conditions.
///
/// Stored as node values plus second derivatives at the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn not_a_knot(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::InvalidProfile(format!(
                "table has {} abscissae but {} values",
                n,
                y.len()
            )));
        }
        if n < 4 {
            return Err(Error::InvalidProfile(format!(
                "tabulated profile needs at least 4 samples, got {n}"
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        if let Some(w) = x.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(format!(
                "samples must be strictly increasing in x2 (found {} then {})",
                w[0], w[1]
            )));
        }

        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let rhs = |i: usize| 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);

        // Tridiagonal system for M_1..M_{n-2} after eliminating M_0 and M_{n-1}
        // through the third-derivative continuity at x_1 and x_{n-2}.
        let size = n - 2;
        let mut sub = vec![0.0; size];
        let mut diag = vec![0.0; size];
        let mut sup = vec![0.0; size];
        let mut d = vec![0.0; size];
        for row in 0..size {
            let i = row + 1;
            sub[row] = h[i - 1];
            diag[row] = 2.0 * (h[i - 1] + h[i]);
            sup[row] = h[i];
            d[row] = rhs(i);
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 + h0 * h0 / h1;
        sup[0] -= h0 * h0 / h1;
        let (ha, hb) = (h[n - 3], h[n - 2]);
        diag[size - 1] += hb + hb * hb / ha;
        sub[size - 1] -= hb * hb / ha;

        let inner = solve_tridiagonal(&sub, &diag, &sup, &d)?;
        let mut m = Vec::with_capacity(n);
        m.push(inner[0] + h0 * (inner[0] - inner[1]) / h1);
        m.extend_from_slice(&inner);
        let last = inner[size - 1];
        let before = inner[size - 2];
        m.push(last + hb * (last - before) / ha);
        Ok(Self { x, y, m })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Local cubic of the interval containing `t`, as Taylor coefficients about `t`.
    pub fn local_taylor(&self, t: f64) -> [f64; 4] {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let value = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let slope = (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi
            + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        let curvature = a * mi + b * mj;
        let third = (mj - mi) / h;
        [value, slope, curvature / 2.0, third / 6.0]
    }

    pub fn eval(&self, t: f64, order: u8) -> f64 {
        let c = self.local_taylor(t);
        match order {
            0 => c[0],
            1 => c[1],
            _ => 2.0 * c[2],
        }
    }
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::InvalidProfile("singular spline system".into()));
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::InvalidProfile("singular spline system".into()));
        }
        c[i] = sup[i] / pivot;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    Ok(out)
}
