//! Background shear profiles `U(x2)` on the air (or water) column.
//!
//! A profile is immutable once built. The air column is `[0, h_plus]` with the
//! interface at `x2 = 0`; a water profile uses the same type with `x2` read as
//! depth below the interface.

mod spline;

pub use spline::CubicSpline;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Default number of uniform grid points used to bracket critical points.
pub const DEFAULT_SCAN_POINTS: usize = 4096;

/// Declared regularity of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Smoothness {
    /// Lipschitz (`C^{0,1}`): `U''` only exists as point masses.
    Lipschitz,
    C2,
    C4,
}

/// Closed-form profile families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnalyticFamily {
    /// `u_max * tanh(x2 / depth)`
    Tanh { u_max: f64, depth: f64 },
    /// `u_max * (1 - exp(-x2 / depth))`
    Exponential { u_max: f64, depth: f64 },
    /// `scale * ln(1 + x2 / roughness)`, a regularized logarithmic wind.
    Logarithmic { scale: f64, roughness: f64 },
    /// `sum_i coeffs[i] * x2^i`
    Polynomial { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    Constant {
        u0: f64,
    },
    LinearShear {
        u0: f64,
        mu: f64,
    },
    /// Continuous piecewise-linear profile. `slopes[i]` holds on the segment
    /// that ends at `breakpoints[i]`; the last slope continues to `h_plus`.
    PiecewiseLinear {
        u0: f64,
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
    },
    Analytic(AnalyticFamily),
    Tabulated(CubicSpline),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearProfile {
    kind: ProfileKind,
    h_plus: f64,
}

/// A single critical layer `U(s) = c_R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLayer {
    pub position: f64,
    pub u_prime: f64,
    pub u_double_prime: f64,
}

/// All interior critical layers for one target speed, sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLayerSet {
    pub target: f64,
    pub layers: Vec<CriticalLayer>,
}

impl CriticalLayerSet {
    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }
}

fn positive_depth(h_plus: f64) -> Result<()> {
    if h_plus > 0.0 && !h_plus.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("column height must be positive, got {h_plus}")))
    }
}

fn finite_depth(h_plus: f64, what: &str) -> Result<()> {
    positive_depth(h_plus)?;
    if h_plus.is_finite() {
        Ok(())
    } else {
        Err(Error::IncompatibleDepths(format!("{what} profiles need a finite column height")))
    }
}

impl ShearProfile {
    pub fn constant(u0: f64, h_plus: f64) -> Result<Self> {
        positive_depth(h_plus)?;
        Ok(Self { kind: ProfileKind::Constant { u0 }, h_plus })
    }

    pub fn linear_shear(u0: f64, mu: f64, h_plus: f64) -> Result<Self> {
        positive_depth(h_plus)?;
        Ok(Self { kind: ProfileKind::LinearShear { u0, mu }, h_plus })
    }

    /// Piecewise-linear profile. An infinite column is accepted because the
    /// last segment is linear, so the Rayleigh solution there is explicit.
    pub fn piecewise_linear(
        u0: f64,
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        h_plus: f64,
    ) -> Result<Self> {
        positive_depth(h_plus)?;
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidProfile(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b < h_plus) {
                return Err(Error::InvalidProfile(format!(
                    "breakpoints must increase strictly inside (0, h_plus); got {b}"
                )));
            }
            prev = b;
        }
        Ok(Self { kind: ProfileKind::PiecewiseLinear { u0, breakpoints, slopes }, h_plus })
    }

    /// The kinked profile `mu * min(x2, x2_star)`.
    pub fn kinked_linear(mu: f64, x2_star: f64, h_plus: f64) -> Result<Self> {
        Self::piecewise_linear(0.0, vec![x2_star], vec![mu, 0.0], h_plus)
    }

    pub fn analytic(family: AnalyticFamily, h_plus: f64) -> Result<Self> {
        finite_depth(h_plus, "analytic")?;
        match &family {
            AnalyticFamily::Tanh { depth, .. } | AnalyticFamily::Exponential { depth, .. } => {
                if !(*depth > 0.0) {
                    return Err(Error::InvalidProfile("depth scale must be positive".into()));
                }
            }
            AnalyticFamily::Logarithmic { roughness, .. } => {
                if !(*roughness > 0.0) {
                    return Err(Error::InvalidProfile("roughness length must be positive".into()));
                }
            }
            AnalyticFamily::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidProfile("empty polynomial".into()));
                }
            }
        }
        Ok(Self { kind: ProfileKind::Analytic(family), h_plus })
    }

    pub fn tanh(u_max: f64, depth: f64, h_plus: f64) -> Result<Self> {
        Self::analytic(AnalyticFamily::Tanh { u_max, depth }, h_plus)
    }

    /// Tabulated profile; the first sample must sit at the interface `x2 = 0`
    /// and the last one fixes `h_plus`.
    pub fn tabulated(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.first().copied() != Some(0.0) {
            return Err(Error::InvalidProfile("first table sample must be at x2 = 0".into()));
        }
        let spline = CubicSpline::not_a_knot(x, u)?;
        let h_plus = spline.x_max();
        Ok(Self { kind: ProfileKind::Tabulated(spline), h_plus })
    }

    /// Parse a profile table: one `x2 value` pair per line, `#` comments.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut u = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| {
                    Error::InvalidProfile(format!("line {}: expected `x2 value`", lineno + 1))
                })
            };
            x.push(parse(fields.next())?);
            u.push(parse(fields.next())?);
            if fields.next().is_some() {
                return Err(Error::InvalidProfile(format!(
                    "line {}: expected exactly two columns",
                    lineno + 1
                )));
            }
        }
        Self::tabulated(x, u)
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidProfile(format!("{}: {e}", path.display())))?;
        Self::parse_table(&text)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn h_plus(&self) -> f64 {
        self.h_plus
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            ProfileKind::Constant { .. } => "constant",
            ProfileKind::LinearShear { .. } => "linear",
            ProfileKind::PiecewiseLinear { .. } => "piecewise-linear",
            ProfileKind::Analytic(AnalyticFamily::Tanh { .. }) => "tanh",
            ProfileKind::Analytic(AnalyticFamily::Exponential { .. }) => "exponential",
            ProfileKind::Analytic(AnalyticFamily::Logarithmic { .. }) => "logarithmic",
            ProfileKind::Analytic(AnalyticFamily::Polynomial { .. }) => "polynomial",
            ProfileKind::Tabulated(_) => "tabulated",
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match &self.kind {
            ProfileKind::PiecewiseLinear { .. } => Smoothness::Lipschitz,
            ProfileKind::Tabulated(_) => Smoothness::C2,
            _ => Smoothness::C4,
        }
    }

    /// True when `U''` vanishes identically, so the Rayleigh equation is `y'' = k^2 y`.
    pub fn is_curvature_free(&self) -> bool {
        match &self.kind {
            ProfileKind::Constant { .. } | ProfileKind::LinearShear { .. } => true,
            ProfileKind::PiecewiseLinear { slopes, .. } => slopes.windows(2).all(|w| w[0] == w[1]),
            ProfileKind::Analytic(AnalyticFamily::Polynomial { coeffs }) => {
                coeffs.iter().skip(2).all(|&c| c == 0.0)
            }
            _ => false,
        }
    }

    /// Slope discontinuities `(position, U'(x+) - U'(x-))` of a piecewise-linear profile.
    pub fn kinks(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            ProfileKind::PiecewiseLinear { breakpoints, slopes, .. } => breakpoints
                .iter()
                .enumerate()
                .map(|(i, &b)| (b, slopes[i + 1] - slopes[i]))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// `U`, `U'` or `U''` at `x2`.
    pub fn eval(&self, x2: f64, order: u8) -> Result<f64> {
        if !(x2 >= 0.0 && x2 <= self.h_plus) {
            return Err(Error::OutOfDomain { x2, h_plus: self.h_plus });
        }
        match (order, &self.kind) {
            (0, _) => Ok(self.u(x2)),
            (1, _) => Ok(self.du(x2)),
            (2, ProfileKind::PiecewiseLinear { .. }) => {
                Err(Error::OrderUnavailable { order, kind: "piecewise-linear" })
            }
            (2, _) => Ok(self.d2u(x2)),
            _ => Err(Error::OrderUnavailable { order, kind: self.kind_name() }),
        }
    }

    /// Unchecked `U(x2)`.
    pub fn u(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { u0 } => *u0,
            ProfileKind::LinearShear { u0, mu } => u0 + mu * x,
            ProfileKind::PiecewiseLinear { u0, breakpoints, slopes } => {
                let mut value = *u0;
                let mut left = 0.0;
                for (i, &b) in breakpoints.iter().enumerate() {
                    if x <= b {
                        return value + slopes[i] * (x - left);
                    }
                    value += slopes[i] * (b - left);
                    left = b;
                }
                value + slopes[slopes.len() - 1] * (x - left)
            }
            ProfileKind::Analytic(f) => match f {
                AnalyticFamily::Tanh { u_max, depth } => u_max * (x / depth).tanh(),
                AnalyticFamily::Exponential { u_max, depth } => -u_max * (-x / depth).exp_m1(),
                AnalyticFamily::Logarithmic { scale, roughness } => scale * (x / roughness).ln_1p(),
                AnalyticFamily::Polynomial { coeffs } => {
                    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
                }
            },
            ProfileKind::Tabulated(s) => s.eval(x, 0),
        }
    }

    /// Unchecked `U'(x2)`; one-sided from the right at piecewise-linear kinks.
    pub fn du(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::LinearShear { mu, .. } => *mu,
            ProfileKind::PiecewiseLinear { breakpoints, slopes, .. } => {
                let i = breakpoints.iter().take_while(|&&b| b <= x).count();
                slopes[i]
            }
            ProfileKind::Analytic(f) => match f {
                AnalyticFamily::Tanh { u_max, depth } => {
                    let t = (x / depth).tanh();
                    u_max * (1.0 - t * t) / depth
                }
                AnalyticFamily::Exponential { u_max, depth } => u_max * (-x / depth).exp() / depth,
                AnalyticFamily::Logarithmic { scale, roughness } => scale / (roughness + x),
                AnalyticFamily::Polynomial { coeffs } => coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (i, &c)| acc * x + i as f64 * c),
            },
            ProfileKind::Tabulated(s) => s.eval(x, 1),
        }
    }

    /// Unchecked `U''(x2)`. Piecewise-linear profiles report the regular part (zero).
    pub fn d2u(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. }
            | ProfileKind::LinearShear { .. }
            | ProfileKind::PiecewiseLinear { .. } => 0.0,
            ProfileKind::Analytic(f) => match f {
                AnalyticFamily::Tanh { u_max, depth } => {
                    let t = (x / depth).tanh();
                    -2.0 * u_max * t * (1.0 - t * t) / (depth * depth)
                }
                AnalyticFamily::Exponential { u_max, depth } => {
                    -u_max * (-x / depth).exp() / (depth * depth)
                }
                AnalyticFamily::Logarithmic { scale, roughness } => {
                    -scale / ((roughness + x) * (roughness + x))
                }
                AnalyticFamily::Polynomial { coeffs } => coeffs
                    .iter()
                    .enumerate()
                    .skip(2)
                    .rev()
                    .fold(0.0, |acc, (i, &c)| acc * x + (i * (i - 1)) as f64 * c),
            },
            ProfileKind::Tabulated(s) => s.eval(x, 2),
        }
    }

    /// Taylor coefficients `a_0..=a_n` of `U(s + t)` in powers of `t`.
    pub fn taylor(&self, s: f64, n: usize) -> Result<Vec<f64>> {
        let mut a = vec![0.0; n + 1];
        match &self.kind {
            ProfileKind::Constant { u0 } => a[0] = *u0,
            ProfileKind::LinearShear { u0, mu } => {
                a[0] = u0 + mu * s;
                if n >= 1 {
                    a[1] = *mu;
                }
            }
            ProfileKind::PiecewiseLinear { .. } => {
                return Err(Error::OrderUnavailable { order: 2, kind: "piecewise-linear" })
            }
            ProfileKind::Tabulated(spline) => {
                for (dst, src) in a.iter_mut().zip(spline.local_taylor(s)) {
                    *dst = src;
                }
            }
            ProfileKind::Analytic(f) => match f {
                AnalyticFamily::Tanh { u_max, depth } => {
                    // T' = 1 - T^2 in the scaled variable
                    let mut t = vec![0.0; n + 1];
                    t[0] = (s / depth).tanh();
                    for m in 0..n {
                        let conv: f64 = (0..=m).map(|j| t[j] * t[m - j]).sum();
                        let delta = if m == 0 { 1.0 } else { 0.0 };
                        t[m + 1] = (delta - conv) / (m + 1) as f64;
                    }
                    let mut scale = 1.0;
                    for (dst, tm) in a.iter_mut().zip(t) {
                        *dst = u_max * tm * scale;
                        scale /= depth;
                    }
                }
                AnalyticFamily::Exponential { u_max, depth } => {
                    let e = (-s / depth).exp();
                    let mut term = e;
                    a[0] = u_max * (1.0 - e);
                    for (m, dst) in a.iter_mut().enumerate().skip(1) {
                        term *= -1.0 / (depth * m as f64);
                        *dst = -u_max * term;
                    }
                }
                AnalyticFamily::Logarithmic { scale, roughness } => {
                    let base = roughness + s;
                    a[0] = scale * (s / roughness).ln_1p();
                    let mut p = 1.0;
                    for (m, dst) in a.iter_mut().enumerate().skip(1) {
                        p /= base;
                        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                        *dst = scale * sign * p / m as f64;
                    }
                }
                AnalyticFamily::Polynomial { coeffs } => {
                    // shift x -> s + t via repeated synthetic division
                    let mut c = coeffs.clone();
                    let deg = c.len();
                    for m in 0..deg {
                        for j in (m..deg - 1).rev() {
                            let hi = c[j + 1];
                            c[j] += s * hi;
                        }
                        if m <= n {
                            a[m] = c[m];
                        }
                    }
                }
            },
        }
        Ok(a)
    }

    fn sample_points(&self, n: usize) -> Vec<f64> {
        let top = if self.h_plus.is_finite() {
            self.h_plus
        } else {
            match &self.kind {
                ProfileKind::PiecewiseLinear { breakpoints, .. } => {
                    breakpoints.last().copied().unwrap_or(1.0) * 2.0
                }
                _ => 1.0,
            }
        };
        let n = n.max(2);
        (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
    }

    /// `(min U, max U)` over the column, infinite ends included.
    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut push = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        match &self.kind {
            ProfileKind::Constant { u0 } => push(*u0),
            ProfileKind::LinearShear { u0, .. } => {
                push(*u0);
                push(self.u(self.h_plus));
            }
            ProfileKind::PiecewiseLinear { u0, breakpoints, slopes } => {
                push(*u0);
                breakpoints.iter().for_each(|&b| push(self.u(b)));
                let last = *slopes.last().unwrap();
                if self.h_plus.is_finite() {
                    push(self.u(self.h_plus));
                } else if last > 0.0 {
                    push(f64::INFINITY);
                } else if last < 0.0 {
                    push(f64::NEG_INFINITY);
                }
            }
            _ => {
                for x in self.sample_points(DEFAULT_SCAN_POINTS) {
                    push(self.u(x));
                }
                if let ProfileKind::Tabulated(s) = &self.kind {
                    s.values().iter().for_each(|&v| push(v));
                }
            }
        }
        (lo, hi)
    }

    /// `max |U|` over the column, at least 1. Used to scale speed tolerances.
    pub fn speed_scale(&self) -> f64 {
        let (lo, hi) = self.range();
        let m = lo.abs().max(hi.abs());
        if m.is_finite() {
            m.max(1.0)
        } else {
            1.0
        }
    }

    /// `min_x |c - U(x)|`, zero when `c` lies in the range.
    pub fn distance_to_range(&self, c: f64) -> f64 {
        let (lo, hi) = self.range();
        if c < lo {
            lo - c
        } else if c > hi {
            c - hi
        } else {
            0.0
        }
    }

    fn degeneracy_threshold(&self) -> f64 {
        let (lo, hi) = self.range();
        if self.h_plus.is_finite() && (hi - lo).is_finite() {
            1e-8 * (hi - lo) / self.h_plus
        } else {
            match &self.kind {
                ProfileKind::LinearShear { mu, .. } => 1e-8 * mu.abs(),
                ProfileKind::PiecewiseLinear { slopes, .. } => {
                    1e-8 * slopes.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
                }
                _ => 0.0,
            }
        }
    }

    pub fn find_critical_points(&self, c_r: f64) -> Result<CriticalLayerSet> {
        self.find_critical_points_with(c_r, DEFAULT_SCAN_POINTS)
    }

    /// Interior solutions of `U(s) = c_r`, bracketed on a uniform grid of
    /// `grid` points and polished by bisection plus Newton.
    pub fn find_critical_points_with(&self, c_r: f64, grid: usize) -> Result<CriticalLayerSet> {
        if !c_r.is_finite() {
            return Err(Error::InvalidParams(format!("critical speed must be finite, got {c_r}")));
        }
        let tol = 1e-12 * c_r.abs().max(1.0);
        let top_value = if self.h_plus.is_finite() { Some(self.u(self.h_plus)) } else { None };
        if (self.u(0.0) - c_r).abs() <= tol || top_value.is_some_and(|v| (v - c_r).abs() <= tol) {
            return Err(Error::EndpointCritical { c_r });
        }

        let threshold = self.degeneracy_threshold();
        let mut positions = match &self.kind {
            ProfileKind::Constant { .. } => Vec::new(),
            ProfileKind::LinearShear { u0, mu } => {
                if *mu == 0.0 {
                    Vec::new()
                } else {
                    let s = (c_r - u0) / mu;
                    if s > 0.0 && s < self.h_plus {
                        vec![s]
                    } else {
                        Vec::new()
                    }
                }
            }
            ProfileKind::PiecewiseLinear { breakpoints, slopes, .. } => {
                let mut out = Vec::new();
                let mut left = 0.0;
                for (i, &slope) in slopes.iter().enumerate() {
                    let right = breakpoints.get(i).copied().unwrap_or(self.h_plus);
                    let base = self.u(left);
                    if slope == 0.0 {
                        if base == c_r {
                            return Err(Error::DegenerateShear { s: left, u_prime: 0.0 });
                        }
                    } else {
                        let s = left + (c_r - base) / slope;
                        if s > left && s < right {
                            out.push(s);
                        } else if s == right && i < breakpoints.len() {
                            // kink exactly at the critical level: U' is undefined there
                            return Err(Error::DegenerateShear { s, u_prime: 0.0 });
                        }
                    }
                    left = right;
                }
                out
            }
            _ => self.scan_roots(c_r, grid, tol),
        };
        positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
        positions.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * self.h_plus.max(1.0));

        let layers = positions
            .into_iter()
            .map(|s| {
                let u_prime = self.du(s);
                if u_prime.abs() <= threshold {
                    return Err(Error::DegenerateShear { s, u_prime });
                }
                Ok(CriticalLayer { position: s, u_prime, u_double_prime: self.d2u(s) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CriticalLayerSet { target: c_r, layers })
    }

    fn scan_roots(&self, c_r: f64, grid: usize, tol: f64) -> Vec<f64> {
        let xs = self.sample_points(grid);
        let f: Vec<f64> = xs.iter().map(|&x| self.u(x) - c_r).collect();
        let mut roots = Vec::new();
        for i in 0..xs.len() - 1 {
            if i > 0 && f[i] == 0.0 {
                roots.push(xs[i]);
                continue;
            }
            if f[i] * f[i + 1] < 0.0 {
                roots.push(self.polish_root(c_r, xs[i], xs[i + 1], f[i], tol));
            }
        }
        roots
    }

    fn polish_root(&self, c_r: f64, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.u(m) - c_r;
            if fm == 0.0 {
                return m;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
            if b - a <= 1e-13 * b.abs().max(1e-300) {
                break;
            }
        }
        let mut s = 0.5 * (a + b);
        for _ in 0..3 {
            let fs = self.u(s) - c_r;
            if fs.abs() <= tol * 1e-3 {
                break;
            }
            let step = fs / self.du(s);
            let next = s - step;
            if next.is_finite() && next >= a && next <= b {
                s = next;
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn parabola() -> ShearProfile {
        // 4 x (1 - x/2) = 4x - 2x^2, max 2 at x = 1
        ShearProfile::analytic(AnalyticFamily::Polynomial { coeffs: vec![0.0, 4.0, -2.0] }, 2.0)
            .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ShearProfile::constant(5.0, 1.0).unwrap().eval(0.3, 0).unwrap(), 5.0);
        assert_eq!(ShearProfile::linear_shear(0.0, 2.0, 3.0).unwrap().eval(0.7, 1).unwrap(), 2.0);
        assert_eq!(ShearProfile::tanh(10.0, 1.0, 5.0).unwrap().eval(0.0, 2).unwrap(), 0.0);
    }

    #[test]
    fn eval_errors() {
        let pwl = ShearProfile::kinked_linear(2.0, 1.0, 4.0).unwrap();
        assert!(matches!(pwl.eval(0.5, 2), Err(Error::OrderUnavailable { .. })));
        assert_eq!(pwl.eval(2.0, 0).unwrap(), 2.0);
        let tanh = ShearProfile::tanh(10.0, 1.0, 5.0).unwrap();
        assert!(matches!(tanh.eval(5.5, 0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(tanh.eval(-0.1, 0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let profiles = [
            ShearProfile::tanh(10.0, 1.3, 5.0).unwrap(),
            ShearProfile::analytic(AnalyticFamily::Exponential { u_max: 7.0, depth: 0.8 }, 4.0)
                .unwrap(),
            ShearProfile::analytic(AnalyticFamily::Logarithmic { scale: 2.5, roughness: 0.01 }, 4.0)
                .unwrap(),
            parabola(),
        ];
        let h = 1e-5;
        for p in &profiles {
            for x in [0.3, 0.9, 1.7] {
                let d1 = (p.u(x + h) - p.u(x - h)) / (2.0 * h);
                let d2 = (p.du(x + h) - p.du(x - h)) / (2.0 * h);
                assert_relative_eq!(p.du(x), d1, max_relative = 1e-7);
                assert_relative_eq!(p.d2u(x), d2, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn taylor_coefficients_resum_to_the_profile() {
        let profiles = [
            ShearProfile::tanh(10.0, 1.0, 5.0).unwrap(),
            ShearProfile::analytic(AnalyticFamily::Exponential { u_max: 7.0, depth: 0.8 }, 4.0)
                .unwrap(),
            ShearProfile::analytic(AnalyticFamily::Logarithmic { scale: 2.5, roughness: 0.5 }, 4.0)
                .unwrap(),
            parabola(),
            ShearProfile::linear_shear(1.0, 2.0, 3.0).unwrap(),
        ];
        for p in &profiles {
            let s = 0.7;
            let a = p.taylor(s, 30).unwrap();
            assert_relative_eq!(a[1], p.du(s), max_relative = 1e-13);
            assert_relative_eq!(2.0 * a[2], p.d2u(s), max_relative = 1e-12, epsilon = 1e-14);
            for t in [-0.2, 0.1, 0.25] {
                let sum: f64 = a.iter().rev().fold(0.0, |acc, &c| acc * t + c);
                assert_relative_eq!(sum, p.u(s + t), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tanh_single_layer() {
        let p = ShearProfile::tanh(10.0, 1.0, 5.0).unwrap();
        let set = p.find_critical_points(10.0 * 1.0f64.tanh()).unwrap();
        assert_eq!(set.len(), 1);
        assert_relative_eq!(set.layers[0].position, 1.0, epsilon = 1e-12);
        assert!(set.layers[0].u_double_prime < 0.0);
    }

    #[test]
    fn out_of_range_gives_empty_set() {
        let p = ShearProfile::linear_shear(0.0, 2.0, 3.0).unwrap();
        assert!(p.find_critical_points(7.0).unwrap().is_empty());
    }

    #[test]
    fn parabola_two_layers_match_bisection_oracle() {
        let p = parabola();
        let set = p.find_critical_points(1.5).unwrap();
        assert_eq!(set.len(), 2);
        // independent bisection on each monotone half of 4x - 2x^2 - 1.5
        let g = |x: f64| 4.0 * x - 2.0 * x * x - 1.5;
        let bisect = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if g(a) * g(m) <= 0.0 {
                    b = m
                } else {
                    a = m
                }
            }
            0.5 * (a + b)
        };
        assert!((set.layers[0].position - bisect(0.0, 1.0)).abs() < 1e-12);
        assert!((set.layers[1].position - bisect(1.0, 2.0)).abs() < 1e-12);
        assert!(set.layers[0].u_prime > 0.0 && set.layers[1].u_prime < 0.0);
    }

    #[test]
    fn endpoint_and_degenerate_layers_are_rejected() {
        let p = parabola();
        assert!(matches!(p.find_critical_points(0.0), Err(Error::EndpointCritical { .. })));
        let flat =
            ShearProfile::piecewise_linear(0.0, vec![1.0, 2.0], vec![1.0, 0.0, 1.0], 3.0).unwrap();
        assert!(matches!(flat.find_critical_points(1.0), Err(Error::DegenerateShear { .. })));
    }

    #[test]
    fn piecewise_linear_layers_are_exact() {
        let p = ShearProfile::kinked_linear(2.0, 1.5, f64::INFINITY).unwrap();
        let set = p.find_critical_points(1.0).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.layers[0].position, 0.5);
        assert_eq!(set.layers[0].u_double_prime, 0.0);
        assert!(p.find_critical_points(3.5).unwrap().is_empty());
        assert_eq!(p.range(), (0.0, 3.0));
    }

    #[test]
    fn table_parsing() {
        let text = "# x2 [m]  U [m/s]\n0 0\n0.5 1.0 # inline\n1.0 1.8\n\n1.5 2.3\n2.0 2.6\n";
        let p = ShearProfile::parse_table(text).unwrap();
        assert_eq!(p.h_plus(), 2.0);
        assert_eq!(p.smoothness(), Smoothness::C2);
        assert_relative_eq!(p.u(0.5), 1.0, epsilon = 1e-14);
        assert!(ShearProfile::parse_table("0 0\n1 1\n0.5 2\n2 3\n").is_err());
        assert!(ShearProfile::parse_table("0 0\n1 1\n2 2\n").is_err());
        assert!(ShearProfile::parse_table("0.1 0\n1 1\n2 2\n3 3\n").is_err());
    }

    #[test]
    fn tabulated_second_derivative_is_continuous_at_nodes() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.4).collect();
        let us: Vec<f64> = xs.iter().map(|&x| 8.0 * (x / 1.2).tanh()).collect();
        let p = ShearProfile::tabulated(xs.clone(), us.clone()).unwrap();
        for (x, u) in xs.iter().zip(&us) {
            assert_relative_eq!(p.u(*x), *u, epsilon = 1e-13);
        }
        let h = 1e-7;
        for &x in &xs[1..xs.len() - 1] {
            let left = p.d2u(x - h);
            let right = p.d2u(x + h);
            assert!((left - right).abs() < 1e-5, "jump in U'' at {x}: {left} vs {right}");
        }
    }

    #[test]
    fn layer_residuals_are_tight() {
        let p = ShearProfile::tanh(10.0, 1.0, 5.0).unwrap();
        for c in [0.5, 3.0, 7.7, 9.9] {
            let set = p.find_critical_points(c).unwrap();
            for l in &set.layers {
                assert!((p.u(l.position) - c).abs() <= 1e-12 * c.max(1.0));
            }
        }
    }
}
