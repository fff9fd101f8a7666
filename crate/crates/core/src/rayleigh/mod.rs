//! Rayleigh equation `-y'' + (U''/(U - c) + k^2) y = 0` on the air column.
//!
//! Solutions start from `y(h_plus) = 0, y'(h_plus) = 1` and are integrated
//! down to the interface. For real `c` with critical layers the limiting
//! solution (`Im c -> 0`) is built from local Frobenius series at each layer.

mod frobenius;
pub(crate) mod walker;

use crate::error::{Error, Result};
use crate::ode::OdeOptions;
use crate::profiles::{CriticalLayerSet, ProfileKind, ShearProfile};
use frobenius::{patch_radius, LocalSeries};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use walker::{RayleighSystem, Sample, Walker, WronskianSystem};

pub const DEFAULT_RTOL: f64 = 1e-10;

/// Below `switch_threshold * speed_scale` in `|Im c|`, a profile with a
/// critical layer at `Re c` is handled by the limiting solver.
pub const DEFAULT_SWITCH_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighOptions {
    pub rtol: f64,
    pub switch_threshold: f64,
    /// Number of Frobenius terms kept at each critical layer.
    pub series_terms: usize,
    /// Accepted size of the truncated series tail at the patch edge.
    pub series_tol: f64,
    /// Upper bound of the patch radius as a fraction of `h_plus`.
    pub patch_fraction: f64,
    pub record_trace: bool,
}

impl Default for RayleighOptions {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_RTOL,
            switch_threshold: DEFAULT_SWITCH_THRESHOLD,
            series_terms: 48,
            series_tol: 1e-15,
            patch_fraction: 0.05,
            record_trace: false,
        }
    }
}

impl RayleighOptions {
    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions { rtol: self.rtol, atol: self.rtol * 1e-6, ..OdeOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    DirectOde,
    Limiting,
}

/// `(u1, u2, u3, W) = (|y|^2, Re y'conj(y), |y'|^2, Im y'conj(y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianState {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub w: f64,
}

impl WronskianState {
    pub fn from_solution(y: Complex64, yp: Complex64) -> Self {
        let z = yp * y.conj();
        Self { u1: y.norm_sqr(), u2: z.re, u3: yp.norm_sqr(), w: z.im }
    }

    /// `u2^2 + W^2 - u1 u3`, identically zero for states built from a solution.
    pub fn conservation_defect(&self) -> f64 {
        self.u2 * self.u2 + self.w * self.w - self.u1 * self.u3
    }

    pub fn norm_inf(&self) -> f64 {
        self.u1.abs().max(self.u2.abs()).max(self.u3.abs()).max(self.w.abs())
    }

    fn from_array(s: [f64; 4]) -> Self {
        Self { u1: s[0], u2: s[1], u3: s[2], w: s[3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianSample {
    pub x2: f64,
    pub state: WronskianState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x2: f64,
    pub y: Complex64,
    pub yp: Complex64,
}

impl TracePoint {
    pub fn wronskian(&self) -> WronskianState {
        WronskianState::from_solution(self.y, self.yp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighSolution {
    pub c: Complex64,
    pub k: f64,
    /// `y(0)` and `y'(0)`; multiply by `exp(log_scale)` for the unscaled values.
    pub y0: Complex64,
    pub yp0: Complex64,
    pub log_scale: f64,
    pub impedance: Complex64,
    pub method: Method,
    /// Integration path from the top down, in the same scale as `y0`.
    pub trace: Option<Vec<TracePoint>>,
}

/// Data of the limiting solution at one critical layer, normalized by `y(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerJump {
    pub position: f64,
    pub u_prime: f64,
    pub u_double_prime: f64,
    pub y_at_layer: Complex64,
    /// `y'(s+) - y'(s-)`.
    pub delta_yprime: Complex64,
    pub u1: f64,
    pub w_above: f64,
    pub w_below: f64,
    pub patch_radius: f64,
}

impl LayerJump {
    /// `sign_ci * pi * U'' * u1 / |U'|`
    pub fn expected_w_jump(&self, sign_ci: f64) -> f64 {
        sign_ci * std::f64::consts::PI * self.u_double_prime * self.u1 / self.u_prime.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSolution {
    pub c_r: f64,
    pub sign_ci: f64,
    pub k: f64,
    pub layers: CriticalLayerSet,
    pub impedance: Complex64,
    pub jumps: Vec<LayerJump>,
    pub u1_at_layers: Vec<f64>,
    /// Path normalized by `y(0) = 1`; absent inside the series patches.
    pub trace: Option<Vec<TracePoint>>,
}

enum Start {
    /// Explicit solution `y = exp(-|k| x2)` on the whole column.
    Decaying,
    /// Integrate from `x` with `(y, y')`; `kink` marks a kink at the start.
    At { x: f64, y: Complex64, yp: Complex64, kink: bool },
}

fn start(profile: &ShearProfile, k: f64, lambda: Complex64) -> Start {
    let h = profile.h_plus();
    if h.is_finite() {
        return Start::At { x: h, y: Complex64::new(0.0, 0.0), yp: lambda, kink: false };
    }
    match profile.kind() {
        ProfileKind::PiecewiseLinear { breakpoints, .. } if !breakpoints.is_empty() => {
            let b = *breakpoints.last().unwrap();
            Start::At { x: b, y: lambda, yp: -k.abs() * lambda, kink: true }
        }
        _ => Start::Decaying,
    }
}

fn pack(y: Complex64, yp: Complex64) -> [f64; 4] {
    [y.re, y.im, yp.re, yp.im]
}

fn unpack(s: &[f64; 4]) -> (Complex64, Complex64) {
    (Complex64::new(s[0], s[1]), Complex64::new(s[2], s[3]))
}

fn check_k(k: f64) -> Result<()> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidParams(format!("wavenumber must be finite and nonzero, got {k}")));
    }
    Ok(())
}

/// Reject speeds too close to a critical layer for direct integration.
fn check_direct(profile: &ShearProfile, c: Complex64, opts: &RayleighOptions) -> Result<()> {
    if !(c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::InvalidParams(format!("wave speed must be finite, got {c}")));
    }
    let scale = profile.speed_scale();
    if c.im.abs() >= opts.switch_threshold * scale
        || profile.is_curvature_free()
        || matches!(profile.kind(), ProfileKind::PiecewiseLinear { .. })
    {
        return Ok(());
    }
    match profile.find_critical_points(c.re) {
        Ok(set) if set.is_empty() => {
            let d = profile.distance_to_range(c.re).hypot(c.im);
            if d < 1e-12 * scale {
                Err(Error::NearSingularCoefficient { min_distance: d })
            } else {
                Ok(())
            }
        }
        Ok(_) => Err(Error::NearSingularCoefficient { min_distance: c.im.abs() }),
        Err(Error::EndpointCritical { .. }) if c.im != 0.0 => {
            Err(Error::NearSingularCoefficient { min_distance: c.im.abs() })
        }
        Err(e) => Err(e),
    }
}

fn degenerate_check(y0: Complex64, log_scale: f64, max_log_mag: f64) -> Result<()> {
    let ratio = if y0.norm() == 0.0 {
        0.0
    } else {
        (y0.norm().ln() + log_scale - max_log_mag).exp()
    };
    if ratio < 1e-12 {
        Err(Error::DegenerateAtInterface { ratio })
    } else {
        Ok(())
    }
}

fn to_trace(samples: Vec<Sample<4>>, norm: Complex64) -> Vec<TracePoint> {
    samples
        .into_iter()
        .map(|s| {
            let (y, yp) = unpack(&s.state);
            TracePoint { x2: s.x, y: y / norm, yp: yp / norm }
        })
        .collect()
}

/// Integrate the Rayleigh equation directly for complex `c`.
pub fn integrate_rayleigh(
    profile: &ShearProfile,
    k: f64,
    c: Complex64,
    opts: &RayleighOptions,
) -> Result<RayleighSolution> {
    integrate_rayleigh_scaled(profile, k, c, Complex64::new(1.0, 0.0), opts)
}

/// As [`integrate_rayleigh`] with the top data multiplied by `lambda`.
pub fn integrate_rayleigh_scaled(
    profile: &ShearProfile,
    k: f64,
    c: Complex64,
    lambda: Complex64,
    opts: &RayleighOptions,
) -> Result<RayleighSolution> {
    check_k(k)?;
    check_direct(profile, c, opts)?;
    if lambda.norm() == 0.0 {
        return Err(Error::InvalidParams("initial data must be nonzero".into()));
    }
    let kk = k.abs();
    let (x0, y, yp, kink) = match start(profile, k, lambda) {
        Start::Decaying => {
            let y0 = lambda;
            let yp0 = -kk * lambda;
            let trace = opts.record_trace.then(|| vec![TracePoint { x2: 0.0, y: y0, yp: yp0 }]);
            return Ok(RayleighSolution {
                c,
                k,
                y0,
                yp0,
                log_scale: 0.0,
                impedance: Complex64::new(-kk, 0.0),
                method: Method::DirectOde,
                trace,
            });
        }
        Start::At { x, y, yp, kink } => (x, y, yp, kink),
    };
    let sys = RayleighSystem { profile, k2: k * k, c };
    let mut w = Walker::new(&sys, profile, c, k, x0, pack(y, yp), opts.ode(), opts.record_trace);
    if kink {
        w.apply_kink_at(x0)?;
    }
    w.advance_to(0.0)?;
    let (y0, yp0) = unpack(&w.state);
    degenerate_check(y0, w.log_scale, w.max_log_mag)?;
    let trace = opts
        .record_trace
        .then(|| to_trace(w.samples_in_final_scale(), Complex64::new(1.0, 0.0)));
    Ok(RayleighSolution {
        c,
        k,
        y0,
        yp0,
        log_scale: w.log_scale,
        impedance: yp0 / y0,
        method: Method::DirectOde,
        trace,
    })
}

fn wronskian_walk(
    profile: &ShearProfile,
    k: f64,
    c: Complex64,
    points: Option<&[f64]>,
    opts: &RayleighOptions,
) -> Result<Vec<WronskianSample>> {
    check_k(k)?;
    check_direct(profile, c, opts)?;
    let kk = k.abs();
    let sys = WronskianSystem { profile, k2: k * k, c };
    let (x0, init, kink) = match start(profile, k, Complex64::new(1.0, 0.0)) {
        Start::At { x, y, yp, kink } => {
            let s = WronskianState::from_solution(y, yp);
            (x, [s.u1, s.u2, s.u3, s.w], kink)
        }
        Start::Decaying => {
            let state = WronskianState { u1: 1.0, u2: -kk, u3: kk * kk, w: 0.0 };
            let at = |x: f64| {
                let f = (-2.0 * kk * x).exp();
                WronskianSample {
                    x2: x,
                    state: WronskianState {
                        u1: state.u1 * f,
                        u2: state.u2 * f,
                        u3: state.u3 * f,
                        w: 0.0,
                    },
                }
            };
            return Ok(match points {
                Some(p) => p.iter().map(|&x| at(x)).collect(),
                None => vec![at(0.0)],
            });
        }
    };
    let record_steps = points.is_none();
    let mut w = Walker::new(&sys, profile, c, k, x0, init, opts.ode(), record_steps);
    if kink {
        w.apply_kink_at(x0)?;
        if record_steps {
            w.record();
        }
    }
    match points {
        None => w.advance_to(0.0)?,
        Some(p) => {
            let mut sorted: Vec<f64> = p.to_vec();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for x in sorted {
                if !(x >= 0.0 && x <= x0) {
                    return Err(Error::OutOfDomain { x2: x, h_plus: profile.h_plus() });
                }
                w.advance_to(x)?;
                w.record();
            }
        }
    }
    Ok(w
        .samples_in_final_scale()
        .into_iter()
        .map(|s| WronskianSample { x2: s.x, state: WronskianState::from_array(s.state) })
        .collect())
}

/// Integrate the real system for `(u1, u2, u3, W)` from `(0, 0, 1, 0)` at the
/// top down to the interface. Samples are in integration order (descending x2).
pub fn integrate_wronskian(
    profile: &ShearProfile,
    k: f64,
    c: Complex64,
    opts: &RayleighOptions,
) -> Result<Vec<WronskianSample>> {
    wronskian_walk(profile, k, c, None, opts)
}

/// The same integration, stopping exactly at each requested `x2`.
pub fn integrate_wronskian_at(
    profile: &ShearProfile,
    k: f64,
    c: Complex64,
    points: &[f64],
    opts: &RayleighOptions,
) -> Result<Vec<WronskianSample>> {
    wronskian_walk(profile, k, c, Some(points), opts)
}

/// Limiting solution for real `c_r` approached from `sign(Im c) = sign_ci`.
pub fn limiting_solution(
    profile: &ShearProfile,
    k: f64,
    c_r: f64,
    sign_ci: f64,
    opts: &RayleighOptions,
) -> Result<LimitSolution> {
    check_k(k)?;
    if sign_ci != 1.0 && sign_ci != -1.0 {
        return Err(Error::InvalidParams(format!("sign_ci must be +1 or -1, got {sign_ci}")));
    }
    if matches!(profile.kind(), ProfileKind::PiecewiseLinear { .. }) {
        return Err(Error::OrderUnavailable { order: 2, kind: "piecewise-linear" });
    }
    let layers = profile.find_critical_points(c_r)?;
    let c = Complex64::new(c_r, 0.0);
    let kk = k.abs();
    let h = profile.h_plus();

    let (x0, y, yp) = match start(profile, k, Complex64::new(1.0, 0.0)) {
        Start::At { x, y, yp, .. } => (x, y, yp),
        Start::Decaying if layers.is_empty() => {
            return Ok(LimitSolution {
                c_r,
                sign_ci,
                k,
                layers,
                impedance: Complex64::new(-kk, 0.0),
                jumps: Vec::new(),
                u1_at_layers: Vec::new(),
                trace: None,
            });
        }
        // a straight infinite profile: start high above the last layer
        Start::Decaying => {
            let top = layers.layers.last().unwrap().position + 40.0 / kk;
            let y = Complex64::new(1.0, 0.0);
            (top, y, -kk * y)
        }
    };

    let sys = RayleighSystem { profile, k2: k * k, c };
    let mut w = Walker::new(&sys, profile, c, k, x0, pack(y, yp), opts.ode(), opts.record_trace);

    let positions: Vec<f64> = layers.layers.iter().map(|l| l.position).collect();
    let mut raw = Vec::with_capacity(layers.len());
    for (j, layer) in layers.layers.iter().enumerate().rev() {
        let s = layer.position;
        let mut gap = s.min(x0 - s);
        if j > 0 {
            gap = gap.min(s - positions[j - 1]);
        }
        if j + 1 < positions.len() {
            gap = gap.min(positions[j + 1] - s);
        }
        let mut delta_max = 0.25 * gap;
        if h.is_finite() {
            delta_max = delta_max.min(opts.patch_fraction * h);
        }
        let a = profile.taylor(s, opts.series_terms + 3)?;
        let series = LocalSeries::new(&a, k * k, opts.series_terms);
        let delta = patch_radius(&series, delta_max, opts.series_tol)?;
        if delta < 1e-9 * x0 {
            return Err(Error::SeriesRadiusTooSmall { radius: delta });
        }

        w.advance_to(s + delta)?;
        let (ya, ypa) = unpack(&w.state);
        let [f1, d1, f2, d2] = series.eval(delta);
        let wr = f1 * d2 - d1 * f2;
        let coef_a = (ya * d2 - ypa * f2) / wr;
        let coef_b = (ypa * f1 - ya * d1) / wr;
        let jump = Complex64::new(
            0.0,
            -sign_ci * std::f64::consts::PI * layer.u_double_prime / layer.u_prime.abs(),
        );
        let [g1, e1, g2, e2] = series.eval(-delta);
        let below = coef_a + jump * coef_b;
        let yb = below * g1 + coef_b * g2;
        let ypb = below * e1 + coef_b * e2;
        let w_above = (ypa * ya.conj()).im;
        let w_below = (ypb * yb.conj()).im;
        raw.push((*layer, delta, coef_b, w_above, w_below, w.log_scale));
        w.jump_to(s - delta, pack(yb, ypb));
    }
    w.advance_to(0.0)?;
    let (y0, yp0) = unpack(&w.state);
    degenerate_check(y0, w.log_scale, w.max_log_mag)?;

    let final_scale = w.log_scale;
    let y0_abs2 = y0.norm_sqr();
    let jumps: Vec<LayerJump> = raw
        .into_iter()
        .rev()
        .map(|(layer, delta, ys, wa, wb, ls)| {
            let f = (ls - final_scale).exp();
            let y_at = ys * f / y0;
            let f2 = f * f / y0_abs2;
            LayerJump {
                position: layer.position,
                u_prime: layer.u_prime,
                u_double_prime: layer.u_double_prime,
                y_at_layer: y_at,
                delta_yprime: Complex64::new(
                    0.0,
                    sign_ci * std::f64::consts::PI * layer.u_double_prime / layer.u_prime.abs(),
                ) * y_at,
                u1: y_at.norm_sqr(),
                w_above: wa * f2,
                w_below: wb * f2,
                patch_radius: delta,
            }
        })
        .collect();
    let u1_at_layers = jumps.iter().map(|j| j.u1).collect();
    let trace = opts.record_trace.then(|| to_trace(w.samples_in_final_scale(), y0));
    Ok(LimitSolution { c_r, sign_ci, k, layers, impedance: yp0 / y0, jumps, u1_at_layers, trace })
}

/// Interface impedance `y'(0)/y(0)` for any `c`, switching to the limiting
/// solution when `Im c` is too small for direct integration across a layer.
pub fn interface_impedance(
    profile: &ShearProfile,
    k: f64,
    c: Complex64,
    opts: &RayleighOptions,
) -> Result<Complex64> {
    let direct = match check_direct(profile, c, opts) {
        Ok(()) => true,
        Err(Error::NearSingularCoefficient { .. }) if c.im.abs() < opts.switch_threshold * profile.speed_scale() => {
            false
        }
        Err(e) => return Err(e),
    };
    if direct {
        let quiet = RayleighOptions { record_trace: false, ..*opts };
        return integrate_rayleigh(profile, k, c, &quiet).map(|s| s.impedance);
    }
    let sign = if c.im < 0.0 { -1.0 } else { 1.0 };
    let quiet = RayleighOptions { record_trace: false, ..*opts };
    limiting_solution(profile, k, c.re, sign, &quiet).map(|s| s.impedance)
}

/// Distances between direct and limiting impedances along a `c_I` sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub c_i: Vec<f64>,
    pub errors: Vec<f64>,
    pub limit: Complex64,
    /// Least-squares slope of `log(error)` against `log(c_I)`; needs two points.
    pub slope: Option<f64>,
    pub strictly_decreasing: bool,
}

pub fn impedance_limit_check(
    profile: &ShearProfile,
    k: f64,
    c_r: f64,
    sign_ci: f64,
    c_i: &[f64],
    opts: &RayleighOptions,
) -> Result<LimitCheck> {
    if c_i.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParams("c_I values must be positive".into()));
    }
    let quiet = RayleighOptions { record_trace: false, ..*opts };
    let limit = limiting_solution(profile, k, c_r, sign_ci, &quiet)?.impedance;
    let mut errors = Vec::with_capacity(c_i.len());
    for &ci in c_i {
        let c = Complex64::new(c_r, sign_ci * ci);
        let direct = RayleighOptions { switch_threshold: 0.0, ..quiet };
        let z = integrate_rayleigh(profile, k, c, &direct)?.impedance;
        errors.push((z - limit).norm());
    }
    let slope = log_log_slope(c_i, &errors);
    let strictly_decreasing = c_i
        .windows(2)
        .zip(errors.windows(2))
        .all(|(c, e)| if c[1] < c[0] { e[1] < e[0] } else { e[1] > e[0] });
    Ok(LimitCheck { c_i: c_i.to_vec(), errors, limit, slope, strictly_decreasing })
}

fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Write a trace as CSV: `x2,re_y,im_y,re_yp,im_yp,u1,u2,u3,W`.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "x2,re_y,im_y,re_yp,im_yp,u1,u2,u3,W")?;
    for p in trace {
        let s = p.wronskian();
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            p.x2, p.y.re, p.y.im, p.yp.re, p.yp.im, s.u1, s.u2, s.u3, s.w
        )?;
    }
    Ok(())
}
