//! Complex root finding for dispersion residuals: Muller iteration, winding
//! number counts, continuation in the density ratio and sweeps in `k`.

use crate::asymptotics::miles_c_sharp;
use crate::dispersion::{ck, residual_miles, FluidParams};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::profiles::ShearProfile;
use crate::rayleigh::{interface_impedance, RayleighOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_TOL: f64 = 1e-11;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Unstable,
    NeutralOrStable,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootOptions {
    /// Dimensionless residual tolerance; the residual is compared to `tol * scale`.
    pub tol: f64,
    pub max_iter: usize,
    /// Residual scale, normally `g`.
    pub scale: f64,
    /// Relative step below which iteration stops once the residual is small.
    pub step_tol: f64,
    /// `Im c` above `unstable_tol * max(|c|, 1)` is classified unstable.
    pub unstable_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, scale: 1.0, step_tol: 1e-12, unstable_tol: 1e-9 }
    }
}

impl RootOptions {
    pub fn with_scale(scale: f64) -> Self {
        Self { scale, ..Self::default() }
    }

    /// Scale for a water-wave residual: `g`, or the capillary term when `g = 0`.
    pub fn for_params(params: &FluidParams, k: f64) -> Self {
        let s = if params.g > 0.0 { params.g } else { params.sigma * k * k / params.rho_minus };
        Self::with_scale(if s > 0.0 { s } else { 1.0 })
    }

    pub fn classify(&self, c: Complex64) -> Classification {
        if !c.re.is_finite() || !c.im.is_finite() {
            Classification::Degenerate
        } else if c.im > self.unstable_tol * c.norm().max(1.0) {
            Classification::Unstable
        } else {
            Classification::NeutralOrStable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub c: Complex64,
    pub k: f64,
    /// `k Im c`
    pub growth_rate: f64,
    /// `|residual(c)| / scale`
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub classification: Classification,
}

impl EigenResult {
    fn new(c: Complex64, k: f64, residual_norm: f64, iterations: usize, opts: &RootOptions) -> Self {
        Self {
            c,
            k,
            growth_rate: k * c.im,
            residual_norm,
            iterations,
            converged: true,
            classification: opts.classify(c),
        }
    }
}

/// Muller iteration from `c_init`. `k` is only recorded for the growth rate.
///
/// Converged when `|f| <= tol * scale` and either the last step is below
/// `step_tol * |c|` or the previous iterate already met the residual test.
pub fn find_root<F>(mut residual: F, c_init: Complex64, k: f64, opts: &RootOptions) -> Result<EigenResult>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let target = opts.tol * opts.scale;
    let d = if c_init.norm() > 0.0 { 1e-3 * c_init.norm() } else { 1e-3 };
    let mut x = [c_init + d, c_init - d, c_init];
    let mut f = [residual(x[0])?, residual(x[1])?, residual(x[2])?];
    if f[2].norm() == 0.0 {
        return Ok(EigenResult::new(c_init, k, 0.0, 0, opts));
    }
    let mut prev_small = f[2].norm() <= target;
    let mut best = f[2].norm();
    for it in 1..=opts.max_iter {
        let h1 = x[1] - x[0];
        let h2 = x[2] - x[1];
        let d1 = (f[1] - f[0]) / h1;
        let d2 = (f[2] - f[1]) / h2;
        let a = (d2 - d1) / (h1 + h2);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * f[2] * a).sqrt();
        let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
        let dx = if den.norm() > 0.0 && den.is_finite() {
            -2.0 * f[2] / den
        } else {
            // flat interpolant: nudge and retry
            Complex64::new(0.0, 1.0) * (h2.norm().max(1e-8) * 0.5)
        };
        let xn = x[2] + dx;
        let fnew = residual(xn)?;
        let r = fnew.norm();
        best = best.min(r);
        x = [x[1], x[2], xn];
        f = [f[1], f[2], fnew];
        let small = r <= target;
        let tiny_step = dx.norm() <= opts.step_tol * xn.norm().max(f64::MIN_POSITIVE);
        if small && (tiny_step || prev_small || r == 0.0) {
            return Ok(EigenResult::new(xn, k, r / opts.scale, it, opts));
        }
        prev_small = small;
        if !xn.re.is_finite() || !xn.im.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: best / opts.scale })
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::InvalidParams("rectangle must have positive width and height".into()));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    pub fn centered(center: Complex64, half_width: f64, half_height: f64) -> Result<Self> {
        Self::new(
            center.re - half_width,
            center.re + half_width,
            center.im - half_height,
            center.im + half_height,
        )
    }

    pub fn contains(&self, c: Complex64) -> bool {
        c.re > self.re_min && c.re < self.re_max && c.im > self.im_min && c.im < self.im_max
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    pub n_boundary: usize,
    /// Maximum bisection depth per boundary segment.
    pub max_depth: usize,
    /// A sample with `|f|` below `zero_tol * max|f|` counts as a boundary zero.
    pub zero_tol: f64,
    pub exec: Execution,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self { n_boundary: 64, max_depth: 60, zero_tol: 1e-12, exec: Execution::Parallel }
    }
}

/// Number of zeros (with multiplicity) inside `rect`, by the argument principle.
pub fn count_roots<F>(residual: F, rect: &Rect, opts: &CountOptions) -> Result<i64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync + Send,
{
    let n = opts.n_boundary.max(4);
    let corners = rect.corners();
    let mut pts = Vec::with_capacity(4 * n);
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        for i in 0..n {
            pts.push(a + (b - a) * (i as f64 / n as f64));
        }
    }
    let vals: Vec<Complex64> =
        exec::map(&pts, opts.exec, |&z| residual(z)).into_iter().collect::<Result<_>>()?;
    let fmax = vals.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let floor = opts.zero_tol * fmax;
    let check = |z: Complex64, v: Complex64| -> Result<()> {
        if v.norm() <= floor || !v.re.is_finite() || !v.im.is_finite() {
            Err(Error::BoundaryZero { re: z.re, im: z.im })
        } else {
            Ok(())
        }
    };
    for (z, v) in pts.iter().zip(&vals) {
        check(*z, *v)?;
    }
    let mut total = 0.0;
    for i in 0..pts.len() {
        let j = (i + 1) % pts.len();
        total += segment_phase(&residual, pts[i], vals[i], pts[j], vals[j], 0, opts, &check)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

#[allow(clippy::too_many_arguments)]
fn segment_phase<F, C>(
    residual: &F,
    za: Complex64,
    fa: Complex64,
    zb: Complex64,
    fb: Complex64,
    depth: usize,
    opts: &CountOptions,
    check: &C,
) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
    C: Fn(Complex64, Complex64) -> Result<()>,
{
    let dphi = (fb / fa).arg();
    if dphi.abs() <= PI / 2.0 {
        return Ok(dphi);
    }
    if depth >= opts.max_depth {
        return Err(Error::PhaseJumpUnresolved);
    }
    let zm = 0.5 * (za + zb);
    let fm = residual(zm)?;
    check(zm, fm)?;
    Ok(segment_phase(residual, za, fa, zm, fm, depth + 1, opts, check)?
        + segment_phase(residual, zm, fm, zb, fb, depth + 1, opts, check)?)
}

/// Track a root as `epsilon` runs through `eps_list`.
///
/// `family(eps)` builds the residual at that density ratio. `predictor`, when
/// given, supplies an approximate root as a function of `epsilon` whose
/// increments are added to the previous root; otherwise the last two roots
/// are extrapolated linearly.
pub fn continue_in_epsilon<G, R>(
    family: G,
    eps_list: &[f64],
    c_seed: Complex64,
    k: f64,
    predictor: Option<&dyn Fn(f64) -> Complex64>,
    opts: &RootOptions,
) -> Result<Vec<EigenResult>>
where
    G: Fn(f64) -> R,
    R: FnMut(Complex64) -> Result<Complex64>,
{
    if eps_list.is_empty() {
        return Ok(Vec::new());
    }
    if eps_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("epsilon list must be strictly ascending".into()));
    }
    let lost = |eps: f64, reason: String| Error::BranchLost { epsilon: eps, reason };
    let mut out: Vec<EigenResult> = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let guess = if i == 0 {
            c_seed
        } else {
            let prev = out[i - 1].c;
            match predictor {
                Some(p) => prev + (p(eps) - p(eps_list[i - 1])),
                None if i >= 2 => {
                    let slope = (prev - out[i - 2].c) / (eps_list[i - 1] - eps_list[i - 2]);
                    prev + slope * (eps - eps_list[i - 1])
                }
                None => prev,
            }
        };
        let r = find_root(family(eps), guess, k, opts).map_err(|e| lost(eps, e.to_string()))?;
        if r.classification == Classification::Degenerate {
            return Err(lost(eps, "degenerate root".into()));
        }
        out.push(r);
    }
    Ok(out)
}

/// One `k` of a sweep. Failed entries carry the error text and `converged = false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEntry {
    pub k: f64,
    pub c: Complex64,
    pub growth_rate: f64,
    pub residual: f64,
    pub converged: bool,
    pub classification: Classification,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub entries: Vec<GrowthEntry>,
    pub profile: ShearProfile,
    pub params: FluidParams,
    pub branch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Which `c_k` branch to seed from, `+1` or `-1`.
    pub branch: f64,
    pub root: RootOptions,
    pub rayleigh: RayleighOptions,
    pub exec: Execution,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            branch: 1.0,
            root: RootOptions::default(),
            rayleigh: RayleighOptions::default(),
            exec: Execution::Parallel,
        }
    }
}

/// Seed near `c_k` for the quiescent-water residual: the small-epsilon
/// prediction when critical layers allow it, else `c_k` itself.
pub fn miles_seed(profile: &ShearProfile, params: &FluidParams, k: f64, branch: f64, opts: &RayleighOptions) -> Complex64 {
    match miles_c_sharp(profile, params, k, branch, opts) {
        Ok(a) => a.predicted_c(params.epsilon()),
        Err(_) => Complex64::new(ck(params, k, branch), 0.0),
    }
}

/// Solve the quiescent-water dispersion relation at one `k`.
pub fn solve_miles(
    profile: &ShearProfile,
    params: &FluidParams,
    k: f64,
    seed: Complex64,
    root: &RootOptions,
    ray: &RayleighOptions,
) -> Result<EigenResult> {
    let f = |c: Complex64| -> Result<Complex64> {
        let z = interface_impedance(profile, k, c, ray)?;
        Ok(residual_miles(c, z, params, k, profile))
    };
    let root = RootOptions { scale: RootOptions::for_params(params, k).scale, ..*root };
    let mut r = find_root(f, seed, k, &root)?;
    // report the member of the conjugate pair with Im c >= 0
    if r.c.im < 0.0 {
        r.c = r.c.conj();
        r.growth_rate = k * r.c.im;
        r.classification = root.classify(r.c);
    }
    Ok(r)
}

/// Growth curve over `ks`, each entry seeded independently.
pub fn scan_k(profile: &ShearProfile, params: &FluidParams, ks: &[f64], opts: &ScanOptions) -> Result<GrowthCurve> {
    if ks.is_empty() || ks.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidParams("k list must be nonempty and positive".into()));
    }
    params.validate()?;
    let mut sorted = ks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let entries = exec::map(&sorted, opts.exec, |&k| {
        let seed = miles_seed(profile, params, k, opts.branch, &opts.rayleigh);
        match solve_miles(profile, params, k, seed, &opts.root, &opts.rayleigh) {
            Ok(r) => GrowthEntry {
                k,
                c: r.c,
                growth_rate: r.growth_rate,
                residual: r.residual_norm,
                converged: true,
                classification: r.classification,
                error: None,
            },
            Err(e) => GrowthEntry {
                k,
                c: Complex64::new(f64::NAN, f64::NAN),
                growth_rate: f64::NAN,
                residual: f64::NAN,
                converged: false,
                classification: Classification::Degenerate,
                error: Some(e.to_string()),
            },
        }
    });
    Ok(GrowthCurve { entries, profile: profile.clone(), params: *params, branch: opts.branch })
}

/// `n` wavenumbers from `k_min` to `k_max`, uniform or log-uniform.
pub fn k_grid(k_min: f64, k_max: f64, n: usize, log: bool) -> Result<Vec<f64>> {
    if !(k_min > 0.0 && k_max >= k_min && n >= 1) {
        return Err(Error::InvalidParams("k range needs 0 < k_min <= k_max and n >= 1".into()));
    }
    if n == 1 {
        return Ok(vec![k_min]);
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                (k_min.ln() + t * (k_max.ln() - k_min.ln())).exp()
            } else {
                k_min + t * (k_max - k_min)
            }
        })
        .collect())
}
