//! Small density-ratio expansion `c = c_k + eps (shift + i c_sharp) + o(eps)`
//! about a free water wave, and the predicates built on it.

use crate::dispersion::{ck, residual_miles, FluidParams};
use crate::eigensolver::{count_roots, k_grid, CountOptions, Rect};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::profiles::ShearProfile;
use crate::rayleigh::{interface_impedance, limiting_solution, RayleighOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `(U(0) - c_k)^2 / (2 c_k |k| tanh(|k| h_minus))`.
pub fn f_i0(profile: &ShearProfile, params: &FluidParams, k: f64, branch: f64) -> f64 {
    let c = ck(params, k, branch);
    let rel = profile.u(0.0) - c;
    rel * rel / (2.0 * c * k.abs() * params.tanh_minus(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerContribution {
    pub position: f64,
    pub u_prime: f64,
    pub u_double_prime: f64,
    /// `|y|^2` at the layer with `|y(0)| = 1`.
    pub u1: f64,
    /// `-pi f_I(0) U'' u1 / |U'|`
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilesAsymptotics {
    pub k: f64,
    pub branch: f64,
    pub c_k: f64,
    pub f_i0: f64,
    pub c_sharp: f64,
    /// O(eps) coefficient of `Re c - c_k`.
    pub real_shift: f64,
    pub layers: Vec<LayerContribution>,
    /// Limiting impedance at `c_k` from `Im c > 0`.
    pub impedance: Complex64,
    /// Sign hypotheses of the sufficient instability theorem that fail.
    pub warnings: Vec<String>,
}

impl MilesAsymptotics {
    /// Positive `c_sharp` is the authoritative instability predicate.
    pub fn unstable(&self) -> bool {
        self.c_sharp > 0.0
    }

    pub fn predicted_c(&self, eps: f64) -> Complex64 {
        Complex64::new(self.c_k + eps * self.real_shift, eps * self.c_sharp)
    }
}

/// Growth constant at the `branch` root `c_k`, from the limiting Rayleigh solution.
pub fn miles_c_sharp(
    profile: &ShearProfile,
    params: &FluidParams,
    k: f64,
    branch: f64,
    opts: &RayleighOptions,
) -> Result<MilesAsymptotics> {
    params.validate()?;
    let c_k = ck(params, k, branch);
    if profile.distance_to_range(c_k) > 0.0 {
        return Err(Error::NoCriticalLayer { c_k });
    }
    let quiet = RayleighOptions { record_trace: false, ..*opts };
    let lim = limiting_solution(profile, k, c_k, 1.0, &quiet)?;
    if lim.layers.is_empty() {
        return Err(Error::NoCriticalLayer { c_k });
    }
    let fi = f_i0(profile, params, k, branch);
    let layers: Vec<LayerContribution> = lim
        .jumps
        .iter()
        .map(|j| LayerContribution {
            position: j.position,
            u_prime: j.u_prime,
            u_double_prime: j.u_double_prime,
            u1: j.u1,
            term: -PI * fi * j.u_double_prime * j.u1 / j.u_prime.abs(),
        })
        .collect();
    let c_sharp = layers.iter().map(|l| l.term).sum();

    let mut warnings = Vec::new();
    let m = layers.len();
    for (j, l) in layers.iter().enumerate() {
        if c_k * l.u_double_prime > 0.0 {
            warnings.push(format!("c_k U''(s_{}) > 0 at s = {}", j + 1, l.position));
        }
    }
    let strict = layers.iter().skip(m.saturating_sub(2)).any(|l| c_k * l.u_double_prime < 0.0);
    if !strict {
        warnings.push("c_k U'' vanishes at the two uppermost layers".into());
    }

    let kk = k.abs();
    let tm = params.tanh_minus(k);
    let tp = params.tanh_plus(k);
    let u0 = profile.u(0.0);
    let rel = u0 - c_k;
    let de = -params.g + rel * rel * lim.impedance.re
        - profile.du(0.0) * rel
        - c_k * kk * u0 * (1.0 - tm * tm) / tp;
    let real_shift = de / (2.0 * c_k * kk * tm);

    Ok(MilesAsymptotics {
        k,
        branch,
        c_k,
        f_i0: fi,
        c_sharp,
        real_shift,
        layers,
        impedance: lim.impedance,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BandStatus {
    Unstable,
    Stable,
    NoCriticalLayer,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSample {
    pub k: f64,
    pub c_k: f64,
    pub c_sharp: Option<f64>,
    pub status: BandStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub samples: Vec<BandSample>,
    /// Maximal `k` intervals with `c_sharp > 0`, ends refined by bisection.
    pub intervals: Vec<(f64, f64)>,
}

fn band_sample(profile: &ShearProfile, params: &FluidParams, k: f64, branch: f64, opts: &RayleighOptions) -> BandSample {
    let c_k = ck(params, k, branch);
    match miles_c_sharp(profile, params, k, branch, opts) {
        Ok(a) => BandSample {
            k,
            c_k,
            c_sharp: Some(a.c_sharp),
            status: if a.unstable() { BandStatus::Unstable } else { BandStatus::Stable },
        },
        Err(Error::NoCriticalLayer { .. }) => {
            BandSample { k, c_k, c_sharp: None, status: BandStatus::NoCriticalLayer }
        }
        Err(e) => BandSample { k, c_k, c_sharp: None, status: BandStatus::Failed(e.to_string()) },
    }
}

/// Sample `c_sharp` over `k` and collect the intervals where it is positive.
#[allow(clippy::too_many_arguments)]
pub fn unstable_band(
    profile: &ShearProfile,
    params: &FluidParams,
    k_min: f64,
    k_max: f64,
    n: usize,
    log_spacing: bool,
    branch: f64,
    opts: &RayleighOptions,
    exec: Execution,
) -> Result<BandReport> {
    let ks = k_grid(k_min, k_max, n, log_spacing)?;
    let samples = exec::map(&ks, exec, |&k| band_sample(profile, params, k, branch, opts));
    let inside = |k: f64| band_sample(profile, params, k, branch, opts).status == BandStatus::Unstable;
    let refine = |mut out_k: f64, mut in_k: f64| {
        for _ in 0..20 {
            let mid = if log_spacing { (out_k * in_k).sqrt() } else { 0.5 * (out_k + in_k) };
            if inside(mid) {
                in_k = mid;
            } else {
                out_k = mid;
            }
        }
        in_k
    };
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        if samples[i].status != BandStatus::Unstable {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < samples.len() && samples[i + 1].status == BandStatus::Unstable {
            i += 1;
        }
        let lo = if start == 0 { ks[0] } else { refine(ks[start - 1], ks[start]) };
        let hi = if i + 1 == samples.len() { ks[i] } else { refine(ks[i + 1], ks[i]) };
        intervals.push((lo, hi));
        i += 1;
    }
    Ok(BandReport { samples, intervals })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub c_k: f64,
    pub epsilon: f64,
    /// `min |c_k - U|` over the column.
    pub margin: f64,
    pub radius: f64,
    pub im_floor: f64,
    pub upper_count: i64,
    pub lower_count: i64,
}

impl NecessityReport {
    pub fn off_axis_roots(&self) -> i64 {
        self.upper_count + self.lower_count
    }
}

/// Count roots of the quiescent-water relation off the real axis near a
/// `c_k` that lies outside the range of the wind profile.
#[allow(clippy::too_many_arguments)]
pub fn necessity_certificate(
    profile: &ShearProfile,
    params: &FluidParams,
    k: f64,
    epsilon: f64,
    search_radius: Option<f64>,
    branch: f64,
    opts: &RayleighOptions,
    count: &CountOptions,
) -> Result<NecessityReport> {
    let c_k = ck(params, k, branch);
    let margin = profile.distance_to_range(c_k);
    if margin <= 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "c_k = {c_k} lies in the range of the air profile"
        )));
    }
    let limit = 0.25 * margin;
    let radius = search_radius.unwrap_or(limit);
    if !(radius > 0.0) || radius > limit * (1.0 + 1e-12) {
        return Err(Error::HypothesisViolated(format!(
            "search radius {radius} must lie in (0, {limit}]"
        )));
    }
    let p = params.with_epsilon(epsilon)?;
    let quiet = RayleighOptions { record_trace: false, ..*opts };
    let f = |c: Complex64| -> Result<Complex64> {
        let z = interface_impedance(profile, k, c, &quiet)?;
        Ok(residual_miles(c, z, &p, k, profile))
    };
    let im_floor = 1e-10;
    let upper = Rect::new(c_k - radius, c_k + radius, im_floor, radius)?;
    let lower = Rect::new(c_k - radius, c_k + radius, -radius, -im_floor)?;
    Ok(NecessityReport {
        c_k,
        epsilon,
        margin,
        radius,
        im_floor,
        upper_count: count_roots(f, &upper, count)?,
        lower_count: count_roots(f, &lower, count)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn deep(eps: f64) -> FluidParams {
        FluidParams::with_ratio(eps, 9.8, 0.0, 5.0, f64::INFINITY).unwrap()
    }

    #[test]
    fn f_i0_examples() {
        let p = deep(0.0);
        let still = ShearProfile::constant(0.0, 5.0).unwrap();
        let c = 9.8f64.sqrt();
        assert_relative_eq!(f_i0(&still, &p, 1.0, 1.0), c / 2.0, epsilon = 1e-14);
        assert_relative_eq!(f_i0(&still, &p, 1.0, -1.0), -c / 2.0, epsilon = 1e-14);
        let moving = ShearProfile::constant(c, 5.0).unwrap();
        assert_eq!(f_i0(&moving, &p, 1.0, 1.0), 0.0);
    }

    #[test]
    fn tanh_profile_is_unstable() {
        let prof = ShearProfile::tanh(10.0, 1.0, 5.0).unwrap();
        let a = miles_c_sharp(&prof, &deep(1e-3), 1.0, 1.0, &RayleighOptions::default()).unwrap();
        assert_eq!(a.layers.len(), 1);
        assert!(a.c_sharp > 0.0);
        assert!(a.warnings.is_empty());
        // the layer sum is f_I(0) Im y'(0)
        assert_relative_eq!(a.c_sharp, a.f_i0 * a.impedance.im, max_relative = 1e-8);
    }

    #[test]
    fn straight_profiles() {
        let p = deep(1e-3);
        let lin = ShearProfile::linear_shear(0.0, 2.0, 5.0).unwrap();
        let a = miles_c_sharp(&lin, &p, 1.0, 1.0, &RayleighOptions::default()).unwrap();
        assert_eq!(a.c_sharp, 0.0);
        let flat = ShearProfile::constant(1.0, 5.0).unwrap();
        let e = miles_c_sharp(&flat, &p, 1.0, 1.0, &RayleighOptions::default());
        assert!(matches!(e, Err(Error::NoCriticalLayer { .. })));
    }

    #[test]
    fn band_is_closed_at_both_ends_with_tension() {
        let p = FluidParams::new(1.22, 1000.0, 9.81, 0.074, 0.05, f64::INFINITY).unwrap();
        let prof = ShearProfile::tanh(0.4, 0.01, 0.05).unwrap();
        let r = unstable_band(&prof, &p, 1.0, 2e4, 24, true, 1.0, &RayleighOptions::default(), Execution::Parallel)
            .unwrap();
        assert_eq!(r.samples.first().unwrap().status, BandStatus::NoCriticalLayer);
        assert_eq!(r.samples.last().unwrap().status, BandStatus::NoCriticalLayer);
        assert_eq!(r.intervals.len(), 1);
        let slow = ShearProfile::tanh(0.1, 0.01, 0.05).unwrap();
        let r = unstable_band(&slow, &p, 1.0, 2e4, 12, true, 1.0, &RayleighOptions::default(), Execution::Sequential)
            .unwrap();
        assert!(r.intervals.is_empty());
    }

    #[test]
    fn certificate_preconditions() {
        let p = deep(1e-3);
        let prof = ShearProfile::tanh(10.0, 1.0, 5.0).unwrap();
        let o = RayleighOptions::default();
        let c = CountOptions::default();
        let e = necessity_certificate(&prof, &p, 1.0, 1e-3, None, 1.0, &o, &c);
        assert!(matches!(e, Err(Error::HypothesisViolated(_))));
        let slow = ShearProfile::constant(0.5, 5.0).unwrap();
        let e = necessity_certificate(&slow, &p, 1.0, 1e-3, Some(10.0), 1.0, &o, &c);
        assert!(matches!(e, Err(Error::HypothesisViolated(_))));
        let r = necessity_certificate(&slow, &p, 1.0, 1e-3, None, 1.0, &o, &c).unwrap();
        assert_eq!(r.off_axis_roots(), 0);
    }
}
