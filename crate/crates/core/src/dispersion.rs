//! Dispersion residuals whose zeros in `c` are eigenvalues `-ikc`.
//!
//! Residuals are dimensional (units of `g` times length). Water depth enters
//! through `tanh(|k| h)`, taken as 1 for an infinitely deep layer.

use crate::error::{Error, Result};
use crate::profiles::ShearProfile;
use crate::rayleigh::walker::{ForcedSystem, Walker};
use crate::rayleigh::{integrate_rayleigh, interface_impedance, RayleighOptions};
use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Densities, gravity, surface tension and layer depths. SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub g: f64,
    pub sigma: f64,
    pub h_plus: f64,
    pub h_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Air,
    Water,
    /// `N+/rho+ + N-/rho-`
    Combined,
}

impl FluidParams {
    /// `rho_plus = 0` is accepted: it is the one-fluid limit `epsilon = 0`.
    pub fn new(
        rho_plus: f64,
        rho_minus: f64,
        g: f64,
        sigma: f64,
        h_plus: f64,
        h_minus: f64,
    ) -> Result<Self> {
        let p = Self { rho_plus, rho_minus, g, sigma, h_plus, h_minus };
        p.validate()?;
        Ok(p)
    }

    /// Air over water at room temperature, both layers unbounded.
    pub fn air_water() -> Self {
        Self {
            rho_plus: 1.22,
            rho_minus: 1000.0,
            g: 9.81,
            sigma: 0.074,
            h_plus: f64::INFINITY,
            h_minus: f64::INFINITY,
        }
    }

    /// Unit water density with `rho_plus = epsilon`.
    pub fn with_ratio(epsilon: f64, g: f64, sigma: f64, h_plus: f64, h_minus: f64) -> Result<Self> {
        Self::new(epsilon, 1.0, g, sigma, h_plus, h_minus)
    }

    /// Same water, air density rescaled to the given ratio.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon * self.rho_minus, self.rho_minus, self.g, self.sigma, self.h_plus, self.h_minus)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.rho_minus > 0.0 && self.rho_minus.is_finite()) {
            return bad(format!("water density must be positive, got {}", self.rho_minus));
        }
        if !(self.rho_plus >= 0.0 && self.rho_plus < self.rho_minus) {
            return bad(format!(
                "air density must satisfy 0 <= rho_plus < rho_minus, got {}",
                self.rho_plus
            ));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return bad(format!("gravity must be non-negative, got {}", self.g));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("surface tension must be non-negative, got {}", self.sigma));
        }
        for (name, h) in [("h_plus", self.h_plus), ("h_minus", self.h_minus)] {
            if !(h > 0.0) {
                return bad(format!("{name} must be positive or inf, got {h}"));
            }
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.rho_plus / self.rho_minus
    }

    pub fn tanh_plus(&self, k: f64) -> f64 {
        depth_tanh(k, self.h_plus)
    }

    pub fn tanh_minus(&self, k: f64) -> f64 {
        depth_tanh(k, self.h_minus)
    }
}

fn depth_tanh(k: f64, h: f64) -> f64 {
    if h.is_infinite() {
        1.0
    } else {
        (k.abs() * h).tanh()
    }
}

fn check_k(k: f64) -> Result<()> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidParams(format!("wavenumber must be finite and nonzero, got {k}")));
    }
    Ok(())
}

/// Dirichlet–Neumann symbol `|k| tanh(|k| h)` of one layer, or the combination.
pub fn dn_symbol(params: &FluidParams, k: f64, side: Side) -> f64 {
    let kk = k.abs();
    match side {
        Side::Air => kk * params.tanh_plus(k),
        Side::Water => kk * params.tanh_minus(k),
        Side::Combined => {
            kk * (params.tanh_plus(k) / params.rho_plus + params.tanh_minus(k) / params.rho_minus)
        }
    }
}

/// Phase speed of free surface waves without air, `branch = +1` or `-1`.
pub fn ck(params: &FluidParams, k: f64, branch: f64) -> f64 {
    let kk = k.abs();
    let num = params.g + params.sigma * kk * kk / params.rho_minus;
    branch.signum() * (num / (kk * params.tanh_minus(k))).sqrt()
}

/// Quiescent-water dispersion residual for an air profile with `U(0) = u0`,
/// `U'(0) = du0` and interface impedance `y'(0)/y(0)`.
pub fn residual_miles_with(
    c: Complex64,
    impedance: Complex64,
    params: &FluidParams,
    k: f64,
    u0: f64,
    du0: f64,
) -> Complex64 {
    let kk = k.abs();
    let eps = params.epsilon();
    let tp = params.tanh_plus(k);
    let tm = params.tanh_minus(k);
    let lhs = params.g * (1.0 - eps) + params.sigma * kk * kk / params.rho_minus;
    let rel = u0 - c;
    lhs + eps * rel * rel * impedance
        - c * c * kk * tm
        - eps * du0 * rel
        - eps * c * kk * u0 * (1.0 - tm * tm) / (tp + eps * tm)
}

pub fn residual_miles(
    c: Complex64,
    impedance: Complex64,
    params: &FluidParams,
    k: f64,
    profile: &ShearProfile,
) -> Complex64 {
    residual_miles_with(c, impedance, params, k, profile.u(0.0), profile.du(0.0))
}

/// The reduced residual with the impedance computed for each `c`.
pub fn miles_residual_fn<'a>(
    profile: &'a ShearProfile,
    params: &'a FluidParams,
    k: f64,
    opts: &'a RayleighOptions,
) -> impl Fn(Complex64) -> Result<Complex64> + 'a {
    move |c| {
        let z = interface_impedance(profile, k, c, opts)?;
        Ok(residual_miles(c, z, params, k, profile))
    }
}

fn same_depth(profile: &ShearProfile, h: f64, which: &str) -> Result<()> {
    let hp = profile.h_plus();
    let ok = if h.is_infinite() || hp.is_infinite() {
        h == hp
    } else {
        (h - hp).abs() <= 1e-12 * h.max(hp)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleDepths(format!(
            "{which} profile column {hp} differs from the layer depth {h}"
        )))
    }
}

/// Slope at the interface (in the profile's own variable) of the solution of
/// the forced equation vanishing at the wall with value `y_at_0` at the interface.
fn forced_slope(
    profile: &ShearProfile,
    k: f64,
    c: Complex64,
    sf: f64,
    gamma0: f64,
    y_at_0: Complex64,
    opts: &RayleighOptions,
) -> Result<Complex64> {
    let kk = k.abs();
    let quiet = RayleighOptions { record_trace: false, ..*opts };
    // the homogeneous solution also validates c against the critical layers
    let z = integrate_rayleigh(profile, k, c, &quiet)?.impedance;
    let h = profile.h_plus();
    let (x0, init, kink) = if h.is_finite() {
        (h, [0.0, 0.0, 0.0, 0.0, 1.0, 0.0], false)
    } else {
        match profile.kinks().last() {
            Some(&(b, _)) => (b, [0.0, 0.0, 0.0, 0.0, 1.0, -kk], true),
            None if profile.is_curvature_free() => return Ok(z * y_at_0),
            None => {
                return Err(Error::IncompatibleDepths(format!(
                    "a {} profile needs a finite column to shoot from",
                    profile.kind_name()
                )))
            }
        }
    };
    let sys = ForcedSystem { profile, k2: k * k, c, sf };
    let ode = crate::ode::OdeOptions {
        rtol: opts.rtol,
        atol: opts.rtol * 1e-6,
        ..Default::default()
    };
    let mut w = Walker::new(&sys, profile, c, k, x0, init, ode, false);
    if kink {
        w.apply_kink_at(x0)?;
    }
    w.advance_to(0.0)?;
    let s = gamma0 / w.state[4];
    let yp = Complex64::new(w.state[0], w.state[1]) * s;
    let ypp = Complex64::new(w.state[2], w.state[3]) * s;
    Ok(ypp + z * (y_at_0 - yp))
}

/// Full two-fluid residual with a possible vortex sheet, normalized so that
/// `ik z = 1` and divided by `rho_minus`. `u_minus` is parametrized by depth.
pub fn residual_general(
    c: Complex64,
    params: &FluidParams,
    k: f64,
    u_plus: &ShearProfile,
    u_minus: &ShearProfile,
    opts: &RayleighOptions,
) -> Result<Complex64> {
    check_k(k)?;
    params.validate()?;
    same_depth(u_plus, params.h_plus, "air")?;
    same_depth(u_minus, params.h_minus, "water")?;
    general_unchecked(c, params, k, u_plus, u_minus, opts)
}

fn general_unchecked(
    c: Complex64,
    params: &FluidParams,
    k: f64,
    u_plus: &ShearProfile,
    u_minus: &ShearProfile,
    opts: &RayleighOptions,
) -> Result<Complex64> {
    let kk = k.abs();
    let (rp, rm) = (params.rho_plus, params.rho_minus);
    let tp = params.tanh_plus(k);
    let tm = params.tanh_minus(k);
    let up0 = u_plus.u(0.0);
    let um0 = u_minus.u(0.0);
    let weight = rm * tp + rp * tm;

    let gp0 = rm * (um0 - up0) / (kk * weight);
    let gm0 = rp * (um0 - up0) / (kk * weight);
    let dgp0 = -kk * tp * gp0;
    let dgm0 = kk * tm * gm0;
    let y20 = Complex64::new((rp * up0 * tm + rm * um0 * tp) / weight, 0.0) - c;

    let dy_plus = forced_slope(u_plus, k, c, 1.0, gp0, y20, opts)?;
    let dy_minus = if u_minus.is_curvature_free() {
        kk * tm * y20
    } else {
        -forced_slope(u_minus, k, c, -1.0, gm0, y20, opts)?
    };
    let dup = u_plus.du(0.0);
    let dum = -u_minus.du(0.0);

    let s = -(rp * (up0 - c) * dy_plus - rm * (um0 - c) * dy_minus)
        + (rp * dup - rm * dum) * y20
        - kk * kk * (up0 - um0) * rp * gp0
        + (rp * dgp0 * dup - rm * dgm0 * dum);
    Ok((params.g * (rm - rp) + params.sigma * kk * kk - s) / rm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhThreshold {
    pub u0_min: f64,
    pub k_crit: f64,
    pub wavelength: f64,
}

/// Wind speed squared at which the classic Kelvin–Helmholtz criterion is an
/// equality for wavenumber `k` (unbounded layers).
pub fn kh_speed_squared(params: &FluidParams, k: f64) -> f64 {
    let (rp, rm) = (params.rho_plus, params.rho_minus);
    let kk = k.abs();
    (rp + rm) / (rp * rm) * (params.g * (rm - rp) / kk + params.sigma * kk)
}

/// Minimum over `k` of the Kelvin–Helmholtz onset speed.
pub fn kh_threshold(params: &FluidParams) -> Result<KhThreshold> {
    params.validate()?;
    if params.sigma <= 0.0 {
        return Err(Error::RequiresSurfaceTension);
    }
    if params.rho_plus <= 0.0 {
        return Err(Error::InvalidParams("Kelvin-Helmholtz threshold needs rho_plus > 0".into()));
    }
    let f = |t: f64| kh_speed_squared(params, t.exp());
    let (mut a, mut b) = (1e-3f64.ln(), 1e6f64.ln());
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-12 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    let k_crit = (0.5 * (a + b)).exp();
    Ok(KhThreshold {
        u0_min: kh_speed_squared(params, k_crit).sqrt(),
        k_crit,
        wavelength: 2.0 * std::f64::consts::PI / k_crit,
    })
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = Complex64::new(b * b - 4.0 * a * c, 0.0).sqrt();
    // avoid cancellation for real roots
    let q = if b >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
    let r1 = q / a;
    let r2 = if q.norm() == 0.0 { r1 } else { c / q };
    let mut roots = [r1, r2];
    roots.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    roots
}

/// Roots of `g(1-eps) + sigma k^2/rho- = eps|k|(U0-c)^2 + eps mu (U0-c) + |k| c^2`,
/// the relation for uniform shear over unbounded layers.
pub fn closed_form_shear_roots(u0: f64, mu: f64, params: &FluidParams, k: f64) -> Result<[Complex64; 2]> {
    check_k(k)?;
    let kk = k.abs();
    let eps = params.epsilon();
    let lhs = params.g * (1.0 - eps) + params.sigma * kk * kk / params.rho_minus;
    let a = (1.0 + eps) * kk;
    let b = -2.0 * eps * kk * u0 - eps * mu;
    let c = eps * kk * u0 * u0 + eps * mu * u0 - lhs;
    Ok(quadratic_roots(a, b, c))
}

/// True when both roots are real (to a relative tolerance).
pub fn roots_are_real(roots: &[Complex64], tol: f64) -> bool {
    roots.iter().all(|r| r.im.abs() <= tol * r.norm().max(1.0))
}

/// Cubic dispersion function of the kinked profile `mu * min(x2, x2_star)`
/// over deep water without surface tension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlClosedForm {
    pub mu: f64,
    pub x2_star: f64,
    pub u_star: f64,
    pub k: f64,
    pub g: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PwlClosedForm {
    pub fn new(mu: f64, x2_star: f64, k: f64, g: f64) -> Result<Self> {
        if !(mu > 0.0 && x2_star > 0.0 && k > 0.0 && g > 0.0) {
            return Err(Error::InvalidParams(
                "kinked profile needs mu, x2_star, k, g all positive".into(),
            ));
        }
        let u_star = mu * x2_star;
        let e = (-2.0 * k * x2_star).exp();
        let alpha = u_star - mu / (2.0 * k) * (1.0 + e);
        let beta = u_star - mu / (2.0 * k) * (1.0 - e);
        Ok(Self { mu, x2_star, u_star, k, g, alpha, beta })
    }

    /// Kink height at which `beta = sqrt(g/k)`, the resonant configuration.
    pub fn tuned_x2_star(mu: f64, k: f64, g: f64) -> Result<f64> {
        let target = (g / k).sqrt();
        let beta = |x: f64| Self::new(mu, x, k, g).map(|p| p.beta);
        let mut lo = 1e-12;
        let mut hi = 1.0;
        while beta(hi)? < target {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::InvalidParams("cannot tune the kink height".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if beta(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Interface impedance `-k (c - alpha)/(c - beta)`.
    pub fn impedance(&self, c: Complex64) -> Complex64 {
        -self.k * (c - self.alpha) / (c - self.beta)
    }

    /// `(c - beta)(c^2 - eps mu c/k - g(1-eps)/k) + eps c^2 (c - alpha)`.
    pub fn f(&self, c: Complex64, eps: f64) -> Complex64 {
        let k = self.k;
        (c - self.beta) * (c * c - eps * self.mu * c / k - self.g * (1.0 - eps) / k)
            + eps * c * c * (c - self.alpha)
    }

    fn df(&self, c: Complex64, eps: f64) -> Complex64 {
        let k = self.k;
        (c * c - eps * self.mu * c / k - self.g * (1.0 - eps) / k)
            + (c - self.beta) * (2.0 * c - eps * self.mu / k)
            + eps * (3.0 * c * c - 2.0 * self.alpha * c)
    }

    /// Monic coefficients `[a0, a1, a2]` of `c^3 + a2 c^2 + a1 c + a0`.
    pub fn monic_coefficients(&self, eps: f64) -> [f64; 3] {
        let (k, g, mu) = (self.k, self.g, self.mu);
        let lead = 1.0 + eps;
        let a2 = -(eps * mu / k + self.beta + eps * self.alpha);
        let a1 = -g * (1.0 - eps) / k + self.beta * eps * mu / k;
        let a0 = self.beta * g * (1.0 - eps) / k;
        [a0 / lead, a1 / lead, a2 / lead]
    }

    /// The three roots, from the companion matrix plus two Newton steps,
    /// ordered by imaginary part.
    pub fn roots(&self, eps: f64) -> [Complex64; 3] {
        let [a0, a1, a2] = self.monic_coefficients(eps);
        let m = Matrix3::new(0.0, 0.0, -a0, 1.0, 0.0, -a1, 0.0, 1.0, -a2);
        let ev = m.complex_eigenvalues();
        let mut roots = [ev[0], ev[1], ev[2]];
        for r in roots.iter_mut() {
            for _ in 0..2 {
                let d = self.df(*r, eps);
                if d.norm() > 0.0 {
                    *r -= self.f(*r, eps) / d;
                }
            }
        }
        roots.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap().then(x.re.partial_cmp(&y.re).unwrap()));
        roots
    }

    /// `gmu e^{-2k x2*}/k^2`, the epsilon-derivative of `f` at the resonance.
    pub fn resonant_eps_derivative(&self) -> f64 {
        self.g * self.mu * (-2.0 * self.k * self.x2_star).exp() / (self.k * self.k)
    }

    /// Leading-order `Im c+ / sqrt(eps)` for the tuned configuration.
    pub fn growth_constant(&self) -> f64 {
        let c0 = (self.g / self.k).sqrt();
        (self.resonant_eps_derivative() / (2.0 * c0)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlDispersion {
    pub cubic: PwlClosedForm,
    pub epsilon: f64,
    pub roots: [Complex64; 3],
}

pub fn pwl_dispersion(
    mu: f64,
    x2_star: f64,
    params: &FluidParams,
    k: f64,
    epsilon: f64,
) -> Result<PwlDispersion> {
    if params.sigma != 0.0 || params.h_plus.is_finite() || params.h_minus.is_finite() {
        return Err(Error::InvalidParams(
            "the kinked-profile cubic assumes sigma = 0 and unbounded layers".into(),
        ));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParams(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let cubic = PwlClosedForm::new(mu, x2_star, k.abs(), params.g)?;
    Ok(PwlDispersion { cubic, epsilon, roots: cubic.roots(epsilon) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn deep(eps: f64, sigma: f64) -> FluidParams {
        FluidParams::with_ratio(eps, 9.8, sigma, f64::INFINITY, f64::INFINITY).unwrap()
    }

    #[test]
    fn dn_symbol_examples() {
        let p = FluidParams::new(1.0, 2.0, 9.8, 0.0, f64::INFINITY, 1.0).unwrap();
        assert_eq!(dn_symbol(&p, 2.0, Side::Air), 2.0);
        assert_relative_eq!(dn_symbol(&p, 1.0, Side::Water), 1f64.tanh(), epsilon = 1e-15);
        let q = FluidParams::new(1.0, 2.0, 9.8, 0.0, f64::INFINITY, f64::INFINITY).unwrap();
        assert_relative_eq!(dn_symbol(&q, 1.0, Side::Combined), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn ck_examples() {
        let p = deep(0.0, 0.0);
        assert_relative_eq!(ck(&p, 1.0, 1.0), 9.8f64.sqrt(), epsilon = 1e-15);
        assert_eq!(ck(&p, 3.0, -1.0), -ck(&p, 3.0, 1.0));
        let c = ck(&p, 2.5, 1.0);
        assert_relative_eq!(c * c * 2.5, 9.8, epsilon = 1e-13);
    }

    #[test]
    fn ck_is_a_root_without_air() {
        let p = FluidParams::new(0.0, 1000.0, 9.81, 0.074, 3.0, 2.0).unwrap();
        let prof = ShearProfile::tanh(10.0, 1.0, 3.0).unwrap();
        for branch in [1.0, -1.0] {
            let c = Complex64::new(ck(&p, 1.7, branch), 0.0);
            let r = residual_miles(c, Complex64::new(-0.3, 2.0), &p, 1.7, &prof);
            assert!(r.norm() < 1e-13);
        }
    }

    #[test]
    fn uniform_wind_reduces_to_kh_quadratic() {
        let p = deep(0.01, 0.0);
        let prof = ShearProfile::constant(4.0, f64::INFINITY).unwrap();
        let c = Complex64::new(1.3, 0.4);
        let k = 2.0;
        let r = residual_miles(c, Complex64::new(-k, 0.0), &p, k, &prof);
        let expected = 9.8 * 0.99 - 0.01 * k * (4.0 - c) * (4.0 - c) - c * c * k;
        assert!((r - expected).norm() < 1e-13);
    }

    #[test]
    fn kh_threshold_air_water() {
        let t = kh_threshold(&FluidParams::air_water()).unwrap();
        assert!((t.u0_min - 6.6).abs() / 6.6 < 0.05, "{t:?}");
        assert!((t.wavelength - 0.017).abs() / 0.017 < 0.10, "{t:?}");
        let p = FluidParams { sigma: 0.0, ..FluidParams::air_water() };
        assert_eq!(kh_threshold(&p), Err(Error::RequiresSurfaceTension));
    }

    #[test]
    fn kh_threshold_matches_closed_form() {
        let p = FluidParams::new(500.0, 1000.0, 9.81, 0.074, f64::INFINITY, f64::INFINITY).unwrap();
        let t = kh_threshold(&p).unwrap();
        let (rp, rm) = (p.rho_plus, p.rho_minus);
        let u2 = 2.0 * (rp + rm) / (rp * rm) * (p.g * p.sigma * (rm - rp)).sqrt();
        assert_relative_eq!(t.u0_min, u2.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(t.k_crit, (p.g * (rm - rp) / p.sigma).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn kh_threshold_vanishes_with_surface_tension() {
        let mut prev = f64::INFINITY;
        for sigma in [1e-1, 1e-3, 1e-5, 1e-7] {
            let p = FluidParams { sigma, ..FluidParams::air_water() };
            let u = kh_threshold(&p).unwrap().u0_min;
            // the minimum scales like sigma^(1/4)
            if prev.is_finite() {
                assert_relative_eq!(u / prev, 0.1f64.sqrt(), max_relative = 1e-3);
            }
            prev = u;
        }
    }

    #[test]
    fn shear_roots_examples() {
        let p = deep(0.00122, 0.0);
        let p = FluidParams { g: 9.81, ..p };
        let roots = closed_form_shear_roots(8.0, 5.0, &p, 3.0).unwrap();
        let kk = 3.0;
        let eps = p.epsilon();
        for r in roots {
            let lhs = p.g * (1.0 - eps);
            let rhs = eps * kk * (8.0 - r) * (8.0 - r) + eps * 5.0 * (8.0 - r) + kk * r * r;
            assert!((lhs - rhs).norm() < 1e-12);
        }
        for eps in [1e-3, 0.1, 0.5, 0.99] {
            let q = deep(eps, 0.0);
            let r = closed_form_shear_roots(0.0, 3.0, &q, 2.0).unwrap();
            assert!(roots_are_real(&r, 0.0));
        }
        let kh = closed_form_shear_roots(8.0, 0.0, &p, 3.0).unwrap();
        let prof = ShearProfile::constant(8.0, f64::INFINITY).unwrap();
        for r in kh {
            assert!(residual_miles(r, Complex64::new(-3.0, 0.0), &p, 3.0, &prof).norm() < 1e-11);
        }
    }

    #[test]
    fn pwl_double_root_and_derivatives() {
        let (mu, k, g) = (2.0, 1.5, 9.8);
        let xs = PwlClosedForm::tuned_x2_star(mu, k, g).unwrap();
        let cubic = PwlClosedForm::new(mu, xs, k, g).unwrap();
        let c0 = (g / k).sqrt();
        assert_relative_eq!(cubic.beta, c0, max_relative = 1e-14);
        let c = Complex64::new(c0, 0.0);
        assert!(cubic.f(c, 0.0).norm() < 1e-12);
        assert!(cubic.df(c, 0.0).norm() < 1e-12);
        let roots = cubic.roots(0.0);
        assert!(roots.iter().filter(|r| (r.re - c0).abs() < 1e-6).count() == 2);
    }

    #[test]
    fn pwl_cubic_from_impedance() {
        let cubic = PwlClosedForm::new(2.0, 0.4, 1.5, 9.8).unwrap();
        let p = deep(0.01, 0.0);
        let prof = ShearProfile::kinked_linear(2.0, 0.4, f64::INFINITY).unwrap();
        let c = Complex64::new(1.1, 0.3);
        let r = residual_miles(c, cubic.impedance(c), &p, 1.5, &prof);
        // f = -(c - beta)/k * residual
        let f = cubic.f(c, 0.01);
        assert!((f + (c - cubic.beta) / 1.5 * r).norm() < 1e-12);
    }

    #[test]
    fn two_uniform_streams_match_kh_quadratic() {
        let opts = RayleighOptions::default();
        let p = FluidParams::new(1.0, 1000.0, 9.8, 0.0, f64::INFINITY, f64::INFINITY).unwrap();
        let up = ShearProfile::constant(6.0, f64::INFINITY).unwrap();
        let um = ShearProfile::constant(0.5, f64::INFINITY).unwrap();
        let k = 1.3;
        for c in [Complex64::new(1.0, 0.3), Complex64::new(2.0, -0.7)] {
            let r = residual_general(c, &p, k, &up, &um, &opts).unwrap();
            let kh = (p.g * 999.0 - k * (6.0 - c) * (6.0 - c) - 1000.0 * k * (0.5 - c) * (0.5 - c))
                / 1000.0;
            assert!((r - kh).norm() < 1e-12 * kh.norm());
        }
    }

    #[test]
    fn general_matches_miles_without_current() {
        let opts = RayleighOptions::default();
        let p = FluidParams::new(1.0, 1000.0, 9.8, 0.01, 5.0, 2.0).unwrap();
        let up = ShearProfile::tanh(10.0, 1.0, 5.0).unwrap();
        let um = ShearProfile::constant(0.0, 2.0).unwrap();
        for c in [Complex64::new(3.0, 0.3), Complex64::new(2.0, -0.7), Complex64::new(12.0, 0.1)] {
            let r = residual_general(c, &p, 1.0, &up, &um, &opts).unwrap();
            let z = interface_impedance(&up, 1.0, c, &opts).unwrap();
            let m = residual_miles(c, z, &p, 1.0, &up);
            assert!((r - m).norm() < 1e-9 * m.norm(), "{r} vs {m}");
        }
    }

    #[test]
    fn general_residual_is_mirror_symmetric() {
        // flipping x2 swaps the fluids; with g = 0 the eigenproblem is unchanged
        use crate::profiles::AnalyticFamily;
        let opts = RayleighOptions::default();
        let poly = |c: Vec<f64>, h| {
            ShearProfile::analytic(AnalyticFamily::Polynomial { coeffs: c }, h).unwrap()
        };
        let a = poly(vec![3.0, 2.0, -0.5], 3.0);
        let b = poly(vec![1.0, -0.8, 0.3], 2.0);
        let p1 = FluidParams { rho_plus: 0.5, rho_minus: 1.0, g: 0.0, sigma: 0.3, h_plus: 3.0, h_minus: 2.0 };
        let p2 = FluidParams { rho_plus: 1.0, rho_minus: 0.5, g: 0.0, sigma: 0.3, h_plus: 2.0, h_minus: 3.0 };
        for c in [Complex64::new(1.7, 0.3), Complex64::new(5.0, -0.7)] {
            let r1 = general_unchecked(c, &p1, 1.2, &a, &b, &opts).unwrap();
            let r2 = general_unchecked(c, &p2, 1.2, &b, &a, &opts).unwrap() * 0.5;
            assert!((r1 - r2).norm() < 1e-9 * r1.norm(), "{r1} vs {r2}");
        }
    }

    #[test]
    fn general_rejects_mismatched_depths() {
        let opts = RayleighOptions::default();
        let p = FluidParams::new(1.0, 1000.0, 9.8, 0.0, 4.0, f64::INFINITY).unwrap();
        let up = ShearProfile::tanh(10.0, 1.0, 5.0).unwrap();
        let um = ShearProfile::constant(0.0, f64::INFINITY).unwrap();
        let r = residual_general(Complex64::new(1.0, 0.1), &p, 1.0, &up, &um, &opts);
        assert!(matches!(r, Err(Error::IncompatibleDepths(_))));
    }
}
