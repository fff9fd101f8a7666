//! Downward sweeps of linear ODE systems over a profile column, with
//! piecewise-linear kink jumps and overflow-safe rescaling.

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::profiles::ShearProfile;
use num_complex::Complex64;

/// A linear, homogeneous first-order system in the column variable.
pub(crate) trait LinearSystem<const N: usize> {
    fn rhs(&self, x: f64, s: &[f64; N]) -> [f64; N];

    /// Apply the jump across a kink at `b`, crossed from above. `kappa` is
    /// `(U'(b+) - U'(b-)) / (U(b) - c)`.
    fn kink(&self, s: &mut [f64; N], kappa: Complex64);

    /// Homogeneity degree of the state in the underlying solution `y`.
    fn degree(&self) -> i32 {
        1
    }

    /// Size of the state measured like `|y|`.
    fn magnitude(&self, s: &[f64; N]) -> f64;
}

/// One recorded state. The stored value times `exp(degree * log_scale)` is
/// the unscaled state.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample<const N: usize> {
    pub x: f64,
    pub state: [f64; N],
    pub log_scale: f64,
}

pub(crate) struct Walker<'a, S, const N: usize> {
    sys: &'a S,
    profile: &'a ShearProfile,
    c: Complex64,
    pub x: f64,
    pub state: [f64; N],
    pub log_scale: f64,
    pub max_log_mag: f64,
    pub samples: Vec<Sample<N>>,
    record_steps: bool,
    opts: OdeOptions,
    chunk: f64,
    pub stats: OdeStats,
}

impl<'a, S: LinearSystem<N>, const N: usize> Walker<'a, S, N> {
    pub fn new(
        sys: &'a S,
        profile: &'a ShearProfile,
        c: Complex64,
        k: f64,
        x: f64,
        state: [f64; N],
        opts: OdeOptions,
        record_steps: bool,
    ) -> Self {
        let chunk = if k.abs() > 0.0 { 30.0 / k.abs() } else { f64::INFINITY };
        let mut w = Self {
            sys,
            profile,
            c,
            x,
            state,
            log_scale: 0.0,
            max_log_mag: f64::NEG_INFINITY,
            samples: Vec::new(),
            record_steps,
            opts,
            chunk,
            stats: OdeStats::default(),
        };
        w.track();
        if record_steps {
            w.record();
        }
        w
    }

    fn track(&mut self) {
        let m = self.sys.magnitude(&self.state);
        if m > 0.0 {
            self.max_log_mag = self.max_log_mag.max(m.ln() + self.log_scale);
        }
    }

    pub fn record(&mut self) {
        self.samples.push(Sample { x: self.x, state: self.state, log_scale: self.log_scale });
    }

    /// Replace the state at a new position, as after a series hand-off.
    pub fn jump_to(&mut self, x: f64, state: [f64; N]) {
        self.x = x;
        self.state = state;
        self.track();
        if self.record_steps {
            self.record();
        }
    }

    /// Apply the kink jump at `b` if the profile has one there.
    pub fn apply_kink_at(&mut self, b: f64) -> Result<()> {
        for (pos, jump) in self.profile.kinks() {
            if pos == b {
                let gap = Complex64::new(self.profile.u(b), 0.0) - self.c;
                if gap.norm() == 0.0 {
                    return Err(Error::NearSingularCoefficient { min_distance: 0.0 });
                }
                self.sys.kink(&mut self.state, jump / gap);
            }
        }
        Ok(())
    }

    /// Integrate down to `target < x`, crossing any kinks on the way.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        if target >= self.x {
            return Ok(());
        }
        let mut kinks: Vec<f64> = self
            .profile
            .kinks()
            .iter()
            .map(|&(b, _)| b)
            .filter(|&b| b > target && b < self.x)
            .collect();
        kinks.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for b in kinks {
            self.integrate_chunked(b)?;
            self.apply_kink_at(b)?;
            if self.record_steps {
                self.record();
            }
        }
        self.integrate_chunked(target)
    }

    fn integrate_chunked(&mut self, stop: f64) -> Result<()> {
        while self.x > stop {
            let next = if self.x - stop > self.chunk { self.x - self.chunk } else { stop };
            let sys = self.sys;
            let record = self.record_steps;
            let log_scale = self.log_scale;
            let samples = &mut self.samples;
            let mut max_log = self.max_log_mag;
            let (state, _, stats) = ode::integrate(
                |x, s| sys.rhs(x, s),
                self.x,
                self.state,
                next,
                &self.opts,
                |step, end| {
                    let m = sys.magnitude(end);
                    if m > 0.0 {
                        max_log = max_log.max(m.ln() + log_scale);
                    }
                    if record {
                        samples.push(Sample { x: step.x0 + step.h, state: *end, log_scale });
                    }
                    Ok(())
                },
            )?;
            self.max_log_mag = max_log;
            self.stats.accepted += stats.accepted;
            self.stats.rejected += stats.rejected;
            self.stats.evaluations += stats.evaluations;
            self.state = state;
            self.x = next;
            if let Some(last) = self.samples.last_mut() {
                if record {
                    last.x = next;
                }
            }
            self.rescale();
        }
        Ok(())
    }

    fn rescale(&mut self) {
        let m = self.sys.magnitude(&self.state);
        if m > 0.0 && m.is_finite() && m.ln().abs() > 50.0 {
            let factor = m.powi(self.sys.degree());
            self.state.iter_mut().for_each(|v| *v /= factor);
            self.log_scale += m.ln();
        }
    }

    /// Samples rescaled to the walker's current normalization.
    pub fn samples_in_final_scale(&self) -> Vec<Sample<N>> {
        let d = self.sys.degree() as f64;
        self.samples
            .iter()
            .map(|s| {
                let f = (d * (s.log_scale - self.log_scale)).exp();
                Sample { x: s.x, state: s.state.map(|v| v * f), log_scale: self.log_scale }
            })
            .collect()
    }
}

/// `U''/(U - c)`, taken as zero where the profile is locally straight.
pub(crate) fn singular_coefficient(profile: &ShearProfile, x: f64, c: Complex64) -> Complex64 {
    let upp = profile.d2u(x);
    if upp == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        upp / (Complex64::new(profile.u(x), 0.0) - c)
    }
}

/// The complex Rayleigh equation packed as `[Re y, Im y, Re y', Im y']`.
pub(crate) struct RayleighSystem<'a> {
    pub profile: &'a ShearProfile,
    pub k2: f64,
    pub c: Complex64,
}

impl LinearSystem<4> for RayleighSystem<'_> {
    fn rhs(&self, x: f64, s: &[f64; 4]) -> [f64; 4] {
        let q = singular_coefficient(self.profile, x, self.c) + self.k2;
        let y = Complex64::new(s[0], s[1]);
        let f = q * y;
        [s[2], s[3], f.re, f.im]
    }

    fn kink(&self, s: &mut [f64; 4], kappa: Complex64) {
        let y = Complex64::new(s[0], s[1]);
        let yp = Complex64::new(s[2], s[3]) - kappa * y;
        s[2] = yp.re;
        s[3] = yp.im;
    }

    fn magnitude(&self, s: &[f64; 4]) -> f64 {
        s[0].hypot(s[1])
    }
}

/// The real quadratic system for `(u1, u2, u3, W)`.
pub(crate) struct WronskianSystem<'a> {
    pub profile: &'a ShearProfile,
    pub k2: f64,
    pub c: Complex64,
}

impl LinearSystem<4> for WronskianSystem<'_> {
    fn rhs(&self, x: f64, s: &[f64; 4]) -> [f64; 4] {
        let upp = self.profile.d2u(x);
        let (qr, qi) = if upp == 0.0 {
            (self.k2, 0.0)
        } else {
            let d = self.profile.u(x) - self.c.re;
            let denom = d * d + self.c.im * self.c.im;
            (self.k2 + upp * d / denom, self.c.im * upp / denom)
        };
        let [u1, u2, u3, w] = *s;
        [2.0 * u2, qr * u1 + u3, 2.0 * (qr * u2 + qi * w), qi * u1]
    }

    fn kink(&self, s: &mut [f64; 4], kappa: Complex64) {
        let [u1, u2, u3, w] = *s;
        s[1] = u2 - kappa.re * u1;
        s[2] = u3 - 2.0 * (kappa.re * u2 + kappa.im * w) + kappa.norm_sqr() * u1;
        s[3] = w - kappa.im * u1;
    }

    fn degree(&self) -> i32 {
        2
    }

    fn magnitude(&self, s: &[f64; 4]) -> f64 {
        s[0].abs().max(s[2].abs()).sqrt()
    }
}

/// The forced equation `Y'' = (U''/(U - c) + k^2) Y + (U''/(U - c)) sf gamma_v`
/// augmented with `gamma_vv = k^2 gamma`, packed as
/// `[Re Y, Im Y, Re Y', Im Y', gamma, gamma_v]`. `sf` converts the derivative
/// of `gamma` in the column variable to the `x2` derivative.
pub(crate) struct ForcedSystem<'a> {
    pub profile: &'a ShearProfile,
    pub k2: f64,
    pub c: Complex64,
    pub sf: f64,
}

impl LinearSystem<6> for ForcedSystem<'_> {
    fn rhs(&self, x: f64, s: &[f64; 6]) -> [f64; 6] {
        let a = singular_coefficient(self.profile, x, self.c);
        let y = Complex64::new(s[0], s[1]);
        let f = (a + self.k2) * y + a * (self.sf * s[5]);
        [s[2], s[3], f.re, f.im, s[5], self.k2 * s[4]]
    }

    fn kink(&self, s: &mut [f64; 6], kappa: Complex64) {
        let y = Complex64::new(s[0], s[1]);
        let yp = Complex64::new(s[2], s[3]) - kappa * (y + self.sf * s[5]);
        s[2] = yp.re;
        s[3] = yp.im;
    }

    fn magnitude(&self, s: &[f64; 6]) -> f64 {
        s[0].hypot(s[1]).max(s[4].abs())
    }
}
