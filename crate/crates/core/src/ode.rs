//! Adaptive Dormand–Prince 5(4) integrator with dense output.
//!
//! States are fixed-size real arrays; complex systems pack real and imaginary
//! parts side by side. Integration may run in either direction of `x`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `None` picks one from the interval length.
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-14, h_init: None, max_steps: 2_000_000 }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-4, ..Self::default() }
    }
}

/// Work counters of one call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense-output polynomial of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub x0: f64,
    pub h: f64,
    coeffs: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, x: f64) -> [f64; N] {
        let theta = (x - self.x0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        std::array::from_fn(|i| {
            r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])))
        })
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

fn inf_norm<const N: usize>(y: &[f64; N]) -> f64 {
    y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Integrate `y' = f(x, y)` from `x0` to `x1`.
///
/// `on_step` sees every accepted step (with its dense polynomial) and may
/// abort the integration by returning an error. Returns the final state, the
/// last accepted step size and work counters.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    opts: &OdeOptions,
    mut on_step: S,
) -> Result<([f64; N], f64, OdeStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(&DenseStep<N>, &[f64; N]) -> Result<()>,
{
    let mut stats = OdeStats::default();
    if x1 == x0 {
        return Ok((y0, 0.0, stats));
    }
    let span = x1 - x0;
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    stats.evaluations += 1;

    let mut h = match opts.h_init {
        Some(h) if h > 0.0 => h.min(span.abs()),
        _ => initial_step(&mut f, x, &y, &k1, span, opts, &mut stats),
    };
    let h_floor = 1e-14 * x0.abs().max(x1.abs()).max(span.abs());
    let mut last_rejected = false;

    while (x1 - x) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Integration { x2: x, reason: "step budget exhausted".into() });
        }
        let remaining = (x1 - x).abs();
        let finishing = h >= remaining * (1.0 - 1e-12);
        if finishing {
            h = remaining;
        }
        let hs = dir * h;

        let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            x + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let x_new = if finishing { x1 } else { x + hs };
        let k7 = f(x_new, &y_new);
        stats.evaluations += 6;

        if y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { x2: x, reason: "non-finite state".into() });
        }

        let scale = opts.atol + opts.rtol * inf_norm(&y).max(inf_norm(&y_new));
        let err = {
            let sum: f64 = (0..N)
                .map(|i| {
                    let e = hs
                        * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                            + E7 * k7[i]);
                    (e / scale).powi(2)
                })
                .sum();
            (sum / N as f64).sqrt()
        };

        if err <= 1.0 {
            stats.accepted += 1;
            let coeffs = {
                let r2: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                let r3: [f64; N] = std::array::from_fn(|i| hs * k1[i] - r2[i]);
                let r4: [f64; N] = std::array::from_fn(|i| r2[i] - hs * k7[i] - r3[i]);
                let r5: [f64; N] = std::array::from_fn(|i| {
                    hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]
                        + D7 * k7[i])
                });
                [y, r2, r3, r4, r5]
            };
            on_step(&DenseStep { x0: x, h: hs, coeffs }, &y_new)?;
            x = x_new;
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            if !finishing {
                h *= fac;
            }
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            last_rejected = true;
            if h < h_floor {
                return Err(Error::Integration { x2: x, reason: "step size underflow".into() });
            }
        }
    }
    Ok((y, h, stats))
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    span: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let dir = span.signum();
    let scale = opts.atol + opts.rtol * inf_norm(y);
    let d0 = inf_norm(y) / scale;
    let d1 = inf_norm(k1) / scale;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span.abs());
    let y1 = axpy(y, dir * h0, &[(1.0, k1)]);
    let k2 = f(x + dir * h0, &y1);
    stats.evaluations += 1;
    let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
    let d2 = inf_norm(&diff) / scale / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span.abs())
}
