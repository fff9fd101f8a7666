//! Acceptance suite. Run with `cargo test -p shear-stability --test acceptance`.
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use num_complex::Complex64;
use shear_stability::asymptotics::{miles_c_sharp, necessity_certificate};
use shear_stability::dispersion::{
    ck, closed_form_shear_roots, kh_threshold, residual_general, residual_miles, FluidParams, PwlClosedForm,
};
use shear_stability::eigensolver::{continue_in_epsilon, find_root, CountOptions, RootOptions};
use shear_stability::profiles::{AnalyticFamily, ShearProfile};
use shear_stability::rayleigh::{
    impedance_limit_check, integrate_wronskian, integrate_wronskian_at, interface_impedance,
    limiting_solution, RayleighOptions,
};
use shear_stability::Result;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: u32, name: &str, budget: Option<Duration>, f: fn() -> Result<Outcome>) -> bool {
    let t = Instant::now();
    let r = f();
    let elapsed = t.elapsed();
    let (mut pass, mut detail) = match r {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
        }
    }
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id:>2} {name}: {detail} ({:.3} s)", elapsed.as_secs_f64());
    pass
}

fn air_water() -> FluidParams {
    FluidParams::new(1.22, 1000.0, 9.81, 0.074, f64::INFINITY, f64::INFINITY).unwrap()
}

fn tanh_air() -> ShearProfile {
    ShearProfile::tanh(10.0, 1.0, 5.0).unwrap()
}

fn kh_criterion() -> Result<Outcome> {
    let t = kh_threshold(&air_water())?;
    let du = (t.u0_min - 6.6).abs() / 6.6;
    let dl = (t.wavelength - 0.017).abs() / 0.017;
    Ok(outcome(
        du <= 0.05 && dl <= 0.10,
        format!(
            "U0_min = {:.4} m/s (rel dev {:.3}), wavelength = {:.5} m (rel dev {:.3})",
            t.u0_min, du, t.wavelength, dl
        ),
    ))
}

/// Roots of the reduced relation with the straight-profile impedance
/// `-|k| coth(|k| h_plus)`, which is a quadratic in `c`.
fn straight_profile_quadratic(u0: f64, mu: f64, p: &FluidParams, k: f64) -> [Complex64; 2] {
    let kk = k.abs();
    let eps = p.epsilon();
    let tp = p.tanh_plus(k);
    let tm = p.tanh_minus(k);
    let z = -kk / tp;
    let gg = p.g * (1.0 - eps) + p.sigma * kk * kk / p.rho_minus;
    let e = eps * kk * u0 * (1.0 - tm * tm) / (tp + eps * tm);
    let a = eps * z - kk * tm;
    let b = -2.0 * eps * z * u0 + eps * mu - e;
    let d = gg + eps * z * u0 * u0 - eps * mu * u0;
    let disc = Complex64::new(b * b - 4.0 * a * d, 0.0).sqrt();
    [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)]
}

fn closed_form_criterion() -> Result<Outcome> {
    let ray = RayleighOptions::default();
    let mut cases = Vec::new();
    for (u0, mu) in [(2.0, 0.0), (0.5, 1.5)] {
        for sigma in [0.0, 0.074] {
            for h_minus in [1.0, f64::INFINITY] {
                for h_plus in [5.0, f64::INFINITY] {
                    cases.push((u0, mu, 1.22, sigma, h_minus, h_plus, 1.5));
                }
            }
        }
    }
    // heavy upper fluid: complex conjugate roots
    for (u0, mu) in [(6.0, 0.0), (6.0, 1.0)] {
        for (h_minus, h_plus) in [(1.0, 5.0), (f64::INFINITY, f64::INFINITY)] {
            cases.push((u0, mu, 500.0, 0.074, h_minus, h_plus, 2.0));
        }
    }
    let mut worst: f64 = 0.0;
    let mut n_roots = 0;
    let mut infinite_checked = 0;
    for &(u0, mu, rho_plus, sigma, h_minus, h_plus, k) in &cases {
        let p = FluidParams::new(rho_plus, 1000.0, 9.81, sigma, h_plus, h_minus)?;
        let prof = if mu == 0.0 {
            ShearProfile::constant(u0, h_plus)?
        } else {
            ShearProfile::linear_shear(u0, mu, h_plus)?
        };
        let oracle = straight_profile_quadratic(u0, mu, &p, k);
        if h_plus.is_infinite() && h_minus.is_infinite() {
            let lit = closed_form_shear_roots(u0, mu, &p, k)?;
            for r in oracle {
                let d = lit.iter().map(|l| (l - r).norm() / r.norm()).fold(f64::INFINITY, f64::min);
                worst = worst.max(d);
            }
            infinite_checked += 1;
        }
        let f = |c: Complex64| -> Result<Complex64> {
            let z = interface_impedance(&prof, k, c, &ray)?;
            Ok(residual_miles(c, z, &p, k, &prof))
        };
        let opts = RootOptions::for_params(&p, k);
        for r in oracle {
            let seed = r + Complex64::new(0.01, 0.01) * r.norm().max(1.0);
            let got = find_root(f, seed, k, &opts)?;
            worst = worst.max((got.c - r).norm() / r.norm());
            n_roots += 1;
        }
    }
    Ok(outcome(
        worst <= 1e-8 && cases.len() == 20,
        format!(
            "{} cases, {} roots ({} unbounded cases also against the closed form), max rel err {:.2e}",
            cases.len(),
            n_roots,
            infinite_checked,
            worst
        ),
    ))
}

fn conservation_criterion() -> Result<Outcome> {
    let ray = RayleighOptions::default();
    let poly = ShearProfile::analytic(AnalyticFamily::Polynomial { coeffs: vec![0.0, 4.0, -2.0] }, 2.0)?;
    let expo = ShearProfile::analytic(AnalyticFamily::Exponential { u_max: 8.0, depth: 0.5 }, 4.0)?;
    let kinked = ShearProfile::kinked_linear(2.0, 0.5, 3.0)?;
    let profiles = [tanh_air(), poly, expo, kinked];
    let speeds = [
        Complex64::new(3.0, 0.01),
        Complex64::new(1.5, 0.5),
        Complex64::new(0.7, -0.2),
        Complex64::new(12.0, 1e-3),
    ];
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for prof in &profiles {
        for &c in &speeds {
            for k in [0.5, 1.0, 4.0] {
                for s in integrate_wronskian(prof, k, c, &ray)? {
                    let n = s.state.norm_inf();
                    worst = worst.max(s.state.conservation_defect().abs() / (1.0 + n * n));
                    samples += 1;
                }
            }
        }
    }
    Ok(outcome(worst <= 1e-8, format!("{samples} samples over 48 paths, max scaled defect {worst:.2e}")))
}

fn wronskian_identity_criterion() -> Result<Outcome> {
    let prof = tanh_air();
    let c = Complex64::new(3.0, 0.01);
    let k = 1.0;
    let ray = RayleighOptions { rtol: 1e-13, ..RayleighOptions::default() };
    let centers: Vec<f64> = (1..40).map(|i| 5.0 * i as f64 / 40.0).chain([0.30, 0.31, 0.32, 0.33]).collect();
    let mut worst: f64 = 0.0;
    for &x in &centers {
        let ell = ((prof.u(x) - c.re).abs() + c.im) / prof.du(x).abs();
        let h = (0.005 * ell).min(0.0025);
        let pts: Vec<f64> = [-2.0, -1.0, 1.0, 2.0, 0.0].iter().map(|m| x + m * h).collect();
        let got = integrate_wronskian_at(&prof, k, c, &pts, &ray)?;
        let at = |t: f64| got.iter().find(|s| s.x2 == t).expect("sample at requested point").state;
        let w = |t: f64| at(t).w;
        let fd = (w(pts[0]) - 8.0 * w(pts[1]) + 8.0 * w(pts[2]) - w(pts[3])) / (12.0 * h);
        let d = prof.u(x) - c.re;
        let exact = c.im * prof.d2u(x) * at(x).u1 / (d * d + c.im * c.im);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    Ok(outcome(
        worst <= 1e-6,
        format!("{} interior points incl. the critical layer, max rel err {worst:.2e}", centers.len()),
    ))
}

fn limit_convergence_criterion() -> Result<Outcome> {
    let c_i = [1e-3, 1e-4, 1e-5, 1e-6];
    let r = impedance_limit_check(&tanh_air(), 1.0, 3.0, 1.0, &c_i, &RayleighOptions::default())?;
    let slope = r.slope.unwrap_or(f64::NAN);
    let errs: Vec<String> = r.errors.iter().map(|e| format!("{e:.2e}")).collect();
    Ok(outcome(
        r.strictly_decreasing && slope >= 0.8,
        format!("errors [{}], slope {slope:.3}, limit {:.10}", errs.join(", "), r.limit),
    ))
}

fn jump_criterion() -> Result<Outcome> {
    let prof = ShearProfile::analytic(AnalyticFamily::Polynomial { coeffs: vec![0.0, 4.0, -2.0] }, 2.0)?;
    let mut worst: f64 = 0.0;
    let mut layers = 0;
    for sign in [1.0, -1.0] {
        for k in [0.5, 1.0, 3.0] {
            let lim = limiting_solution(&prof, k, 1.5, sign, &RayleighOptions::default())?;
            layers = lim.jumps.len();
            for j in &lim.jumps {
                let expected = j.expected_w_jump(sign);
                worst = worst.max(((j.w_above - j.w_below) - expected).abs() / expected.abs());
            }
        }
    }
    Ok(outcome(
        worst <= 1e-8 && layers == 2,
        format!("{layers} layers, both signs, k in {{0.5, 1, 3}}, max rel err {worst:.2e}"),
    ))
}

fn miles_criterion() -> Result<Outcome> {
    let prof = tanh_air();
    let k = 1.0;
    let base = FluidParams::new(1.0, 1000.0, 9.8, 0.0, 5.0, f64::INFINITY)?;
    let ray = RayleighOptions::default();
    let asym = miles_c_sharp(&prof, &base, k, 1.0, &ray)?;
    let eps = [1e-4, 3e-4, 1e-3];
    let family = |e: f64| {
        let p = base.with_epsilon(e).unwrap();
        let prof = prof.clone();
        move |c: Complex64| -> Result<Complex64> {
            let z = interface_impedance(&prof, k, c, &ray)?;
            Ok(residual_miles(c, z, &p, k, &prof))
        }
    };
    let predictor = |e: f64| asym.predicted_c(e);
    let opts = RootOptions::with_scale(base.g);
    let branch = continue_in_epsilon(family, &eps, asym.predicted_c(eps[0]), k, Some(&predictor), &opts)?;
    let ratio: Vec<f64> = branch.iter().zip(eps).map(|(r, e)| r.c.im / (e * asym.c_sharp)).collect();
    let dev: Vec<f64> = ratio.iter().map(|r| (r - 1.0).abs()).collect();
    let positive = branch.iter().all(|r| r.c.im > 0.0);
    let pass = asym.c_sharp > 0.0 && dev[2] <= 0.10 && dev[0] <= 0.03 && dev[0] < dev[1] && dev[1] < dev[2] && positive;
    Ok(outcome(
        pass,
        format!(
            "c_k = {:.6}, c_sharp = {:.6}; Im c/(eps c_sharp) - 1 = {:.2e} (1e-4), {:.2e} (3e-4), {:.2e} (1e-3)",
            asym.c_k, asym.c_sharp, ratio[0] - 1.0, ratio[1] - 1.0, ratio[2] - 1.0
        ),
    ))
}

fn necessity_criterion() -> Result<Outcome> {
    let prof = ShearProfile::tanh(1.0, 1.0, 5.0)?;
    let base = FluidParams::new(1.0, 1000.0, 9.8, 0.0, 5.0, f64::INFINITY)?;
    let k = 1.0;
    let c_k = ck(&base, k, 1.0);
    let (_, umax) = prof.range();
    let mut total = 0;
    let mut margin = 0.0;
    for eps in [1e-4, 1e-3] {
        let r = necessity_certificate(&prof, &base, k, eps, None, 1.0, &RayleighOptions::default(), &CountOptions::default())?;
        total += r.off_axis_roots();
        margin = r.margin;
    }
    Ok(outcome(
        total == 0 && umax <= 0.5 * c_k,
        format!("max U = {umax:.4} <= c_k/2 = {:.4}, margin {margin:.4}, off-axis roots {total}", 0.5 * c_k),
    ))
}

fn pwl_criterion() -> Result<Outcome> {
    let (mu, k, g) = (2.0, 1.5, 9.8);
    let xs = PwlClosedForm::tuned_x2_star(mu, k, g)?;
    let cubic = PwlClosedForm::new(mu, xs, k, g)?;
    let c0 = (g / k).sqrt();
    let constant = cubic.growth_constant();
    let derived = (g * mu * (-2.0 * k * xs).exp() / (2.0 * k * k * c0)).sqrt();
    let mut devs = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let top = cubic.roots(eps)[2];
        devs.push((top.im / eps.sqrt() / derived - 1.0).abs());
    }
    let c = Complex64::new(c0, 0.0);
    let h = 0.1;
    let d2 = (cubic.f(c + h, 0.0) - 2.0 * cubic.f(c, 0.0) + cubic.f(c - h, 0.0)) / (h * h);
    let he = 1e-2;
    let de = (cubic.f(c, he) - cubic.f(c, -he)) / (2.0 * he);
    let e2 = (d2.re - 4.0 * c0).abs().max(d2.im.abs());
    let ee = (de.re - cubic.resonant_eps_derivative()).abs().max(de.im.abs());
    let ee_lit = (de.re - g * mu * (-2.0 * k * xs).exp() / (k * k)).abs();
    let pass = devs[2] <= 0.02 && devs[0] > devs[1] && devs[1] > devs[2] && e2 <= 1e-10 && ee <= 1e-10 && ee_lit <= 1e-10
        && (constant - derived).abs() <= 1e-14 * derived;
    Ok(outcome(
        pass,
        format!(
            "Im c+/sqrt(eps) rel dev {:.2e} (1e-2), {:.2e} (1e-3), {:.2e} (1e-4); |f_cc - 4 sqrt(g/k)| = {e2:.1e}, |f_eps - g mu e^(-2k x*)/k^2| = {ee_lit:.1e}",
            devs[0], devs[1], devs[2]
        ),
    ))
}

fn general_criterion() -> Result<Outcome> {
    let ray = RayleighOptions::default();
    let k = 1.0;
    let mut worst: f64 = 0.0;
    let water_at_rest = |h: f64| ShearProfile::constant(0.0, h);
    let cases = [
        (tanh_air(), FluidParams::new(1.0, 1000.0, 9.8, 0.0, 5.0, f64::INFINITY)?),
        (tanh_air(), FluidParams::new(1.0, 1000.0, 9.8, 0.01, 5.0, 2.0)?),
        (ShearProfile::tanh(2.0, 1.0, 5.0)?, FluidParams::new(1.22, 1000.0, 9.8, 0.0, 5.0, 1.0)?),
    ];
    for (prof, p) in &cases {
        let um = water_at_rest(p.h_minus)?;
        let seed = match miles_c_sharp(prof, p, k, 1.0, &ray) {
            Ok(a) => a.predicted_c(p.epsilon()),
            Err(_) => Complex64::new(ck(p, k, 1.0), 0.0),
        };
        let opts = RootOptions::for_params(p, k);
        let miles = |c: Complex64| -> Result<Complex64> {
            let z = interface_impedance(prof, k, c, &ray)?;
            Ok(residual_miles(c, z, p, k, prof))
        };
        let general = |c: Complex64| residual_general(c, p, k, prof, &um, &ray);
        let a = find_root(miles, seed, k, &opts)?.c;
        let b = find_root(general, seed, k, &opts)?.c;
        worst = worst.max((a - b).norm() / a.norm());
    }
    // two uniform streams with a vortex sheet
    let p = FluidParams::new(1.22, 1000.0, 9.81, 0.074, f64::INFINITY, f64::INFINITY)?;
    let (u_air, u_water) = (9.0, 0.4);
    let mut worst_sheet: f64 = 0.0;
    for kk in [50.0, 370.0, 2000.0] {
        let (rp, rm) = (p.rho_plus, p.rho_minus);
        // rho+ (U+ - c)^2 + rho- (U- - c)^2 = (g (rho- - rho+) + sigma k^2)/|k|
        let a = rp + rm;
        let b = -2.0 * (rp * u_air + rm * u_water);
        let d = rp * u_air * u_air + rm * u_water * u_water - (p.g * (rm - rp) + p.sigma * kk * kk) / kk;
        let disc = Complex64::new(b * b - 4.0 * a * d, 0.0).sqrt();
        let up = ShearProfile::constant(u_air, f64::INFINITY)?;
        let um = ShearProfile::constant(u_water, f64::INFINITY)?;
        let f = |c: Complex64| residual_general(c, &p, kk, &up, &um, &ray);
        let opts = RootOptions::for_params(&p, kk);
        for r in [(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)] {
            let got = find_root(f, r * Complex64::new(1.01, 0.01), kk, &opts)?.c;
            worst_sheet = worst_sheet.max((got - r).norm() / r.norm());
        }
    }
    Ok(outcome(
        worst <= 1e-8 && worst_sheet <= 1e-8,
        format!("general vs reduced max rel diff {worst:.2e} (3 cases); two-stream sheet vs quadratic {worst_sheet:.2e} (6 roots)"),
    ))
}

fn main() {
    println!("running acceptance criteria");
    let results = [
        run(1, "Kelvin-Helmholtz threshold", Some(Duration::from_secs(1)), kh_criterion),
        run(2, "closed-form oracle equivalence", Some(Duration::from_secs(5)), closed_form_criterion),
        run(3, "Wronskian conservation law", None, conservation_criterion),
        run(4, "Wronskian derivative identity", None, wronskian_identity_criterion),
        run(5, "limit convergence", Some(Duration::from_secs(10)), limit_convergence_criterion),
        run(6, "critical-layer jump exactness", None, jump_criterion),
        run(7, "small-density-ratio growth constant", Some(Duration::from_secs(30)), miles_criterion),
        run(8, "necessity: no off-axis roots", None, necessity_criterion),
        run(9, "piecewise-linear sqrt(eps) scaling", None, pwl_criterion),
        run(10, "general vs reduced relation", None, general_criterion),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
