//! One function per command; each returns a result table.

use shear_stability::asymptotics::{miles_c_sharp, necessity_certificate};
use shear_stability::dispersion::{ck, kh_threshold, pwl_dispersion, PwlClosedForm};
use shear_stability::eigensolver::{miles_seed, scan_k, solve_miles, CountOptions, RootOptions, ScanOptions};
use shear_stability::exec::{self, Execution};
use shear_stability::profiles::ShearProfile;
use shear_stability::rayleigh::RayleighOptions;
use shear_stability::Error;

use crate::config::{Command, KSpec, KinkHeight, ProfileSpec, RunConfig};
use crate::output::{Cell, Table};
use crate::CliError;

pub const SWEEP_COLUMNS: [&str; 6] = ["k", "re_c", "im_c", "growth_rate", "residual", "converged"];

fn rayleigh_opts(cfg: &RunConfig) -> RayleighOptions {
    RayleighOptions {
        rtol: cfg.solver.rtol,
        switch_threshold: cfg.solver.switch_threshold,
        ..RayleighOptions::default()
    }
}

fn root_opts(cfg: &RunConfig) -> RootOptions {
    RootOptions { tol: cfg.solver.tol, max_iter: cfg.solver.max_iter, ..RootOptions::default() }
}

fn air_profile(cfg: &RunConfig) -> Result<ShearProfile, CliError> {
    cfg.profile.build(cfg.fluids.h_plus)
}

fn epsilons(cfg: &RunConfig) -> Vec<f64> {
    if cfg.mode.epsilons.is_empty() {
        vec![cfg.fluids.epsilon()]
    } else {
        cfg.mode.epsilons.clone()
    }
}

pub fn run(cfg: &RunConfig, exec: Execution) -> Result<Table, CliError> {
    match cfg.command {
        Command::Ck => run_ck(cfg),
        Command::Kh => run_kh(cfg),
        Command::Solve => run_solve(cfg),
        Command::Sweep => run_sweep(cfg, exec),
        Command::Asym => run_asym(cfg, exec),
        Command::CertifyStable => run_certify(cfg, exec),
        Command::Pwl => run_pwl(cfg),
    }
}

fn run_ck(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut t = Table::new("ck", vec!["k", "c_plus", "c_minus"]);
    for k in cfg.ks()? {
        t.push(vec![k.into(), ck(&cfg.fluids, k, 1.0).into(), ck(&cfg.fluids, k, -1.0).into()]);
    }
    Ok(t)
}

fn run_kh(cfg: &RunConfig) -> Result<Table, CliError> {
    let r = kh_threshold(&cfg.fluids)?;
    let mut t = Table::new("kh", vec!["u0_min", "k_crit", "wavelength"]);
    t.push(vec![r.u0_min.into(), r.k_crit.into(), r.wavelength.into()]);
    Ok(t)
}

fn run_solve(cfg: &RunConfig) -> Result<Table, CliError> {
    let KSpec::Single(k) = cfg.mode.k else {
        return Err(CliError::Config("solve needs a single [mode] k".into()));
    };
    let profile = air_profile(cfg)?;
    let ray = rayleigh_opts(cfg);
    let seed = miles_seed(&profile, &cfg.fluids, k, cfg.mode.branch, &ray);
    let r = solve_miles(&profile, &cfg.fluids, k, seed, &root_opts(cfg), &ray)?;
    let mut cols = SWEEP_COLUMNS.to_vec();
    cols.extend(["iterations", "classification", "re_seed", "im_seed"]);
    let mut t = Table::new("solve", cols);
    t.push(vec![
        k.into(),
        r.c.re.into(),
        r.c.im.into(),
        r.growth_rate.into(),
        r.residual_norm.into(),
        r.converged.into(),
        r.iterations.into(),
        format!("{:?}", r.classification).into(),
        seed.re.into(),
        seed.im.into(),
    ]);
    Ok(t)
}

fn run_sweep(cfg: &RunConfig, exec: Execution) -> Result<Table, CliError> {
    let profile = air_profile(cfg)?;
    let opts = ScanOptions { branch: cfg.mode.branch, root: root_opts(cfg), rayleigh: rayleigh_opts(cfg), exec };
    let curve = scan_k(&profile, &cfg.fluids, &cfg.ks()?, &opts)?;
    let mut cols = SWEEP_COLUMNS.to_vec();
    cols.extend(["classification", "error"]);
    let mut t = Table::new("sweep", cols);
    t.csv_columns = SWEEP_COLUMNS.len();
    for e in &curve.entries {
        if let Some(err) = &e.error {
            t.notes.push(format!("k = {}: {err}", e.k));
        }
        t.push(vec![
            e.k.into(),
            e.c.re.into(),
            e.c.im.into(),
            e.growth_rate.into(),
            e.residual.into(),
            e.converged.into(),
            format!("{:?}", e.classification).into(),
            e.error.clone().unwrap_or_default().into(),
        ]);
    }
    Ok(t)
}

fn run_asym(cfg: &RunConfig, exec: Execution) -> Result<Table, CliError> {
    let profile = air_profile(cfg)?;
    let ray = rayleigh_opts(cfg);
    let ks = cfg.ks()?;
    let results = exec::map(&ks, exec, |&k| miles_c_sharp(&profile, &cfg.fluids, k, cfg.mode.branch, &ray));
    let mut t = Table::new(
        "asym",
        vec![
            "k", "c_k", "f_i0", "c_sharp", "real_shift", "status", "layer", "position", "u_prime",
            "u_double_prime", "u1", "term",
        ],
    );
    let nan = || Cell::Num(f64::NAN);
    for (&k, r) in ks.iter().zip(results) {
        match r {
            Ok(a) => {
                let status = if a.unstable() { "unstable" } else { "stable" };
                for w in &a.warnings {
                    t.notes.push(format!("k = {k}: hypothesis not met: {w}"));
                }
                for (j, l) in a.layers.iter().enumerate() {
                    t.push(vec![
                        k.into(),
                        a.c_k.into(),
                        a.f_i0.into(),
                        a.c_sharp.into(),
                        a.real_shift.into(),
                        status.into(),
                        (j + 1).into(),
                        l.position.into(),
                        l.u_prime.into(),
                        l.u_double_prime.into(),
                        l.u1.into(),
                        l.term.into(),
                    ]);
                }
            }
            Err(e) => {
                let status = match e {
                    Error::NoCriticalLayer { .. } => "no_critical_layer".to_string(),
                    other => {
                        t.notes.push(format!("k = {k}: {other}"));
                        "failed".to_string()
                    }
                };
                let c_k = ck(&cfg.fluids, k, cfg.mode.branch);
                t.push(vec![
                    k.into(),
                    c_k.into(),
                    nan(),
                    nan(),
                    nan(),
                    status.into(),
                    0usize.into(),
                    nan(),
                    nan(),
                    nan(),
                    nan(),
                    nan(),
                ]);
            }
        }
    }
    Ok(t)
}

fn run_certify(cfg: &RunConfig, exec: Execution) -> Result<Table, CliError> {
    let profile = air_profile(cfg)?;
    let ray = rayleigh_opts(cfg);
    let count = CountOptions { n_boundary: cfg.solver.n_boundary, exec, ..CountOptions::default() };
    let mut t = Table::new(
        "certify-stable",
        vec!["k", "epsilon", "c_k", "margin", "radius", "upper_count", "lower_count", "certified"],
    );
    for k in cfg.ks()? {
        for eps in epsilons(cfg) {
            let r = necessity_certificate(&profile, &cfg.fluids, k, eps, None, cfg.mode.branch, &ray, &count)?;
            t.push(vec![
                k.into(),
                eps.into(),
                r.c_k.into(),
                r.margin.into(),
                r.radius.into(),
                r.upper_count.into(),
                r.lower_count.into(),
                (r.off_axis_roots() == 0).into(),
            ]);
        }
    }
    Ok(t)
}

fn run_pwl(cfg: &RunConfig) -> Result<Table, CliError> {
    let ProfileSpec::Kinked { mu, x2_star } = cfg.profile else {
        return Err(CliError::Config("pwl needs [profile] kind = kinked".into()));
    };
    let f = &cfg.fluids;
    if f.sigma != 0.0 || f.h_plus.is_finite() || f.h_minus.is_finite() {
        return Err(CliError::Config("pwl needs sigma = 0 and h_plus = h_minus = inf".into()));
    }
    let mut t = Table::new(
        "pwl",
        vec!["k", "epsilon", "x2_star", "alpha", "beta", "growth_constant", "root", "re_c", "im_c"],
    );
    for k in cfg.ks()? {
        let xs = match x2_star {
            KinkHeight::Fixed(x) => x,
            KinkHeight::Tuned => PwlClosedForm::tuned_x2_star(mu, k, f.g)?,
        };
        for eps in epsilons(cfg) {
            let d = pwl_dispersion(mu, xs, f, k, eps)?;
            for (i, r) in d.roots.iter().enumerate() {
                t.push(vec![
                    k.into(),
                    eps.into(),
                    xs.into(),
                    d.cubic.alpha.into(),
                    d.cubic.beta.into(),
                    d.cubic.growth_constant().into(),
                    (i + 1).into(),
                    r.re.into(),
                    r.im.into(),
                ]);
            }
        }
    }
    Ok(t)
}
