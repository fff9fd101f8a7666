//! INI run configuration: `[fluids]`, `[profile]`, `[mode]`, `[run]`,
//! `[solver]`, `[output]`. Depths accept `inf`.

use ini::{Ini, Properties};
use shear_stability::dispersion::FluidParams;
use shear_stability::profiles::{AnalyticFamily, ShearProfile};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

fn cfg(e: shear_stability::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ck,
    Kh,
    Solve,
    Sweep,
    Asym,
    CertifyStable,
    Pwl,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Ck,
        Command::Kh,
        Command::Solve,
        Command::Sweep,
        Command::Asym,
        Command::CertifyStable,
        Command::Pwl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ck => "ck",
            Command::Kh => "kh",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Asym => "asym",
            Command::CertifyStable => "certify-stable",
            Command::Pwl => "pwl",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Kink height of the `kinked` profile; `tuned` resonates with each `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KinkHeight {
    Fixed(f64),
    Tuned,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Constant { u0: f64 },
    Linear { u0: f64, mu: f64 },
    Tanh { u_max: f64, depth: f64 },
    Exponential { u_max: f64, depth: f64 },
    Logarithmic { scale: f64, roughness: f64 },
    Polynomial { coeffs: Vec<f64> },
    PiecewiseLinear { u0: f64, breakpoints: Vec<f64>, slopes: Vec<f64> },
    Kinked { mu: f64, x2_star: KinkHeight },
    Table { file: PathBuf },
}

impl ProfileSpec {
    /// Build the air profile on the column `[0, h_plus]`.
    pub fn build(&self, h_plus: f64) -> Result<ShearProfile, CliError> {
        let p = match self {
            ProfileSpec::Constant { u0 } => ShearProfile::constant(*u0, h_plus),
            ProfileSpec::Linear { u0, mu } => ShearProfile::linear_shear(*u0, *mu, h_plus),
            ProfileSpec::Tanh { u_max, depth } => ShearProfile::tanh(*u_max, *depth, h_plus),
            ProfileSpec::Exponential { u_max, depth } => {
                ShearProfile::analytic(AnalyticFamily::Exponential { u_max: *u_max, depth: *depth }, h_plus)
            }
            ProfileSpec::Logarithmic { scale, roughness } => ShearProfile::analytic(
                AnalyticFamily::Logarithmic { scale: *scale, roughness: *roughness },
                h_plus,
            ),
            ProfileSpec::Polynomial { coeffs } => {
                ShearProfile::analytic(AnalyticFamily::Polynomial { coeffs: coeffs.clone() }, h_plus)
            }
            ProfileSpec::PiecewiseLinear { u0, breakpoints, slopes } => {
                ShearProfile::piecewise_linear(*u0, breakpoints.clone(), slopes.clone(), h_plus)
            }
            ProfileSpec::Kinked { mu, x2_star: KinkHeight::Fixed(x) } => ShearProfile::kinked_linear(*mu, *x, h_plus),
            ProfileSpec::Kinked { x2_star: KinkHeight::Tuned, .. } => {
                return Err(CliError::Config("x2_star = tuned is only meaningful for the pwl command".into()))
            }
            ProfileSpec::Table { file } => {
                let p = ShearProfile::from_table_file(file).map_err(cfg)?;
                if (p.h_plus() - h_plus).abs() > 1e-12 * h_plus.abs().max(1.0) {
                    return Err(CliError::Config(format!(
                        "profile table ends at x2 = {} but [fluids] h_plus = {h_plus}",
                        p.h_plus()
                    )));
                }
                Ok(p)
            }
        };
        p.map_err(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KSpec {
    Single(f64),
    Range { k_min: f64, k_max: f64, n: usize, log: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub k: KSpec,
    /// `c_k` branch, `+1` or `-1`.
    pub branch: f64,
    /// Density ratios for `pwl` and `certify-stable`; empty means the ratio of `[fluids]`.
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSpec {
    pub rtol: f64,
    pub switch_threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub n_boundary: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { rtol: 1e-10, switch_threshold: 1e-7, tol: 1e-11, max_iter: 50, n_boundary: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fluids: FluidParams,
    pub profile: ProfileSpec,
    pub mode: ModeSpec,
    pub command: Command,
    pub solver: SolverSpec,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fluids: FluidParams {
                rho_plus: 1.22,
                rho_minus: 1000.0,
                g: 9.81,
                sigma: 0.074,
                h_plus: 5.0,
                h_minus: f64::INFINITY,
            },
            profile: ProfileSpec::Tanh { u_max: 10.0, depth: 1.0 },
            mode: ModeSpec { k: KSpec::Single(1.0), branch: 1.0, epsilons: Vec::new() },
            command: Command::Kh,
            solver: SolverSpec::default(),
            output: OutputSpec { path: None, format: Format::Csv },
        }
    }
}

/// Key lookup with bookkeeping so unknown keys can be reported.
struct Section<'a> {
    name: &'static str,
    props: Option<&'a Properties>,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(ini: &'a Ini, name: &'static str) -> Self {
        Self { name, props: ini.section(Some(name)), used: BTreeSet::new() }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        let v = self.props?.get(key)?;
        self.used.insert(key.to_string());
        Some(v.trim())
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("[{}] {key}: {msg}", self.name))
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => parse_num(v).map(Some).map_err(|m| self.err(key, m)),
        }
    }

    fn num_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn req(&mut self, key: &str) -> Result<f64, CliError> {
        self.num(key)?.ok_or_else(|| self.err(key, "required"))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_num)
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|m| self.err(key, m)),
        }
    }

    fn req_list(&mut self, key: &str) -> Result<Vec<f64>, CliError> {
        self.list(key)?.ok_or_else(|| self.err(key, "required"))
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(p) = self.props {
            for (k, _) in p.iter() {
                if !self.used.contains(k) {
                    return Err(CliError::Config(format!("[{}] unknown key `{k}`", self.name)));
                }
            }
        }
        Ok(())
    }
}

fn parse_num(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")),
    }
}

fn parse_count(s: &mut Section, key: &str, default: usize) -> Result<usize, CliError> {
    match s.raw(key) {
        None => Ok(default),
        Some(v) => v.parse::<usize>().map_err(|_| s.err(key, format!("`{v}` is not a count"))),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parse INI text. Relative table paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("config syntax: {e}")))?;
        for (name, _) in ini.iter() {
            match name {
                None | Some("fluids" | "profile" | "mode" | "run" | "solver" | "output") => {}
                Some(other) => return Err(CliError::Config(format!("unknown section [{other}]"))),
            }
        }
        if ini.general_section().iter().next().is_some() {
            return Err(CliError::Config("keys must sit inside a section".into()));
        }
        let d = RunConfig::default();

        let mut s = Section::new(&ini, "fluids");
        let fluids = FluidParams {
            rho_plus: s.num_or("rho_plus", d.fluids.rho_plus)?,
            rho_minus: s.num_or("rho_minus", d.fluids.rho_minus)?,
            g: s.num_or("g", d.fluids.g)?,
            sigma: s.num_or("sigma", d.fluids.sigma)?,
            h_plus: s.num_or("h_plus", d.fluids.h_plus)?,
            h_minus: s.num_or("h_minus", d.fluids.h_minus)?,
        };
        s.finish()?;
        fluids.validate().map_err(cfg)?;

        let mut s = Section::new(&ini, "profile");
        let profile = match s.raw("kind") {
            None => d.profile.clone(),
            Some(kind) => match kind {
                "constant" => ProfileSpec::Constant { u0: s.req("u0")? },
                "linear" => ProfileSpec::Linear { u0: s.num_or("u0", 0.0)?, mu: s.req("mu")? },
                "tanh" => ProfileSpec::Tanh { u_max: s.req("u_max")?, depth: s.req("depth")? },
                "exponential" => ProfileSpec::Exponential { u_max: s.req("u_max")?, depth: s.req("depth")? },
                "logarithmic" => {
                    ProfileSpec::Logarithmic { scale: s.req("scale")?, roughness: s.req("roughness")? }
                }
                "polynomial" => ProfileSpec::Polynomial { coeffs: s.req_list("coeffs")? },
                "piecewise_linear" => ProfileSpec::PiecewiseLinear {
                    u0: s.num_or("u0", 0.0)?,
                    breakpoints: s.list("breakpoints")?.unwrap_or_default(),
                    slopes: s.req_list("slopes")?,
                },
                "kinked" => {
                    let mu = s.req("mu")?;
                    let x2_star = match s.raw("x2_star") {
                        Some("tuned") => KinkHeight::Tuned,
                        Some(v) => KinkHeight::Fixed(parse_num(v).map_err(|m| s.err("x2_star", m))?),
                        None => return Err(s.err("x2_star", "required (a height or `tuned`)")),
                    };
                    ProfileSpec::Kinked { mu, x2_star }
                }
                "table" => {
                    let f = s.raw("file").ok_or_else(|| s.err("file", "required"))?;
                    let p = Path::new(f);
                    let file = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
                    if !file.is_file() {
                        return Err(s.err("file", format!("{} does not exist", file.display())));
                    }
                    ProfileSpec::Table { file }
                }
                other => return Err(s.err("kind", format!("unknown profile kind `{other}`"))),
            },
        };
        s.finish()?;

        let mut s = Section::new(&ini, "mode");
        let k = match (s.num("k")?, s.num("k_min")?, s.num("k_max")?) {
            (Some(k), None, None) => KSpec::Single(k),
            (None, Some(k_min), Some(k_max)) => {
                let n = parse_count(&mut s, "n", 16)?;
                let log = match s.raw("spacing") {
                    None | Some("linear") => false,
                    Some("log") => true,
                    Some(v) => return Err(s.err("spacing", format!("`{v}` (linear or log)"))),
                };
                KSpec::Range { k_min, k_max, n, log }
            }
            (None, None, None) => d.mode.k.clone(),
            _ => return Err(CliError::Config("[mode] give either k or both k_min and k_max".into())),
        };
        let branch = s.num_or("branch", 1.0)?;
        if branch != 1.0 && branch != -1.0 {
            return Err(s.err("branch", "must be 1 or -1"));
        }
        let epsilons = s.list("epsilons")?.unwrap_or_default();
        s.finish()?;
        let mode = ModeSpec { k, branch, epsilons };
        mode.validate()?;

        let mut s = Section::new(&ini, "run");
        let command = match s.raw("command") {
            Some(c) => c.parse()?,
            None => d.command,
        };
        s.finish()?;

        let mut s = Section::new(&ini, "solver");
        let ds = SolverSpec::default();
        let solver = SolverSpec {
            rtol: s.num_or("rtol", ds.rtol)?,
            switch_threshold: s.num_or("switch_threshold", ds.switch_threshold)?,
            tol: s.num_or("tol", ds.tol)?,
            max_iter: parse_count(&mut s, "max_iter", ds.max_iter)?,
            n_boundary: parse_count(&mut s, "n_boundary", ds.n_boundary)?,
        };
        s.finish()?;
        if !(solver.rtol > 0.0 && solver.tol > 0.0 && solver.switch_threshold >= 0.0 && solver.max_iter > 0) {
            return Err(CliError::Config("[solver] tolerances must be positive".into()));
        }

        let mut s = Section::new(&ini, "output");
        let path = s.raw("path").filter(|p| !p.is_empty()).map(PathBuf::from);
        let format = match s.raw("format") {
            Some(f) => f.parse()?,
            None => Format::Csv,
        };
        s.finish()?;

        Ok(RunConfig { fluids, profile, mode, command, solver, output: OutputSpec { path, format } })
    }

    /// INI text that parses back to `self`.
    pub fn to_ini(&self) -> String {
        let f = &self.fluids;
        let mut o = String::new();
        let _ = writeln!(o, "# shearstab run configuration (SI units)");
        let _ = writeln!(o, "[fluids]");
        for (k, v) in [
            ("rho_plus", f.rho_plus),
            ("rho_minus", f.rho_minus),
            ("g", f.g),
            ("sigma", f.sigma),
            ("h_plus", f.h_plus),
            ("h_minus", f.h_minus),
        ] {
            let _ = writeln!(o, "{k} = {v}");
        }
        let _ = writeln!(o, "\n[profile]");
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        match &self.profile {
            ProfileSpec::Constant { u0 } => {
                let _ = write!(o, "kind = constant\nu0 = {u0}\n");
            }
            ProfileSpec::Linear { u0, mu } => {
                let _ = write!(o, "kind = linear\nu0 = {u0}\nmu = {mu}\n");
            }
            ProfileSpec::Tanh { u_max, depth } => {
                let _ = write!(o, "kind = tanh\nu_max = {u_max}\ndepth = {depth}\n");
            }
            ProfileSpec::Exponential { u_max, depth } => {
                let _ = write!(o, "kind = exponential\nu_max = {u_max}\ndepth = {depth}\n");
            }
            ProfileSpec::Logarithmic { scale, roughness } => {
                let _ = write!(o, "kind = logarithmic\nscale = {scale}\nroughness = {roughness}\n");
            }
            ProfileSpec::Polynomial { coeffs } => {
                let _ = write!(o, "kind = polynomial\ncoeffs = {}\n", list(coeffs));
            }
            ProfileSpec::PiecewiseLinear { u0, breakpoints, slopes } => {
                let _ = write!(
                    o,
                    "kind = piecewise_linear\nu0 = {u0}\nbreakpoints = {}\nslopes = {}\n",
                    list(breakpoints),
                    list(slopes)
                );
            }
            ProfileSpec::Kinked { mu, x2_star } => {
                let x = match x2_star {
                    KinkHeight::Fixed(x) => x.to_string(),
                    KinkHeight::Tuned => "tuned".into(),
                };
                let _ = write!(o, "kind = kinked\nmu = {mu}\nx2_star = {x}\n");
            }
            ProfileSpec::Table { file } => {
                let _ = write!(o, "kind = table\nfile = {}\n", file.display());
            }
        }
        let _ = writeln!(o, "\n[mode]");
        match &self.mode.k {
            KSpec::Single(k) => {
                let _ = writeln!(o, "k = {k}");
            }
            KSpec::Range { k_min, k_max, n, log } => {
                let sp = if *log { "log" } else { "linear" };
                let _ = write!(o, "k_min = {k_min}\nk_max = {k_max}\nn = {n}\nspacing = {sp}\n");
            }
        }
        let _ = writeln!(o, "branch = {}", self.mode.branch);
        if !self.mode.epsilons.is_empty() {
            let _ = writeln!(o, "epsilons = {}", list(&self.mode.epsilons));
        }
        let _ = write!(o, "\n[run]\ncommand = {}\n", self.command.name());
        let s = &self.solver;
        let _ = write!(
            o,
            "\n[solver]\nrtol = {}\nswitch_threshold = {}\ntol = {}\nmax_iter = {}\nn_boundary = {}\n",
            s.rtol, s.switch_threshold, s.tol, s.max_iter, s.n_boundary
        );
        let _ = writeln!(o, "\n[output]");
        if let Some(p) = &self.output.path {
            let _ = writeln!(o, "path = {}", p.display());
        }
        let _ = writeln!(o, "format = {}", self.output.format.name());
        o
    }

    /// The `k` values of the run in ascending order.
    pub fn ks(&self) -> Result<Vec<f64>, CliError> {
        Ok(match &self.mode.k {
            KSpec::Single(k) => vec![*k],
            KSpec::Range { k_min, k_max, n, log } => {
                shear_stability::eigensolver::k_grid(*k_min, *k_max, *n, *log).map_err(cfg)?
            }
        })
    }
}

impl ModeSpec {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("[mode] {m}")));
        match &self.k {
            KSpec::Single(k) if !(*k > 0.0 && k.is_finite()) => return bad("k must be positive"),
            KSpec::Range { k_min, k_max, n, .. }
                if !(*k_min > 0.0 && k_max >= k_min && k_max.is_finite() && *n >= 1) =>
            {
                return bad("need 0 < k_min <= k_max and n >= 1")
            }
            _ => {}
        }
        if self.epsilons.iter().any(|e| !(0.0..1.0).contains(e)) {
            return bad("epsilons must lie in [0, 1)");
        }
        Ok(())
    }
}
