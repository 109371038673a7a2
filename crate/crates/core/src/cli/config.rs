//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functionals::{ModelParams, Operator};
use crate::mesh::Domain;
use crate::solver::StepConfig;
use crate::well::{self, MinimizeOpts, Target};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "WAVEWELL_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "wavewell-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Stable,
    Unstable,
    Zero,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Minimizer,
    Eigenmode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: String,
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub omega: f64,
    pub mu: f64,
    pub p: f64,
    pub operator: Operator,
    pub init: InitKind,
    pub fraction: f64,
    pub shape: Shape,
    pub u0_file: Option<PathBuf>,
    pub u1_file: Option<PathBuf>,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linear_tol: f64,
    pub horizon: f64,
    pub stride: Option<usize>,
    pub monitors: bool,
    pub seed: u64,
    pub starts: usize,
    pub c_star_tol: f64,
    pub gnuplot: bool,
    pub workers: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let step = StepConfig::default();
        let min = MinimizeOpts::default();
        Self {
            domain: "interval".into(),
            lx: 1.0,
            ly: 1.0,
            nx: 127,
            ny: 127,
            omega: 0.1,
            mu: 1.0,
            p: 4.0,
            operator: Operator::Laplacian,
            init: InitKind::Stable,
            fraction: 0.5,
            shape: Shape::Minimizer,
            u0_file: None,
            u1_file: None,
            dt: step.dt,
            picard_tol: step.picard_tol,
            picard_max: step.picard_max,
            linear_tol: step.linear_solver_tol,
            horizon: 20.0,
            stride: None,
            monitors: true,
            seed: min.seed,
            starts: min.starts,
            c_star_tol: min.tol,
            gnuplot: false,
            workers: 0,
            output: None,
        }
    }
}

/// Every key with its default and meaning, in the order they are printed.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("domain", "interval", "interval | rectangle"),
    ("lx", "1", "extent along x"),
    ("ly", "1", "extent along y (rectangle only)"),
    ("nx", "127", "interior nodes along x"),
    ("ny", "127", "interior nodes along y (rectangle only)"),
    ("omega", "0.1", "strong damping coefficient"),
    ("mu", "1", "weak damping coefficient"),
    ("p", "4", "source exponent"),
    ("operator", "laplacian", "laplacian | mean_curvature"),
    ("init", "stable", "stable | unstable | zero | file"),
    ("fraction", "0.5", "E(0)/d for stable data, J(u0)/d for unstable data"),
    ("shape", "minimizer", "minimizer | eigenmode, profile scaled into the target set"),
    ("u0_file", "", "displacement field file (init = file)"),
    ("u1_file", "", "velocity field file (init = file, optional)"),
    ("dt", "0.001", "time step"),
    ("picard_tol", "1e-10", "fixed-point tolerance per step"),
    ("picard_max", "50", "fixed-point iteration cap per step"),
    ("linear_tol", "1e-11", "relative residual of the inner linear solves"),
    ("horizon", "20", "final time T"),
    ("stride", "auto", "sample every n-th step (auto: 1 up to 255 nodes per axis, else 10)"),
    ("monitors", "true", "arm the stable-set monitors"),
    ("seed", "24301", "seed of the C* multi-start"),
    ("starts", "8", "random starts of the C* minimization"),
    ("c_star_tol", "1e-10", "stationarity tolerance of the C* minimization"),
    ("gnuplot", "false", "also write plot.gp next to series.csv"),
    ("workers", "0", "sweep worker threads (0: all cores)"),
    ("output", "", "output directory (default: $WAVEWELL_OUTPUT_DIR, else wavewell-out)"),
];

/// Help text listing the keys and their defaults.
pub fn keys_help() -> String {
    let mut s = String::from("Config keys (file lines `key = value`, `#` starts a comment):\n");
    for (k, d, what) in KEYS {
        let d = if d.is_empty() { "-" } else { d };
        let _ = writeln!(s, "  {k:<12} {d:<10} {what}");
    }
    s
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse '{v}' for key '{key}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("expected a boolean for '{key}', got '{v}'"))),
    }
}

fn parse_seed(v: &str) -> Result<u64> {
    let r = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    r.map_err(|_| Error::Config(format!("cannot parse seed '{v}'")))
}

fn opt_path(v: &str) -> Option<PathBuf> {
    if v.is_empty() {
        None
    } else {
        Some(PathBuf::from(v))
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "domain" => match v {
                "interval" | "rectangle" => self.domain = v.into(),
                _ => return Err(Error::Config(format!("unknown domain kind '{v}'"))),
            },
            "lx" => self.lx = parse_num("lx", v)?,
            "ly" => self.ly = parse_num("ly", v)?,
            "nx" => self.nx = parse_num("nx", v)?,
            "ny" => self.ny = parse_num("ny", v)?,
            "omega" => self.omega = parse_num("omega", v)?,
            "mu" => self.mu = parse_num("mu", v)?,
            "p" => self.p = parse_num("p", v)?,
            "operator" => {
                self.operator = match v {
                    "laplacian" => Operator::Laplacian,
                    "mean_curvature" => Operator::MeanCurvature,
                    _ => return Err(Error::Config(format!("unknown operator '{v}'"))),
                }
            }
            "init" => {
                self.init = match v {
                    "stable" => InitKind::Stable,
                    "unstable" => InitKind::Unstable,
                    "zero" => InitKind::Zero,
                    "file" => InitKind::File,
                    _ => return Err(Error::Config(format!("unknown init '{v}'"))),
                }
            }
            "fraction" => self.fraction = parse_num("fraction", v)?,
            "shape" => {
                self.shape = match v {
                    "minimizer" => Shape::Minimizer,
                    "eigenmode" => Shape::Eigenmode,
                    _ => return Err(Error::Config(format!("unknown shape '{v}'"))),
                }
            }
            "u0_file" => self.u0_file = opt_path(v),
            "u1_file" => self.u1_file = opt_path(v),
            "dt" => self.dt = parse_num("dt", v)?,
            "picard_tol" => self.picard_tol = parse_num("picard_tol", v)?,
            "picard_max" => self.picard_max = parse_num("picard_max", v)?,
            "linear_tol" => self.linear_tol = parse_num("linear_tol", v)?,
            "horizon" => self.horizon = parse_num("horizon", v)?,
            "stride" => {
                self.stride = if v == "auto" {
                    None
                } else {
                    Some(parse_num("stride", v)?)
                }
            }
            "monitors" => self.monitors = parse_bool("monitors", v)?,
            "seed" => self.seed = parse_seed(v)?,
            "starts" => self.starts = parse_num("starts", v)?,
            "c_star_tol" => self.c_star_tol = parse_num("c_star_tol", v)?,
            "gnuplot" => self.gnuplot = parse_bool("gnuplot", v)?,
            "workers" => self.workers = parse_num("workers", v)?,
            "output" => self.output = opt_path(v),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{kv}' is not of the form key=value")))?;
        self.set(k, v)
    }

    pub fn parse_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Defaults, then the file (if any), then the overrides in order.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.parse_str(&text)?;
        }
        for kv in overrides {
            cfg.apply_override(kv)?;
        }
        Ok(cfg)
    }

    /// Normalized `key = value` lines; parsing them back gives the same config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let op = match self.operator {
            Operator::Laplacian => "laplacian",
            Operator::MeanCurvature => "mean_curvature",
        };
        let init = match self.init {
            InitKind::Stable => "stable",
            InitKind::Unstable => "unstable",
            InitKind::Zero => "zero",
            InitKind::File => "file",
        };
        let shape = match self.shape {
            Shape::Minimizer => "minimizer",
            Shape::Eigenmode => "eigenmode",
        };
        let v: Vec<(&str, String)> = vec![
            ("domain", self.domain.clone()),
            ("lx", self.lx.to_string()),
            ("ly", self.ly.to_string()),
            ("nx", self.nx.to_string()),
            ("ny", self.ny.to_string()),
            ("omega", self.omega.to_string()),
            ("mu", self.mu.to_string()),
            ("p", self.p.to_string()),
            ("operator", op.into()),
            ("init", init.into()),
            ("fraction", self.fraction.to_string()),
            ("shape", shape.into()),
            ("u0_file", path(&self.u0_file)),
            ("u1_file", path(&self.u1_file)),
            ("dt", self.dt.to_string()),
            ("picard_tol", self.picard_tol.to_string()),
            ("picard_max", self.picard_max.to_string()),
            ("linear_tol", self.linear_tol.to_string()),
            ("horizon", self.horizon.to_string()),
            ("stride", self.stride.map(|s| s.to_string()).unwrap_or_else(|| "auto".into())),
            ("monitors", self.monitors.to_string()),
            ("seed", self.seed.to_string()),
            ("starts", self.starts.to_string()),
            ("c_star_tol", self.c_star_tol.to_string()),
            ("gnuplot", self.gnuplot.to_string()),
            ("workers", self.workers.to_string()),
            ("output", path(&self.output)),
        ];
        v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn domain(&self) -> Result<Domain> {
        match self.domain.as_str() {
            "interval" => Domain::interval(self.lx, self.nx),
            "rectangle" => Domain::rectangle(self.lx, self.ly, self.nx, self.ny),
            other => Err(Error::Config(format!("unknown domain kind '{other}'"))),
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        let params = ModelParams::new(self.omega, self.mu, self.p)?.with_operator(self.operator);
        let dim = self.domain()?.dim();
        well::validate_exponent(self.p, dim, self.omega)?;
        Ok(params)
    }

    pub fn step_config(&self) -> Result<StepConfig> {
        let cfg = StepConfig {
            dt: self.dt,
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
            linear_solver_tol: self.linear_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn minimize_opts(&self) -> Result<MinimizeOpts> {
        if self.starts == 0 {
            return Err(Error::Config("starts must be at least 1".into()));
        }
        if !(self.c_star_tol > 0.0) {
            return Err(Error::Config("c_star_tol must be positive".into()));
        }
        Ok(MinimizeOpts {
            starts: self.starts,
            seed: self.seed,
            tol: self.c_star_tol,
            ..MinimizeOpts::default()
        })
    }

    pub fn target(&self) -> Option<Target> {
        match self.init {
            InitKind::Stable => Some(Target::Stable(self.fraction)),
            InitKind::Unstable => Some(Target::Unstable(self.fraction)),
            _ => None,
        }
    }

    /// Checks everything that can be checked without numerics.
    pub fn validate(&self) -> Result<()> {
        self.domain()?;
        self.params()?;
        self.step_config()?;
        self.minimize_opts()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if self.init == InitKind::File && self.u0_file.is_none() {
            return Err(Error::Config("init = file needs u0_file".into()));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        if let Some(p) = &self.output {
            return p.clone();
        }
        match std::env::var_os(OUTPUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => PathBuf::from(DEFAULT_OUTPUT),
        }
    }
}
