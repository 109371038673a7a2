//! The `well`, `classify`, `run` and `sweep` subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, InitKind, Shape};
use super::io;
use crate::error::{Error, Result};
use crate::functionals::{total_energy, Operator};
use crate::linalg::smallest_eigenvalue;
use crate::lyapunov::{self, DecayCertificate, EquivalenceReport};
use crate::mesh::{Domain, GridField};
use crate::solver::{self, MonitorSet, RunOptions, RunOutcome, SimState};
use crate::well::{self, Classification, WellConstants};

#[derive(Debug, Clone, Serialize)]
pub struct WellReport {
    pub fingerprint: String,
    pub dim: usize,
    pub extents: Vec<f64>,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub p: f64,
    pub p_bar: f64,
    pub c_star: f64,
    pub d: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda1_exact: f64,
    pub minimizer_residual: f64,
    pub minimizer_iterations: usize,
    pub starts: usize,
    pub seed: u64,
}

/// Well constants plus the `C*` minimizer, which doubles as the default
/// initial profile.
#[derive(Debug, Clone)]
pub struct WellBundle {
    pub constants: WellConstants,
    pub minimizer: GridField,
    pub report: WellReport,
}

pub fn compute_well(cfg: &ExperimentConfig) -> Result<WellBundle> {
    let domain = cfg.domain()?;
    let p_bar = well::validate_exponent(cfg.p, domain.dim(), cfg.omega)?;
    let opts = cfg.minimize_opts()?;
    let ec = well::compute_c_star(&domain, cfg.p, &opts)?;
    let lambda1 = smallest_eigenvalue(&domain)?;
    let constants = WellConstants::from_c_star(ec.c_star, lambda1, cfg.p, domain)?;
    let report = WellReport {
        fingerprint: domain.fingerprint(),
        dim: domain.dim(),
        extents: domain.extents().to_vec(),
        n: domain.counts().to_vec(),
        h: (0..domain.dim()).map(|a| domain.h(a)).collect(),
        p: cfg.p,
        p_bar,
        c_star: constants.c_star,
        d: constants.d,
        beta: constants.beta,
        lambda1,
        lambda1_exact: domain.lambda1_exact(),
        minimizer_residual: ec.residual,
        minimizer_iterations: ec.iterations,
        starts: opts.starts,
        seed: opts.seed,
    };
    Ok(WellBundle {
        constants,
        minimizer: ec.minimizer,
        report,
    })
}

/// Builds the initial state the config asks for.
pub fn initial_state(cfg: &ExperimentConfig, bundle: &WellBundle) -> Result<SimState> {
    let domain = bundle.constants.domain;
    let params = cfg.params()?;
    match cfg.init {
        InitKind::Zero => Ok(SimState::at_rest(GridField::zeros(domain))),
        InitKind::File => {
            let path = cfg
                .u0_file
                .as_ref()
                .ok_or_else(|| Error::Config("init = file needs u0_file".into()))?;
            let u = io::read_field(path)?;
            domain.check(u.domain())?;
            let v = match &cfg.u1_file {
                Some(p) => io::read_field(p)?,
                None => GridField::zeros(domain),
            };
            SimState::new(0.0, u, v)
        }
        InitKind::Stable | InitKind::Unstable => {
            let shape = match cfg.shape {
                Shape::Minimizer => bundle.minimizer.clone(),
                Shape::Eigenmode => domain.eigenmode([1, 1]),
            };
            let target = cfg.target().expect("stable or unstable");
            well::prepare_initial_data(&params, &bundle.constants, target, &shape)
        }
    }
}

fn recorded_config(cfg: &ExperimentConfig) -> BTreeMap<String, String> {
    // keys that do not change the numbers are left out so reports compare
    // byte for byte across output locations
    cfg.to_pairs()
        .into_iter()
        .filter(|(k, _)| k != "output" && k != "workers")
        .collect()
}

pub fn cmd_well(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let bundle = compute_well(cfg)?;
    let out = cfg.output_dir();
    fs::create_dir_all(&out)?;
    let path = out.join("well.json");
    io::write_json(&path, &bundle.report)?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub config: BTreeMap<String, String>,
    pub well: WellReport,
    pub classification: Classification,
    pub e0_over_d: f64,
}

pub fn cmd_classify(cfg: &ExperimentConfig) -> Result<(PathBuf, ClassifyReport)> {
    cfg.validate()?;
    let bundle = compute_well(cfg)?;
    let state = initial_state(cfg, &bundle)?;
    let params = cfg.params()?;
    let classification = well::classify(&state, &params, &bundle.constants)?;
    let out = cfg.output_dir();
    fs::create_dir_all(&out)?;
    io::write_field(&out.join("u0.txt"), &state.u)?;
    io::write_field(&out.join("u1.txt"), &state.v)?;
    let report = ClassifyReport {
        config: recorded_config(cfg),
        well: bundle.report,
        classification,
        e0_over_d: classification.e / bundle.constants.d,
    };
    let path = out.join("classify.json");
    io::write_json(&path, &report)?;
    Ok((path, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub outcome: String,
    pub t_end: f64,
    pub t_max_estimate: Option<f64>,
    pub steps: usize,
    pub samples: usize,
    pub e0: f64,
    pub e_final: f64,
    pub e0_over_d: f64,
    pub xi: Option<f64>,
    pub xi_fitted: Option<f64>,
    pub fit_r2: Option<f64>,
    /// `ξ_fitted ≥ ξ`.
    pub xi_is_lower_bound: Option<bool>,
    pub certified: Option<bool>,
    pub equivalence_passed: Option<bool>,
    pub monitors: BTreeMap<String, String>,
    pub energy_residual_sum: f64,
    pub energy_residual_max: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: BTreeMap<String, String>,
    pub well: WellReport,
    pub initial: Classification,
    pub certificate: Option<DecayCertificate>,
    pub equivalence: Option<EquivalenceReport>,
    pub outcome: RunOutcome,
    pub summary: Summary,
}

fn monitor_status(armed: bool, outcome: &RunOutcome) -> BTreeMap<String, String> {
    let names = ["nehari", "gradient_bound", "energy_monotone", "boundedness"];
    names
        .iter()
        .map(|n| {
            let status = match outcome {
                _ if !armed => "disarmed",
                RunOutcome::MonitorViolation(v) if v.monitor == *n => "violated",
                _ => "held",
            };
            (n.to_string(), status.to_string())
        })
        .collect()
}

/// Prepares data, runs, certifies, and writes `series.csv`, `report.json`
/// (and `plot.gp` when asked) into `out`.
pub fn execute(cfg: &ExperimentConfig, bundle: &WellBundle, out: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let params = cfg.params()?;
    let step = cfg.step_config()?;
    let wc = &bundle.constants;
    let state = initial_state(cfg, bundle)?;
    let initial = well::classify(&state, &params, wc)?;
    let e0 = total_energy(&state, &params).e;
    let mut notes = Vec::new();

    let certificate = if initial.in_w {
        match lyapunov::select_constants(e0, &params, wc) {
            Ok(c) => Some(c),
            Err(e) => {
                notes.push(format!("no certificate: {e}"));
                None
            }
        }
    } else {
        notes.push("initial data outside the stable set; no certificate".into());
        None
    };
    if params.operator == Operator::MeanCurvature {
        notes.push("mean-curvature operator: monitors disarmed, certificate is heuristic".into());
    }
    let armed = cfg.monitors && initial.in_w && params.operator == Operator::Laplacian;
    let mut opts = RunOptions::new(cfg.horizon).monitors(if armed {
        MonitorSet::all()
    } else {
        MonitorSet::none()
    });
    if let Some(c) = &certificate {
        opts = opts.epsilon(c.epsilon);
    }
    if let Some(s) = cfg.stride {
        opts = opts.stride(s);
    }

    let (series, outcome) = solver::run(&state, &params, &step, &opts)?;

    let (certificate, equivalence) = match (&certificate, &outcome) {
        (Some(c), RunOutcome::Completed { .. }) => {
            let tol = lyapunov::default_cert_tolerance(step.dt);
            match lyapunov::certify_decay(&series, c, tol) {
                Ok(done) => {
                    let eq = lyapunov::equivalence_check(&series, &done);
                    (Some(done), Some(eq))
                }
                Err(e) => {
                    notes.push(format!("certification failed: {e}"));
                    (Some(c.clone()), None)
                }
            }
        }
        (c, _) => (c.clone(), None),
    };

    fs::create_dir_all(out)?;
    let csv = BufWriter::new(fs::File::create(out.join("series.csv"))?);
    series.write_csv(csv)?;
    if cfg.gnuplot {
        let title = format!("p={} omega={} mu={} {}", cfg.p, cfg.omega, cfg.mu, wc.fingerprint);
        fs::write(out.join("plot.gp"), io::gnuplot_script("series.csv", &title))?;
    }

    let last = series.last().map(|s| s.energy).unwrap_or_else(|| total_energy(&state, &params));
    let (name, t_end, t_max) = match &outcome {
        RunOutcome::Completed { t } => ("completed", *t, None),
        RunOutcome::BlewUp { t_max_estimate, last_t } => ("blew_up", *last_t, Some(*t_max_estimate)),
        RunOutcome::MonitorViolation(v) => ("monitor_violation", v.t, None),
    };
    let fitted = certificate.as_ref().and_then(|c| c.xi_fitted);
    let summary = Summary {
        outcome: name.into(),
        t_end,
        t_max_estimate: t_max,
        steps: series.steps,
        samples: series.len(),
        e0,
        e_final: last.e,
        e0_over_d: e0 / wc.d,
        xi: certificate.as_ref().map(|c| c.xi),
        xi_fitted: fitted,
        fit_r2: certificate.as_ref().and_then(|c| c.fit_r2),
        xi_is_lower_bound: certificate.as_ref().zip(fitted).map(|(c, f)| f >= c.xi),
        certified: equivalence.as_ref().and(certificate.as_ref()).map(|c| c.passed()),
        equivalence_passed: equivalence.as_ref().map(|e| e.passed()),
        monitors: monitor_status(armed, &outcome),
        energy_residual_sum: series.energy_residual_sum,
        energy_residual_max: series.energy_residual_max,
        notes,
    };
    let report = RunReport {
        config: recorded_config(cfg),
        well: bundle.report.clone(),
        initial,
        certificate,
        equivalence,
        outcome,
        summary,
    };
    io::write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<(PathBuf, RunReport)> {
    cfg.validate()?;
    let bundle = compute_well(cfg)?;
    let out = cfg.output_dir();
    let report = execute(cfg, &bundle, &out)?;
    Ok((out, report))
}

/// One `--vary key=v1,v2,...` axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Self> {
        let (k, vs) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--vary '{spec}' is not of the form key=v1,v2,...")))?;
        let values: Vec<String> = vs
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::Config(format!("--vary '{spec}' lists no values")));
        }
        Ok(Self {
            key: k.trim().to_string(),
            values,
        })
    }
}

/// Cartesian product, first axis outermost. Points without any damping are
/// outside the model and dropped.
pub fn expand_grid(base: &ExperimentConfig, axes: &[Axis]) -> Result<Vec<(Vec<String>, ExperimentConfig)>> {
    if axes.is_empty() {
        return Err(Error::Config("sweep needs at least one --vary axis".into()));
    }
    let mut points: Vec<(Vec<String>, ExperimentConfig)> = vec![(Vec::new(), base.clone())];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for (vals, cfg) in &points {
            for v in &axis.values {
                let mut c = cfg.clone();
                c.set(&axis.key, v)?;
                let mut vv = vals.clone();
                vv.push(v.clone());
                next.push((vv, c));
            }
        }
        points = next;
    }
    points.retain(|(_, c)| !(c.omega == 0.0 && c.mu == 0.0));
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<String>,
    pub result: std::result::Result<Summary, String>,
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(axes: &[Axis], rows: &[SweepRow]) -> String {
    let mut head = vec!["index".to_string()];
    head.extend(axes.iter().map(|a| a.key.clone()));
    head.extend(
        [
            "outcome",
            "t_end",
            "t_max_estimate",
            "E0_over_d",
            "xi",
            "xi_fitted",
            "fit_r2",
            "certified",
            "error",
        ]
        .map(String::from),
    );
    let mut out = head.join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![r.index.to_string()];
        cells.extend(r.values.iter().cloned());
        match &r.result {
            Ok(s) => cells.extend([
                s.outcome.clone(),
                s.t_end.to_string(),
                cell(s.t_max_estimate),
                s.e0_over_d.to_string(),
                cell(s.xi),
                cell(s.xi_fitted),
                cell(s.fit_r2),
                cell(s.certified),
                String::new(),
            ]),
            Err(e) => {
                cells.extend(["error".to_string()]);
                cells.extend(std::iter::repeat_n(String::new(), 7));
                cells.push(e.replace([',', '\n'], ";"));
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Runs every grid point on a pool of `workers` threads (0: all cores).
/// Each point writes into `point_NNN/`; rows come back in grid order.
pub fn cmd_sweep(base: &ExperimentConfig, axes: &[Axis]) -> Result<(PathBuf, Vec<SweepRow>)> {
    let points = expand_grid(base, axes)?;
    let out = base.output_dir();
    fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(base.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let rows: Vec<SweepRow> = pool.install(|| {
        // well constants depend only on domain, p and the minimizer options
        let key = |c: &ExperimentConfig| -> String {
            let d = c.domain().map(|d: Domain| d.fingerprint()).unwrap_or_default();
            format!("{d}|{}|{}|{}|{}|{}", c.p, c.omega, c.seed, c.starts, c.c_star_tol)
        };
        let mut keys: Vec<(String, &ExperimentConfig)> = Vec::new();
        for (_, c) in &points {
            let k = key(c);
            if !keys.iter().any(|(kk, _)| *kk == k) {
                keys.push((k, c));
            }
        }
        let wells: BTreeMap<String, std::result::Result<WellBundle, String>> = keys
            .par_iter()
            .map(|(k, c)| {
                let b = c.validate().and_then(|_| compute_well(c)).map_err(|e| e.to_string());
                (k.clone(), b)
            })
            .collect();

        points
            .par_iter()
            .enumerate()
            .map(|(index, (values, c))| {
                let dir = out.join(format!("point_{index:03}"));
                let result = match &wells[&key(c)] {
                    Ok(b) => execute(c, b, &dir).map(|r| r.summary).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                SweepRow {
                    index,
                    values: values.clone(),
                    result,
                }
            })
            .collect()
    });

    let path = out.join("sweep.csv");
    fs::write(&path, sweep_csv(axes, &rows))?;
    Ok((path, rows))
}
