//! Time integration of the damped semilinear wave equation as a first-order
//! system in `(u, v = u_t)`.
//!
//! One step is the implicit midpoint rule on every linear term, with the
//! source (and the mean-curvature correction, when selected) evaluated at the
//! midpoint and resolved by Picard iteration. Writing `w = v^{n+½}`, the step
//! solves
//!
//! ```text
//! ((2 + dt·μ)I + (dt²/2 + dt·ω)A) w = 2vⁿ − dt·A uⁿ + dt·g(uⁿ + (dt/2)w)
//! ```
//!
//! then sets `v^{n+1} = 2w − vⁿ`, `u^{n+1} = uⁿ + dt·w`. The matrix is SPD and
//! fixed for the whole run.

mod blowup;
mod series;

pub use blowup::{detect_blowup, detect_blowup_norms, pole_fit, BlowupThresholds};
pub use series::{Sample, TimeSeries, CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{dissipation_of_velocity, total_energy, EnergyReport, ModelParams, Operator};
use crate::linalg::ShiftedStiffness;
use crate::lyapunov::lyapunov_l;
use crate::mesh::{self, mean_curvature_into, stiffness_into, Domain, GridField};
use crate::well::{nehari_tolerance, source_term};

/// Full dynamical state `(t, u, u_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: GridField,
    pub v: GridField,
}

impl SimState {
    pub fn new(t: f64, u: GridField, v: GridField) -> Result<Self> {
        u.domain().check(v.domain())?;
        Ok(Self { t, u, v })
    }

    pub fn at_rest(u: GridField) -> Self {
        let v = GridField::zeros(*u.domain());
        Self { t: 0.0, u, v }
    }

    pub fn domain(&self) -> &Domain {
        self.u.domain()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linear_solver_tol: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            picard_tol: 1e-10,
            picard_max: 50,
            linear_solver_tol: 1e-11,
        }
    }
}

impl StepConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.picard_tol > 0.0 && self.linear_solver_tol > 0.0) || self.picard_max == 0 {
            return Err(Error::InvalidParams("solver tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub picard_iterations: usize,
    /// Dissipation rate evaluated at the midpoint velocity.
    pub midpoint_dissipation: f64,
}

/// Reusable integrator for one (domain, params, dt) triple.
pub struct Stepper {
    domain: Domain,
    params: ModelParams,
    cfg: StepConfig,
    system: ShiftedStiffness,
    rhs0: Vec<f64>,
    rhs: Vec<f64>,
    w: Vec<f64>,
    w_prev: Vec<f64>,
    um: Vec<f64>,
    tmp: Vec<f64>,
    tmp2: Vec<f64>,
}

impl Stepper {
    pub fn new(domain: Domain, params: ModelParams, cfg: StepConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let dt = cfg.dt;
        let system = ShiftedStiffness::new(
            domain,
            2.0 + dt * params.mu,
            0.5 * dt * dt + dt * params.omega,
            cfg.linear_solver_tol,
        )?;
        let n = domain.len();
        Ok(Self {
            domain,
            params,
            cfg,
            system,
            rhs0: vec![0.0; n],
            rhs: vec![0.0; n],
            w: vec![0.0; n],
            w_prev: vec![0.0; n],
            um: vec![0.0; n],
            tmp: vec![0.0; n],
            tmp2: vec![0.0; n],
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    fn nonlinear(&self) -> bool {
        self.params.source_enabled() || self.params.operator == Operator::MeanCurvature
    }

    /// `dt·g(um)` into `out`: the source plus `A·um − N(um)` for the
    /// mean-curvature operator.
    fn explicit_part(&mut self) {
        let dt = self.cfg.dt;
        let p = self.params.p;
        let source = self.params.source_enabled();
        let mc = self.params.operator == Operator::MeanCurvature;
        if mc {
            stiffness_into(&self.domain, &self.um, &mut self.tmp);
            mean_curvature_into(&self.domain, &self.um, &mut self.tmp2);
        }
        for i in 0..self.rhs.len() {
            let mut g = if source { source_term(self.um[i], p) } else { 0.0 };
            if mc {
                g += self.tmp[i] - self.tmp2[i];
            }
            self.rhs[i] = self.rhs0[i] + dt * g;
        }
    }

    fn set_midpoint(&mut self, u: &[f64]) {
        let half = 0.5 * self.cfg.dt;
        for i in 0..u.len() {
            self.um[i] = u[i] + half * self.w[i];
        }
    }

    /// Advances `state` by one step in place.
    pub fn advance(&mut self, state: &mut SimState) -> Result<StepInfo> {
        self.domain.check(state.domain())?;
        let dt = self.cfg.dt;
        let u = state.u.values();
        let v = state.v.values();
        stiffness_into(&self.domain, u, &mut self.tmp);
        for i in 0..u.len() {
            self.rhs0[i] = 2.0 * v[i] - dt * self.tmp[i];
        }

        let mut iterations = 1;
        self.w.copy_from_slice(v);
        if self.nonlinear() {
            let mut converged = false;
            for it in 1..=self.cfg.picard_max {
                iterations = it;
                self.set_midpoint(u);
                self.explicit_part();
                self.w_prev.copy_from_slice(&self.w);
                self.system.solve(&self.rhs, &mut self.w)?;
                let mut diff: f64 = 0.0;
                let mut scale: f64 = 0.0;
                for (a, b) in self.w.iter().zip(&self.w_prev) {
                    diff = diff.max((a - b).abs());
                    scale = scale.max(a.abs());
                }
                if !diff.is_finite() || !scale.is_finite() {
                    break;
                }
                if it >= 2 && diff <= self.cfg.picard_tol * scale {
                    converged = true;
                    break;
                }
                if scale == 0.0 && diff == 0.0 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::StepFailure {
                    t: state.t,
                    reason: format!("Picard iteration did not converge in {} iterations", self.cfg.picard_max),
                });
            }
        } else {
            self.rhs.copy_from_slice(&self.rhs0);
            self.system.solve(&self.rhs, &mut self.w)?;
        }

        let w = GridField::from_raw(self.domain, self.w.clone());
        let midpoint_dissipation = dissipation_of_velocity(&w, &self.params);
        {
            let uu = state.u.values_mut();
            for i in 0..uu.len() {
                uu[i] += dt * self.w[i];
            }
        }
        {
            let vv = state.v.values_mut();
            for i in 0..vv.len() {
                vv[i] = 2.0 * self.w[i] - vv[i];
            }
        }
        state.t += dt;
        if !state.is_finite() {
            return Err(Error::StepFailure {
                t: state.t,
                reason: "non-finite state".into(),
            });
        }
        Ok(StepInfo {
            picard_iterations: iterations,
            midpoint_dissipation,
        })
    }
}

/// Single implicit-midpoint step.
pub fn step(state: &SimState, params: &ModelParams, cfg: &StepConfig) -> Result<SimState> {
    let mut stepper = Stepper::new(*state.domain(), *params, *cfg)?;
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

/// Runtime checks of the stable-set theory. Only meaningful for data in the
/// stable set with `E(0) < d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MonitorSet {
    /// `I(u(t)) > −tol_I`: the trajectory stays in N⁺.
    pub nehari: bool,
    /// `‖∇u‖₂² ≤ (2p/(p−2))·E(0)·(1 + 1e−6)`.
    pub gradient_bound: bool,
    /// `E` non-increasing up to the step residual.
    pub energy_monotone: bool,
    /// `‖∇u‖₂² + ‖u_t‖₂² ≤ (2p/(p−2) + 2)·E(0)`, uniform boundedness.
    pub boundedness: bool,
}

impl MonitorSet {
    pub fn all() -> Self {
        Self {
            nehari: true,
            gradient_bound: true,
            energy_monotone: true,
            boundedness: true,
        }
    }

    pub fn none() -> Self {
        Self::default()
    }

    fn any(&self) -> bool {
        self.nehari || self.gradient_bound || self.energy_monotone || self.boundedness
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorViolation {
    pub monitor: String,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Completed { t: f64 },
    BlewUp { t_max_estimate: f64, last_t: f64 },
    MonitorViolation(MonitorViolation),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub horizon: f64,
    pub monitors: MonitorSet,
    /// Record every `stride`-th step; `None` picks 1 for grids up to 255
    /// nodes per axis and 10 otherwise.
    pub sample_stride: Option<usize>,
    /// ε used for the `L` column.
    pub epsilon: f64,
    pub blowup: BlowupThresholds,
}

impl RunOptions {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            monitors: MonitorSet::none(),
            sample_stride: None,
            epsilon: 0.0,
            blowup: BlowupThresholds::default(),
        }
    }

    pub fn monitors(mut self, monitors: MonitorSet) -> Self {
        self.monitors = monitors;
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.sample_stride = Some(stride.max(1));
        self
    }
}

fn sample_of(state: &SimState, params: &ModelParams, epsilon: f64) -> (Sample, EnergyReport) {
    let energy = total_energy(state, params);
    let l2_v = mesh::l2_norm_sq(&state.v);
    let grad_v_sq = mesh::grad_norm_sq(&state.v);
    let l = if epsilon == 0.0 {
        energy.e
    } else {
        lyapunov_l(state, params, epsilon).unwrap_or(f64::NAN)
    };
    (
        Sample {
            energy,
            l,
            l2_v,
            grad_v_sq,
        },
        energy,
    )
}

struct Monitors {
    set: MonitorSet,
    p: f64,
    e0: f64,
    dt: f64,
}

impl Monitors {
    fn check(&self, prev: &EnergyReport, cur: &EnergyReport, l2_v: f64) -> Option<MonitorViolation> {
        let violation = |name: &str, value: f64, bound: f64| {
            Some(MonitorViolation {
                monitor: name.to_string(),
                t: cur.t,
                value,
                bound,
            })
        };
        let p = self.p;
        if self.set.nehari {
            let tol = nehari_tolerance(cur.grad_sq, cur.lp_p);
            if cur.i < -tol {
                return violation("nehari", cur.i, -tol);
            }
        }
        if self.set.gradient_bound {
            let bound = 2.0 * p / (p - 2.0) * self.e0 * (1.0 + 1e-6);
            if cur.grad_sq > bound {
                return violation("gradient_bound", cur.grad_sq, bound);
            }
        }
        if self.set.boundedness {
            let bound = (2.0 * p / (p - 2.0) + 2.0) * self.e0 * (1.0 + 1e-9);
            if cur.grad_sq + l2_v > bound {
                return violation("boundedness", cur.grad_sq + l2_v, bound);
            }
        }
        if self.set.energy_monotone {
            let roundoff = 64.0 * f64::EPSILON * (prev.grad_sq + prev.lp_p + prev.kinetic);
            let bound = prev.e + self.dt.powi(3) * self.e0.abs() + roundoff;
            if cur.e > bound {
                return violation("energy_monotone", cur.e, bound);
            }
        }
        None
    }
}

fn default_stride(domain: &Domain) -> usize {
    if domain.max_count() <= 255 {
        1
    } else {
        10
    }
}

/// Integrates from `initial` up to `opts.horizon`.
///
/// Blow-up and monitor violations are outcomes, not errors. A failed step
/// without norm growth is an error (the time step is too large).
pub fn run(
    initial: &SimState,
    params: &ModelParams,
    cfg: &StepConfig,
    opts: &RunOptions,
) -> Result<(TimeSeries, RunOutcome)> {
    if !(opts.horizon.is_finite() && opts.horizon > 0.0) {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {}", opts.horizon)));
    }
    if !initial.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut monitor_set = opts.monitors;
    if params.is_diagnostic() || params.operator == Operator::MeanCurvature {
        // the stable-set theory does not cover these modes
        monitor_set = MonitorSet::none();
    }
    let mut stepper = Stepper::new(*initial.domain(), *params, *cfg)?;
    let stride = opts.sample_stride.unwrap_or_else(|| default_stride(initial.domain()));
    let steps = ((opts.horizon / cfg.dt) - 1e-9).ceil().max(1.0) as usize;

    let mut state = initial.clone();
    let (first, mut prev) = sample_of(&state, params, opts.epsilon);
    let monitors = Monitors {
        set: monitor_set,
        p: params.p,
        e0: prev.e,
        dt: cfg.dt,
    };
    let mut series = TimeSeries {
        samples: vec![first],
        dt: cfg.dt,
        epsilon: opts.epsilon,
        ..TimeSeries::default()
    };
    if monitors.set.any() {
        if let Some(v) = monitors.check(&prev, &prev, first.l2_v) {
            return Ok((series, RunOutcome::MonitorViolation(v)));
        }
    }

    for k in 1..=steps {
        let info = match stepper.advance(&mut state) {
            Ok(info) => info,
            Err(Error::StepFailure { t, reason }) => {
                series.step_failed = true;
                if let Some(est) = detect_blowup(&series, &opts.blowup) {
                    return Ok((
                        series,
                        RunOutcome::BlewUp {
                            t_max_estimate: est,
                            last_t: t,
                        },
                    ));
                }
                return Err(Error::StepFailure {
                    t,
                    reason: format!("{reason}; no norm growth, time step likely too large"),
                });
            }
            Err(e) => return Err(e),
        };
        series.steps = k;
        // no accumulated rounding in the clock
        state.t = initial.t + k as f64 * cfg.dt;
        let (sample, cur) = sample_of(&state, params, opts.epsilon);
        let residual = (cur.e - prev.e - cfg.dt * info.midpoint_dissipation).abs();
        series.energy_residual_sum += residual;
        series.energy_residual_max = series.energy_residual_max.max(residual);

        let violation = monitors.check(&prev, &cur, sample.l2_v);
        let crossed = sample.blowup_norm() > opts.blowup.norm;
        if k % stride == 0 || k == steps || violation.is_some() || crossed {
            series.samples.push(sample);
        }
        if let Some(v) = violation {
            return Ok((series, RunOutcome::MonitorViolation(v)));
        }
        if crossed {
            let est = detect_blowup(&series, &opts.blowup).unwrap_or(state.t);
            return Ok((
                series,
                RunOutcome::BlewUp {
                    t_max_estimate: est,
                    last_t: state.t,
                },
            ));
        }
        prev = cur;
    }
    Ok((series, RunOutcome::Completed { t: state.t }))
}
