//! Potential-well functionals `I`, `J`, the total energy `E` and its
//! dissipation rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{self, GridField};
use crate::solver::SimState;

/// Elliptic part of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    #[default]
    Laplacian,
    /// `-div(∇u/√(1+|∇u|²))`. Energy monitors are heuristic in this mode.
    MeanCurvature,
}

/// Physical runs need at least one damping term. Diagnostic runs may drop the
/// damping entirely and optionally switch the source off; monitors are not
/// armed for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Physical,
    Diagnostic { source: bool },
}

/// Coefficients of `u_tt − Δu − ωΔu_t + μu_t = u|u|^{p−2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub mu: f64,
    pub p: f64,
    #[serde(default)]
    pub operator: Operator,
    #[serde(default)]
    pub mode: Mode,
}

impl ModelParams {
    pub fn new(omega: f64, mu: f64, p: f64) -> Result<Self> {
        let params = Self {
            omega,
            mu,
            p,
            operator: Operator::Laplacian,
            mode: Mode::Physical,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for oracle runs: damping may vanish, the source may be off.
    pub fn diagnostic(omega: f64, mu: f64, p: f64, source: bool) -> Result<Self> {
        let params = Self {
            omega,
            mu,
            p,
            operator: Operator::Laplacian,
            mode: Mode::Diagnostic { source },
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_operator(mut self, operator: Operator) -> Self {
        self.operator = operator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::InvalidParams(format!("omega must be >= 0, got {}", self.omega)));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidParams(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.p.is_finite() && self.p > 2.0) {
            return Err(Error::InvalidExponent {
                p: self.p,
                p_bar: f64::INFINITY,
            });
        }
        if self.mode == Mode::Physical && self.omega + self.mu <= 0.0 {
            return Err(Error::InvalidParams(
                "at least one of omega, mu must be positive outside diagnostic mode".into(),
            ));
        }
        Ok(())
    }

    pub fn source_enabled(&self) -> bool {
        match self.mode {
            Mode::Physical => true,
            Mode::Diagnostic { source } => source,
        }
    }

    pub fn is_diagnostic(&self) -> bool {
        matches!(self.mode, Mode::Diagnostic { .. })
    }
}

/// Energy bookkeeping at one instant. Constituent norms are cached so the
/// monitors never recompute them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub kinetic: f64,
    pub grad_sq: f64,
    pub lp_p: f64,
}

impl EnergyReport {
    pub fn from_norms(t: f64, grad_sq: f64, lp_p: f64, l2_v: f64, p: f64) -> Self {
        let j = 0.5 * grad_sq - lp_p / p;
        let kinetic = 0.5 * l2_v;
        Self {
            t,
            i: grad_sq - lp_p,
            j,
            e: j + kinetic,
            kinetic,
            grad_sq,
            lp_p,
        }
    }
}

/// `I(u) = ‖∇u‖₂² − ‖u‖ₚᵖ`.
pub fn functional_i(u: &GridField, params: &ModelParams) -> f64 {
    mesh::grad_norm_sq(u) - mesh::lp_norm_p_raw(u.domain(), u.values(), params.p)
}

/// `J(u) = ½‖∇u‖₂² − (1/p)‖u‖ₚᵖ`.
pub fn functional_j(u: &GridField, params: &ModelParams) -> f64 {
    0.5 * mesh::grad_norm_sq(u) - mesh::lp_norm_p_raw(u.domain(), u.values(), params.p) / params.p
}

/// `E = J(u) + ½‖u_t‖₂²` together with its constituents.
pub fn total_energy(state: &SimState, params: &ModelParams) -> EnergyReport {
    let grad_sq = mesh::grad_norm_sq(&state.u);
    let lp_p = mesh::lp_norm_p_raw(state.u.domain(), state.u.values(), params.p);
    EnergyReport::from_norms(state.t, grad_sq, lp_p, mesh::l2_norm_sq(&state.v), params.p)
}

/// `dE/dt = −ω‖∇u_t‖₂² − μ‖u_t‖₂²` evaluated at the state's velocity.
pub fn dissipation_rate(state: &SimState, params: &ModelParams) -> f64 {
    dissipation_of_velocity(&state.v, params)
}

pub(crate) fn dissipation_of_velocity(v: &GridField, params: &ModelParams) -> f64 {
    let mut rate = -params.mu * mesh::l2_norm_sq(v);
    if params.omega > 0.0 {
        rate -= params.omega * mesh::grad_norm_sq(v);
    }
    rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Domain;
    use proptest::prelude::*;

    fn unit3() -> Domain {
        Domain::interval(1.0, 3).unwrap()
    }

    fn ones() -> GridField {
        GridField::new(unit3(), vec![1.0; 3]).unwrap()
    }

    fn p4() -> ModelParams {
        ModelParams::new(1.0, 1.0, 4.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 0.0, 4.0).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 4.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 2.0).is_err());
        assert!(ModelParams::diagnostic(0.0, 0.0, 4.0, true).is_ok());
        assert!(!ModelParams::diagnostic(0.0, 0.0, 4.0, false).unwrap().source_enabled());
    }

    #[test]
    fn i_and_j_hand_values() {
        let z = GridField::zeros(unit3());
        assert_eq!(functional_i(&z, &p4()), 0.0);
        assert_eq!(functional_j(&z, &p4()), 0.0);
        assert!((functional_i(&ones(), &p4()) - 7.25).abs() < 1e-14);
        assert!((functional_j(&ones(), &p4()) - 3.8125).abs() < 1e-14);
        // J = (p−2)/(2p)·‖∇u‖² + I/p
        let split: f64 = 2.0 / 8.0 * 8.0 + 7.25 / 4.0;
        assert!((split - 3.8125).abs() < 1e-15);
    }

    #[test]
    fn i_scaling_root() {
        let root = (8.0f64 / 0.75).sqrt();
        assert!((root - 3.2660).abs() < 1e-4);
        let at_root = functional_i(&ones().scaled(root), &p4());
        assert!(at_root.abs() < 1e-12);
    }

    #[test]
    fn energy_hand_values() {
        let d = unit3();
        let zero = SimState::new(0.0, GridField::zeros(d), GridField::zeros(d)).unwrap();
        assert_eq!(total_energy(&zero, &p4()).e, 0.0);

        let s = SimState::new(0.0, ones(), GridField::zeros(d)).unwrap();
        assert!((total_energy(&s, &p4()).e - 3.8125).abs() < 1e-14);

        let v = GridField::new(d, vec![2.0, 0.0, 0.0]).unwrap();
        let s = SimState::new(0.0, GridField::zeros(d), v).unwrap();
        let rep = total_energy(&s, &p4());
        assert!((rep.e - 0.5).abs() < 1e-15);
        assert!((rep.kinetic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dissipation_hand_values() {
        let d = unit3();
        let v = GridField::new(d, vec![2.0, 0.0, 0.0]).unwrap();
        let s = SimState::new(0.0, GridField::zeros(d), v.clone()).unwrap();
        assert!((dissipation_rate(&s, &p4()) + 33.0).abs() < 1e-13);

        let mu_only = ModelParams::new(0.0, 2.0, 4.0).unwrap();
        assert!((dissipation_rate(&s, &mu_only) + 2.0 * mesh::l2_norm_sq(&v)).abs() < 1e-15);

        let rest = SimState::new(0.0, ones(), GridField::zeros(d)).unwrap();
        assert_eq!(dissipation_rate(&rest, &p4()), 0.0);
    }

    proptest! {
        #[test]
        fn report_invariants(vals in prop::collection::vec(-3.0f64..3.0, 12),
                             vel in prop::collection::vec(-3.0f64..3.0, 12),
                             p in 2.2f64..6.0) {
            let d = Domain::interval(1.7, 12).unwrap();
            let params = ModelParams::new(0.3, 0.5, p).unwrap();
            let s = SimState::new(1.5, GridField::new(d, vals).unwrap(), GridField::new(d, vel).unwrap()).unwrap();
            let r = total_energy(&s, &params);
            let ulp = 4.0 * f64::EPSILON;
            let scale = r.grad_sq + r.lp_p + r.kinetic + 1.0;
            prop_assert!((r.j - (0.5 * r.grad_sq - r.lp_p / p)).abs() <= ulp * scale);
            prop_assert!((r.i - (r.grad_sq - r.lp_p)).abs() <= ulp * scale);
            prop_assert!((r.e - (r.j + r.kinetic)).abs() <= ulp * scale);
            prop_assert!(dissipation_rate(&s, &params) <= 0.0);
        }

        #[test]
        fn i_scaling_law(vals in prop::collection::vec(-2.0f64..2.0, 9), lam in 0.0f64..4.0, p in 2.5f64..5.0) {
            let d = Domain::interval(1.0, 9).unwrap();
            let params = ModelParams::new(1.0, 0.0, p).unwrap();
            let u = GridField::new(d, vals).unwrap();
            let g = mesh::grad_norm_sq(&u);
            let l = mesh::lp_norm_p(&u, p).unwrap();
            let expected = lam * lam * g - lam.powf(p) * l;
            let got = functional_i(&u.scaled(lam), &params);
            prop_assert!((got - expected).abs() <= 1e-11 * (1.0 + lam * lam * g + lam.powf(p) * l));
        }
    }
}
