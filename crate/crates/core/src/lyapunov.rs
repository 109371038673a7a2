//! Exponential-decay certificates built from the perturbed energy
//!
//! ```text
//! L = E + ε∫u_t u + (εω/2)‖∇u‖₂²
//! ```
//!
//! [`select_constants`] fixes the chain `δ → η → M → ε → (β₁, β₂) → ξ` so that
//! `dL/dt ≤ −ξL` holds for every trajectory starting in the stable set below
//! the well depth; [`certify_decay`] checks that inequality sample by sample
//! on a computed trajectory and fits the observed rate.
//!
//! Concrete choices (the existence argument leaves them free):
//!
//! * `K = C*ᵖ(2p/(p−2)·E0)^{(p−2)/2} < 1`
//! * `δ = (1−K)/(2μ·c₂)` with `c₂ = max(C*², 1/λ₁)` a valid constant in
//!   `‖u‖₂² ≤ c₂‖∇u‖₂²`; unused when `μ = 0`
//! * `η = M = (1−K)/2`
//! * `c₀ = max(1, p/((p−2)λ₁))`, so that `|ε∫u_t u| ≤ ε·c₀·E` on N⁺
//! * `ε = ½·min(μ/(μ/(4δ)+1+M/2), 1/(2c₀))`; for `μ = 0` the strong damping
//!   absorbs the velocity term through `‖u_t‖₂² ≤ λ₁⁻¹‖∇u_t‖₂²` and the first
//!   entry becomes `ωλ₁/(1+M/2)`
//! * `β₁ = 1 − εc₀`, `β₂ = 1 + εc₀ + εωp/(p−2)`, `ξ = Mε/β₂`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::exp_decay_fit;
use crate::functionals::{total_energy, ModelParams};
use crate::mesh;
use crate::solver::{SimState, TimeSeries};
use crate::well::WellConstants;

/// Samples with `E < FIT_CUTOFF·E(0)` are excluded from the rate fit.
pub const FIT_CUTOFF: f64 = 1e-12;

/// Relative tolerance of the `β₁E ≤ L ≤ β₂E` check.
pub const EQUIVALENCE_TOL: f64 = 1e-12;

/// `L = E + ε(∏h)Σvᵢuᵢ + (εω/2)‖∇u‖₂²`. With `ω = 0` the last term vanishes.
pub fn lyapunov_l(state: &SimState, params: &ModelParams, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    let e = total_energy(state, params).e;
    let cross = mesh::l2_inner(&state.v, &state.u)?;
    let grad = if params.omega > 0.0 { mesh::grad_norm_sq(&state.u) } else { 0.0 };
    Ok(e + epsilon * cross + 0.5 * epsilon * params.omega * grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    /// Young parameter; `None` when `μ = 0`.
    pub delta: Option<f64>,
    pub eta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub epsilon: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub xi: f64,
    /// Equivalence constant for the cross term.
    pub c0: f64,
    /// Admissibility quantity `K` of the initial energy.
    pub k: f64,
    pub e0: f64,
    pub xi_fitted: Option<f64>,
    pub fit_r2: Option<f64>,
    pub fit_samples: usize,
    pub violated_at: Option<f64>,
    pub samples_checked: usize,
}

impl DecayCertificate {
    /// Assembles a certificate from a chosen `ε`, deriving `β₁`, `β₂`, `ξ`.
    /// Rejects `ε` for which `β₁ ≤ 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        delta: Option<f64>,
        eta: f64,
        m: f64,
        epsilon: f64,
        c0: f64,
        omega: f64,
        p: f64,
        k: f64,
        e0: f64,
    ) -> Result<Self> {
        if !(eta > 0.0 && m > 0.0 && epsilon > 0.0 && c0 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "certificate constants must be positive (eta {eta}, M {m}, epsilon {epsilon}, c0 {c0})"
            )));
        }
        let beta1 = 1.0 - epsilon * c0;
        if beta1 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon {epsilon} gives beta1 = {beta1} <= 0 (needs epsilon < 1/c0 = {})",
                1.0 / c0
            )));
        }
        let beta2 = 1.0 + epsilon * c0 + epsilon * omega * p / (p - 2.0);
        Ok(Self {
            delta,
            eta,
            m,
            epsilon,
            beta1,
            beta2,
            xi: m * epsilon / beta2,
            c0,
            k,
            e0,
            xi_fitted: None,
            fit_r2: None,
            fit_samples: 0,
            violated_at: None,
            samples_checked: 0,
        })
    }

    pub fn passed(&self) -> bool {
        self.violated_at.is_none()
    }
}

/// Chooses the constant chain for initial energy `e0`.
pub fn select_constants(e0: f64, params: &ModelParams, wc: &WellConstants) -> Result<DecayCertificate> {
    if wc.p != params.p {
        return Err(Error::InvalidParams(format!(
            "well constants computed for p = {} but params have p = {}",
            wc.p, params.p
        )));
    }
    let k = wc.admissibility_quantity(e0);
    if !(e0 < wc.d) || !(k < 1.0) {
        return Err(Error::HypothesesUnmet { e0, d: wc.d });
    }
    if params.omega + params.mu <= 0.0 {
        return Err(Error::InvalidParams("decay certificates need damping".into()));
    }
    let p = params.p;
    let mu = params.mu;
    let lambda1 = wc.lambda1;
    let gap = 1.0 - k;
    let eta = 0.5 * gap;
    let m = eta;
    let c0 = (p / ((p - 2.0) * lambda1)).max(1.0);
    let (delta, velocity_bound) = if mu > 0.0 {
        let c2 = (wc.c_star * wc.c_star).max(1.0 / lambda1);
        let delta = gap / (2.0 * mu * c2);
        (Some(delta), mu / (mu / (4.0 * delta) + 1.0 + 0.5 * m))
    } else {
        (None, params.omega * lambda1 / (1.0 + 0.5 * m))
    };
    let epsilon = 0.5 * velocity_bound.min(1.0 / (2.0 * c0));
    DecayCertificate::new(delta, eta, m, epsilon, c0, params.omega, p, k, e0)
}

/// Checks `L(t_{k+1}) ≤ L(t_k)·e^{−ξΔt}·(1 + tol_cert)` over consecutive
/// samples and fits the observed decay rate of `E`.
pub fn certify_decay(series: &TimeSeries, cert: &DecayCertificate, tol_cert: f64) -> Result<DecayCertificate> {
    if series.is_empty() {
        return Err(Error::Data("empty time series".into()));
    }
    if series.epsilon != cert.epsilon {
        return Err(Error::Data(format!(
            "series recorded L with epsilon {} but the certificate uses {}",
            series.epsilon, cert.epsilon
        )));
    }
    let mut out = cert.clone();
    let e_first = series.samples[0].energy.e;
    if e_first <= 0.0 {
        if series.samples.iter().all(|s| s.energy.e == 0.0 && s.l == 0.0) {
            out.samples_checked = series.len();
            return Ok(out);
        }
        return Err(Error::Data(format!("non-positive initial energy {e_first:e}")));
    }

    let cutoff = FIT_CUTOFF * e_first;
    let window = series
        .samples
        .iter()
        .position(|s| s.energy.e < cutoff)
        .unwrap_or(series.len());
    // the sample that ends the window must still be positive
    let end = (window + 1).min(series.len());
    if let Some(bad) = series.samples[..end].iter().find(|s| !(s.energy.e > 0.0)) {
        return Err(Error::Data(format!("non-positive energy {:e} at t = {}", bad.energy.e, bad.t())));
    }

    for pair in series.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let bound = a.l * (-cert.xi * (b.t() - a.t())).exp() * (1.0 + tol_cert);
        if !(b.l <= bound) {
            out.violated_at = Some(b.t());
            break;
        }
    }
    out.samples_checked = series.len();

    let t: Vec<f64> = series.samples[..window].iter().map(|s| s.t()).collect();
    let e: Vec<f64> = series.samples[..window].iter().map(|s| s.energy.e).collect();
    if let Some((rate, fit)) = exp_decay_fit(&t, &e) {
        out.xi_fitted = Some(rate);
        out.fit_r2 = Some(fit.r2);
        out.fit_samples = window;
    }
    Ok(out)
}

/// `10·dt²`, the discretization allowance for [`certify_decay`].
pub fn default_cert_tolerance(dt: f64) -> f64 {
    10.0 * dt * dt
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub violations: usize,
    pub first_violation: Option<f64>,
    /// Extremes of `L/E` over samples with `E > 0`.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `β₁E ≤ L ≤ β₂E` on every sample to relative tolerance 1e−12.
pub fn equivalence_check(series: &TimeSeries, cert: &DecayCertificate) -> EquivalenceReport {
    let mut rep = EquivalenceReport {
        samples: series.len(),
        violations: 0,
        first_violation: None,
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
    };
    for s in &series.samples {
        let e = s.energy.e;
        let slack = EQUIVALENCE_TOL * e.abs();
        let ok = cert.beta1 * e - slack <= s.l && s.l <= cert.beta2 * e + slack;
        if e > 0.0 {
            rep.min_ratio = rep.min_ratio.min(s.l / e);
            rep.max_ratio = rep.max_ratio.max(s.l / e);
        }
        if !ok {
            rep.violations += 1;
            rep.first_violation.get_or_insert(s.t());
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::EnergyReport;
    use crate::mesh::{Domain, GridField};
    use crate::solver::Sample;

    fn unit3() -> Domain {
        Domain::interval(1.0, 3).unwrap()
    }

    #[test]
    fn l_hand_values() {
        let d = unit3();
        let p = ModelParams::new(1.0, 1.0, 4.0).unwrap();
        let zero = SimState::at_rest(GridField::zeros(d));
        assert_eq!(lyapunov_l(&zero, &p, 0.1).unwrap(), 0.0);

        let ones = GridField::new(d, vec![1.0; 3]).unwrap();
        let s = SimState::new(0.0, ones.clone(), ones.clone()).unwrap();
        assert!((lyapunov_l(&s, &p, 0.1).unwrap() - 4.6625).abs() < 1e-13);

        let p0 = ModelParams::new(0.0, 1.0, 4.0).unwrap();
        let rest = SimState::at_rest(ones);
        assert_eq!(lyapunov_l(&rest, &p0, 0.3).unwrap(), total_energy(&rest, &p0).e);
        assert!(lyapunov_l(&rest, &p0, 0.0).is_err());
    }

    fn unit_wc(lambda1: f64) -> WellConstants {
        WellConstants::from_c_star(1.0, lambda1, 4.0, Domain::interval(1.0, 7).unwrap()).unwrap()
    }

    /// E0 with K = C*ᵖ(2p/(p−2)E0)^{(p−2)/2} equal to `k` for C* = 1, p = 4.
    fn e0_for_k(k: f64) -> f64 {
        k / 4.0
    }

    #[test]
    fn plug_in_chain() {
        let lambda1 = 9.8;
        let wc = unit_wc(lambda1);
        let params = ModelParams::new(0.0, 1.0, 4.0).unwrap();
        let cert = select_constants(e0_for_k(0.5), &params, &wc).unwrap();
        assert!((cert.k - 0.5).abs() < 1e-15);
        assert!((cert.delta.unwrap() - 0.25).abs() < 1e-15);
        assert!((cert.eta - 0.25).abs() < 1e-15);
        assert!((cert.m - 0.25).abs() < 1e-15);
        let c0 = (4.0 / (2.0 * lambda1)).max(1.0);
        assert_eq!(cert.c0, c0);
        let eps = 0.5 * (1.0f64 / (1.0 + 1.0 + 0.125)).min(1.0 / (2.0 * c0));
        assert!((cert.epsilon - eps).abs() < 1e-15);
        // μC*²δ + K − 1 = 0.25 + 0.5 − 1
        assert!((1.0 * 1.0 * cert.delta.unwrap() + cert.k - 1.0 + 0.25).abs() < 1e-15);
        assert!(cert.epsilon * (1.0 / (4.0 * 0.25) + 1.0 + cert.m / 2.0) - 1.0 < 0.0);
        assert!(0.0 < cert.beta1 && cert.beta1 <= cert.beta2);
        assert!((cert.xi - cert.m * cert.epsilon / cert.beta2).abs() < 1e-16);
    }

    #[test]
    fn small_energy_limit() {
        let wc = unit_wc(9.8);
        let params = ModelParams::new(0.5, 1.0, 4.0).unwrap();
        let cert = select_constants(1e-14, &params, &wc).unwrap();
        assert!((cert.eta - 0.5).abs() < 1e-6);
        assert!((cert.m - 0.5).abs() < 1e-6);
    }

    #[test]
    fn hypotheses_unmet_above_depth() {
        let wc = unit_wc(9.8);
        let params = ModelParams::new(0.5, 1.0, 4.0).unwrap();
        assert!(matches!(
            select_constants(wc.d, &params, &wc),
            Err(Error::HypothesesUnmet { .. })
        ));
        assert!(matches!(
            select_constants(2.0 * wc.d, &params, &wc),
            Err(Error::HypothesesUnmet { .. })
        ));
    }

    #[test]
    fn strong_damping_only_certificate() {
        let wc = unit_wc(9.8);
        let params = ModelParams::new(0.1, 0.0, 4.0).unwrap();
        let cert = select_constants(e0_for_k(0.3), &params, &wc).unwrap();
        assert!(cert.delta.is_none());
        assert!(cert.xi > 0.0);
        assert!(cert.epsilon * (1.0 + cert.m / 2.0) < params.omega * wc.lambda1);
    }

    #[test]
    fn rate_is_monotone_in_initial_energy() {
        let wc = unit_wc(9.8);
        for (omega, mu) in [(0.0, 1.0), (0.1, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            let params = ModelParams::new(omega, mu, 4.0).unwrap();
            let mut prev: Option<DecayCertificate> = None;
            for i in 1..20 {
                let e0 = wc.d * i as f64 / 20.0;
                let c = select_constants(e0, &params, &wc).unwrap();
                assert!(c.xi > 0.0);
                if let Some(p) = &prev {
                    assert!(c.xi < p.xi && c.eta < p.eta && c.m < p.m);
                }
                prev = Some(c);
            }
        }
    }

    #[test]
    fn oversized_epsilon_rejected() {
        let c0 = 2.0;
        assert!(DecayCertificate::new(Some(0.1), 0.2, 0.2, 0.6, c0, 0.0, 4.0, 0.5, 1.0).is_err());
        assert!(DecayCertificate::new(Some(0.1), 0.2, 0.2, 0.4, c0, 0.0, 4.0, 0.5, 1.0).is_ok());
    }

    fn synthetic(t: &[f64], e: impl Fn(f64) -> f64, l: impl Fn(f64) -> f64) -> TimeSeries {
        let samples = t
            .iter()
            .map(|&t| {
                let mut energy = EnergyReport::from_norms(t, 0.0, 0.0, 0.0, 4.0);
                energy.e = e(t);
                Sample {
                    energy,
                    l: l(t),
                    l2_v: 0.0,
                    grad_v_sq: 0.0,
                }
            })
            .collect();
        TimeSeries::from_samples(samples, t[1] - t[0])
    }

    fn cert_with_xi(xi: f64) -> DecayCertificate {
        let mut c = DecayCertificate::new(Some(0.1), 0.2, 0.2, 0.1, 1.0, 0.0, 4.0, 0.5, 1.0).unwrap();
        c.xi = xi;
        c
    }

    #[test]
    fn synthetic_exponential_certifies() {
        let t: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let mut ts = synthetic(&t, |t| (-t).exp(), |t| (-t).exp());
        let cert = cert_with_xi(0.5);
        ts.epsilon = cert.epsilon;
        let done = certify_decay(&ts, &cert, 0.0).unwrap();
        assert!(done.passed());
        assert!((done.xi_fitted.unwrap() - 1.0).abs() < 1e-6);
        assert!(done.fit_r2.unwrap() > 0.999999);
    }

    #[test]
    fn bump_is_a_violation() {
        let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let l = |t: f64| if (t - 3.0).abs() < 1e-9 { 2.0 * (-t).exp() } else { (-t).exp() };
        let mut ts = synthetic(&t, l, l);
        let cert = cert_with_xi(0.5);
        ts.epsilon = cert.epsilon;
        let done = certify_decay(&ts, &cert, 1e-6).unwrap();
        assert_eq!(done.violated_at, Some(t[30]));
    }

    #[test]
    fn nonpositive_energy_is_a_data_error() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let mut ts = synthetic(&t, |t| if t > 4.5 { -1e-3 } else { 1.0 - 0.1 * t }, |_| 1.0);
        let cert = cert_with_xi(0.1);
        ts.epsilon = cert.epsilon;
        assert!(matches!(certify_decay(&ts, &cert, 0.0), Err(Error::Data(_))));
        ts.epsilon = 0.0;
        assert!(matches!(certify_decay(&ts, &cert, 0.0), Err(Error::Data(_))));
    }

    #[test]
    fn equivalence_on_rest_states() {
        // u_t = 0 and ω = 0: L = E, so any β₁ ≤ 1 ≤ β₂ passes
        let t: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let ts = synthetic(&t, |t| (-t).exp(), |t| (-t).exp());
        let rep = equivalence_check(&ts, &cert_with_xi(0.1));
        assert!(rep.passed());
        assert!((rep.min_ratio - 1.0).abs() < 1e-15);
        let bad = synthetic(&t, |t| (-t).exp(), |t| 2.0 * (-t).exp());
        assert_eq!(equivalence_check(&bad, &cert_with_xi(0.1)).violations, 11);
    }
}
