//! Potential-well constants and set membership.
//!
//! The best embedding constant `C*` of `H₀¹ ↪ Lᵖ` is computed by minimizing
//! the scale-invariant ratio `‖∇u‖₂ / ‖u‖ₚ` over the grid. The well depth `d`
//! and the Nehari distance `β` then follow in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{total_energy, ModelParams};
use crate::linalg::{smallest_eigenvalue, ShiftedStiffness};
use crate::mesh::{self, dot, stiffness_into, Domain, GridField};
use crate::solver::SimState;

/// Critical Sobolev exponent `p̄` for dimension `dim`.
pub fn critical_exponent(dim: usize, omega: f64) -> f64 {
    if dim <= 2 {
        return f64::INFINITY;
    }
    let n = dim as f64;
    if omega > 0.0 {
        2.0 * n / (n - 2.0)
    } else {
        (2.0 * n - 2.0) / (n - 2.0)
    }
}

/// Accepts `2 < p ≤ p̄(dim, ω)` and returns `p̄`.
pub fn validate_exponent(p: f64, dim: usize, omega: f64) -> Result<f64> {
    let p_bar = critical_exponent(dim, omega);
    if p.is_finite() && p > 2.0 && p <= p_bar {
        Ok(p_bar)
    } else {
        Err(Error::InvalidExponent { p, p_bar })
    }
}

/// Options for the multi-start minimization behind [`compute_c_star`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOpts {
    /// Number of random starts in addition to the eigenmode start.
    pub starts: usize,
    pub seed: u64,
    /// Include the first stiffness eigenmode as a start.
    pub eigenmode_start: bool,
    /// Convergence threshold on the relative preconditioned gradient norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeOpts {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0x5eed,
            eigenmode_start: true,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingConstant {
    pub c_star: f64,
    /// Minimizer normalized to `‖u‖ₚ = 1`, largest-magnitude entry positive.
    pub minimizer: GridField,
    pub residual: f64,
    pub iterations: usize,
}

#[inline]
pub(crate) fn source_term(x: f64, p: f64) -> f64 {
    // u|u|^{p-2}
    if p == 4.0 {
        x * x * x
    } else if p == 3.0 {
        x * x.abs()
    } else {
        x * x.abs().powf(p - 2.0)
    }
}

/// State of the ratio minimization in unweighted coordinates:
/// `log R = ½ ln(uᵀAu) − (1/p) ln Σ|uᵢ|ᵖ`.
struct RatioEval {
    log_r: f64,
    grad: Vec<f64>,
}

struct RatioProblem<'a> {
    domain: Domain,
    p: f64,
    precond: &'a ShiftedStiffness,
}

impl RatioProblem<'_> {
    fn normalize(&self, u: &mut [f64]) {
        let lp = mesh::lp_norm_p_raw(&self.domain, u, self.p);
        let s = lp.powf(-1.0 / self.p);
        u.iter_mut().for_each(|v| *v *= s);
    }

    fn eval(&self, u: &[f64], au: &mut [f64]) -> RatioEval {
        stiffness_into(&self.domain, u, au);
        let a = dot(u, au);
        let b: f64 = u.iter().map(|v| v.abs().powf(self.p)).sum();
        let grad = au
            .iter()
            .zip(u)
            .map(|(av, uv)| av / a - source_term(*uv, self.p) / b)
            .collect();
        RatioEval {
            log_r: 0.5 * a.ln() - b.ln() / self.p,
            grad,
        }
    }

    /// Preconditioned gradient `A⁻¹g` and the dimensionless residual
    /// `√(gᵀA⁻¹g · uᵀAu)`.
    fn precondition(&self, g: &[f64], u: &[f64], au: &[f64], z: &mut [f64]) -> Result<f64> {
        z.iter_mut().for_each(|v| *v = 0.0);
        self.precond.solve(g, z)?;
        Ok((dot(g, z).max(0.0) * dot(u, au)).sqrt())
    }

    /// Projected (normalized) gradient descent in the stiffness metric with
    /// Barzilai–Borwein steps and a nonmonotone safeguard.
    fn minimize(&self, start: Vec<f64>, opts: &MinimizeOpts) -> Result<(Vec<f64>, f64, f64, usize)> {
        let n = start.len();
        let mut u = start;
        self.normalize(&mut u);
        let mut au = vec![0.0; n];
        let mut cur = self.eval(&u, &mut au);
        let mut z = vec![0.0; n];
        let mut res = self.precondition(&cur.grad, &u, &au, &mut z)?;
        let mut tau = dot(&u, &au);
        let mut history = vec![cur.log_r];
        let mut trial = vec![0.0; n];
        let mut au_trial = vec![0.0; n];
        for it in 0..opts.max_iter {
            if res < opts.tol {
                return Ok((u, cur.log_r, res, it));
            }
            let ref_val = history.iter().rev().take(10).cloned().fold(f64::MIN, f64::max);
            let slope = dot(&cur.grad, &z);
            let mut accepted = None;
            let mut step = tau;
            for _ in 0..60 {
                for i in 0..n {
                    trial[i] = u[i] - step * z[i];
                }
                self.normalize(&mut trial);
                if trial.iter().all(|v| v.is_finite()) {
                    let ev = self.eval(&trial, &mut au_trial);
                    if ev.log_r.is_finite()
                        && ev.log_r <= ref_val - 1e-4 * step * slope + 1e-15 * ref_val.abs()
                    {
                        accepted = Some(ev);
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some(next) = accepted else {
                // no decrease possible at working precision
                return if res < opts.tol * 1e3 {
                    Ok((u, cur.log_r, res, it))
                } else {
                    Err(Error::NonConvergence { iterations: it, residual: res })
                };
            };
            let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
            std::mem::swap(&mut u, &mut trial);
            std::mem::swap(&mut au, &mut au_trial);
            cur = next;
            res = self.precondition(&cur.grad, &u, &au, &mut z)?;
            history.push(cur.log_r);

            let mut as_ = vec![0.0; n];
            stiffness_into(&self.domain, &s, &mut as_);
            let sas = dot(&s, &as_);
            let sy = dot(&s, &y);
            let a = dot(&u, &au);
            tau = if sy > 0.0 && sas > 0.0 { (sas / sy).clamp(1e-8 * a, 1e8 * a) } else { a };
        }
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            residual: res,
        })
    }
}

fn sign_normalize(u: &mut [f64]) {
    let mut idx = 0;
    for (i, v) in u.iter().enumerate() {
        if v.abs() > u[idx].abs() {
            idx = i;
        }
    }
    if u[idx] < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Best constant `C*` in `‖u‖ₚ ≤ C*‖∇u‖₂`, by multi-start minimization of
/// `‖∇u‖₂/‖u‖ₚ`. Starts run in parallel; the result is the minimum over the
/// converged starts, ties broken by start index.
pub fn compute_c_star(domain: &Domain, p: f64, opts: &MinimizeOpts) -> Result<EmbeddingConstant> {
    validate_exponent(p, domain.dim(), 1.0)?;
    let precond = ShiftedStiffness::new(*domain, 0.0, 1.0, 1e-12)?;
    let problem = RatioProblem {
        domain: *domain,
        p,
        precond: &precond,
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if opts.eigenmode_start {
        starts.push(domain.eigenmode([1, 1]).into_values());
    }
    for k in 0..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
        starts.push((0..domain.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    if starts.is_empty() {
        return Err(Error::InvalidParams("at least one start is required".into()));
    }

    let results: Vec<_> = starts
        .into_par_iter()
        .map(|s| problem.minimize(s, opts))
        .collect();

    let mut best: Option<(Vec<f64>, f64, f64, usize)> = None;
    let mut last_err = None;
    for r in results {
        match r {
            Ok(cand) => {
                if best.as_ref().is_none_or(|b| cand.1 < b.1) {
                    best = Some(cand);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((mut u, _, residual, iterations)) = best else {
        return Err(last_err.unwrap_or(Error::NonConvergence {
            iterations: opts.max_iter,
            residual: f64::NAN,
        }));
    };
    sign_normalize(&mut u);
    problem.normalize(&mut u);
    let minimizer = GridField::new(*domain, u)?;
    let c_star = 1.0 / mesh::grad_norm_sq(&minimizer).sqrt();
    Ok(EmbeddingConstant {
        c_star,
        minimizer,
        residual,
        iterations,
    })
}

/// Variational constants of the potential well on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellConstants {
    pub c_star: f64,
    pub d: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub p: f64,
    pub domain: Domain,
    pub fingerprint: String,
}

impl WellConstants {
    /// Derives `d` and `β` from `C*` through the mountain-pass relation.
    pub fn from_c_star(c_star: f64, lambda1: f64, p: f64, domain: Domain) -> Result<Self> {
        if !(c_star > 0.0 && lambda1 > 0.0 && p > 2.0) {
            return Err(Error::InvalidParams(format!(
                "well constants need c_star > 0, lambda1 > 0, p > 2 (got {c_star}, {lambda1}, {p})"
            )));
        }
        let d = (p - 2.0) / (2.0 * p) * c_star.powf(-2.0 * p / (p - 2.0));
        let beta = (2.0 * d * p / (p - 2.0)).sqrt();
        Ok(Self {
            c_star,
            d,
            beta,
            lambda1,
            p,
            domain,
            fingerprint: domain.fingerprint(),
        })
    }

    /// `C*ᵖ (2p/(p−2) E0)^{(p−2)/2}`; below one exactly when `E0 < d`.
    /// Non-positive energies map to zero.
    pub fn admissibility_quantity(&self, e0: f64) -> f64 {
        admissibility_quantity(e0, self.p, self.c_star)
    }
}

pub fn admissibility_quantity(e0: f64, p: f64, c_star: f64) -> f64 {
    if e0 <= 0.0 {
        return 0.0;
    }
    c_star.powf(p) * (2.0 * p / (p - 2.0) * e0).powf((p - 2.0) / 2.0)
}

/// Computes `C*`, `d`, `β` and the smallest stiffness eigenvalue.
pub fn well_constants(domain: &Domain, p: f64, opts: &MinimizeOpts) -> Result<WellConstants> {
    well_constants_with_minimizer(domain, p, opts).map(|(wc, _)| wc)
}

pub fn well_constants_with_minimizer(
    domain: &Domain,
    p: f64,
    opts: &MinimizeOpts,
) -> Result<(WellConstants, GridField)> {
    let ec = compute_c_star(domain, p, opts)?;
    let lambda1 = smallest_eigenvalue(domain)?;
    let wc = WellConstants::from_c_star(ec.c_star, lambda1, p, *domain)?;
    Ok((wc, ec.minimizer))
}

/// The scale `λ* = (‖∇u‖₂²/‖u‖ₚᵖ)^{1/(p−2)}` maximizing `J(λu)`; `λ*u` lies
/// on the Nehari manifold.
pub fn nehari_scale(u: &GridField, p: f64) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let g = mesh::grad_norm_sq(u);
    let l = mesh::lp_norm_p(u, p)?;
    Ok((g / l).powf(1.0 / (p - 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NehariRegion {
    #[serde(rename = "N_plus")]
    Plus,
    #[serde(rename = "N_zero")]
    Zero,
    #[serde(rename = "N_minus")]
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub region: NehariRegion,
    pub in_w: bool,
    pub in_u: bool,
    pub high_energy: bool,
    /// Whether `C*ᵖ(2p/(p−2)E)^{(p−2)/2} < 1` holds for the state's energy.
    pub admissible: bool,
    pub admissibility_quantity: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub tol_i: f64,
}

/// Dead band for the sign of `I`: `1e-9·max(‖∇u‖₂², ‖u‖ₚᵖ)`.
pub fn nehari_tolerance(grad_sq: f64, lp_p: f64) -> f64 {
    1e-9 * grad_sq.max(lp_p)
}

fn check_consistent(state: &SimState, params: &ModelParams, wc: &WellConstants) -> Result<()> {
    wc.domain.check(state.u.domain())?;
    if wc.p != params.p {
        return Err(Error::InvalidParams(format!(
            "well constants computed for p = {} but params have p = {}",
            wc.p, params.p
        )));
    }
    Ok(())
}

/// Places a state relative to the Nehari manifold and the stable and
/// unstable sets.
pub fn classify(state: &SimState, params: &ModelParams, wc: &WellConstants) -> Result<Classification> {
    check_consistent(state, params, wc)?;
    let rep = total_energy(state, params);
    let tol_i = nehari_tolerance(rep.grad_sq, rep.lp_p);
    let region = if state.u.is_zero() || rep.i > tol_i {
        NehariRegion::Plus
    } else if rep.i < -tol_i {
        NehariRegion::Minus
    } else {
        NehariRegion::Zero
    };
    let below = rep.j <= wc.d;
    let k = wc.admissibility_quantity(rep.e);
    Ok(Classification {
        region,
        in_w: below && region == NehariRegion::Plus,
        in_u: below && region == NehariRegion::Minus,
        high_energy: rep.e >= wc.d,
        admissible: k < 1.0,
        admissibility_quantity: k,
        i: rep.i,
        j: rep.j,
        e: rep.e,
        tol_i,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "set", content = "fraction")]
pub enum Target {
    /// `u0 = sφ` with `s < λ*(φ)` and `E(0) = fraction·d`.
    Stable(f64),
    /// `u0 = sφ` with `s > λ*(φ)` and `J(u0) = fraction·d`.
    Unstable(f64),
}

/// Scales `shape` so the initial data hit the requested energy level on the
/// requested side of the Nehari manifold. The initial velocity is zero.
pub fn prepare_initial_data(
    params: &ModelParams,
    wc: &WellConstants,
    target: Target,
    shape: &GridField,
) -> Result<SimState> {
    wc.domain.check(shape.domain())?;
    let p = params.p;
    let lam = nehari_scale(shape, p)?;
    let g = mesh::grad_norm_sq(shape);
    let l = mesh::lp_norm_p(shape, p)?;
    let j_of = |s: f64| 0.5 * s * s * g - s.powf(p) * l / p;
    let j_max = j_of(lam);

    let (lo, hi, level, stable) = match target {
        Target::Stable(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Infeasible(format!("stable fraction must lie in (0, 1), got {f}")));
            }
            (0.0, lam, f * wc.d, true)
        }
        Target::Unstable(f) => {
            let level = f * wc.d;
            if !level.is_finite() || level > j_max {
                return Err(Error::Infeasible(format!(
                    "J level {level:e} exceeds the mountain-pass height {j_max:e} of this shape"
                )));
            }
            let mut hi = 2.0 * lam;
            while j_of(hi) > level {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::Infeasible("no scale reaches the J level".into()));
                }
            }
            (lam, hi, level, false)
        }
    };
    if stable && level >= j_max {
        return Err(Error::Infeasible(format!(
            "energy {level:e} not reachable below the Nehari manifold (max {j_max:e})"
        )));
    }

    // J is increasing on [0, λ*] and decreasing beyond it.
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let below = j_of(mid) < level;
        if below == stable {
            a = mid;
        } else {
            b = mid;
        }
    }
    let s = if (j_of(a) - level).abs() <= (j_of(b) - level).abs() { a } else { b };
    let u0 = shape.scaled(s);
    let state = SimState::new(0.0, u0, GridField::zeros(*shape.domain()))?;
    let cls = classify(&state, params, wc)?;
    let expected = if stable { NehariRegion::Plus } else { NehariRegion::Minus };
    if cls.region != expected {
        return Err(Error::Infeasible(format!(
            "scaled data landed in {:?}, expected {:?}",
            cls.region, expected
        )));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Domain {
        Domain::interval(1.0, n).unwrap()
    }

    fn quick() -> MinimizeOpts {
        MinimizeOpts {
            starts: 3,
            ..MinimizeOpts::default()
        }
    }

    #[test]
    fn critical_exponent_values() {
        assert_eq!(critical_exponent(1, 1.0), f64::INFINITY);
        assert_eq!(critical_exponent(2, 0.0), f64::INFINITY);
        assert_eq!(critical_exponent(3, 1.0), 6.0);
        assert_eq!(critical_exponent(3, 0.0), 4.0);
        assert!(validate_exponent(17.0, 1, 1.0).is_ok());
        assert_eq!(validate_exponent(6.0, 3, 0.5), Ok(6.0));
        assert_eq!(
            validate_exponent(5.0, 3, 0.0),
            Err(Error::InvalidExponent { p: 5.0, p_bar: 4.0 })
        );
        assert!(validate_exponent(2.0, 1, 1.0).is_err());
    }

    #[test]
    fn constants_from_unit_c_star() {
        let wc = WellConstants::from_c_star(1.0, 10.0, 4.0, unit(7)).unwrap();
        assert!((wc.d - 0.25).abs() < 1e-15);
        assert!((wc.beta - 1.0).abs() < 1e-15);
        assert!(WellConstants::from_c_star(0.0, 1.0, 4.0, unit(7)).is_err());
    }

    #[test]
    fn c_star_embedding_and_normalization() {
        let d = unit(63);
        let ec = compute_c_star(&d, 4.0, &quick()).unwrap();
        assert!(ec.residual < 1e-10);
        assert!((mesh::lp_norm_p(&ec.minimizer, 4.0).unwrap() - 1.0).abs() < 1e-12);
        let max = ec.minimizer.values().iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - ec.minimizer.max_abs()).abs() == 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let u = GridField::new(d, (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let lhs = mesh::lp_norm_p(&u, 4.0).unwrap().powf(0.25);
            let rhs = ec.c_star * mesh::grad_norm_sq(&u).sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-8));
        }
    }

    #[test]
    fn c_star_two_dimensional() {
        let d = Domain::rectangle(1.0, 1.0, 15, 15).unwrap();
        let ec = compute_c_star(&d, 3.0, &quick()).unwrap();
        let phi = d.eigenmode([1, 1]);
        let ratio = mesh::lp_norm_p(&phi, 3.0).unwrap().powf(1.0 / 3.0) / mesh::grad_norm_sq(&phi).sqrt();
        assert!(ec.c_star >= ratio);
        assert!(ec.c_star < 1.2 * ratio);
    }

    #[test]
    fn c_star_rejects_bad_exponent() {
        assert!(matches!(
            compute_c_star(&unit(15), 2.0, &quick()),
            Err(Error::InvalidExponent { .. })
        ));
    }

    #[test]
    fn nehari_scale_values() {
        let d = Domain::interval(1.0, 3).unwrap();
        let u = GridField::new(d, vec![1.0; 3]).unwrap();
        let lam = nehari_scale(&u, 4.0).unwrap();
        assert!((lam - 3.26599).abs() < 1e-5);
        let params = ModelParams::new(1.0, 1.0, 4.0).unwrap();
        let on = u.scaled(lam);
        assert!(crate::functionals::functional_i(&on, &params).abs() < 1e-10 * mesh::grad_norm_sq(&on));
        assert!((nehari_scale(&on, 4.0).unwrap() - 1.0).abs() < 1e-12);
        let j_star = crate::functionals::functional_j(&on, &params);
        for f in [0.5, 0.9, 1.1, 2.0] {
            assert!(j_star >= crate::functionals::functional_j(&u.scaled(f * lam), &params));
        }
        assert_eq!(nehari_scale(&GridField::zeros(d), 4.0), Err(Error::ZeroField));
    }

    fn toy_wc(d: Domain) -> WellConstants {
        WellConstants::from_c_star(0.5, d.lambda1_exact(), 4.0, d).unwrap()
    }

    #[test]
    fn classify_regions() {
        let d = Domain::interval(1.0, 3).unwrap();
        let params = ModelParams::new(1.0, 1.0, 4.0).unwrap();
        let wc = toy_wc(d);
        let zero = SimState::new(0.0, GridField::zeros(d), GridField::zeros(d)).unwrap();
        let c = classify(&zero, &params, &wc).unwrap();
        assert_eq!(c.region, NehariRegion::Plus);
        assert!(c.in_w);

        let u = GridField::new(d, vec![1.0; 3]).unwrap();
        let s = SimState::new(0.0, u.clone(), GridField::zeros(d)).unwrap();
        let c = classify(&s, &params, &wc).unwrap();
        assert_eq!(c.region, NehariRegion::Plus);
        assert!((c.i - 7.25).abs() < 1e-13);

        let lam = nehari_scale(&u, 4.0).unwrap();
        let s = SimState::new(0.0, u.scaled(2.0 * lam), GridField::zeros(d)).unwrap();
        assert_eq!(classify(&s, &params, &wc).unwrap().region, NehariRegion::Minus);

        let s = SimState::new(0.0, u.scaled(lam), GridField::zeros(d)).unwrap();
        assert_eq!(classify(&s, &params, &wc).unwrap().region, NehariRegion::Zero);

        let p3 = ModelParams::new(1.0, 1.0, 3.0).unwrap();
        assert!(classify(&s, &p3, &wc).is_err());
    }

    #[test]
    fn prepared_data_hits_targets() {
        let d = unit(31);
        let params = ModelParams::new(0.1, 1.0, 4.0).unwrap();
        let (wc, phi) = well_constants_with_minimizer(&d, 4.0, &quick()).unwrap();

        let st = prepare_initial_data(&params, &wc, Target::Stable(0.5), &phi).unwrap();
        let c = classify(&st, &params, &wc).unwrap();
        assert_eq!(c.region, NehariRegion::Plus);
        assert!(c.in_w && c.admissible);
        assert!((c.e - 0.5 * wc.d).abs() < 1e-10);
        assert!(wc.admissibility_quantity(c.e) < 1.0);
        assert!(st.v.is_zero());

        let un = prepare_initial_data(&params, &wc, Target::Unstable(0.9), &phi).unwrap();
        let c = classify(&un, &params, &wc).unwrap();
        assert_eq!(c.region, NehariRegion::Minus);
        assert!(c.in_u && c.j <= wc.d);

        let mode = d.eigenmode([1, 1]);
        let st = prepare_initial_data(&params, &wc, Target::Stable(0.3), &mode).unwrap();
        assert!((classify(&st, &params, &wc).unwrap().e - 0.3 * wc.d).abs() < 1e-10);

        assert!(matches!(
            prepare_initial_data(&params, &wc, Target::Stable(1.0), &phi),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            prepare_initial_data(&params, &wc, Target::Unstable(1.5), &phi),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn nehari_minimum_matches_well_depth() {
        let d = unit(63);
        let params = ModelParams::new(1.0, 1.0, 3.0).unwrap();
        let (wc, phi) = well_constants_with_minimizer(&d, 3.0, &quick()).unwrap();
        assert!((wc.beta.powi(2) - 2.0 * 3.0 / 1.0 * wc.d).abs() < 1e-13 * wc.beta.powi(2));
        let lam = nehari_scale(&phi, 3.0).unwrap();
        let j = crate::functionals::functional_j(&phi.scaled(lam), &params);
        assert!((j - wc.d).abs() < 1e-6 * wc.d);
        assert!((mesh::grad_norm_sq(&phi.scaled(lam)).sqrt() - wc.beta).abs() < 1e-6);
    }
}
