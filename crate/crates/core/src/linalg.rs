//! Solvers for the shifted stiffness systems `(αI + βA)x = b` that the
//! implicit time step and the inverse iterations need.

use crate::error::{Error, Result};
use crate::mesh::{dot, stiffness_into, Domain};

/// `αI + βA` on a fixed domain with `α ≥ 0`, `β > 0`.
///
/// Intervals are factored once (Thomas algorithm); rectangles use conjugate
/// gradients to a relative residual tolerance.
#[derive(Debug, Clone)]
pub struct ShiftedStiffness {
    domain: Domain,
    shift: f64,
    scale: f64,
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    Thomas { off: f64, c_prime: Vec<f64>, denom: Vec<f64> },
    Cg { tol: f64, max_iter: usize },
}

/// Default relative residual tolerance for the CG path.
pub const CG_TOL: f64 = 1e-11;

impl ShiftedStiffness {
    pub fn new(domain: Domain, shift: f64, scale: f64, cg_tol: f64) -> Result<Self> {
        if !(shift >= 0.0 && scale > 0.0 && shift.is_finite() && scale.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "shifted stiffness needs shift >= 0 and scale > 0, got ({shift}, {scale})"
            )));
        }
        let method = if domain.dim() == 1 {
            let n = domain.len();
            let h = domain.h(0);
            let diag = shift + 2.0 * scale / (h * h);
            let off = -scale / (h * h);
            let mut c_prime = vec![0.0; n];
            let mut denom = vec![0.0; n];
            denom[0] = diag;
            c_prime[0] = off / diag;
            for i in 1..n {
                denom[i] = diag - off * c_prime[i - 1];
                c_prime[i] = off / denom[i];
            }
            Method::Thomas { off, c_prime, denom }
        } else {
            Method::Cg {
                tol: cg_tol,
                max_iter: 20 * domain.len().max(50),
            }
        };
        Ok(Self {
            domain,
            shift,
            scale,
            method,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        stiffness_into(&self.domain, x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.shift * xi + self.scale * *o;
        }
    }

    /// Solves into `x`. The CG path uses the incoming `x` as initial guess.
    /// Returns the number of iterations (0 for the direct path).
    pub fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<usize> {
        match &self.method {
            Method::Thomas { off, c_prime, denom } => {
                let n = b.len();
                x[0] = b[0] / denom[0];
                for i in 1..n {
                    x[i] = (b[i] - off * x[i - 1]) / denom[i];
                }
                for i in (0..n - 1).rev() {
                    x[i] -= c_prime[i] * x[i + 1];
                }
                Ok(0)
            }
            Method::Cg { tol, max_iter } => self.cg(b, x, *tol, *max_iter),
        }
    }

    fn cg(&self, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
        let n = b.len();
        let b_norm = dot(b, b).sqrt();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(0);
        }
        let mut r = vec![0.0; n];
        self.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        let target = tol * b_norm;
        for it in 0..max_iter {
            if rr.sqrt() <= target {
                return Ok(it);
            }
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if rr.sqrt() <= target {
            Ok(max_iter)
        } else {
            Err(Error::NonConvergence {
                iterations: max_iter,
                residual: rr.sqrt() / b_norm,
            })
        }
    }
}

/// Smallest eigenvalue of the stiffness operator by inverse power iteration
/// started from the constant vector.
pub fn smallest_eigenvalue(domain: &Domain) -> Result<f64> {
    let op = ShiftedStiffness::new(*domain, 0.0, 1.0, 1e-13)?;
    let n = domain.len();
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    for _ in 0..10_000 {
        let nrm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
        op.solve(&x, &mut y)?;
        let ny = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= ny);
        stiffness_into(domain, &y, &mut ax);
        let next = dot(&y, &ax);
        std::mem::swap(&mut x, &mut y);
        if (next - lambda).abs() <= 1e-14 * next {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::NonConvergence {
        iterations: 10_000,
        residual: f64::NAN,
    })
}
