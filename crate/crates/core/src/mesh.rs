//! Uniform grids on intervals and rectangles with homogeneous Dirichlet
//! boundary, the stiffness operator, its mean-curvature variant, and the
//! quadrature norms consumed by the energy functionals.
//!
//! Only interior nodes are stored. Boundary values are identically zero and
//! enter the stencils as ghost values.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

/// A discretized interval `(0, L)` or rectangle `(0, Lx) x (0, Ly)`.
///
/// For an interval the second axis is a dummy of length one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    kind: DomainKind,
    extents: [f64; 2],
    n: [usize; 2],
}

impl Domain {
    pub fn interval(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidDomain(format!("extent must be positive, got {length}")));
        }
        if n < 2 {
            return Err(Error::InvalidDomain(format!("need at least 2 interior nodes, got {n}")));
        }
        Ok(Self {
            kind: DomainKind::Interval,
            extents: [length, 1.0],
            n: [n, 1],
        })
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        for (l, n) in [(lx, nx), (ly, ny)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidDomain(format!("extent must be positive, got {l}")));
            }
            if n < 2 {
                return Err(Error::InvalidDomain(format!(
                    "need at least 2 interior nodes per axis, got {n}"
                )));
            }
        }
        Ok(Self {
            kind: DomainKind::Rectangle,
            extents: [lx, ly],
            n: [nx, ny],
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            DomainKind::Rectangle => 2,
        }
    }

    /// Physical extents of the active axes.
    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim()]
    }

    /// Interior node counts of the active axes.
    pub fn counts(&self) -> &[usize] {
        &self.n[..self.dim()]
    }

    /// Grid spacing along `axis`: extent / (n + 1).
    pub fn h(&self, axis: usize) -> f64 {
        self.extents[axis] / (self.n[axis] + 1) as f64
    }

    /// Quadrature weight of one node, the product of the spacings.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.h(a)).product()
    }

    /// Measure of the continuous domain.
    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    /// Number of stored (interior) nodes.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest interior count over the active axes.
    pub fn max_count(&self) -> usize {
        self.counts().iter().copied().max().unwrap_or(0)
    }

    /// Coordinates of node `k` (x fastest).
    pub fn coords(&self, k: usize) -> [f64; 2] {
        let i = k % self.n[0];
        let j = k / self.n[0];
        let x = (i + 1) as f64 * self.h(0);
        let y = if self.dim() == 2 { (j + 1) as f64 * self.h(1) } else { 0.0 };
        [x, y]
    }

    /// Stable textual identity used in report and field file headers.
    pub fn fingerprint(&self) -> String {
        match self.kind {
            DomainKind::Interval => format!("interval:L={}:n={}", self.extents[0], self.n[0]),
            DomainKind::Rectangle => format!(
                "rectangle:Lx={},Ly={}:nx={},ny={}",
                self.extents[0], self.extents[1], self.n[0], self.n[1]
            ),
        }
    }

    pub fn parse_fingerprint(s: &str) -> Result<Self> {
        let bad = || Error::Data(format!("unrecognized domain fingerprint '{s}'"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let ext = parts.next().ok_or_else(bad)?;
        let cnt = parts.next().ok_or_else(bad)?;
        let value = |kv: &str, key: &str| -> Result<String> {
            kv.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_owned)
                .ok_or_else(bad)
        };
        match kind {
            "interval" => {
                let l: f64 = value(ext, "L")?.parse().map_err(|_| bad())?;
                let n: usize = value(cnt, "n")?.parse().map_err(|_| bad())?;
                Domain::interval(l, n)
            }
            "rectangle" => {
                let (ex, ey) = ext.split_once(',').ok_or_else(bad)?;
                let (cx, cy) = cnt.split_once(',').ok_or_else(bad)?;
                let lx: f64 = value(ex, "Lx")?.parse().map_err(|_| bad())?;
                let ly: f64 = value(ey, "Ly")?.parse().map_err(|_| bad())?;
                let nx: usize = value(cx, "nx")?.parse().map_err(|_| bad())?;
                let ny: usize = value(cy, "ny")?.parse().map_err(|_| bad())?;
                Domain::rectangle(lx, ly, nx, ny)
            }
            _ => Err(bad()),
        }
    }

    /// Exact eigenvalue of the discrete stiffness operator for the mode with
    /// wave numbers `k` (1-based; the second entry is ignored on intervals).
    pub fn eigenvalue(&self, k: [usize; 2]) -> f64 {
        (0..self.dim())
            .map(|a| {
                let h = self.h(a);
                2.0 / (h * h) * (1.0 - (k[a] as f64 * PI * h / self.extents[a]).cos())
            })
            .sum()
    }

    /// The matching discrete eigenvector, sampled products of sines.
    pub fn eigenmode(&self, k: [usize; 2]) -> GridField {
        let dim = self.dim();
        let ext = self.extents;
        GridField::from_fn(*self, |x| {
            (0..dim)
                .map(|a| (k[a] as f64 * PI * x[a] / ext[a]).sin())
                .product()
        })
    }

    /// Smallest stiffness eigenvalue in closed form.
    pub fn lambda1_exact(&self) -> f64 {
        self.eigenvalue([1, 1])
    }

    /// Visits every grid line along `axis` as (start, stride, len).
    fn lines(&self, axis: usize) -> impl Iterator<Item = (usize, usize, usize)> {
        let nx = self.n[0];
        let ny = self.n[1];
        let (count, stride, len) = if axis == 0 { (ny, 1, nx) } else { (nx, nx, ny) };
        (0..count).map(move |l| {
            let start = if axis == 0 { l * nx } else { l };
            (start, stride, len)
        })
    }

    pub fn check(&self, other: &Domain) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                left: self.fingerprint(),
                right: other.fingerprint(),
            })
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fingerprint())
    }
}

/// Nodal values on the interior of a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: Domain,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::LengthMismatch {
                expected: domain.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Domain) -> Self {
        Self {
            domain,
            values: vec![0.0; domain.len()],
        }
    }

    pub fn from_fn(domain: Domain, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..domain.len()).map(|k| f(domain.coords(k))).collect();
        Self { domain, values }
    }

    /// Wraps values without the finiteness check; the solver uses this for
    /// intermediate states that are validated separately.
    pub(crate) fn from_raw(domain: Domain, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> GridField {
        GridField {
            domain: self.domain,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn ensure_finite(u: &GridField) -> Result<()> {
    if u.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Applies the positive definite stiffness operator `A` (the discrete `-Δ`)
/// into `out`. 3-point stencil per axis, zero ghost values.
pub(crate) fn stiffness_into(domain: &Domain, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for axis in 0..domain.dim() {
        let inv_h2 = 1.0 / (domain.h(axis) * domain.h(axis));
        for (start, stride, len) in domain.lines(axis) {
            for k in 0..len {
                let idx = start + k * stride;
                let left = if k > 0 { u[idx - stride] } else { 0.0 };
                let right = if k + 1 < len { u[idx + stride] } else { 0.0 };
                out[idx] += (2.0 * u[idx] - left - right) * inv_h2;
            }
        }
    }
}

/// `A·u`, the discrete `-Δu` with homogeneous Dirichlet boundary.
pub fn laplacian_apply(u: &GridField) -> Result<GridField> {
    ensure_finite(u)?;
    let mut out = vec![0.0; u.values.len()];
    stiffness_into(&u.domain, &u.values, &mut out);
    Ok(GridField::from_raw(u.domain, out))
}

/// Same as [`laplacian_apply`] but checks the field against an operator domain.
pub fn laplacian_apply_on(domain: &Domain, u: &GridField) -> Result<GridField> {
    domain.check(&u.domain)?;
    laplacian_apply(u)
}

/// Sum of squared edge differences divided by h² per axis, times the node
/// weight. Equals `(∏h)·uᵀAu` by summation by parts, but is non-negative by
/// construction.
pub(crate) fn grad_norm_sq_raw(domain: &Domain, u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for axis in 0..domain.dim() {
        let inv_h2 = 1.0 / (domain.h(axis) * domain.h(axis));
        let mut axis_sum = 0.0;
        for (start, stride, len) in domain.lines(axis) {
            let mut prev = 0.0;
            for k in 0..len {
                let cur = u[start + k * stride];
                axis_sum += (cur - prev) * (cur - prev);
                prev = cur;
            }
            axis_sum += prev * prev;
        }
        acc += axis_sum * inv_h2;
    }
    acc * domain.cell_volume()
}

/// `‖∇u‖₂²`, defined as the weighted stiffness form `(∏h)·uᵀAu`.
pub fn grad_norm_sq(u: &GridField) -> f64 {
    grad_norm_sq_raw(&u.domain, &u.values)
}

/// Weighted stiffness bilinear form `(∏h)·wᵀAu`.
pub fn stiffness_inner(u: &GridField, w: &GridField) -> Result<f64> {
    u.domain.check(&w.domain)?;
    let mut au = vec![0.0; u.values.len()];
    stiffness_into(&u.domain, &u.values, &mut au);
    Ok(u.domain.cell_volume() * dot(&w.values, &au))
}

/// `‖u‖ₚᵖ = (∏h)·Σ|uᵢ|ᵖ`.
pub fn lp_norm_p(u: &GridField, p: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::InvalidExponent { p, p_bar: f64::INFINITY });
    }
    Ok(lp_norm_p_raw(&u.domain, &u.values, p))
}

pub(crate) fn lp_norm_p_raw(domain: &Domain, u: &[f64], p: f64) -> f64 {
    domain.cell_volume() * u.iter().map(|v| v.abs().powf(p)).sum::<f64>()
}

/// `‖u‖₂² = (∏h)·Σuᵢ²`.
pub fn l2_norm_sq(u: &GridField) -> f64 {
    u.domain.cell_volume() * dot(&u.values, &u.values)
}

/// Weighted L² inner product `(∏h)·Σuᵢwᵢ`.
pub fn l2_inner(u: &GridField, w: &GridField) -> Result<f64> {
    u.domain.check(&w.domain)?;
    Ok(u.domain.cell_volume() * dot(&u.values, &w.values))
}

#[inline]
fn flux(slope: f64) -> f64 {
    slope / (1.0 + slope * slope).sqrt()
}

pub(crate) fn mean_curvature_into(domain: &Domain, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for axis in 0..domain.dim() {
        let h = domain.h(axis);
        for (start, stride, len) in domain.lines(axis) {
            // flux on the edge to the left of node k
            let mut left_flux = flux(u[start] / h);
            for k in 0..len {
                let idx = start + k * stride;
                let right = if k + 1 < len { u[idx + stride] } else { 0.0 };
                let right_flux = flux((right - u[idx]) / h);
                out[idx] += (left_flux - right_flux) / h;
                left_flux = right_flux;
            }
        }
    }
}

/// Negative discrete mean-curvature operator `-div(∇u/√(1+|∇u|²))`,
/// sign-matched to [`laplacian_apply`]. Fluxes live on edges and use the
/// one-sided difference slope of that edge.
pub fn mean_curvature_apply(u: &GridField) -> Result<GridField> {
    ensure_finite(u)?;
    let mut out = vec![0.0; u.values.len()];
    mean_curvature_into(&u.domain, &u.values, &mut out);
    Ok(GridField::from_raw(u.domain, out))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit3() -> Domain {
        Domain::interval(1.0, 3).unwrap()
    }

    fn field(d: Domain, v: &[f64]) -> GridField {
        GridField::new(d, v.to_vec()).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::interval(1.0, 1).is_err());
        assert!(Domain::interval(0.0, 4).is_err());
        assert!(Domain::rectangle(1.0, -1.0, 4, 4).is_err());
        let d = Domain::rectangle(1.0, 2.0, 3, 4).unwrap();
        assert_eq!(d.len(), 12);
        assert!((d.h(1) - 0.4).abs() < 1e-15);
        assert!((d.cell_volume() - 0.25 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn fingerprint_round_trip() {
        for d in [
            Domain::interval(1.0, 127).unwrap(),
            Domain::rectangle(1.5, 0.75, 15, 31).unwrap(),
        ] {
            assert_eq!(Domain::parse_fingerprint(&d.fingerprint()).unwrap(), d);
        }
        assert!(Domain::parse_fingerprint("sphere:r=1").is_err());
    }

    #[test]
    fn field_rejects_bad_input() {
        assert!(matches!(
            GridField::new(unit3(), vec![1.0; 2]),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(GridField::new(unit3(), vec![1.0, f64::NAN, 0.0]), Err(Error::NonFinite));
    }

    #[test]
    fn laplacian_hand_values() {
        let z = GridField::zeros(unit3());
        assert!(laplacian_apply(&z).unwrap().is_zero());
        let au = laplacian_apply(&field(unit3(), &[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(au.values(), &[16.0, 0.0, 16.0]);
    }

    #[test]
    fn laplacian_domain_mismatch() {
        let other = Domain::interval(2.0, 3).unwrap();
        let u = field(unit3(), &[1.0, 2.0, 3.0]);
        assert!(matches!(
            laplacian_apply_on(&other, &u),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn stencil_reproduces_discrete_eigenvalues() {
        for d in [
            Domain::interval(1.0, 31).unwrap(),
            Domain::interval(2.5, 50).unwrap(),
            Domain::rectangle(1.0, 2.0, 13, 17).unwrap(),
        ] {
            for k in [[1, 1], [2, 1], [3, 2], [7, 5]] {
                let phi = d.eigenmode(k);
                let lam = d.eigenvalue(k);
                let aphi = laplacian_apply(&phi).unwrap();
                for (a, b) in aphi.values().iter().zip(phi.values()) {
                    assert!((a - lam * b).abs() <= 1e-10 * lam, "{a} vs {}", lam * b);
                }
            }
        }
    }

    #[test]
    fn grad_norm_hand_values() {
        assert_eq!(grad_norm_sq(&GridField::zeros(unit3())), 0.0);
        let u = field(unit3(), &[1.0, 1.0, 1.0]);
        assert!((grad_norm_sq(&u) - 8.0).abs() < 1e-14);
        assert!((stiffness_inner(&u, &u).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn grad_norm_of_first_mode_converges() {
        // λ₁ᴴ·‖sin(πx)‖² → π²·½ as h → 0, with O(h²) error.
        let mut errs = Vec::new();
        for n in [31, 63, 127] {
            let d = Domain::interval(1.0, n).unwrap();
            let phi = d.eigenmode([1, 1]);
            let g = grad_norm_sq(&phi);
            assert!((g - d.lambda1_exact() * l2_norm_sq(&phi)).abs() < 1e-12 * g);
            errs.push((g - PI * PI / 2.0).abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        }
    }

    #[test]
    fn lp_and_l2_hand_values() {
        let u = field(unit3(), &[1.0, 1.0, 1.0]);
        assert!((lp_norm_p(&u, 4.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(lp_norm_p(&GridField::zeros(unit3()), 3.5).unwrap(), 0.0);
        assert!(matches!(lp_norm_p(&u, 2.0), Err(Error::InvalidExponent { .. })));
        let two = u.scaled(2.0);
        assert!((lp_norm_p(&two, 4.0).unwrap() - 16.0 * 0.75).abs() < 1e-13);
        assert!((l2_norm_sq(&field(unit3(), &[2.0, 0.0, 0.0])) - 1.0).abs() < 1e-15);
        assert_eq!(l2_norm_sq(&GridField::zeros(unit3())), 0.0);
    }

    #[test]
    fn l2_matches_eigen_expansion() {
        // Parseval: the sine modes are orthogonal, so ‖u‖² = Σ c_k² ‖φ_k‖².
        let d = Domain::interval(1.3, 24).unwrap();
        let mut rng = 0x2545f4914f6cdd1du64;
        let vals: Vec<f64> = (0..d.len())
            .map(|_| {
                rng ^= rng << 13;
                rng ^= rng >> 7;
                rng ^= rng << 17;
                (rng as f64 / u64::MAX as f64) - 0.5
            })
            .collect();
        let u = field(d, &vals);
        let mut total = 0.0;
        let mut grad_total = 0.0;
        for k in 1..=d.len() {
            let phi = d.eigenmode([k, 1]);
            let nrm = l2_norm_sq(&phi);
            let c = l2_inner(&u, &phi).unwrap() / nrm;
            total += c * c * nrm;
            grad_total += c * c * nrm * d.eigenvalue([k, 1]);
        }
        assert!((total - l2_norm_sq(&u)).abs() < 1e-12 * total);
        assert!((grad_total - grad_norm_sq(&u)).abs() < 1e-10 * grad_total);
    }

    #[test]
    fn mean_curvature_hand_values() {
        assert!(mean_curvature_apply(&GridField::zeros(unit3())).unwrap().is_zero());
        let out = mean_curvature_apply(&field(unit3(), &[1.0, 1.0, 1.0])).unwrap();
        let e = 16.0 / 17f64.sqrt();
        for (a, b) in out.values().iter().zip([e, 0.0, e]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn mean_curvature_taylor_remainder() {
        for d in [Domain::interval(1.0, 20).unwrap(), Domain::rectangle(1.0, 1.0, 9, 11).unwrap()] {
            let u = GridField::from_fn(d, |x| (3.0 * x[0]).sin() * (1.0 + x[1]) + x[0] * x[0]);
            let mut ratios = Vec::new();
            for s in [2e-3, 1e-3, 5e-4, 2.5e-4] {
                let su = u.scaled(s);
                let mc = mean_curvature_apply(&su).unwrap();
                let lap = laplacian_apply(&su).unwrap();
                let diff: f64 = mc
                    .values()
                    .iter()
                    .zip(lap.values())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                ratios.push(diff / (s * s * s));
            }
            // the cubic remainder coefficient settles
            let last = ratios[ratios.len() - 1];
            for r in &ratios {
                assert!(*r < 2.0 * last + 1.0, "{ratios:?}");
            }
            assert!((ratios[2] - ratios[3]).abs() < 0.05 * last, "{ratios:?}");
        }
    }

    fn arb_field(d: Domain) -> impl Strategy<Value = GridField> {
        prop::collection::vec(-5.0f64..5.0, d.len()).prop_map(move |v| GridField::new(d, v).unwrap())
    }

    proptest! {
        #[test]
        fn stiffness_is_symmetric(
            (u, w) in (arb_field(Domain::rectangle(1.0, 0.7, 6, 5).unwrap()),
                       arb_field(Domain::rectangle(1.0, 0.7, 6, 5).unwrap()))
        ) {
            let a = stiffness_inner(&u, &w).unwrap();
            let b = stiffness_inner(&w, &u).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn grad_form_matches_quadratic_form(u in arb_field(Domain::interval(2.0, 17).unwrap())) {
            let q = stiffness_inner(&u, &u).unwrap();
            let g = grad_norm_sq(&u);
            prop_assert!((q - g).abs() <= 1e-11 * (1.0 + g));
        }

        #[test]
        fn positivity_and_poincare(u in arb_field(Domain::rectangle(1.0, 2.0, 7, 8).unwrap())) {
            let g = grad_norm_sq(&u);
            if !u.is_zero() {
                prop_assert!(g > 0.0);
            }
            let lam = u.domain().lambda1_exact();
            prop_assert!(l2_norm_sq(&u) <= g / lam * (1.0 + 1e-12));
        }

        #[test]
        fn lp_homogeneity(u in arb_field(Domain::interval(1.0, 9).unwrap()), s in -3.0f64..3.0, p in 2.1f64..6.0) {
            let a = lp_norm_p(&u.scaled(s), p).unwrap();
            let b = s.abs().powf(p) * lp_norm_p(&u, p).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b));
        }
    }
}
