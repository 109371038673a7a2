//! Finite-time blow-up detection and extrapolation of the blow-up time.
//!
//! Divergence of `‖∇u‖₂ + ‖u_t‖₂` cannot be observed in floating point, so a
//! run is declared blown up once the norm crosses a large threshold, or when
//! the time step fails while the norm is growing. The blow-up time is then
//! extrapolated by fitting `N(t) ≈ C(T − t)^{−α}` to the final samples.

use serde::{Deserialize, Serialize};

use super::series::TimeSeries;
use crate::fit::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupThresholds {
    /// Threshold on `‖∇u‖₂ + ‖u_t‖₂`.
    pub norm: f64,
    /// Number of trailing samples that must grow monotonically when a step
    /// failure is interpreted as blow-up.
    pub growth_window: usize,
    /// Number of trailing samples used for the pole fit.
    pub fit_window: usize,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self {
            norm: 1e6,
            growth_window: 10,
            fit_window: 20,
        }
    }
}

/// Returns an estimate of the blow-up time if the series shows blow-up.
pub fn detect_blowup(series: &TimeSeries, thresholds: &BlowupThresholds) -> Option<f64> {
    let times = series.times();
    let norms: Vec<f64> = series.samples.iter().map(|s| s.blowup_norm()).collect();
    detect_blowup_norms(&times, &norms, series.step_failed, thresholds)
}

/// Same as [`detect_blowup`] on raw `(t, ‖∇u‖₂ + ‖u_t‖₂)` data.
pub fn detect_blowup_norms(
    times: &[f64],
    norms: &[f64],
    step_failed: bool,
    thresholds: &BlowupThresholds,
) -> Option<f64> {
    let n = times.len().min(norms.len());
    if n == 0 {
        return None;
    }
    let crossing = norms[..n]
        .iter()
        .position(|v| !v.is_finite() || *v > thresholds.norm);
    let end = match crossing {
        Some(k) => k + 1,
        None => {
            let w = thresholds.growth_window.max(2);
            if !step_failed || n < w {
                return None;
            }
            let tail = &norms[n - w..n];
            if !tail.windows(2).all(|p| p[1] > p[0]) {
                return None;
            }
            n
        }
    };
    // only finite samples enter the fit
    let mut last = end;
    while last > 0 && !norms[last - 1].is_finite() {
        last -= 1;
    }
    if last == 0 {
        return Some(times[0]);
    }
    Some(pole_fit(&times[..last], &norms[..last], thresholds.fit_window).unwrap_or(times[last - 1]))
}

/// Fits `ln N = ln C − α ln(T − t)` over the last `window` samples, choosing
/// `T > t_last` to minimize the residual. `None` when the tail is not
/// growing.
pub fn pole_fit(times: &[f64], norms: &[f64], window: usize) -> Option<f64> {
    let n = times.len();
    let w = window.clamp(3, n.max(3));
    if n < 3 {
        return None;
    }
    let t = &times[n - w.min(n)..];
    let y: Vec<f64> = norms[n - w.min(n)..].iter().map(|v| v.ln()).collect();
    if y.iter().any(|v| !v.is_finite()) || y[y.len() - 1] <= y[0] {
        return None;
    }
    let t_last = t[t.len() - 1];
    let span = (t_last - t[0]).max(f64::MIN_POSITIVE);

    let ssr_at = |theta: f64| -> f64 {
        let tm = t_last + span * theta.exp();
        let x: Vec<f64> = t.iter().map(|ti| (tm - ti).ln()).collect();
        match linear_fit(&x, &y) {
            Some(f) if f.slope < 0.0 => f.ssr,
            _ => f64::INFINITY,
        }
    };

    // coarse scan over ln((T − t_last)/span), then golden-section refinement
    let (lo, hi) = (-14.0f64, 7.0f64);
    let steps = 400;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=steps {
        let th = lo + (hi - lo) * k as f64 / steps as f64;
        let v = ssr_at(th);
        if v < best.0 {
            best = (v, th);
        }
    }
    if !best.0.is_finite() {
        return None;
    }
    let cell = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best.1 - cell, best.1 + cell);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ssr_at(c), ssr_at(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ssr_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ssr_at(d);
        }
    }
    Some(t_last + span * (0.5 * (a + b)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th() -> BlowupThresholds {
        BlowupThresholds::default()
    }

    #[test]
    fn decaying_series_is_quiet() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let n: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        assert_eq!(detect_blowup_norms(&t, &n, false, &th()), None);
        assert_eq!(detect_blowup_norms(&t, &n, true, &th()), None);
        assert_eq!(detect_blowup_norms(&[], &[], true, &th()), None);
    }

    #[test]
    fn doubling_series_fires_before_overflow() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let n: Vec<f64> = (0..2000).map(|i| 2f64.powi(i)).collect();
        let est = detect_blowup_norms(&t, &n, false, &th()).unwrap();
        assert!(est.is_finite());
        // crossing of 1e6 happens at sample 20
        assert!(est >= 20.0);
    }

    #[test]
    fn synthetic_pole_is_located() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let n: Vec<f64> = t.iter().map(|t| 1.0 / (1.0 - t)).collect();
        let est = detect_blowup_norms(&t, &n, true, &th()).unwrap();
        assert!((est - 1.0).abs() < 0.05, "estimate {est}");
        let direct = pole_fit(&t, &n, 20).unwrap();
        assert!((direct - 1.0).abs() < 1e-6, "direct {direct}");
    }

    #[test]
    fn step_failure_without_growth_is_not_blowup() {
        let t: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mut n = vec![1.0; 30];
        n[29] = 2.0;
        assert_eq!(detect_blowup_norms(&t, &n, true, &th()), None);
    }
}
