//! Ordinary least squares on a line, and the log-linear decay-rate fit built
//! on it.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Sum of squared residuals.
    pub ssr: f64,
}

/// Least-squares line through `(x, y)`. `None` for fewer than two points or
/// a degenerate abscissa.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = (0..n)
        .map(|i| {
            let r = y[i] - (intercept + slope * x[i]);
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept,
        r2,
        ssr,
    })
}

/// Fits `y ≈ C·e^{−rate·t}` by least squares on `ln y`. Returns
/// `(rate, fit)`; all `y` must be positive.
pub fn exp_decay_fit(t: &[f64], y: &[f64]) -> Option<(f64, LinearFit)> {
    if y.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(t, &logs).map(|f| (-f.slope, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert!(exp_decay_fit(&[0.0, 1.0], &[1.0, 0.0]).is_none());
    }

    #[test]
    fn recovers_exponential_rate() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let (rate, f) = exp_decay_fit(&t, &y).unwrap();
        assert!((rate - 0.7).abs() < 1e-12);
        assert!(f.r2 > 1.0 - 1e-12);
    }
}
