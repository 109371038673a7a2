use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functionals::EnergyReport;

/// Column order of the time-series CSV.
pub const CSV_HEADER: &str = "t,E,I,J,L,kinetic,grad_sq,lp_p,l2_v,grad_v_sq";

/// One recorded instant of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub energy: EnergyReport,
    /// Lyapunov functional at the run's ε (equals E when ε = 0).
    pub l: f64,
    /// `‖u_t‖₂²`
    pub l2_v: f64,
    /// `‖∇u_t‖₂²`
    pub grad_v_sq: f64,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.energy.t
    }

    /// `‖∇u‖₂ + ‖u_t‖₂`, the quantity that diverges at blow-up.
    pub fn blowup_norm(&self) -> f64 {
        self.energy.grad_sq.sqrt() + self.l2_v.sqrt()
    }
}

/// Samples of a run plus per-step energy bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub epsilon: f64,
    pub steps: usize,
    /// Σ over steps of `|E(t_{n+1}) − E(t_n) − dt·D(v^{n+½})|`, where `D` is the
    /// instantaneous dissipation rate at the midpoint velocity.
    pub energy_residual_sum: f64,
    pub energy_residual_max: f64,
    /// The last attempted step failed (Picard divergence or non-finite state).
    pub step_failed: bool,
}

impl TimeSeries {
    pub fn from_samples(samples: Vec<Sample>, dt: f64) -> Self {
        Self {
            samples,
            dt,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::t).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy.e).collect()
    }

    /// Writes the CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for s in &self.samples {
            let e = &s.energy;
            let row = [
                e.t, e.e, e.i, e.j, s.l, e.kinetic, e.grad_sq, e.lp_p, s.l2_v, s.grad_v_sq,
            ];
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
