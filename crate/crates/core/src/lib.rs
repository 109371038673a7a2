//! Numerical laboratory for the strongly damped semilinear wave equation
//!
//! ```text
//! u_tt − Δu − ωΔu_t + μu_t = u|u|^{p−2}   in Ω,   u = 0 on ∂Ω
//! ```
//!
//! on intervals and rectangles. The crate computes the potential-well
//! constants (`C*`, `d`, `β`), classifies initial data against the Nehari
//! manifold, integrates the dynamics with an implicit-midpoint IMEX scheme,
//! and certifies exponential energy decay with an explicit Lyapunov
//! functional.


pub mod cli;
pub mod error;
pub mod fit;
pub mod functionals;
pub mod linalg;
pub mod lyapunov;
pub mod mesh;
pub mod solver;
pub mod well;

pub use error::{Error, Result};
pub use functionals::{EnergyReport, Mode, ModelParams, Operator};
pub use lyapunov::DecayCertificate;
pub use mesh::{Domain, GridField};
pub use solver::{RunOutcome, SimState, StepConfig, TimeSeries};
pub use well::{Classification, WellConstants};
