//! Green's functions of the reflected walk `G` and of the killed walk `G+`:
//! truncated series, exact box solves with certified truncation bounds,
//! Monte Carlo, the renewal decomposition and logarithmic asymptotics.

mod asymptotics;
mod banded;
mod bounds;
mod kernel;
mod montecarlo;
mod renewal;
mod series;
mod solve;

pub use asymptotics::{lattice_point, log_asymptotics_experiment, slope, AsymptoticsRow, AsymptoticsTable};
pub use banded::BandedLu;
pub use bounds::{free_green_origin_bound, Tilt, TiltBounds};
pub use kernel::{BoxDomain, BoxSystem, Kernel, KernelKind};
pub use montecarlo::{green_monte_carlo, MonteCarloConfig, MonteCarloResult};
pub use renewal::{boundary_sum_identity, renewal_audit, BoundarySumCheck, RenewalAudit};
pub use series::green_series;
pub use solve::{green_exact_from, green_exact_to, green_linear_solve, green_to_solve, ColumnField, ExactConfig, GreenField};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    LinearSolve,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::LinearSolve => "linear_solve",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// An estimate of `G(source, target)` for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenEstimate {
    pub source: Vec<i64>,
    pub target: Vec<i64>,
    pub value: f64,
    /// Series: bound on the neglected tail. Linear solve: bound on the
    /// truncation by the box when the box is not part of the problem,
    /// roundoff otherwise. Monte Carlo: half-width of the 95% interval.
    pub error: f64,
    pub method: Method,
    pub samples: Option<u64>,
    pub flags: Vec<String>,
}

impl GreenEstimate {
    /// `[value - error, value + error]` clipped at zero.
    pub fn interval(&self) -> (f64, f64) {
        ((self.value - self.error).max(0.0), self.value + self.error)
    }

    /// The two estimates are consistent within their combined errors.
    pub fn agrees_with(&self, other: &GreenEstimate, slack: f64) -> bool {
        (self.value - other.value).abs() <= self.error + other.error + slack
    }
}

/// Relative roundoff attached to the subtraction-free exact solves.
pub const SOLVE_ROUNDOFF: f64 = 1e-10;
