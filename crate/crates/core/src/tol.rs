//! Numerical tolerances shared by every module.
//!
//! They are fixed constants so that reports can state exactly which
//! thresholds produced a result.

use serde::Serialize;

/// Allowed deviation of a measure's total mass from 1.
pub const WEIGHT_SUM: f64 = 1e-12;
/// Root tolerance on generating-function values.
pub const ROOT: f64 = 1e-12;
/// Argument tolerance of one-dimensional searches.
pub const ARG: f64 = 1e-10;
/// Largest admissible `|a·z|` before a range error is raised.
pub const OVERFLOW_EXPONENT: f64 = 700.0;
/// Decides stratum membership and activity of `phi0(a-bar) = 1`.
pub const STRAT: f64 = 1e-9;
/// Admissible distance from a direction to its certified normal cone.
pub const CONE: f64 = 1e-8;
/// Admissible error in quasi-potential identities.
pub const QP: f64 = 1e-8;
/// Clustering radius of the boundary atlas in dual space.
pub const ATLAS: f64 = 1e-6;
/// Relative harmonicity residual considered exact.
pub const HARMONIC: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub weight_sum: f64,
    pub root: f64,
    pub arg: f64,
    pub strat: f64,
    pub cone: f64,
    pub qp: f64,
    pub atlas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            weight_sum: WEIGHT_SUM,
            root: ROOT,
            arg: ARG,
            strat: STRAT,
            cone: CONE,
            qp: QP,
            atlas: ATLAS,
        }
    }
}

impl Tolerances {
    /// Compact `key=value` rendering used in provenance lines.
    pub fn summary(&self) -> String {
        format!(
            "weight_sum={:e};root={:e};arg={:e};strat={:e};cone={:e};qp={:e};atlas={:e}",
            self.weight_sum, self.root, self.arg, self.strat, self.cone, self.qp, self.atlas
        )
    }
}
