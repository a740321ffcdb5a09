//! Growth rate of `log G(z0, z_n)` along a direction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{quasi_potential_i, support_d};
use crate::model::WalkModel;

use super::kernel::{Kernel, KernelKind};
use super::solve::{green_exact_from, ExactConfig};
use super::GreenEstimate;

/// Nearest lattice site to `r q`, moved up to height `min_height` when it
/// falls below.
pub fn lattice_point(q: &[f64], r: f64, min_height: i64) -> Vec<i64> {
    let d = q.len();
    let mut z: Vec<i64> = q.iter().map(|x| (r * x).round() as i64).collect();
    z[d - 1] = z[d - 1].max(min_height);
    z
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsRow {
    pub r: f64,
    pub z_n: Vec<i64>,
    pub estimate: GreenEstimate,
    /// `log G / |z_n|`.
    pub log_value_over_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsTable {
    pub kernel: KernelKind,
    pub q: Vec<f64>,
    pub z0: Vec<i64>,
    pub rows: Vec<AsymptoticsRow>,
    /// Regression slope of `log G(z0, z_n)` against `|z_n|`.
    pub slope: f64,
    /// `-I(0, q)` for the reflected walk, `-I+(0, q)` for the killed walk.
    pub predicted_limit: f64,
}

/// `log G(z0, z_n)` for `z_n` the lattice point nearest `r q`, by exact
/// solves with certified truncation.
pub fn log_asymptotics_experiment(
    model: &WalkModel,
    kind: KernelKind,
    q: &[f64],
    radii: &[f64],
    z0: &[i64],
    config: &ExactConfig,
) -> Result<AsymptoticsTable> {
    model.ensure_accepted()?;
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("radii must be increasing, at least two".into()));
    }
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if qn == 0.0 {
        return Err(Error::InvalidDirection("zero direction".into()));
    }
    let unit: Vec<f64> = q.iter().map(|x| x / qn).collect();
    let kernel = Kernel::new(model, kind)?;
    let min_height = if kind == KernelKind::Killed { 1 } else { 0 };
    let targets: Vec<Vec<i64>> = radii.iter().map(|&r| lattice_point(&unit, r, min_height)).collect();
    let (ests, _) = green_exact_from(model, &kernel, z0, &targets, config)?;
    let mut rows = Vec::new();
    for ((r, z_n), est) in radii.iter().zip(&targets).zip(ests) {
        let norm = z_n.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
        rows.push(AsymptoticsRow { r: *r, z_n: z_n.clone(), log_value_over_r: est.value.ln() / norm, estimate: est });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.z_n.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.estimate.value.ln()).collect();
    let predicted_limit = match kind {
        KernelKind::Killed | KernelKind::Free => -support_d(model.mu(), &unit)?.value,
        KernelKind::Reflected => -quasi_potential_i(model, &unit)?.value,
    };
    Ok(AsymptoticsTable { kernel: kind, q: unit, z0: z0.to_vec(), rows, slope: slope(&xs, &ys), predicted_limit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        assert!((slope(&x, &y) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn lattice_points() {
        assert_eq!(lattice_point(&[0.6, 0.8], 10.0, 0), vec![6, 8]);
        assert_eq!(lattice_point(&[1.0, 0.0], 7.0, 1), vec![7, 1]);
    }
}
