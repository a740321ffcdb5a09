//! Piecewise-linear optimal paths from the origin to a direction `q`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::mgf;
use crate::model::{LatticeMeasure, WalkModel};
use crate::roots;

use super::ahat::{a_hat, gamma_q, quasi_potential_i};
use super::support::{newton_tilted, support_d};
use super::theta::theta_support;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    /// Travels along the boundary hyperplane.
    Boundary,
    /// Travels through the interior of the half-space.
    Interior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub cost: f64,
    /// Time spent on the segment, when the model determines it.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalPath {
    pub q: Vec<f64>,
    pub total_cost: f64,
    /// `I(0, q)` computed directly, for comparison with `total_cost`.
    pub quasi_potential: f64,
    pub segments: Vec<PathSegment>,
}

/// Legendre transform of `log phi` at `w`; infinite outside the interior of
/// the support hull.
fn rate(measure: &LatticeMeasure, w: &[f64]) -> f64 {
    let Some(a) = newton_tilted(measure, w, &vec![0.0; w.len()]) else {
        return f64::INFINITY;
    };
    match mgf(measure, &a) {
        Ok(v) => a.iter().zip(w).map(|(x, y)| x * y).sum::<f64>() - v.ln(),
        Err(_) => f64::INFINITY,
    }
}

/// Optimal time `T` of a straight interior segment with displacement `v`,
/// by direct minimisation of `T L(v / T)` over `T`.
pub fn interior_segment_time(measure: &LatticeMeasure, v: &[f64], guess: f64) -> (f64, f64) {
    let cost = |s: f64| {
        let t = s.exp();
        let w: Vec<f64> = v.iter().map(|x| x / t).collect();
        t * rate(measure, &w)
    };
    let c = guess.max(1e-6).ln();
    let (s, value) = roots::grid_then_golden(cost, c - 3.0, c + 3.0, 120, 1e-9);
    (s.exp(), value)
}

/// The optimal path to `q`: a boundary leg to `gamma_q` followed by a
/// straight interior leg, or a single leg when one of them is degenerate.
pub fn optimal_path(model: &WalkModel, q: &[f64]) -> Result<OptimalPath> {
    let d = model.dim();
    if q.len() != d {
        return Err(Error::Dimension(format!("direction of length {} in dimension {d}", q.len())));
    }
    let quasi_potential = quasi_potential_i(model, q)?.value;
    let origin = vec![0.0; d];
    let mut segments = Vec::new();
    if q[d - 1] == 0.0 {
        let ah = a_hat(model, q)?;
        let time = ah.point.theta_normal().and_then(|g| {
            let gg: f64 = g.iter().map(|x| x * x).sum();
            let c2 = q.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() / gg;
            ah.point.kappa.map(|k| c2 * (1.0 + k))
        });
        let cost = theta_support(model, &q[..d - 1])?.value;
        segments.push(PathSegment { kind: SegmentKind::Boundary, from: origin, to: q.to_vec(), cost, time });
    } else {
        let dec = gamma_q(model, q)?;
        if dec.active_phi0 && dec.gamma_q.iter().any(|&x| x != 0.0) {
            let cost = theta_support(model, &dec.gamma_q[..d - 1])?.value;
            let time = dec.a_hat.kappa.map(|k| dec.c2 * (1.0 + k));
            segments.push(PathSegment {
                kind: SegmentKind::Boundary,
                from: origin.clone(),
                to: dec.gamma_q.clone(),
                cost,
                time,
            });
        }
        let v: Vec<f64> = q.iter().zip(&dec.gamma_q).map(|(a, b)| a - b).collect();
        let cost = support_d(model.mu(), &v)?.value;
        segments.push(PathSegment {
            kind: SegmentKind::Interior,
            from: dec.gamma_q.clone(),
            to: q.to_vec(),
            cost,
            time: Some(dec.c1),
        });
    }
    let total_cost = segments.iter().map(|s| s.cost).sum();
    Ok(OptimalPath { q: q.to_vec(), total_cost, quasi_potential, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn interior_time_matches_multiplier() {
        let model = reference::walk();
        let q = [0.3, 1.0];
        let path = optimal_path(&model, &q).unwrap();
        let leg = path.segments.last().unwrap();
        let v: Vec<f64> = leg.to.iter().zip(&leg.from).map(|(a, b)| a - b).collect();
        let (t, value) = interior_segment_time(model.mu(), &v, leg.time.unwrap());
        assert!((t - leg.time.unwrap()).abs() < 1e-5 * t, "{t} vs {:?}", leg.time);
        assert!((value - leg.cost).abs() < 1e-8);
        assert!((path.total_cost - path.quasi_potential).abs() < 1e-8);
    }
}
