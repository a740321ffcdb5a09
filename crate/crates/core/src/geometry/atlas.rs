//! Sweep of `a-hat` over directions of the closed upper half-sphere, with
//! detection of fans: arcs of directions sharing one `a-hat`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::DualPoint;
use crate::model::WalkModel;
use crate::tol;

use super::ahat::a_hat;
use super::Stratum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtlasRow {
    pub q: Vec<f64>,
    pub a_hat: DualPoint,
    pub stratum: Stratum,
    pub saturated: bool,
    /// `I(0, q) = a-hat(q).q`.
    pub quasi_potential: f64,
    pub residual: f64,
}

/// Directions mapped to a common `a-hat` (within the atlas tolerance).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fan {
    pub a_hat: DualPoint,
    pub rows: Vec<usize>,
    /// Largest angle between two directions of the fan.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atlas {
    pub rows: Vec<AtlasRow>,
    pub fans: Vec<Fan>,
}

fn upper_directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..n)
            .map(|k| {
                let t = std::f64::consts::PI * k as f64 / (n - 1) as f64;
                // Exact boundary directions at both ends.
                match k {
                    0 => vec![1.0, 0.0],
                    _ if k == n - 1 => vec![-1.0, 0.0],
                    _ => vec![t.cos(), t.sin()],
                }
            })
            .collect(),
        _ => super::support::directions(dim, 2 * n)
            .into_iter()
            .filter(|v| v[dim - 1] >= 0.0)
            .collect(),
    }
}

fn angle(u: &[f64], v: &[f64]) -> f64 {
    let c: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    c.clamp(-1.0, 1.0).acos()
}

/// `a-hat` over `n` directions of the upper half-sphere, in a deterministic
/// order, with fans grouped by the distance of their `a-hat` points.
pub fn boundary_atlas(model: &WalkModel, n: usize) -> Result<Atlas> {
    model.ensure_accepted()?;
    if n < 2 {
        return Err(Error::Precondition("the atlas needs at least two directions".into()));
    }
    let dirs = upper_directions(model.dim(), n);
    let rows: Vec<AtlasRow> = dirs
        .par_iter()
        .map(|q| -> Result<AtlasRow> {
            let ah = a_hat(model, q)?;
            Ok(AtlasRow {
                quasi_potential: ah.point.a.dot(&ah.q),
                q: ah.q,
                stratum: ah.point.stratum,
                saturated: ah.point.saturated(),
                a_hat: ah.point.a,
                residual: ah.residual,
            })
        })
        .collect::<Result<_>>()?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match groups.iter_mut().find(|g| rows[g[0]].a_hat.distance(&row.a_hat) <= tol::ATLAS) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    let fans = groups
        .into_iter()
        .filter(|g| g.len() > 1)
        .map(|g| {
            let mut width = 0.0f64;
            for &i in &g {
                for &j in &g {
                    width = width.max(angle(&rows[i].q, &rows[j].q));
                }
            }
            Fan { a_hat: rows[g[0]].a_hat.clone(), rows: g, width }
        })
        .collect();
    Ok(Atlas { rows, fans })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn reference_has_one_fan_at_the_saturated_origin() {
        let model = reference::walk();
        let atlas = boundary_atlas(&model, 181).unwrap();
        let fan = atlas.fans.iter().max_by(|a, b| a.width.total_cmp(&b.width)).unwrap();
        assert!(fan.a_hat.alpha()[0].abs() < 1e-9);
        assert!((fan.a_hat.beta() - 2f64.ln()).abs() < 1e-9);
        assert!(fan.width > 1.0 && fan.width < 1.2, "{}", fan.width);
    }
}
