//! Support function of `D = {phi <= 1}` and ray intersections with level
//! sets.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::{mgf, mgf_full, DualPoint};
use crate::model::LatticeMeasure;
use crate::roots;

/// `sup_{a in D} a.v` with its maximiser.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportResult {
    pub value: f64,
    pub maximizer: DualPoint,
    /// Coarse-grid lower bound the value was certified against.
    pub lower_bound: f64,
    /// The Newton path failed and the value comes from a fine grid.
    pub fallback: bool,
}

/// Minimises `log phi(a) - w.a` by damped Newton. `None` when the problem
/// is unbounded (w outside the interior of the hull of the support) or the
/// iteration leaves the representable range.
pub(crate) fn newton_tilted(measure: &LatticeMeasure, w: &[f64], start: &[f64]) -> Option<Vec<f64>> {
    let d = w.len();
    let objective = |a: &[f64]| -> Option<f64> {
        let v = mgf(measure, a).ok()?;
        Some(v.ln() - a.iter().zip(w).map(|(x, y)| x * y).sum::<f64>())
    };
    let mut a = start.to_vec();
    let mut f = objective(&a)?;
    for _ in 0..200 {
        let g = mgf_full(measure, &a).ok()?;
        let phi = g.value;
        let grad: DVector<f64> = &g.gradient / phi - DVector::from_column_slice(w);
        let hess: DMatrix<f64> = &g.hessian / phi - (&g.gradient * g.gradient.transpose()) / (phi * phi);
        let chol = hess.cholesky()?;
        let step = -chol.solve(&grad);
        let decrement = -grad.dot(&step);
        if decrement < 1e-30 || grad.amax() < 1e-15 {
            return Some(a);
        }
        if decrement < 1e-8 {
            // Quadratic convergence region: the line search can no longer
            // resolve the decrease, take the pure Newton step.
            let trial: Vec<f64> = a.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
            if let Some(ft) = objective(&trial) {
                a = trial;
                f = ft;
                continue;
            }
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = a.iter().zip(step.iter()).map(|(x, s)| x + t * s).collect();
            if let Some(ft) = objective(&trial) {
                if ft <= f - 0.25 * t * decrement {
                    a = trial;
                    f = ft;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                // No further decrease possible at this precision.
                return (decrement < 1e-20).then_some(a);
            }
        }
        if a.iter().any(|x| x.abs() > 1e3) {
            return None;
        }
    }
    let _ = d;
    let g = mgf_full(measure, &a).ok()?;
    let grad: DVector<f64> = &g.gradient / g.value - DVector::from_column_slice(w);
    (grad.amax() < 1e-10).then_some(a)
}

/// Minimiser of `phi`: the centre of `D`.
pub fn argmin_phi(measure: &LatticeMeasure) -> Result<DualPoint> {
    let d = measure.dim();
    newton_tilted(measure, &vec![0.0; d], &vec![0.0; d])
        .map(DualPoint::new)
        .ok_or_else(|| Error::NoConvergence("phi has no minimiser".into()))
}

/// Point where the ray `origin + s dir`, `s > 0`, crosses the zero level of
/// a function that is negative at the origin and convex along the ray.
pub fn boundary_ray<F: Fn(&[f64]) -> Result<f64>>(excess: F, origin: &[f64], dir: &[f64]) -> Result<DualPoint> {
    let at = |s: f64| -> Vec<f64> { origin.iter().zip(dir).map(|(o, u)| o + s * u).collect() };
    let outside = |s: f64| excess(&at(s)).map(|v| v > 0.0).unwrap_or(true);
    let hi = roots::expand_until(outside, 0.0, 1.0, 0.125, 64)
        .ok_or_else(|| Error::NoConvergence("ray never leaves the level set".into()))?;
    let (s, _) = roots::bisect_predicate(outside, 0.0, hi, 0.0);
    Ok(DualPoint::new(at(s)))
}

/// Deterministic unit directions: uniform angles in the plane, a Fibonacci
/// lattice on the sphere, coordinate and diagonal directions beyond.
pub fn directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; dim];
                    v[i] = s;
                    out.push(v);
                }
            }
            for mask in 0..(1u32 << dim) {
                let v: Vec<f64> = (0..dim)
                    .map(|i| if mask & (1 << i) != 0 { 1.0 } else { -1.0 } / (dim as f64).sqrt())
                    .collect();
                out.push(v);
            }
            out
        }
    }
}

fn grid_max(measure: &LatticeMeasure, center: &DualPoint, v: &[f64], n: usize) -> Result<(f64, DualPoint)> {
    let excess = |a: &[f64]| crate::genfunc::mgf_minus_one(measure, a);
    let mut best: Option<(f64, DualPoint)> = None;
    for dir in directions(measure.dim(), n) {
        let p = boundary_ray(excess, center.coords(), &dir)?;
        let val = p.dot(v);
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, p));
        }
    }
    Ok(best.expect("non-empty direction set"))
}

/// `sup_{a in D} a.v`. The maximiser satisfies `grad phi(a) = c v`,
/// `phi(a) = 1`; it is found on the path `a(t) = argmin log phi - t v.a`,
/// whose value `log phi(a(t))` increases with `t`, by safeguarded Newton in `t`.
pub fn support_d(measure: &LatticeMeasure, v: &[f64]) -> Result<SupportResult> {
    let d = measure.dim();
    if v.len() != d {
        return Err(Error::Dimension(format!("direction of length {} in dimension {d}", v.len())));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(SupportResult { value: 0.0, maximizer: DualPoint::zero(d), lower_bound: 0.0, fallback: false });
    }
    let center = argmin_phi(measure)?;
    let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let (lower_bound, _) = grid_max(measure, &center, &unit, 64)?;

    // a(t), log phi(a(t)) and its derivative t v' H^{-1} v (H the Hessian of
    // log phi at a(t)).
    let solve = |t: f64, start: &[f64]| -> Option<(Vec<f64>, f64, f64)> {
        let w: Vec<f64> = unit.iter().map(|x| t * x).collect();
        let a = newton_tilted(measure, &w, start)?;
        let g = mgf_full(measure, &a).ok()?;
        let phi = g.value;
        let h: DMatrix<f64> = &g.hessian / phi - (&g.gradient * g.gradient.transpose()) / (phi * phi);
        let uv = DVector::from_column_slice(&unit);
        let slope = t * uv.dot(&h.cholesky()?.solve(&uv));
        Some((a, phi.ln(), slope))
    };

    // Bracket the crossing of log phi(a(t)) through zero.
    let mut lo = 0.0;
    let mut cur = solve(0.0, &center.0);
    let mut hi_t = None;
    let mut t = 0.25;
    for _ in 0..80 {
        let warm = cur.as_ref().map(|c| c.0.clone()).unwrap_or_else(|| center.0.clone());
        match solve(t, &warm) {
            Some(s) if s.1 <= 0.0 => {
                lo = t;
                cur = Some(s);
                t *= 2.0;
            }
            _ => {
                hi_t = Some(t);
                break;
            }
        }
    }
    let (Some(mut hi), Some(mut cur)) = (hi_t, cur) else {
        return fallback(measure, &center, v, norm, lower_bound);
    };
    let mut cur_t = lo;
    let mut best = cur.clone();
    // Safeguarded Newton in t.
    for _ in 0..200 {
        let mut next = if cur.2 > 0.0 { cur_t - cur.1 / cur.2 } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next <= lo || next >= hi {
            break;
        }
        match solve(next, &cur.0) {
            Some(s) => {
                if s.1 <= 0.0 {
                    lo = next;
                } else {
                    hi = next;
                }
                if s.1.abs() < best.1.abs() {
                    best = s.clone();
                }
                cur = s;
                cur_t = next;
                if best.1.abs() < 1e-15 {
                    break;
                }
            }
            None => hi = next,
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let best = best.0;
    let maximizer = DualPoint::new(best);
    let value = maximizer.dot(v);
    if value < norm * lower_bound - 1e-9 * (1.0 + value.abs()) {
        return Err(Error::Certification(format!(
            "support value {value} below grid lower bound {}",
            norm * lower_bound
        )));
    }
    Ok(SupportResult { value, maximizer, lower_bound: norm * lower_bound, fallback: false })
}

fn fallback(measure: &LatticeMeasure, center: &DualPoint, v: &[f64], norm: f64, lower_bound: f64) -> Result<SupportResult> {
    let n = if measure.dim() == 2 { 20000 } else { 4000 };
    let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let (val, p) = grid_max(measure, center, &unit, n)?;
    Ok(SupportResult { value: norm * val, maximizer: p, lower_bound: norm * lower_bound, fallback: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfunc::mgf_grad;
    use crate::reference;

    #[test]
    fn support_of_reference_in_coordinate_directions() {
        let model = reference::walk();
        // phi(alpha, beta) >= A(alpha) + 2 sqrt(0.08) with equality at e^beta = sqrt 2:
        // the extreme alphas solve A(alpha) = 1 - 2 sqrt(0.08).
        let target = 1.0 - 2.0 * 0.08f64.sqrt();
        let a = |x: f64| 0.25 * x.exp() + 0.15 * (-x).exp() - target;
        let right = crate::roots::bisect_root(a, 0.0, 2.0, 0.0);
        let left = crate::roots::bisect_root(a, -2.0, 0.0, 0.0);
        let r = support_d(model.mu(), &[1.0, 0.0]).unwrap();
        assert!((r.value - right).abs() < 1e-9, "{} vs {right}", r.value);
        let l = support_d(model.mu(), &[-1.0, 0.0]).unwrap();
        assert!((l.value + left).abs() < 1e-9);
        // Beta extremes at alpha solving 0.25 e^a = 0.15 e^-a.
        let up = support_d(model.mu(), &[0.0, 1.0]).unwrap();
        let alpha = 0.5 * (0.15f64 / 0.25).ln();
        let amin = 0.25 * alpha.exp() + 0.15 * (-alpha).exp();
        // 0.2 x^2 - (1 - amin) x + 0.4 = 0 with x = e^beta.
        let c = 1.0 - amin;
        let x = (c + (c * c - 0.32).sqrt()) / 0.4;
        assert!((up.value - x.ln()).abs() < 1e-9);
        assert!(!up.fallback);
    }

    #[test]
    fn maximiser_gradient_is_parallel() {
        let model = reference::walk();
        let v = [0.3, 0.8];
        let r = support_d(model.mu(), &v).unwrap();
        let (phi, g) = mgf_grad(model.mu(), r.maximizer.coords()).unwrap();
        assert!((phi - 1.0).abs() < 1e-13);
        let cross = g[0] * v[1] - g[1] * v[0];
        assert!(cross.abs() < 1e-10, "{cross}");
        assert!(g[0] * v[0] + g[1] * v[1] > 0.0);
    }

    #[test]
    fn homogeneous_and_zero() {
        let model = reference::walk();
        let a = support_d(model.mu(), &[0.2, -0.7]).unwrap().value;
        let b = support_d(model.mu(), &[0.6, -2.1]).unwrap().value;
        assert!((b - 3.0 * a).abs() < 1e-10);
        assert_eq!(support_d(model.mu(), &[0.0, 0.0]).unwrap().value, 0.0);
    }
}
