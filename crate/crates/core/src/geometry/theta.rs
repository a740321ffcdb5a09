//! The set `Theta` of admissible horizontal tilts and its support function.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::{fiber_roots, mgf_minus_one};
use crate::model::WalkModel;
use crate::roots;
use crate::tol;

use super::interior_point;
use super::lifted;

/// `Theta = [lo, hi]` for two-dimensional models, with the nature of each
/// endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaInterval {
    pub lo: f64,
    pub hi: f64,
    /// `phi0(a-bar) = 1` at the endpoint.
    pub lo_saturated: bool,
    pub hi_saturated: bool,
    /// The fiber of `D` over the endpoint degenerates to a point.
    pub lo_tangent: bool,
    pub hi_tangent: bool,
}

/// `phi0(a-bar(alpha)) - 1`, or `None` outside the projection of `D`.
pub(crate) fn psi_excess(model: &WalkModel, alpha: &[f64]) -> Option<f64> {
    let r = fiber_roots(model.mu(), alpha).ok()?;
    let mut a = alpha.to_vec();
    a.push(r.beta_bar);
    mgf_minus_one(model.mu0(), &a).ok()
}

fn member(model: &WalkModel, alpha: f64) -> bool {
    psi_excess(model, &[alpha]).is_some_and(|e| e <= 0.0)
}

fn endpoint_flags(model: &WalkModel, alpha: f64) -> (bool, bool) {
    let sat = psi_excess(model, &[alpha]).is_some_and(|e| e.abs() <= tol::STRAT);
    let tangent = fiber_roots(model.mu(), &[alpha]).is_ok_and(|r| r.min_excess.abs() <= tol::STRAT);
    (sat, tangent)
}

/// Endpoints of `Theta` for `d = 2`, each located by bisection on the
/// membership test `alpha in proj(D)` and `phi0(a-bar) <= 1`.
pub fn theta_interval(model: &WalkModel) -> Result<ThetaInterval> {
    if model.dim() != 2 {
        return Err(Error::Dimension("Theta is an interval only in dimension 2".into()));
    }
    let (b, _) = interior_point(model)?;
    let start = b.alpha()[0];
    if !member(model, start) {
        return Err(Error::Certification("interior point of D ∩ D0 not in Theta".into()));
    }
    let mut ends = [0.0; 2];
    for (k, dir) in [-1.0, 1.0].into_iter().enumerate() {
        let out = roots::expand_until(|x| !member(model, x), start, dir, 0.25, 64)
            .ok_or_else(|| Error::NoConvergence("Theta is unbounded".into()))?;
        let (inside, _) = roots::bisect_predicate(|x| !member(model, x), start, out, 0.0);
        ends[k] = inside;
    }
    let (lo_saturated, lo_tangent) = endpoint_flags(model, ends[0]);
    let (hi_saturated, hi_tangent) = endpoint_flags(model, ends[1]);
    Ok(ThetaInterval { lo: ends[0], hi: ends[1], lo_saturated, hi_saturated, lo_tangent, hi_tangent })
}

/// `sup_{alpha in Theta} u.alpha` with a maximiser.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSupport {
    pub value: f64,
    pub alpha: Vec<f64>,
}

pub fn theta_support(model: &WalkModel, u: &[f64]) -> Result<ThetaSupport> {
    let d = model.dim();
    if u.len() + 1 != d {
        return Err(Error::Dimension(format!("horizontal direction of length {} in dimension {d}", u.len())));
    }
    if u.iter().all(|&x| x == 0.0) {
        return Ok(ThetaSupport { value: 0.0, alpha: vec![0.0; d - 1] });
    }
    if d == 2 {
        let th = theta_interval(model)?;
        let alpha = if u[0] > 0.0 { th.hi } else { th.lo };
        return Ok(ThetaSupport { value: u[0] * alpha, alpha: vec![alpha] });
    }
    let (b, _) = interior_point(model)?;
    let start = lifted::LiftedStart::from_point(&b, false);
    let alpha = lifted::theta_support_solve(model, u, &start)?;
    let value = u.iter().zip(&alpha).map(|(x, y)| x * y).sum();
    Ok(ThetaSupport { value, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn reference_theta() {
        let model = reference::walk();
        let th = theta_interval(&model).unwrap();
        // The origin is saturated: phi0(0) = 1 and a-bar(0) = 0.
        assert!(th.hi.abs() < 1e-12, "{th:?}");
        assert!(th.hi_saturated && th.lo_saturated);
        assert!(!th.lo_tangent && !th.hi_tangent);
        // Independent oracle at the left end: closed-form lower root, then the
        // sign change of phi0 on a fine grid.
        let psi = |a: f64| {
            let c = 1.0 - 0.25 * a.exp() - 0.15 * (-a).exp();
            let x = (c - (c * c - 0.32).sqrt()) / 0.4;
            0.5 * a.exp() + 0.2 * (-a).exp() + 0.3 * x - 1.0
        };
        let lo = crate::roots::bisect_root(psi, -0.73, -0.5, 0.0);
        assert!((th.lo - lo).abs() < 1e-10, "{} vs {lo}", th.lo);
    }

    #[test]
    fn companion_has_tangent_left_end() {
        let model = reference::tangent_companion();
        let th = theta_interval(&model).unwrap();
        assert!(th.lo_tangent && !th.lo_saturated, "{th:?}");
        assert!(th.hi_saturated);
    }
}
