//! The boundary map `q -> a-hat(q)`, the breakpoint `gamma_q` and the
//! quasi-potentials.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::{fiber_roots, fiber_roots_tol, mgf_grad, DualPoint};
use crate::model::WalkModel;
use crate::roots;
use crate::tol;

use super::lifted::{self, LiftedStart};
use super::support::support_d;
use super::theta::{theta_interval, theta_support};
use super::{classify, cone_residual, interior_point, normal_cone, BoundaryPoint, NormalCone};

/// `a-hat(q)` with its KKT certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AHat {
    /// The direction, normalised.
    pub q: Vec<f64>,
    pub point: BoundaryPoint,
    pub cone: NormalCone,
    /// Nonnegative coefficients of `q` in the cone generators.
    pub coefficients: Vec<f64>,
    /// Distance from `q` to the cone.
    pub residual: f64,
}

fn validate_direction(model: &WalkModel, q: &[f64]) -> Result<Vec<f64>> {
    let d = model.dim();
    if q.len() != d {
        return Err(Error::Dimension(format!("direction of length {} in dimension {d}", q.len())));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDirection("non-finite coordinate".into()));
    }
    if q[d - 1] < 0.0 {
        return Err(Error::InvalidDirection("last coordinate must be nonnegative".into()));
    }
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::InvalidDirection("zero direction".into()));
    }
    Ok(q.iter().map(|x| x / n).collect())
}

/// Lifts a point of `Theta` to the upper boundary of `D`.
fn lift_plus(model: &WalkModel, alpha: &[f64]) -> Result<DualPoint> {
    let r = match fiber_roots(model.mu(), alpha) {
        Ok(r) => r,
        Err(Error::NoRoot { .. }) => fiber_roots_tol(model.mu(), alpha, tol::STRAT)?,
        Err(e) => return Err(e),
    };
    Ok(DualPoint::from_parts(alpha, r.beta_plus))
}

fn certify(model: &WalkModel, q: Vec<f64>, a: &DualPoint) -> Result<AHat> {
    let point = classify(model, a)?;
    let cone = normal_cone(&point)?;
    let (residual, coefficients) = cone_residual(&cone, &q);
    if residual > tol::CONE {
        return Err(Error::Certification(format!(
            "q = {q:?} is at distance {residual:e} from the normal cone at {:?}",
            a.coords()
        )));
    }
    Ok(AHat { q, point, cone, coefficients, residual })
}

/// Two-dimensional maximiser of `q_a alpha + q_b beta+(alpha)` over
/// `Theta`, by bisection on the derivative of this concave function.
fn a_hat_plane(model: &WalkModel, q: &[f64]) -> Result<DualPoint> {
    let th = theta_interval(model)?;
    let slope = |alpha: f64| -> f64 {
        let Ok(r) = fiber_roots(model.mu(), &[alpha]) else {
            return f64::NAN;
        };
        let Ok((_, g)) = mgf_grad(model.mu(), &[alpha, r.beta_plus]) else {
            return f64::NAN;
        };
        q[0] - q[1] * g[0] / g[1]
    };
    let alpha = if !th.hi_tangent && slope(th.hi) >= 0.0 {
        th.hi
    } else if !th.lo_tangent && slope(th.lo) <= 0.0 {
        th.lo
    } else {
        let (a, b) = roots::bisect_predicate(|x| !(slope(x) >= 0.0), th.lo, th.hi, 0.0);
        if slope(a).abs() <= slope(b).abs() {
            a
        } else {
            b
        }
    };
    lift_plus(model, &[alpha])
}

/// The barrier-plus-polish solver from a given lifted start.
fn a_hat_lifted(model: &WalkModel, q: &[f64], start: &LiftedStart) -> Result<DualPoint> {
    let d = model.dim();
    if q[d - 1] == 0.0 {
        let alpha = lifted::theta_support_solve(model, &q[..d - 1], start)?;
        return lift_plus(model, &alpha);
    }
    let u = lifted::a_hat_barrier(model, q, start)?;
    // Only phi(a) <= 1 active: the support point of D.
    let s = support_d(model.mu(), q)?;
    if let Ok(p) = classify(model, &s.maximizer) {
        if p.phi0_bar_excess <= tol::STRAT {
            return Ok(s.maximizer);
        }
    }
    match lifted::polish_saturated(model, q, &u) {
        Ok(v) if v[d + 1] >= -tol::CONE && v[d + 2] >= -tol::CONE => Ok(DualPoint::from_parts(&v[..d - 1], v[d - 1])),
        _ => Ok(DualPoint::from_parts(&u[..d - 1], u[d - 1])),
    }
}

/// `a-hat(q)`: the maximiser of `a.q` over `D-hat`, on the upper stratum,
/// certified by the distance from `q` to its normal cone.
pub fn a_hat(model: &WalkModel, q: &[f64]) -> Result<AHat> {
    model.ensure_accepted()?;
    let q = validate_direction(model, q)?;
    let d = model.dim();
    let a = if q[d - 1] == 0.0 {
        let ts = theta_support(model, &q[..d - 1])?;
        lift_plus(model, &ts.alpha)?
    } else if d == 2 {
        a_hat_plane(model, &q)?
    } else {
        let (b, _) = interior_point(model)?;
        a_hat_lifted(model, &q, &LiftedStart::from_point(&b, true))?
    };
    certify(model, q, &a)
}

/// `a-hat(q)` computed by the general interior-point solver from `start`.
/// Used to check uniqueness under random restarts.
pub fn a_hat_from_start(model: &WalkModel, q: &[f64], start: &LiftedStart) -> Result<AHat> {
    model.ensure_accepted()?;
    let q = validate_direction(model, q)?;
    let a = a_hat_lifted(model, &q, start)?;
    certify(model, q, &a)
}

/// `q - gamma_q = c1 grad phi(a-hat)`, `gamma_q = c2 (grad phi0 + kappa grad
/// phi)(a-bar)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeDecomposition {
    pub q: Vec<f64>,
    pub a_hat: BoundaryPoint,
    pub gamma_q: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub active_phi0: bool,
}

pub fn gamma_q(model: &WalkModel, q: &[f64]) -> Result<ConeDecomposition> {
    let d = model.dim();
    if q.len() != d {
        return Err(Error::Dimension(format!("direction of length {} in dimension {d}", q.len())));
    }
    if !(q[d - 1] > 0.0) {
        return Err(Error::InvalidDirection("gamma_q needs a positive last coordinate".into()));
    }
    let ah = a_hat(model, q)?;
    let p = ah.point;
    let g = &p.grad_phi;
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if p.phi0_bar_excess < -tol::STRAT {
        let c1 = q.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / g.iter().map(|x| x * x).sum::<f64>();
        let resid = q.iter().zip(g).map(|(a, b)| (a - c1 * b).powi(2)).sum::<f64>().sqrt();
        if resid > tol::CONE * qn.max(1.0) {
            return Err(Error::Certification(format!("q is not parallel to grad phi(a-hat): residual {resid:e}")));
        }
        return Ok(ConeDecomposition { q: q.to_vec(), a_hat: p, gamma_q: vec![0.0; d], c1, c2: 0.0, active_phi0: false });
    }
    if g[d - 1] <= 0.0 {
        return Err(Error::Certification(format!(
            "a-hat has d_beta phi = {} <= 0 while q_d > 0: inconsistent stratum",
            g[d - 1]
        )));
    }
    let c1 = q[d - 1] / g[d - 1];
    let mut gamma: Vec<f64> = q.iter().zip(g).map(|(a, b)| a - c1 * b).collect();
    gamma[d - 1] = 0.0;
    let gn = p
        .theta_normal()
        .ok_or_else(|| Error::Certification("kappa undefined at a saturated a-hat".into()))?;
    let gg: f64 = gn.iter().map(|x| x * x).sum();
    let c2 = gamma.iter().zip(&gn).map(|(a, b)| a * b).sum::<f64>() / gg;
    let resid = gamma.iter().zip(&gn).map(|(a, b)| (a - c2 * b).powi(2)).sum::<f64>().sqrt();
    if resid > tol::CONE * qn.max(1.0) {
        return Err(Error::Certification(format!("gamma_q leaves the normal direction of Theta: {resid:e}")));
    }
    if c2 < -tol::CONE * qn.max(1.0) || c1 < 0.0 {
        return Err(Error::Certification(format!("negative cone coefficient: c1 = {c1}, c2 = {c2}")));
    }
    Ok(ConeDecomposition { q: q.to_vec(), a_hat: p, gamma_q: gamma, c1, c2: c2.max(0.0), active_phi0: true })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiPotentialResult {
    pub value: f64,
    pub maximizer: DualPoint,
    /// `(I(0, gamma_q), I+(gamma_q, q))`.
    pub decomposition: Option<(f64, f64)>,
    pub fallback: bool,
}

/// `I+(q_from, q_to)`: the support function of `D` at `q_to - q_from`.
pub fn quasi_potential_iplus(model: &WalkModel, q_from: &[f64], q_to: &[f64]) -> Result<QuasiPotentialResult> {
    if q_from.len() != q_to.len() {
        return Err(Error::Dimension("endpoints of different lengths".into()));
    }
    let v: Vec<f64> = q_to.iter().zip(q_from).map(|(a, b)| a - b).collect();
    let s = support_d(model.mu(), &v)?;
    Ok(QuasiPotentialResult { value: s.value, maximizer: s.maximizer, decomposition: None, fallback: s.fallback })
}

/// `I(0, q)`: the support function of `D-hat` at `q`, with the
/// decomposition through `gamma_q` when `q` points into the half-space.
pub fn quasi_potential_i(model: &WalkModel, q: &[f64]) -> Result<QuasiPotentialResult> {
    let d = model.dim();
    if q.len() != d {
        return Err(Error::Dimension(format!("direction of length {} in dimension {d}", q.len())));
    }
    if q.iter().all(|&x| x == 0.0) {
        return Ok(QuasiPotentialResult { value: 0.0, maximizer: DualPoint::zero(d), decomposition: None, fallback: false });
    }
    let ah = a_hat(model, q)?;
    let value = ah.point.a.dot(q);
    let decomposition = if q[d - 1] > 0.0 {
        let dec = gamma_q(model, q)?;
        let i0 = theta_support(model, &dec.gamma_q[..d - 1])?.value;
        let v: Vec<f64> = q.iter().zip(&dec.gamma_q).map(|(a, b)| a - b).collect();
        let ip = support_d(model.mu(), &v)?.value;
        Some((i0, ip))
    } else {
        None
    };
    Ok(QuasiPotentialResult { value, maximizer: ah.point.a, decomposition, fallback: false })
}

/// `I_min = inf over unit boundary gamma of I(0, gamma) + I+(gamma, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IMin {
    pub value: f64,
    pub gamma: Vec<f64>,
}

fn boundary_cost(model: &WalkModel, gamma_alpha: &[f64]) -> Result<f64> {
    let mut minus: Vec<f64> = gamma_alpha.iter().map(|x| -x).collect();
    minus.push(0.0);
    Ok(theta_support(model, gamma_alpha)?.value + support_d(model.mu(), &minus)?.value)
}

pub fn i_min(model: &WalkModel) -> Result<IMin> {
    model.ensure_accepted()?;
    let d = model.dim();
    let (value, alpha) = match d {
        // The unit sphere of the boundary line is {+1, -1}.
        2 => {
            let plus = boundary_cost(model, &[1.0])?;
            let minus = boundary_cost(model, &[-1.0])?;
            if plus <= minus {
                (plus, vec![1.0])
            } else {
                (minus, vec![-1.0])
            }
        }
        3 => {
            let f = |t: f64| boundary_cost(model, &[t.cos(), t.sin()]).unwrap_or(f64::INFINITY);
            let (t, v) = roots::grid_then_golden(f, 0.0, 2.0 * std::f64::consts::PI, 720, tol::ARG);
            (v, vec![t.cos(), t.sin()])
        }
        _ => {
            let mut best = (f64::INFINITY, Vec::new());
            for dir in super::support::directions(d - 1, 2000) {
                let v = boundary_cost(model, &dir)?;
                if v < best.0 {
                    best = (v, dir);
                }
            }
            best
        }
    };
    if value <= 1e-8 {
        return Err(Error::Certification(format!("I_min = {value} is not positive")));
    }
    let mut gamma = alpha;
    gamma.push(0.0);
    Ok(IMin { value, gamma })
}
