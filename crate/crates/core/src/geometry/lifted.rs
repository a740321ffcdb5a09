//! Interior-point solver on the lifted description of `D-hat`:
//!
//! `(alpha, beta) in D-hat` iff there is `beta'` with `phi(alpha, beta) <= 1`,
//! `phi(alpha, beta') <= 1` and `phi0(alpha, beta') <= 1`. All three
//! constraints are smooth and convex, so a log-barrier method applies in any
//! dimension. Its output is polished by Newton on the active KKT system.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::genfunc::{fiber_roots, mgf_full, mgf_grad, mgf_minus_one, DualPoint};
use crate::model::{Law, WalkModel};

use super::interior_point;
use super::support::boundary_ray;

/// Strictly feasible starting point of the lifted problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedStart {
    pub alpha: Vec<f64>,
    /// `beta'`, the height of the companion point on the lower side.
    pub beta_low: f64,
    /// `beta`, used only when the objective involves the last coordinate.
    pub beta: f64,
}

impl LiftedStart {
    pub(crate) fn from_point(p: &DualPoint, _with_beta: bool) -> Self {
        Self { alpha: p.alpha().to_vec(), beta_low: p.beta(), beta: p.beta() }
    }
}

/// A random strictly feasible start: a random point of the interior of
/// `D ∩ D0` and a random height strictly inside the fiber of `D` above it.
pub fn random_feasible_start<R: Rng + ?Sized>(model: &WalkModel, rng: &mut R) -> Result<LiftedStart> {
    let (b, _) = interior_point(model)?;
    let d = model.dim();
    let dir: Vec<f64> = loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            break v.into_iter().map(|x| x / n).collect();
        }
    };
    let excess = |a: &[f64]| -> Result<f64> {
        Ok(mgf_minus_one(model.mu(), a)?.max(mgf_minus_one(model.mu0(), a)?))
    };
    let edge = boundary_ray(excess, b.coords(), &dir)?;
    let s = rng.gen_range(0.05..0.9);
    let p: Vec<f64> = b.coords().iter().zip(edge.coords()).map(|(x, e)| x + s * (e - x)).collect();
    let p = DualPoint::new(p);
    let r = fiber_roots(model.mu(), p.alpha())?;
    let frac = rng.gen_range(0.1..0.9);
    let beta = p.beta() + frac * (r.beta_plus - p.beta());
    Ok(LiftedStart { alpha: p.alpha().to_vec(), beta_low: p.beta(), beta })
}

struct Constraint {
    law: Law,
    beta_index: usize,
}

pub(crate) struct BarrierSolution {
    pub x: Vec<f64>,
    /// Lagrange multipliers of the constraints in declaration order.
    pub multipliers: Vec<f64>,
}

/// Maximises `obj . x` subject to `log phi_law(alpha, x[beta_index]) <= 0`
/// for each constraint, from a strictly feasible `x0`.
fn barrier_maximize(model: &WalkModel, obj: &[f64], constraints: &[Constraint], x0: Vec<f64>) -> Result<BarrierSolution> {
    let n = x0.len();
    let dm1 = model.dim() - 1;
    let point = |x: &[f64], c: &Constraint| -> Vec<f64> {
        let mut a = x[..dm1].to_vec();
        a.push(x[c.beta_index]);
        a
    };
    let values = |x: &[f64]| -> Option<Vec<f64>> {
        constraints
            .iter()
            .map(|c| {
                let v = crate::genfunc::mgf(model.law(c.law), &point(x, c)).ok()?.ln();
                (v < 0.0).then_some(v)
            })
            .collect()
    };
    let barrier = |x: &[f64], t: f64| -> Option<f64> {
        let vals = values(x)?;
        let lin: f64 = obj.iter().zip(x).map(|(a, b)| a * b).sum();
        Some(-t * lin - vals.iter().map(|v| (-v).ln()).sum::<f64>())
    };
    let mut x = x0;
    if values(&x).is_none() {
        return Err(Error::Precondition("barrier start is not strictly feasible".into()));
    }
    let m = constraints.len() as f64;
    let mut t = 1.0;
    loop {
        for _ in 0..200 {
            let mut grad = DVector::from_iterator(n, obj.iter().map(|c| -t * c));
            let mut hess = DMatrix::<f64>::zeros(n, n);
            for c in constraints {
                let a = point(&x, c);
                let g = mgf_full(model.law(c.law), &a)?;
                let phi = g.value;
                let lg = &g.gradient / phi;
                let lh = &g.hessian / phi - (&g.gradient * g.gradient.transpose()) / (phi * phi);
                let val = phi.ln();
                let idx: Vec<usize> = (0..dm1).chain(std::iter::once(c.beta_index)).collect();
                for (i, &xi) in idx.iter().enumerate() {
                    grad[xi] += lg[i] / (-val);
                    for (j, &xj) in idx.iter().enumerate() {
                        hess[(xi, xj)] += lh[(i, j)] / (-val) + lg[i] * lg[j] / (val * val);
                    }
                }
            }
            let chol = match hess.clone().cholesky() {
                Some(c) => c,
                None => {
                    let ridge = 1e-12 * hess.diagonal().amax().max(1.0);
                    (hess + DMatrix::identity(n, n) * ridge)
                        .cholesky()
                        .ok_or_else(|| Error::Singular("barrier Hessian".into()))?
                }
            };
            let step = -chol.solve(&grad);
            let decrement = -grad.dot(&step);
            // At large t round-off keeps the decrement from vanishing; a step
            // below the resolution of x ends the centering as well.
            let xnorm = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            if decrement < 1e-10 || step.amax() <= 1e-15 * xnorm {
                break;
            }
            let f0 = barrier(&x, t).unwrap();
            let mut s = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + s * b).collect();
                if let Some(f) = barrier(&trial, t) {
                    if f <= f0 - 0.25 * s * decrement {
                        x = trial;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-14 {
                    break;
                }
            }
            if s < 1e-14 {
                break;
            }
        }
        if m / t < 1e-12 {
            break;
        }
        t *= 10.0;
    }
    let vals = values(&x).ok_or_else(|| Error::NoConvergence("barrier iterate left the domain".into()))?;
    let multipliers = vals.iter().map(|v| 1.0 / (t * -v)).collect();
    Ok(BarrierSolution { x, multipliers })
}

/// Barrier solution of `max q.a` over `D-hat`. Returns `(alpha, beta,
/// beta', c1, c2)` estimates, with `c1`, `c2` the multipliers of
/// `phi(a) <= 1` and `phi0(a-bar) <= 1`.
pub(crate) fn a_hat_barrier(model: &WalkModel, q: &[f64], start: &LiftedStart) -> Result<Vec<f64>> {
    let d = model.dim();
    let mut obj = q[..d - 1].to_vec();
    obj.push(0.0);
    obj.push(q[d - 1]);
    let constraints = [
        Constraint { law: Law::Interior, beta_index: d },
        Constraint { law: Law::Interior, beta_index: d - 1 },
        Constraint { law: Law::Boundary, beta_index: d - 1 },
    ];
    let mut x0 = start.alpha.clone();
    x0.push(start.beta_low);
    x0.push(start.beta);
    let sol = barrier_maximize(model, &obj, &constraints, x0)?;
    let mut u = sol.x[..d - 1].to_vec();
    u.push(sol.x[d]);
    u.push(sol.x[d - 1]);
    u.push(sol.multipliers[0]);
    u.push(sol.multipliers[2]);
    Ok(u)
}

/// Damped Newton on a square system with a central-difference Jacobian.
pub(crate) fn newton_system<F: Fn(&[f64]) -> Result<Vec<f64>>>(f: F, x0: &[f64]) -> Result<Vec<f64>> {
    let n = x0.len();
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    for _ in 0..100 {
        if norm(&fx) < 1e-15 {
            return Ok(x);
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (f(&xp)?, f(&xm)?);
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_column_slice(&fx);
        let step = jac.lu().solve(&rhs).ok_or_else(|| Error::Singular("KKT Jacobian".into()))?;
        let mut s = 1.0;
        let current = norm(&fx);
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - s * b).collect();
            if let Ok(ft) = f(&trial) {
                if norm(&ft) < current || (s < 1e-3 && norm(&ft) <= current) {
                    x = trial;
                    fx = ft;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-10 {
                return if current < 1e-11 {
                    Ok(x)
                } else {
                    Err(Error::NoConvergence(format!("KKT Newton stalled at residual {current:e}")))
                };
            }
        }
    }
    if norm(&fx) < 1e-11 {
        Ok(x)
    } else {
        Err(Error::NoConvergence(format!("KKT Newton residual {:e}", norm(&fx))))
    }
}

/// `grad phi0(a-bar) + kappa grad phi(a-bar)` at an arbitrary lower point.
pub(crate) fn theta_normal_at(model: &WalkModel, abar: &[f64]) -> Result<Vec<f64>> {
    let (_, g) = mgf_grad(model.mu(), abar)?;
    let (_, g0) = mgf_grad(model.mu0(), abar)?;
    let last = abar.len() - 1;
    if g[last] >= 0.0 {
        return Err(Error::Precondition("companion point is not on the lower stratum".into()));
    }
    let kappa = -g0[last] / g[last];
    Ok(g0.iter().zip(&g).map(|(a, b)| a + kappa * b).collect())
}

/// Newton on `phi(a) = phi(a-bar) = phi0(a-bar) = 1`,
/// `q = c1 grad phi(a) + c2 (grad phi0 + kappa grad phi)(a-bar)`.
pub(crate) fn polish_saturated(model: &WalkModel, q: &[f64], u0: &[f64]) -> Result<Vec<f64>> {
    let d = model.dim();
    let f = |u: &[f64]| -> Result<Vec<f64>> {
        let alpha = &u[..d - 1];
        let a = DualPoint::from_parts(alpha, u[d - 1]);
        let abar = DualPoint::from_parts(alpha, u[d]);
        let (c1, c2) = (u[d + 1], u[d + 2]);
        let mut out = vec![
            mgf_minus_one(model.mu(), a.coords())?,
            mgf_minus_one(model.mu(), abar.coords())?,
            mgf_minus_one(model.mu0(), abar.coords())?,
        ];
        let (_, g) = mgf_grad(model.mu(), a.coords())?;
        let gn = theta_normal_at(model, abar.coords())?;
        for i in 0..d {
            out.push(c1 * g[i] + c2 * gn[i] - q[i]);
        }
        Ok(out)
    };
    newton_system(f, u0)
}

/// Maximiser of `u.alpha` over `Theta` for `d >= 3`: barrier, then Newton
/// on the saturated or the tangent boundary system of `Theta`.
pub(crate) fn theta_support_solve(model: &WalkModel, u: &[f64], start: &LiftedStart) -> Result<Vec<f64>> {
    let d = model.dim();
    let mut obj = u.to_vec();
    obj.push(0.0);
    let constraints = [
        Constraint { law: Law::Interior, beta_index: d - 1 },
        Constraint { law: Law::Boundary, beta_index: d - 1 },
    ];
    let mut x0 = start.alpha.clone();
    x0.push(start.beta_low);
    let sol = barrier_maximize(model, &obj, &constraints, x0)?;
    let alpha0 = sol.x[..d - 1].to_vec();
    let beta0 = sol.x[d - 1];
    let (lam_phi, lam_phi0) = (sol.multipliers[0], sol.multipliers[1]);

    let saturated = |v: &[f64]| -> Result<Vec<f64>> {
        let abar = DualPoint::from_parts(&v[..d - 1], v[d - 1]);
        let c = v[d];
        let mut out = vec![mgf_minus_one(model.mu(), abar.coords())?, mgf_minus_one(model.mu0(), abar.coords())?];
        let gn = theta_normal_at(model, abar.coords())?;
        for i in 0..d - 1 {
            out.push(u[i] - c * gn[i]);
        }
        Ok(out)
    };
    let tangent = |v: &[f64]| -> Result<Vec<f64>> {
        let a = DualPoint::from_parts(&v[..d - 1], v[d - 1]);
        let c = v[d];
        let (_, g) = mgf_grad(model.mu(), a.coords())?;
        let mut out = vec![mgf_minus_one(model.mu(), a.coords())?, g[d - 1]];
        for i in 0..d - 1 {
            out.push(u[i] - c * g[i]);
        }
        Ok(out)
    };
    let mut v0 = alpha0.clone();
    v0.push(beta0);
    let sat_first = lam_phi0 >= lam_phi * 1e-3;
    let attempts: [(&dyn Fn(&[f64]) -> Result<Vec<f64>>, f64); 2] = if sat_first {
        [(&saturated, lam_phi0), (&tangent, lam_phi)]
    } else {
        [(&tangent, lam_phi), (&saturated, lam_phi0)]
    };
    let mut last_err = None;
    for (system, c0) in attempts {
        let mut start = v0.clone();
        start.push(c0.max(1e-6));
        match newton_system(system, &start) {
            Ok(v) if v[d] >= -1e-10 => {
                let alpha = v[..d - 1].to_vec();
                // The answer must stay in Theta.
                if super::theta::psi_excess(model, &alpha).is_some_and(|e| e <= crate::tol::STRAT) {
                    return Ok(alpha);
                }
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    // Polishing failed: keep the barrier answer, which is accurate to its gap.
    let _ = last_err;
    Ok(alpha0)
}
