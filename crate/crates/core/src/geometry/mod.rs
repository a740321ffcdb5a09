//! Convex geometry of the boundary map: the sets `D`, `D-hat`, `Theta`, the
//! strata of `dD`, normal cones, `a-hat(q)`, `gamma_q` and the
//! quasi-potentials.

mod ahat;
mod atlas;
mod lifted;
mod path;
mod support;
mod theta;

pub use ahat::{a_hat, a_hat_from_start, gamma_q, i_min, quasi_potential_i, quasi_potential_iplus, AHat, ConeDecomposition, IMin, QuasiPotentialResult};
pub use atlas::{boundary_atlas, Atlas, AtlasRow, Fan};
pub use lifted::{random_feasible_start, LiftedStart};
pub use path::{interior_segment_time, optimal_path, OptimalPath, PathSegment, SegmentKind};
pub use support::{argmin_phi, boundary_ray, directions as support_directions, support_d, SupportResult};
pub use theta::{theta_interval, theta_support, ThetaInterval, ThetaSupport};
pub(crate) use theta::psi_excess;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::{self, mgf_grad, mgf_minus_one, DualPoint};
use crate::model::WalkModel;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stratum {
    Plus,
    Minus,
    Zero,
    Interior,
}

/// A point of `D` with its stratum and the data of its lower companion
/// `a-bar`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub a: DualPoint,
    /// `phi(a) - 1`.
    pub phi_excess: f64,
    pub on_d_boundary: bool,
    pub stratum: Stratum,
    pub abar: DualPoint,
    pub phi0_at_bar: f64,
    /// `phi0(a-bar) - 1`, computed without cancellation.
    pub phi0_bar_excess: f64,
    pub grad_phi: Vec<f64>,
    pub grad_phi_bar: Vec<f64>,
    pub grad_phi0_bar: Vec<f64>,
    /// `kappa` at `a-bar`; `None` when `a-bar` lies in the zero stratum.
    pub kappa: Option<f64>,
}

impl BoundaryPoint {
    /// `phi0(a-bar) = 1` within the stratum tolerance.
    pub fn saturated(&self) -> bool {
        self.phi0_bar_excess.abs() <= tol::STRAT
    }

    /// Inside `D-hat` up to the stratum tolerance.
    pub fn in_d_hat(&self) -> bool {
        self.phi0_bar_excess <= tol::STRAT && self.phi_excess <= tol::STRAT
    }

    /// `grad phi0(a-bar) + kappa grad phi(a-bar)`, normal to `Theta x R`.
    pub fn theta_normal(&self) -> Option<Vec<f64>> {
        let k = self.kappa?;
        Some(self.grad_phi0_bar.iter().zip(&self.grad_phi_bar).map(|(g0, g)| g0 + k * g).collect())
    }
}

/// Classifies a point of `D` and gathers the data of `a-bar`.
pub fn classify(model: &WalkModel, a: &DualPoint) -> Result<BoundaryPoint> {
    if a.dim() != model.dim() {
        return Err(Error::Dimension(format!("dual point of length {} in dimension {}", a.dim(), model.dim())));
    }
    let phi_excess = mgf_minus_one(model.mu(), a.coords())?;
    if phi_excess > tol::STRAT {
        return Err(Error::OutsideD { phi: 1.0 + phi_excess });
    }
    let (_, grad_phi) = mgf_grad(model.mu(), a.coords())?;
    let on_d_boundary = phi_excess.abs() <= tol::STRAT;
    let dbeta = *grad_phi.last().unwrap();
    let stratum = if !on_d_boundary {
        Stratum::Interior
    } else if dbeta.abs() <= tol::STRAT {
        Stratum::Zero
    } else if dbeta > 0.0 {
        Stratum::Plus
    } else {
        Stratum::Minus
    };
    let roots = match genfunc::fiber_roots(model.mu(), a.alpha()) {
        Ok(r) => r,
        Err(Error::NoRoot { .. }) => genfunc::fiber_roots_tol(model.mu(), a.alpha(), tol::STRAT)?,
        Err(e) => return Err(e),
    };
    let abar = if stratum == Stratum::Zero { a.clone() } else { a.with_beta(roots.beta_bar) };
    let (phi0_at_bar, grad_phi0_bar) = mgf_grad(model.mu0(), abar.coords())?;
    let phi0_bar_excess = mgf_minus_one(model.mu0(), abar.coords())?;
    let (_, grad_phi_bar) = mgf_grad(model.mu(), abar.coords())?;
    let dbar = *grad_phi_bar.last().unwrap();
    let kappa = if stratum != Stratum::Zero && dbar < -tol::STRAT {
        Some(-grad_phi0_bar.last().unwrap() / dbar)
    } else {
        None
    };
    Ok(BoundaryPoint {
        a: a.clone(),
        phi_excess,
        on_d_boundary,
        stratum,
        abar,
        phi0_at_bar,
        phi0_bar_excess,
        grad_phi,
        grad_phi_bar,
        grad_phi0_bar,
        kappa,
    })
}

/// `alpha` belongs to `Theta`, i.e. `lambda(alpha) <= 0` up to the stratum
/// tolerance.
pub fn theta_contains(model: &WalkModel, alpha: &[f64]) -> Result<bool> {
    match genfunc::spectral_radius_lambda(model, alpha) {
        Ok(l) => Ok(l <= tol::STRAT),
        Err(Error::Range { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeCase {
    /// `phi(a) = phi0(a-bar) = 1`, `a` outside the zero stratum.
    BothActive,
    /// `phi(a) < phi0(a-bar) = 1`.
    SaturatedOnly,
    /// `a` in the zero stratum, or only `phi(a) = 1` active.
    PhiOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalCone {
    pub generators: Vec<Vec<f64>>,
    pub case: ConeCase,
}

/// Normal cone of `D-hat` at a boundary point.
pub fn normal_cone(point: &BoundaryPoint) -> Result<NormalCone> {
    let sat = point.saturated();
    if point.phi0_bar_excess > tol::STRAT {
        return Err(Error::Precondition(format!(
            "point lies outside D-hat: phi0(a-bar) = {}",
            point.phi0_at_bar
        )));
    }
    if !point.on_d_boundary && !sat {
        return Err(Error::NotOnBoundary { phi: 1.0 + point.phi_excess, phi0_bar: point.phi0_at_bar });
    }
    if point.stratum == Stratum::Zero || !sat {
        return Ok(NormalCone { generators: vec![point.grad_phi.clone()], case: ConeCase::PhiOnly });
    }
    let g = point
        .theta_normal()
        .ok_or_else(|| Error::Certification("a-bar lies in the zero stratum, kappa undefined".into()))?;
    if point.on_d_boundary {
        Ok(NormalCone { generators: vec![point.grad_phi.clone(), g], case: ConeCase::BothActive })
    } else {
        Ok(NormalCone { generators: vec![g], case: ConeCase::SaturatedOnly })
    }
}

/// Nonnegative least squares of `q` on at most two generators. Returns the
/// residual norm and the coefficients.
pub fn cone_residual(cone: &NormalCone, q: &[f64]) -> (f64, Vec<f64>) {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let resid = |coefs: &[f64]| {
        let mut r = q.to_vec();
        for (c, g) in coefs.iter().zip(&cone.generators) {
            for (ri, gi) in r.iter_mut().zip(g) {
                *ri -= c * gi;
            }
        }
        dot(&r, &r).sqrt()
    };
    let single = |g: &[f64]| (dot(q, g) / dot(g, g)).max(0.0);
    match cone.generators.len() {
        1 => {
            let c = vec![single(&cone.generators[0])];
            (resid(&c), c)
        }
        2 => {
            let (g1, g2) = (&cone.generators[0], &cone.generators[1]);
            let (a11, a12, a22) = (dot(g1, g1), dot(g1, g2), dot(g2, g2));
            let (b1, b2) = (dot(q, g1), dot(q, g2));
            let det = a11 * a22 - a12 * a12;
            let mut candidates = vec![vec![single(g1), 0.0], vec![0.0, single(g2)]];
            if det.abs() > 0.0 {
                let c1 = (a22 * b1 - a12 * b2) / det;
                let c2 = (a11 * b2 - a12 * b1) / det;
                if c1 >= 0.0 && c2 >= 0.0 {
                    candidates.push(vec![c1, c2]);
                }
            }
            candidates
                .into_iter()
                .map(|c| (resid(&c), c))
                .min_by(|x, y| x.0.total_cmp(&y.0))
                .unwrap()
        }
        _ => (dot(q, q).sqrt(), Vec::new()),
    }
}

/// A point in the interior of `D ∩ D0`: a small step from the origin
/// against `m/|m| + m0/|m0|`. Returns the point and `max(phi, phi0) - 1`
/// there (negative).
pub fn interior_point(model: &WalkModel) -> Result<(DualPoint, f64)> {
    let unit = |v: &[f64]| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let u = unit(model.mean());
    let u0 = unit(model.mean0());
    let dir: Vec<f64> = u.iter().zip(&u0).map(|(a, b)| -(a + b)).collect();
    let mut best: Option<(DualPoint, f64)> = None;
    let mut eps = 1.0;
    for _ in 0..60 {
        let b = DualPoint::new(dir.iter().map(|x| eps * x).collect());
        let excess = mgf_minus_one(model.mu(), b.coords())?.max(mgf_minus_one(model.mu0(), b.coords())?);
        if excess < 0.0 {
            if best.as_ref().is_none_or(|(_, e)| excess < *e) {
                best = Some((b, excess));
            } else {
                break;
            }
        }
        eps *= 0.5;
    }
    best.ok_or_else(|| Error::Precondition("D ∩ D0 has empty interior".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn origin_is_on_lower_stratum_of_reference() {
        let model = reference::walk();
        let p = classify(&model, &DualPoint::zero(2)).unwrap();
        assert_eq!(p.stratum, Stratum::Minus);
        assert!(p.abar.distance(&DualPoint::zero(2)) < 1e-12);
        assert!(p.saturated());
        // kappa = -m0_y / m_y = 0.3 / 0.2.
        assert!((p.kappa.unwrap() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn interior_and_outside() {
        let model = reference::walk();
        let (b, e) = interior_point(&model).unwrap();
        assert!(e < 0.0);
        assert_eq!(classify(&model, &b).unwrap().stratum, Stratum::Interior);
        assert!(matches!(classify(&model, &DualPoint::new(vec![2.0, 2.0])), Err(Error::OutsideD { .. })));
    }

    #[test]
    fn zero_stratum_point() {
        let model = reference::walk();
        // Right end of the projection of D: minimise over beta, then find alpha
        // with min = 1 by bisection on the closed-form fiber minimum.
        let fmin = |alpha: f64| {
            // phi(alpha, beta) = A + 0.2 e^b + 0.4 e^-b, minimum A + 2 sqrt(0.08).
            0.25 * alpha.exp() + 0.15 * (-alpha).exp() + 2.0 * 0.08f64.sqrt() - 1.0
        };
        let alpha = crate::roots::bisect_root(fmin, 0.0, 1.0, 0.0);
        let beta = 0.5 * 2f64.ln();
        let p = classify(&model, &DualPoint::new(vec![alpha, beta])).unwrap();
        assert_eq!(p.stratum, Stratum::Zero);
        assert!(p.kappa.is_none());
        let cone = normal_cone(&p);
        // phi0 at this point exceeds 1, so it is outside D-hat.
        assert!(cone.is_err());
    }

    #[test]
    fn theta_membership() {
        let model = reference::walk();
        assert!(theta_contains(&model, &[0.0]).unwrap());
        assert!(theta_contains(&model, &[-0.3]).unwrap());
        let mut alpha = 0.5;
        while theta_contains(&model, &[alpha]).unwrap() {
            alpha *= 2.0;
        }
        assert!(!theta_contains(&model, &[alpha]).unwrap());
    }

    #[test]
    fn nnls_two_generators() {
        let cone = NormalCone { generators: vec![vec![1.0, 0.0], vec![1.0, 1.0]], case: ConeCase::BothActive };
        let (r, c) = cone_residual(&cone, &[2.0, 1.0]);
        assert!(r < 1e-15 && (c[0] - 1.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
        let (r, _) = cone_residual(&cone, &[0.0, 1.0]);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
