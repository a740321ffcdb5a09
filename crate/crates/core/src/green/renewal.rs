//! The last-exit decomposition of `G` through the boundary hyperplane and
//! its principal part around `gamma_q`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::{mgf_minus_one, DualPoint};
use crate::geometry::{classify, gamma_q};
use crate::model::WalkModel;

use super::bounds::TiltBounds;
use super::kernel::{BoxDomain, BoxSystem, Kernel, KernelKind};
use super::solve::{green_exact_from, green_linear_solve, green_to_solve, ExactConfig};
use super::{GreenEstimate, SOLVE_ROUNDOFF};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenewalAudit {
    pub z: Vec<i64>,
    pub z_n: Vec<i64>,
    pub q: Vec<f64>,
    pub delta: f64,
    pub gamma_q: Vec<f64>,
    /// `G(z, z_n)`, with the certified truncation of the box as its error.
    pub lhs: GreenEstimate,
    /// `G+(z, z_n)`.
    pub direct_term: f64,
    /// `sum_w sum_w' G(z, w) mu0(w' - w) G+(w', z_n)`.
    pub boundary_sum: f64,
    /// The principal part `Xi_delta^q(z, z_n)`.
    pub principal: f64,
    pub relative_gap: f64,
    pub principal_ratio: f64,
    pub domain: BoxDomain,
}

/// Both sides of the renewal equation on a common box, chosen so that the
/// certified truncation of `G(z, z_n)` is below `config.rel_tol`. On the box
/// the identity is exact, so the gap measures roundoff.
pub fn renewal_audit(model: &WalkModel, z: &[i64], z_n: &[i64], q: &[f64], delta: f64, config: &ExactConfig) -> Result<RenewalAudit> {
    model.ensure_accepted()?;
    let d = model.dim();
    if z_n.len() != d || z.len() != d {
        return Err(Error::Dimension("sites of the wrong dimension".into()));
    }
    if z_n[d - 1] < 1 {
        return Err(Error::Precondition("z_n must lie strictly above the boundary".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Precondition("delta must be positive".into()));
    }
    let dec = gamma_q(model, q)?;
    let reflected = Kernel::new(model, KernelKind::Reflected)?;
    let killed = Kernel::new(model, KernelKind::Killed)?;
    let (est, domain) = green_exact_from(model, &reflected, z, &[z_n.to_vec()], config)?;
    let lhs = est.into_iter().next().expect("one target");
    let row = green_linear_solve(&reflected, z, &domain)?;
    let killed_box = domain.clipped(&killed)?;
    let kb = TiltBounds::new(model, &killed, 8)?;
    let col = green_to_solve(&killed, &kb, z_n, &killed_box)?;
    let direct_term = if z[d - 1] >= 1 { col.value(z) } else { 0.0 };

    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_n = z_n.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let center: Vec<f64> = dec.gamma_q.iter().map(|g| g / qn * norm_n).collect();
    let gamma_zero = dec.gamma_q.iter().all(|&g| g == 0.0);
    let mut boundary_sum = 0.0;
    let mut principal = if gamma_zero { direct_term } else { 0.0 };
    let rows: &BoxSystem = &row.system;
    for i in 0..rows.len() {
        let w = rows.domain.site(i);
        if w[d - 1] != 0 {
            continue;
        }
        let g = row.values[i];
        if g == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for atom in model.mu0().atoms() {
            let w2: Vec<i64> = w.iter().zip(atom.step.iter()).map(|(a, b)| a + b).collect();
            if w2[d - 1] >= 1 {
                inner += atom.prob * col.value(&w2);
            }
        }
        let term = g * inner;
        boundary_sum += term;
        let dist = w.iter().zip(&center).map(|(a, b)| (*a as f64 - b).powi(2)).sum::<f64>().sqrt();
        if dist < delta * norm_n {
            principal += term;
        }
    }
    let g_box = row.value(z_n);
    let relative_gap = (g_box - direct_term - boundary_sum).abs() / g_box;
    Ok(RenewalAudit {
        z: z.to_vec(),
        z_n: z_n.to_vec(),
        q: q.to_vec(),
        delta,
        gamma_q: dec.gamma_q,
        principal_ratio: principal / g_box,
        lhs,
        direct_term,
        boundary_sum,
        principal,
        relative_gap,
        domain,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySumCheck {
    pub a: Vec<f64>,
    /// `sum over boundary sites of the box of G_B(z, w) e^{a.w}`.
    pub truncated: f64,
    /// Certified bound on the part of the sum cut off by the box.
    pub remainder: f64,
    /// `e^{a-bar.z} / (1 - phi0(a-bar))`.
    pub predicted: f64,
}

impl BoundarySumCheck {
    pub fn consistent(&self) -> bool {
        let slack = SOLVE_ROUNDOFF * self.predicted;
        self.truncated <= self.predicted + slack && self.predicted <= self.truncated + self.remainder + slack
    }
}

/// The boundary sum `sum_w G(z, w) e^{a.w}` against its closed form, for
/// `d = 2` and `a` in `D` with `phi0(a-bar) < 1`.
///
/// The remainder is bounded without the closed form: from an exit point
/// `e`, `G(e, w) <= e^{b.(e - w)} / (1 - rho_b)` with `b_1 > alpha_1` for the
/// boundary sites to the right of `e` and `b_1 < alpha_1` to the left, which
/// makes both geometric series converge.
pub fn boundary_sum_identity(model: &WalkModel, z: &[i64], a: &DualPoint, domain: &BoxDomain) -> Result<BoundarySumCheck> {
    if model.dim() != 2 {
        return Err(Error::Dimension("the boundary-sum check is implemented for d = 2".into()));
    }
    let p = classify(model, a)?;
    if p.phi0_bar_excess >= 0.0 {
        return Err(Error::Precondition("phi0(a-bar) must be below one".into()));
    }
    let alpha = a.alpha()[0];
    let predicted = p.abar.dot_site(z).exp() / (-mgf_minus_one(model.mu0(), p.abar.coords())?);
    let kernel = Kernel::new(model, KernelKind::Reflected)?;
    let bounds = TiltBounds::new(model, &kernel, 256)?;
    let row = green_linear_solve(&kernel, z, domain)?;
    let mut truncated = 0.0;
    for i in 0..row.system.len() {
        let w = row.system.domain.site(i);
        if w[1] == 0 {
            truncated += row.values[i] * (alpha * w[0] as f64).exp();
        }
    }
    let side = |e: &[i64], right: bool| -> f64 {
        bounds
            .tilts
            .iter()
            .filter(|t| if right { t.a[0] > alpha } else { t.a[0] < alpha })
            .map(|t| {
                let gap = if right { t.a[0] - alpha } else { alpha - t.a[0] };
                // sum over boundary x >= e_x (or x < e_x) of e^{b.e - b_1 x + alpha x}
                let head = if right { 0.0 } else { -gap };
                t.a[1] * e[1] as f64 + alpha * e[0] as f64 + t.log_inv_gap + head - (-(-gap).exp_m1()).ln()
            })
            .fold(f64::INFINITY, f64::min)
            .exp()
    };
    let mut remainder = 0.0;
    for (j, e, w) in &row.system.exits {
        let g = row.values[*j];
        if g > 0.0 {
            remainder += g * w * (side(e, true) + side(e, false));
        }
    }
    Ok(BoundarySumCheck { a: a.coords().to_vec(), truncated, remainder, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genfunc::fiber_roots;
    use crate::reference;

    #[test]
    fn renewal_identity_is_exact_on_the_box() {
        let model = reference::walk();
        let cfg = ExactConfig { rel_tol: 1e-4, ..Default::default() };
        let audit = renewal_audit(&model, &[0, 1], &[3, 8], &[0.3, 0.8], 0.15, &cfg).unwrap();
        assert!(audit.relative_gap < 1e-10, "{audit:?}");
        assert!(audit.principal <= audit.direct_term + audit.boundary_sum * (1.0 + 1e-12));
    }

    #[test]
    fn boundary_sum_matches_closed_form() {
        let model = reference::walk();
        let alpha = -0.3;
        let r = fiber_roots(model.mu(), &[alpha]).unwrap();
        let a = DualPoint::new(vec![alpha, r.beta_plus]);
        let domain = BoxDomain::new(vec![-60, 0], vec![80, 40]).unwrap();
        let c = boundary_sum_identity(&model, &[0, 2], &a, &domain).unwrap();
        assert!(c.consistent(), "{c:?}");
        assert!(c.remainder < 1e-3 * c.predicted, "{c:?}");
    }
}
