//! Certified exponential bounds on transition probabilities and Green's
//! functions.
//!
//! Three families are combined, each bound being the minimum over its
//! candidates:
//!
//! * Supermartingale tilts, valid for every kernel. If
//!   `sum_{z'} p(z, z') e^{a.(z' - z)} <= rho < 1` at every state, then
//!   `P_z(Z_t = z') <= rho^t e^{a.(z - z')}`; summing over `t` bounds the
//!   Green's function and the tail of its series.
//! * For the killed and the free walk, `G(z, z') <= G_S(0, 0) e^{a.(z - z')}`
//!   for every `a` in `D`, with `G_S(0, 0) <= 1 / (1 - min phi)`.
//! * For the reflected walk, the last-exit decomposition through the
//!   boundary and the closed form of `sum_w G(z, w) e^{a.w}`: for `a` in `D`
//!   with `phi0(a-bar) < 1`,
//!   `G(z, z') <= e^{a-bar.(z - z')} / (1 - phi0(a-bar))` when `z'` is on the
//!   boundary and
//!   `G(z, z') <= G_S(0, 0) (e^{a.(z - z')} + phi0(a) e^{a-bar.z - a.z'} / (1 - phi0(a-bar)))`
//!   above it.

use crate::error::{Error, Result};
use crate::genfunc::{fiber_roots, mgf, mgf_minus_one};
use crate::geometry::{argmin_phi, interior_point, psi_excess, support_directions};
use crate::model::WalkModel;
use crate::roots;

use super::kernel::{Kernel, KernelKind};

const SCALES: [f64; 8] = [0.3, 0.5, 0.7, 0.85, 0.93, 0.97, 0.99, 0.997];

/// A tilt with its contraction rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilt {
    pub a: Vec<f64>,
    pub rho: f64,
    /// `-ln(1 - rho)`, computed from `rho - 1` without cancellation.
    pub log_inv_gap: f64,
}

/// A point `a` of `D` with `phi0(a-bar) < 1`, for the reflected bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerPair {
    pub a: Vec<f64>,
    pub abar: Vec<f64>,
    pub ln_phi0_a: f64,
    /// `-ln(1 - phi0(a-bar))`.
    pub log_inv_gap0: f64,
}

/// A family of bounds for one kernel.
#[derive(Debug, Clone)]
pub struct TiltBounds {
    pub tilts: Vec<Tilt>,
    /// Points of `D` for the killed and free walks.
    pub free_points: Vec<Vec<f64>>,
    pub pairs: Vec<LowerPair>,
    /// `ln` of the bound on `G_S(0, 0)`.
    pub log_gs00: f64,
    reflected: bool,
}

fn excess(model: &WalkModel, kernel: &Kernel, a: &[f64]) -> Result<f64> {
    let shifted: Vec<f64> = match kernel.tilt() {
        Some(t) => a.iter().zip(t).map(|(x, y)| x + y).collect(),
        None => a.to_vec(),
    };
    let mut worst = f64::NEG_INFINITY;
    for law in kernel.laws(model) {
        worst = worst.max(mgf_minus_one(law, &shifted)?);
    }
    Ok(worst)
}

fn rays(dim: usize, n: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        support_directions(dim, n)
    }
}

/// Largest `t` with `inside(center + t dir)`, by doubling then bisection.
fn ray_extent(center: &[f64], dir: &[f64], inside: impl Fn(&[f64]) -> bool) -> Option<f64> {
    let point = |t: f64| -> Vec<f64> { center.iter().zip(dir).map(|(c, u)| c + t * u).collect() };
    let outside = |t: f64| !inside(&point(t));
    let far = roots::expand_until(outside, 0.0, 1.0, 0.1, 60)?;
    Some(roots::bisect_predicate(outside, 0.0, far, 1e-12).0)
}

impl TiltBounds {
    /// Candidates on rays from interior points of the admissible sets, at
    /// several fractions of the distance to their boundaries.
    pub fn new(model: &WalkModel, kernel: &Kernel, nrays: usize) -> Result<Self> {
        let d = model.dim();
        let base = match kernel.kind() {
            KernelKind::Reflected => interior_point(model)?.0,
            _ => argmin_phi(model.mu())?,
        };
        let center: Vec<f64> = match kernel.tilt() {
            Some(t) => base.coords().iter().zip(t).map(|(x, y)| x - y).collect(),
            None => base.coords().to_vec(),
        };
        if excess(model, kernel, &center)? >= 0.0 {
            return Err(Error::Certification("no tilt with a contraction rate below one".into()));
        }
        let mut tilts = Vec::new();
        let mut push = |a: Vec<f64>| -> Result<()> {
            let e = excess(model, kernel, &a)?;
            if e < 0.0 {
                tilts.push(Tilt { rho: 1.0 + e, log_inv_gap: -(-e).ln(), a });
            }
            Ok(())
        };
        push(center.clone())?;
        for dir in rays(d, nrays) {
            let inside = |a: &[f64]| excess(model, kernel, a).is_ok_and(|e| e <= 0.0);
            let Some(t) = ray_extent(&center, &dir, inside) else {
                continue;
            };
            for s in SCALES {
                push(center.iter().zip(&dir).map(|(c, u)| c + s * t * u).collect())?;
            }
        }

        let phi_min = mgf(model.mu(), argmin_phi(model.mu())?.coords())?;
        let log_gs00 = -(1.0 - phi_min).ln();
        let mut free_points = Vec::new();
        let mut pairs = Vec::new();
        if kernel.tilt().is_none() {
            match kernel.kind() {
                KernelKind::Killed | KernelKind::Free => {
                    let c = argmin_phi(model.mu())?;
                    for dir in rays(d, nrays) {
                        let inside = |a: &[f64]| mgf_minus_one(model.mu(), a).is_ok_and(|e| e <= 0.0);
                        if let Some(t) = ray_extent(c.coords(), &dir, inside) {
                            for s in [0.5, 0.8, 0.95, 1.0] {
                                free_points.push(c.coords().iter().zip(&dir).map(|(x, u)| x + s * t * u).collect());
                            }
                        }
                    }
                }
                KernelKind::Reflected => pairs = lower_pairs(model, &center, nrays)?,
            }
        }
        Ok(Self { tilts, free_points, pairs, log_gs00, reflected: kernel.kind() == KernelKind::Reflected && kernel.tilt().is_none() })
    }

    /// `ln` of a bound on `G(from, to)`.
    pub fn log_green_bound(&self, from: &[i64], to: &[i64]) -> f64 {
        let mut best = self
            .tilts
            .iter()
            .map(|t| dot_diff(&t.a, from, to) + t.log_inv_gap)
            .fold(f64::INFINITY, f64::min);
        for a in &self.free_points {
            best = best.min(self.log_gs00 + dot_diff(a, from, to));
        }
        if self.reflected {
            let d = to.len();
            let on_boundary = to[d - 1] == 0;
            for p in &self.pairs {
                let v = if on_boundary {
                    dot_diff(&p.abar, from, to) + p.log_inv_gap0
                } else {
                    let first = dot_diff(&p.a, from, to);
                    let second = p.ln_phi0_a + p.log_inv_gap0 + dot(&p.abar, from) - dot(&p.a, to);
                    self.log_gs00 + log_add(first, second)
                };
                best = best.min(v);
            }
        }
        best
    }

    /// `ln` of `min_a rho_a^{T+1} e^{a.(from - to)} / (1 - rho_a)`, a bound
    /// on `sum_{t > T} P^t(from, to)`.
    pub fn log_tail_bound(&self, from: &[i64], to: &[i64], horizon: usize) -> f64 {
        self.tilts
            .iter()
            .map(|t| (horizon as f64 + 1.0) * t.rho.ln() + dot_diff(&t.a, from, to) + t.log_inv_gap)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Points `(alpha, beta)` with `alpha` inside `Theta` and `beta` between the
/// two roots of `phi(alpha, .) = 1`.
fn lower_pairs(model: &WalkModel, center: &[f64], nrays: usize) -> Result<Vec<LowerPair>> {
    let d = model.dim();
    let alpha_c = &center[..d - 1];
    let in_theta = |alpha: &[f64]| psi_excess(model, alpha).is_some_and(|e| e < 0.0);
    if !in_theta(alpha_c) {
        return Ok(Vec::new());
    }
    let n = if d == 2 { 48 } else { 12 };
    let fractions: Vec<f64> = (0..n).map(|k| 1.0 - (-(k as f64) * 12.0 / n as f64).exp2()).collect();
    let mut out = Vec::new();
    for dir in rays(d - 1, nrays) {
        let Some(t) = ray_extent(alpha_c, &dir, in_theta) else {
            continue;
        };
        for &s in &fractions {
            let alpha: Vec<f64> = alpha_c.iter().zip(&dir).map(|(c, u)| c + s * t * u).collect();
            let Ok(r) = fiber_roots(model.mu(), &alpha) else {
                continue;
            };
            let mut abar = alpha.clone();
            abar.push(r.beta_bar);
            let e0 = mgf_minus_one(model.mu0(), &abar)?;
            if e0 >= 0.0 {
                continue;
            }
            for f in [0.0, 0.25, 0.5, 0.75, 0.9, 1.0] {
                let mut a = alpha.clone();
                a.push(r.beta_bar + f * (r.beta_plus - r.beta_bar));
                out.push(LowerPair {
                    ln_phi0_a: mgf(model.mu0(), &a)?.ln(),
                    a,
                    abar: abar.clone(),
                    log_inv_gap0: -(-e0).ln(),
                });
            }
        }
    }
    Ok(out)
}

fn dot(a: &[f64], z: &[i64]) -> f64 {
    a.iter().zip(z).map(|(x, y)| x * *y as f64).sum()
}

fn dot_diff(a: &[f64], from: &[i64], to: &[i64]) -> f64 {
    a.iter().zip(from.iter().zip(to)).map(|(x, (f, t))| x * (f - t) as f64).sum()
}

fn log_add(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

/// `G_S(0, 0) <= 1 / (1 - min phi)` for the free walk.
pub fn free_green_origin_bound(model: &WalkModel) -> Result<f64> {
    let phi_min = mgf(model.mu(), argmin_phi(model.mu())?.coords())?;
    Ok(1.0 / (1.0 - phi_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn tilts_are_contractions() {
        let model = reference::walk();
        for kind in [KernelKind::Reflected, KernelKind::Killed] {
            let k = Kernel::new(&model, kind).unwrap();
            let tb = TiltBounds::new(&model, &k, 16).unwrap();
            assert!(tb.tilts.len() > 50);
            for t in &tb.tilts {
                assert!(t.rho < 1.0);
                for law in k.laws(&model) {
                    assert!(mgf(law, &t.a).unwrap() <= t.rho * (1.0 + 1e-15));
                }
            }
        }
    }

    #[test]
    fn bound_decays_like_the_quasi_potential() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Reflected).unwrap();
        let tb = TiltBounds::new(&model, &k, 32).unwrap();
        let near = tb.log_green_bound(&[0, 0], &[0, 5]);
        let far = tb.log_green_bound(&[0, 0], &[0, 45]);
        // The decay rate along (0, 1) approaches I(0, (0, 1)) = 0.7515.
        let rate = (near - far) / 40.0;
        assert!(rate > 0.7 && rate < 0.752, "{rate}");
        assert!(tb.log_tail_bound(&[0, 0], &[0, 5], 100) < tb.tilts[0].log_inv_gap);
    }

    #[test]
    fn free_bound() {
        let model = reference::walk();
        let g = free_green_origin_bound(&model).unwrap();
        let phi_min = 2.0 * (0.25f64 * 0.15).sqrt() + 2.0 * (0.2f64 * 0.4).sqrt();
        assert!((g - 1.0 / (1.0 - phi_min)).abs() < 1e-8 * g);
    }
}
