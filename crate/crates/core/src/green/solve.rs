//! Exact Green's functions of the walk killed on leaving a box, with
//! certified bounds on what the box cuts off.
//!
//! For the box `B`, `G - G_B` at `(z, z')` is the expected Green's function
//! from the first exit point, so it is at most
//! `sum_{j in B, e not in B} G_B(z, j) p(j, e) G(e, z')`, and `G(e, z')` is
//! bounded by the tilt family of [`TiltBounds`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LatticeVector, WalkModel};

use super::banded::BandedLu;
use super::bounds::TiltBounds;
use super::kernel::{BoxDomain, BoxSystem, Kernel};
use super::{GreenEstimate, Method, SOLVE_ROUNDOFF};

/// `G_B(source, .)` over a box.
#[derive(Debug, Clone)]
pub struct GreenField {
    pub system: BoxSystem,
    pub source: Vec<i64>,
    pub values: Vec<f64>,
}

impl GreenField {
    pub fn value(&self, target: &[i64]) -> f64 {
        self.system.domain.index(target).map_or(0.0, |i| self.values[i])
    }

    /// Bound on `G(source, target) - G_B(source, target)`, split by the
    /// face of the box through which the walk leaves.
    pub fn truncation_by_face(&self, bounds: &TiltBounds, target: &[i64]) -> Vec<f64> {
        let mut faces = vec![0.0; 2 * self.system.domain.dim()];
        for (j, e, w) in &self.system.exits {
            let g = self.values[*j];
            if g == 0.0 {
                continue;
            }
            faces[self.system.domain.face_of(e)] += g * w * bounds.log_green_bound(e, target).exp();
        }
        faces
    }

    /// The estimate at `target`; `bounds` adds the truncation to the error.
    pub fn estimate(&self, target: &[i64], bounds: Option<&TiltBounds>) -> GreenEstimate {
        let value = self.value(target);
        let mut flags = Vec::new();
        let truncation = match bounds {
            Some(b) => self.truncation_by_face(b, target).iter().sum(),
            None => {
                flags.push("box Green's function".to_string());
                0.0
            }
        };
        if !self.system.domain.contains(target) {
            flags.push("target outside the box".to_string());
        }
        GreenEstimate {
            source: self.source.clone(),
            target: target.to_vec(),
            value,
            error: truncation + SOLVE_ROUNDOFF * value,
            method: Method::LinearSolve,
            samples: None,
            flags,
        }
    }
}

/// Solves `(I - P_B)^T g = delta_source`: the row `G_B(source, .)`.
pub fn green_linear_solve(kernel: &Kernel, source: &[i64], domain: &BoxDomain) -> Result<GreenField> {
    kernel.check_site(source)?;
    let system = BoxSystem::new(kernel, domain.clone())?;
    let i = system
        .domain
        .index(source)
        .ok_or_else(|| Error::Precondition(format!("source {} outside the box", LatticeVector(source.to_vec()))))?;
    let lu = BandedLu::factor(&system)?;
    let mut b = vec![0.0; system.len()];
    b[i] = 1.0;
    let values = lu.solve_transpose(&b)?;
    Ok(GreenField { system, source: source.to_vec(), values })
}

/// `G_B(., target)` over a box with its certified truncation bound.
#[derive(Debug, Clone)]
pub struct ColumnField {
    pub system: BoxSystem,
    pub target: Vec<i64>,
    pub values: Vec<f64>,
    /// Per face of the box, the bound on `G - G_B` at every site.
    pub truncation: Vec<Vec<f64>>,
}

impl ColumnField {
    pub fn value(&self, source: &[i64]) -> f64 {
        self.system.domain.index(source).map_or(0.0, |i| self.values[i])
    }

    pub fn truncation_at(&self, source: &[i64]) -> f64 {
        match self.system.domain.index(source) {
            Some(i) => self.truncation.iter().map(|f| f[i]).sum(),
            None => f64::INFINITY,
        }
    }

    pub fn estimate(&self, source: &[i64]) -> GreenEstimate {
        let value = self.value(source);
        let mut flags = Vec::new();
        if !self.system.domain.contains(source) {
            flags.push("source outside the box".to_string());
        }
        GreenEstimate {
            source: source.to_vec(),
            target: self.target.clone(),
            value,
            error: self.truncation_at(source) + SOLVE_ROUNDOFF * value,
            method: Method::LinearSolve,
            samples: None,
            flags,
        }
    }
}

/// Solves `(I - P_B) g = delta_target` and the bounding systems
/// `(I - P_B) u_f = r_f`, `r_f(j) = sum over exits e through face f of
/// p(j, e) G-bound(e, target)`.
pub fn green_to_solve(kernel: &Kernel, bounds: &TiltBounds, target: &[i64], domain: &BoxDomain) -> Result<ColumnField> {
    kernel.check_site(target)?;
    let system = BoxSystem::new(kernel, domain.clone())?;
    let i = system
        .domain
        .index(target)
        .ok_or_else(|| Error::Precondition(format!("target {} outside the box", LatticeVector(target.to_vec()))))?;
    let lu = BandedLu::factor(&system)?;
    let n = system.len();
    let mut b = vec![0.0; n];
    b[i] = 1.0;
    let values = lu.solve(&b)?;
    let faces = 2 * system.domain.dim();
    let mut rhs = vec![vec![0.0; n]; faces];
    for (j, e, w) in &system.exits {
        rhs[system.domain.face_of(e)][*j] += w * bounds.log_green_bound(e, target).exp();
    }
    let truncation = rhs
        .iter()
        .map(|r| if r.iter().all(|&x| x == 0.0) { Ok(vec![0.0; n]) } else { lu.solve(r) })
        .collect::<Result<Vec<_>>>()?;
    Ok(ColumnField { system, target: target.to_vec(), values, truncation })
}

/// Policy for the adaptive exact solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactConfig {
    /// Target bound on truncation relative to the value.
    pub rel_tol: f64,
    /// Initial padding around the sites of interest.
    pub initial_pad: i64,
    /// Largest box, in sites.
    pub max_sites: usize,
    /// Rays of the tilt family.
    pub rays: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-6, initial_pad: 12, max_sites: 200_000, rays: 64 }
    }
}

/// Grows the faces of `domain` whose share of the truncation is too large.
fn grow(domain: &BoxDomain, kernel: &Kernel, face_err: &[f64], budget: f64) -> Result<Option<BoxDomain>> {
    let mut lo = domain.lo.clone();
    let mut hi = domain.hi.clone();
    let mut changed = false;
    let nfaces = face_err.len() as f64;
    for (f, &e) in face_err.iter().enumerate() {
        if e <= budget / nfaces {
            continue;
        }
        let axis = f / 2;
        let step = ((hi[axis] - lo[axis]) / 2).max(8);
        if f % 2 == 0 {
            lo[axis] -= step;
        } else {
            hi[axis] += step;
        }
        changed = true;
    }
    if !changed {
        return Ok(None);
    }
    Ok(Some(BoxDomain::new(lo, hi)?.clipped(kernel)?))
}

/// `G(source, target)` for each source, by box solves grown until the
/// certified truncation is below `config.rel_tol` of every value or the box
/// reaches `config.max_sites`.
pub fn green_exact_to(
    model: &WalkModel,
    kernel: &Kernel,
    sources: &[Vec<i64>],
    target: &[i64],
    config: &ExactConfig,
) -> Result<(Vec<GreenEstimate>, BoxDomain)> {
    let bounds = TiltBounds::new(model, kernel, config.rays)?;
    green_exact_to_with(kernel, &bounds, sources, target, config)
}

pub(crate) fn green_exact_to_with(
    kernel: &Kernel,
    bounds: &TiltBounds,
    sources: &[Vec<i64>],
    target: &[i64],
    config: &ExactConfig,
) -> Result<(Vec<GreenEstimate>, BoxDomain)> {
    for s in sources {
        kernel.check_site(s)?;
    }
    let mut points: Vec<&[i64]> = sources.iter().map(|s| s.as_slice()).collect();
    points.push(target);
    let mut domain = BoxDomain::around(&points, config.initial_pad)?.clipped(kernel)?;
    loop {
        let col = green_to_solve(kernel, bounds, target, &domain)?;
        let mut face_rel = vec![0.0f64; col.truncation.len()];
        let mut worst = 0.0f64;
        for s in sources {
            let i = col.system.domain.index(s).expect("source inside the box");
            let v = col.values[i];
            let mut total = 0.0;
            for (f, t) in col.truncation.iter().enumerate() {
                let r = if v > 0.0 { t[i] / v } else { f64::INFINITY };
                face_rel[f] = face_rel[f].max(r);
                total += r;
            }
            worst = worst.max(total);
        }
        let done = |col: &ColumnField, flag: Option<String>| {
            let ests = sources
                .iter()
                .map(|s| {
                    let mut e = col.estimate(s);
                    e.flags.extend(flag.clone());
                    e
                })
                .collect();
            Ok((ests, col.system.domain.clone()))
        };
        if worst <= config.rel_tol {
            return done(&col, None);
        }
        match grow(&domain, kernel, &face_rel, config.rel_tol)? {
            Some(next) if next.len() <= config.max_sites => domain = next,
            _ => return done(&col, Some(format!("truncation {worst:.3e} above tolerance at the largest box"))),
        }
    }
}

/// `G(source, target)` for each target, by transposed box solves grown as in
/// [`green_exact_to`].
pub fn green_exact_from(
    model: &WalkModel,
    kernel: &Kernel,
    source: &[i64],
    targets: &[Vec<i64>],
    config: &ExactConfig,
) -> Result<(Vec<GreenEstimate>, BoxDomain)> {
    let bounds = TiltBounds::new(model, kernel, config.rays)?;
    for t in targets {
        kernel.check_site(t)?;
    }
    let mut points: Vec<&[i64]> = targets.iter().map(|s| s.as_slice()).collect();
    points.push(source);
    let mut domain = BoxDomain::around(&points, config.initial_pad)?.clipped(kernel)?;
    loop {
        let field = green_linear_solve(kernel, source, &domain)?;
        let mut face_rel = vec![0.0f64; 2 * domain.dim()];
        let mut worst = 0.0f64;
        for t in targets {
            let v = field.value(t);
            let faces = field.truncation_by_face(&bounds, t);
            let mut total = 0.0;
            for (f, e) in faces.iter().enumerate() {
                let r = if v > 0.0 { e / v } else { f64::INFINITY };
                face_rel[f] = face_rel[f].max(r);
                total += r;
            }
            worst = worst.max(total);
        }
        let finish = |flag: Option<String>| {
            let ests = targets
                .iter()
                .map(|t| {
                    let mut e = field.estimate(t, Some(&bounds));
                    e.flags.retain(|f| f != "box Green's function");
                    e.flags.extend(flag.clone());
                    e
                })
                .collect();
            Ok((ests, field.system.domain.clone()))
        };
        if worst <= config.rel_tol {
            return finish(None);
        }
        match grow(&domain, kernel, &face_rel, config.rel_tol)? {
            Some(next) if next.len() <= config.max_sites => domain = next,
            _ => return finish(Some(format!("truncation {worst:.3e} above tolerance at the largest box"))),
        }
    }
}
