//! Jump generating functions `phi`, `phi0`, their derivatives, the map
//! `a -> a-bar` onto the lower boundary of `D`, and the spectral radius
//! `lambda(alpha)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Law, LatticeMeasure, WalkModel};
use crate::roots;
use crate::tol;

/// A point `a = (alpha, beta)` of the dual space `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DualPoint(pub Vec<f64>);

impl DualPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn from_parts(alpha: &[f64], beta: f64) -> Self {
        let mut v = alpha.to_vec();
        v.push(beta);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn beta(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self::from_parts(self.alpha(), beta)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn dot_site(&self, z: &[i64]) -> f64 {
        self.0.iter().zip(z).map(|(a, &b)| a * b as f64).sum()
    }

    pub fn distance(&self, other: &DualPoint) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

/// Value, gradient and Hessian of a generating function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GenFuncValue {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl GenFuncValue {
    /// Cholesky test of the Hessian.
    pub fn hessian_positive_definite(&self) -> bool {
        self.hessian.clone().cholesky().is_some()
    }
}

fn exponent(a: &[f64], step: &[i64]) -> Result<f64> {
    let e: f64 = a.iter().zip(step).map(|(x, &z)| x * z as f64).sum();
    if !(e.abs() <= tol::OVERFLOW_EXPONENT) {
        return Err(Error::Range { exponent: e });
    }
    Ok(e)
}

/// `sum_z w(z) exp(a.z)`.
pub fn mgf(measure: &LatticeMeasure, a: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for atom in measure.atoms() {
        s += atom.prob * exponent(a, &atom.step)?.exp();
    }
    Ok(s)
}

/// `mgf(a) - 1`, accurate when the value is close to 1 (uses that the
/// weights sum to one up to the admissible tolerance).
pub fn mgf_minus_one(measure: &LatticeMeasure, a: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    let mut mass = 0.0;
    for atom in measure.atoms() {
        s += atom.prob * exponent(a, &atom.step)?.exp_m1();
        mass += atom.prob;
    }
    Ok(s + (mass - 1.0))
}

/// Value and gradient.
pub fn mgf_grad(measure: &LatticeMeasure, a: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = a.len();
    let mut v = 0.0;
    let mut g = vec![0.0; d];
    for atom in measure.atoms() {
        let t = atom.prob * exponent(a, &atom.step)?.exp();
        v += t;
        for (gi, &z) in g.iter_mut().zip(atom.step.iter()) {
            *gi += t * z as f64;
        }
    }
    Ok((v, g))
}

pub fn mgf_full(measure: &LatticeMeasure, a: &[f64]) -> Result<GenFuncValue> {
    let d = a.len();
    let mut value = 0.0;
    let mut gradient = DVector::zeros(d);
    let mut hessian = DMatrix::zeros(d, d);
    for atom in measure.atoms() {
        let t = atom.prob * exponent(a, &atom.step)?.exp();
        value += t;
        for i in 0..d {
            let zi = atom.step[i] as f64;
            gradient[i] += t * zi;
            for j in 0..d {
                hessian[(i, j)] += t * zi * atom.step[j] as f64;
            }
        }
    }
    Ok(GenFuncValue { value, gradient, hessian })
}

/// `phi` (interior law) or `phi0` (boundary law) with derivatives.
pub fn phi(model: &WalkModel, a: &DualPoint, which: Law) -> Result<GenFuncValue> {
    check_dim(model, a)?;
    mgf_full(model.law(which), a.coords())
}

pub fn phi_value(model: &WalkModel, a: &DualPoint, which: Law) -> Result<f64> {
    check_dim(model, a)?;
    mgf(model.law(which), a.coords())
}

pub fn phi_gradient(model: &WalkModel, a: &DualPoint, which: Law) -> Result<Vec<f64>> {
    check_dim(model, a)?;
    Ok(mgf_grad(model.law(which), a.coords())?.1)
}

fn check_dim(model: &WalkModel, a: &DualPoint) -> Result<()> {
    if a.dim() != model.dim() {
        return Err(Error::Dimension(format!("dual point of length {} in dimension {}", a.dim(), model.dim())));
    }
    Ok(())
}

/// `beta -> mgf(alpha, beta)` for a fixed `alpha`.
#[derive(Debug, Clone)]
pub struct Fiber {
    /// `(weight, alpha.x, y)` per atom.
    terms: Vec<(f64, f64, i64)>,
}

impl Fiber {
    pub fn new(measure: &LatticeMeasure, alpha: &[f64]) -> Result<Self> {
        let d = measure.dim();
        if alpha.len() + 1 != d {
            return Err(Error::Dimension(format!("alpha of length {} in dimension {d}", alpha.len())));
        }
        let mut terms = Vec::with_capacity(measure.len());
        for atom in measure.atoms() {
            let ax: f64 = alpha.iter().zip(atom.step.iter()).map(|(a, &x)| a * x as f64).sum();
            terms.push((atom.prob, ax, atom.step.height()));
        }
        Ok(Self { terms })
    }

    fn exp_term(ax: f64, y: i64, beta: f64) -> Result<f64> {
        let e = ax + beta * y as f64;
        if !(e.abs() <= tol::OVERFLOW_EXPONENT) {
            return Err(Error::Range { exponent: e });
        }
        Ok(e)
    }

    pub fn value(&self, beta: f64) -> Result<f64> {
        let mut s = 0.0;
        for &(w, ax, y) in &self.terms {
            s += w * Self::exp_term(ax, y, beta)?.exp();
        }
        Ok(s)
    }

    pub fn value_minus_one(&self, beta: f64) -> Result<f64> {
        let mut s = 0.0;
        let mut mass = 0.0;
        for &(w, ax, y) in &self.terms {
            s += w * Self::exp_term(ax, y, beta)?.exp_m1();
            mass += w;
        }
        Ok(s + (mass - 1.0))
    }

    pub fn derivative(&self, beta: f64) -> Result<f64> {
        let mut s = 0.0;
        for &(w, ax, y) in &self.terms {
            s += w * y as f64 * Self::exp_term(ax, y, beta)?.exp();
        }
        Ok(s)
    }

    /// Whether the fiber is unbounded below as `beta -> -inf` (some atom
    /// has a negative last coordinate).
    fn has_negative_heights(&self) -> bool {
        self.terms.iter().any(|t| t.2 < 0)
    }

    fn has_positive_heights(&self) -> bool {
        self.terms.iter().any(|t| t.2 > 0)
    }
}

/// Roots of `phi(alpha, .) = 1` on one fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberRoots {
    /// Minimiser of `beta -> phi(alpha, beta)`.
    pub beta_min: f64,
    /// `phi(alpha, beta_min) - 1`.
    pub min_excess: f64,
    /// Lower root (on the decreasing branch): the last coordinate of a-bar.
    pub beta_bar: f64,
    /// Upper root (on the increasing branch).
    pub beta_plus: f64,
    /// The minimum equals 1 within the root tolerance: both roots merge into
    /// a point of the zero stratum.
    pub tangent: bool,
}

/// Minimiser of the strictly convex fiber by bisection on its derivative.
fn fiber_minimizer(fiber: &Fiber) -> Result<f64> {
    if !fiber.has_negative_heights() || !fiber.has_positive_heights() {
        return Err(Error::Precondition(
            "interior law must have steps of both signs in the last coordinate".into(),
        ));
    }
    let lo = roots::expand_until(|b| fiber.derivative(b).map(|v| v < 0.0).unwrap_or(true), 0.0, -1.0, 1.0, 64)
        .ok_or_else(|| Error::NoConvergence("no lower bracket for the fiber minimiser".into()))?;
    let hi = roots::expand_until(|b| fiber.derivative(b).map(|v| v > 0.0).unwrap_or(true), 0.0, 1.0, 1.0, 64)
        .ok_or_else(|| Error::NoConvergence("no upper bracket for the fiber minimiser".into()))?;
    // Validate brackets (range errors surface here).
    fiber.derivative(lo)?;
    fiber.derivative(hi)?;
    let (a, b) = roots::bisect_predicate(|x| fiber.derivative(x).map(|v| v > 0.0).unwrap_or(true), lo, hi, 0.0);
    Ok(0.5 * (a + b))
}

/// Both roots of `phi(alpha, .) = 1`.
pub fn fiber_roots(measure: &LatticeMeasure, alpha: &[f64]) -> Result<FiberRoots> {
    fiber_roots_tol(measure, alpha, tol::ROOT)
}

/// As [`fiber_roots`], with the tolerance deciding the tangent case given
/// explicitly.
pub fn fiber_roots_tol(measure: &LatticeMeasure, alpha: &[f64], tangent_tol: f64) -> Result<FiberRoots> {
    let fiber = Fiber::new(measure, alpha)?;
    let beta_min = fiber_minimizer(&fiber)?;
    let min_excess = fiber.value_minus_one(beta_min)?;
    if min_excess > tangent_tol {
        return Err(Error::NoRoot { min_value: 1.0 + min_excess });
    }
    if min_excess >= -tangent_tol {
        return Ok(FiberRoots { beta_min, min_excess, beta_bar: beta_min, beta_plus: beta_min, tangent: true });
    }
    let above = |b: f64| fiber.value_minus_one(b).map(|v| v > 0.0).unwrap_or(true);
    let lo = roots::expand_until(above, beta_min, -1.0, 0.5, 64)
        .ok_or_else(|| Error::NoConvergence("no bracket for the lower root".into()))?;
    let hi = roots::expand_until(above, beta_min, 1.0, 0.5, 64)
        .ok_or_else(|| Error::NoConvergence("no bracket for the upper root".into()))?;
    let g = |b: f64| fiber.value_minus_one(b).unwrap_or(f64::INFINITY);
    let beta_bar = roots::bisect_root(g, lo, beta_min, 0.0);
    let beta_plus = roots::bisect_root(g, beta_min, hi, 0.0);
    Ok(FiberRoots { beta_min, min_excess, beta_bar, beta_plus, tangent: false })
}

/// The point of the lower boundary of `D` with the same `alpha` as `a`.
pub fn bar_a(model: &WalkModel, a: &DualPoint) -> Result<DualPoint> {
    check_dim(model, a)?;
    let r = fiber_roots(model.mu(), a.alpha())?;
    Ok(a.with_beta(r.beta_bar))
}

/// The point of the upper boundary of `D` with the same `alpha` as `a`.
pub fn bar_a_plus(model: &WalkModel, a: &DualPoint) -> Result<DualPoint> {
    check_dim(model, a)?;
    let r = fiber_roots(model.mu(), a.alpha())?;
    Ok(a.with_beta(r.beta_plus))
}

/// `lambda(alpha) = inf_beta log max(phi, phi0)(alpha, beta)` together with
/// the minimising `beta`.
pub fn spectral_radius_with_argmin(model: &WalkModel, alpha: &[f64]) -> Result<(f64, f64)> {
    let f = Fiber::new(model.mu(), alpha)?;
    let f0 = Fiber::new(model.mu0(), alpha)?;
    // Right derivative of the convex max; `true` means the minimiser lies to
    // the left of `b`.
    let rises = |b: f64| -> bool {
        let (Ok(g), Ok(g0)) = (f.value_minus_one(b), f0.value_minus_one(b)) else {
            return true;
        };
        let (Ok(d), Ok(d0)) = (f.derivative(b), f0.derivative(b)) else {
            return true;
        };
        let slope = if g > g0 {
            d
        } else if g0 > g {
            d0
        } else {
            d.max(d0)
        };
        slope >= 0.0
    };
    if !f.has_negative_heights() {
        return Err(Error::Precondition("interior law has no downward step".into()));
    }
    let lo = roots::expand_until(|b| !rises(b), 0.0, -1.0, 1.0, 64)
        .ok_or_else(|| Error::NoConvergence("lambda: no lower bracket".into()))?;
    let hi = roots::expand_until(rises, 0.0, 1.0, 1.0, 64)
        .ok_or_else(|| Error::NoConvergence("lambda: no upper bracket".into()))?;
    let (a, b) = roots::bisect_predicate(rises, lo, hi, 0.0);
    let beta = 0.5 * (a + b);
    let excess = f.value_minus_one(beta)?.max(f0.value_minus_one(beta)?);
    Ok((excess.ln_1p(), beta))
}

pub fn spectral_radius_lambda(model: &WalkModel, alpha: &[f64]) -> Result<f64> {
    Ok(spectral_radius_with_argmin(model, alpha)?.0)
}
