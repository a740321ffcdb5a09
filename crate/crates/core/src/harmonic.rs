//! The explicit harmonic functions `h_a` for `a` on the upper boundary of
//! `D-hat`, with checks of harmonicity and of their multiplicative
//! structure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::{fiber_roots, fiber_roots_tol, mgf_grad, mgf_minus_one, DualPoint};
use crate::geometry::{a_hat, classify, theta_contains, BoundaryPoint, Stratum};
use crate::model::{LatticeVector, WalkModel};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HarmonicCase {
    /// `e^{a.z} - r e^{a-bar.z}`.
    Generic,
    /// `a = a-bar` on the zero stratum: `(y + c) e^{a.z}`.
    Tangent,
    /// `phi0(a-bar) = 1`: `e^{a-bar.z}`.
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicFunction {
    pub point: BoundaryPoint,
    pub case: HarmonicCase,
    /// Generic case: `1 - r` with `r = (1 - phi0(a)) / (1 - phi0(a-bar))`,
    /// computed without cancellation. Tangent case: `d_beta phi0(a) / (1 - phi0(a))`.
    pub constant: f64,
    /// Positive factor applied to every value (does not affect ratios).
    pub scale: f64,
}

impl HarmonicFunction {
    /// `h_a` for `a` in `D-hat` on the upper or zero stratum of `dD`.
    pub fn new(model: &WalkModel, a: &DualPoint) -> Result<Self> {
        let point = classify(model, a)?;
        if !point.on_d_boundary {
            return Err(Error::NotOnBoundary { phi: 1.0 + point.phi_excess, phi0_bar: 1.0 + point.phi0_bar_excess });
        }
        if point.phi0_bar_excess > tol::STRAT {
            return Err(Error::HarmonicUndefined(format!(
                "alpha = {:?} is outside Theta: phi0(a-bar) = {}",
                a.alpha(),
                1.0 + point.phi0_bar_excess
            )));
        }
        if point.saturated() {
            return Ok(Self { point, case: HarmonicCase::Saturated, constant: 0.0, scale: 1.0 });
        }
        match point.stratum {
            Stratum::Zero => {
                let one_minus = -mgf_minus_one(model.mu0(), a.coords())?;
                if one_minus <= tol::STRAT {
                    return Err(Error::HarmonicUndefined(format!(
                        "tangent point with phi0(a) = {} >= 1",
                        1.0 - one_minus
                    )));
                }
                let (_, g0) = mgf_grad(model.mu0(), a.coords())?;
                let constant = g0[model.dim() - 1] / one_minus;
                Ok(Self { point, case: HarmonicCase::Tangent, constant, scale: 1.0 })
            }
            Stratum::Plus => {
                let denom = -point.phi0_bar_excess;
                // phi0(a) - phi0(a-bar) summed atom by atom.
                let d = model.dim();
                let (beta, beta_bar) = (a.beta(), point.abar.beta());
                let mut diff = 0.0;
                for atom in model.mu0().atoms() {
                    let e = point.abar.dot_site(&atom.step);
                    diff += atom.prob * e.exp() * ((beta - beta_bar) * atom.step[d - 1] as f64).exp_m1();
                }
                Ok(Self { point, case: HarmonicCase::Generic, constant: diff / denom, scale: 1.0 })
            }
            s => Err(Error::HarmonicUndefined(format!("a lies on the {s:?} stratum"))),
        }
    }

    /// `h_a` at `a = (alpha, beta+(alpha))`.
    pub fn at_alpha(model: &WalkModel, alpha: &[f64]) -> Result<Self> {
        let r = match fiber_roots(model.mu(), alpha) {
            Ok(r) => r,
            Err(Error::NoRoot { .. }) => fiber_roots_tol(model.mu(), alpha, tol::STRAT)?,
            Err(e) => return Err(e),
        };
        let beta = if r.tangent { r.beta_min } else { r.beta_plus };
        Self::new(model, &DualPoint::from_parts(alpha, beta))
    }

    /// `h_{a-hat(q)}`.
    pub fn for_direction(model: &WalkModel, q: &[f64]) -> Result<Self> {
        let ah = a_hat(model, q)?;
        Self::new(model, &ah.point.a)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "scale factor must be positive");
        Self { scale: self.scale * factor, ..self.clone() }
    }

    pub fn alpha(&self) -> &[f64] {
        self.point.a.alpha()
    }

    /// `log h_a(z)`; errors when the value is not positive.
    pub fn log_eval(&self, z: &[i64]) -> Result<f64> {
        let d = self.point.a.dim();
        if z.len() != d {
            return Err(Error::Dimension(format!("site of length {} in dimension {d}", z.len())));
        }
        let y = z[d - 1];
        if y < 0 {
            return Err(Error::SiteBelowHalfSpace(z.to_vec()));
        }
        let ln_scale = self.scale.ln();
        let nonpositive = |value: f64| Error::NonPositiveHarmonic { value, site: z.to_vec() };
        match self.case {
            HarmonicCase::Saturated => Ok(self.point.abar.dot_site(z) + ln_scale),
            HarmonicCase::Tangent => {
                let factor = y as f64 + self.constant;
                if factor <= 0.0 {
                    return Err(nonpositive(factor));
                }
                Ok(self.point.a.dot_site(z) + factor.ln() + ln_scale)
            }
            HarmonicCase::Generic => {
                // e^{a.z} (1 - r e^{-delta y}) = e^{a.z} (-expm1(-delta y) + (1 - r) e^{-delta y}).
                let delta = self.point.a.beta() - self.point.abar.beta();
                let t = -delta * y as f64;
                let factor = -t.exp_m1() + self.constant * t.exp();
                if factor <= 0.0 {
                    return Err(nonpositive(factor));
                }
                Ok(self.point.a.dot_site(z) + factor.ln() + ln_scale)
            }
        }
    }

    pub fn eval(&self, z: &[i64]) -> Result<f64> {
        let v = self.log_eval(z)?;
        if v > tol::OVERFLOW_EXPONENT {
            return Err(Error::Range { exponent: v });
        }
        Ok(v.exp())
    }
}

/// All sites of the box `lo <= z <= hi` (coordinatewise), in lexicographic
/// order.
pub fn box_sites(lo: &[i64], hi: &[i64]) -> Vec<LatticeVector> {
    assert_eq!(lo.len(), hi.len());
    let mut out = Vec::new();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return out;
    }
    let mut cur = lo.to_vec();
    loop {
        out.push(LatticeVector(cur.clone()));
        let mut i = cur.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < hi[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = lo[i];
        }
    }
}

/// `[-r, r]^{d-1} x [0, r]`.
pub fn symmetric_window(dim: usize, r: i64) -> Vec<LatticeVector> {
    let mut lo = vec![-r; dim];
    lo[dim - 1] = 0;
    box_sites(&lo, &vec![r; dim])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicityReport {
    /// Largest `|sum p(z, z') h(z') / h(z) - 1|` over the window.
    pub max_relative_residual: f64,
    pub worst_site: Vec<i64>,
    pub sites: usize,
    pub min_value_log: f64,
}

/// Relative harmonicity residual of `h` over `window`; errors on a
/// non-positive value.
pub fn harmonicity_residual(model: &WalkModel, h: &HarmonicFunction, window: &[LatticeVector]) -> Result<HarmonicityReport> {
    let mut worst = (0.0f64, Vec::new());
    let mut min_log = f64::INFINITY;
    for z in window {
        let lz = h.log_eval(z)?;
        min_log = min_log.min(lz);
        let mut sum = 0.0;
        for (w, p) in model.transition_row(z)? {
            sum += p * (h.log_eval(&w)? - lz).exp();
        }
        let r = (sum - 1.0).abs();
        if r > worst.0 || worst.1.is_empty() {
            worst = (r, z.0.clone());
        }
    }
    Ok(HarmonicityReport { max_relative_residual: worst.0, worst_site: worst.1, sites: window.len(), min_value_log: min_log })
}

/// Largest relative deviation from `h(x, y) = e^{alpha.x} h(0, y)` over the
/// sample.
pub fn multiplicative_structure_deviation(h: &HarmonicFunction, samples: &[LatticeVector]) -> Result<f64> {
    let alpha = h.alpha();
    let mut worst = 0.0f64;
    for z in samples {
        let d = z.len();
        let mut base = vec![0; d];
        base[d - 1] = z[d - 1];
        let shift: f64 = alpha.iter().zip(z.iter()).map(|(a, x)| a * *x as f64).sum();
        let dev = (h.log_eval(z)? - h.log_eval(&base)? - shift).exp_m1().abs();
        worst = worst.max(dev);
    }
    Ok(worst)
}

pub fn multiplicative_structure_check(h: &HarmonicFunction, samples: &[LatticeVector]) -> Result<bool> {
    Ok(multiplicative_structure_deviation(h, samples)? < tol::HARMONIC)
}

/// `alpha` of `h` lies in `Theta`.
pub fn lambda_consistency(model: &WalkModel, h: &HarmonicFunction) -> Result<bool> {
    theta_contains(model, h.alpha())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn saturated_origin_is_constant() {
        let model = reference::walk();
        let h = HarmonicFunction::at_alpha(&model, &[0.0]).unwrap();
        assert_eq!(h.case, HarmonicCase::Saturated);
        for z in symmetric_window(2, 4) {
            assert!((h.eval(&z).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_case_is_harmonic_and_positive() {
        let model = reference::walk();
        for alpha in [-0.6, -0.4, -0.2, -0.05] {
            let h = HarmonicFunction::at_alpha(&model, &[alpha]).unwrap();
            assert_eq!(h.case, HarmonicCase::Generic);
            let rep = harmonicity_residual(&model, &h, &symmetric_window(2, 8)).unwrap();
            assert!(rep.max_relative_residual < 1e-10, "{alpha}: {rep:?}");
        }
    }

    #[test]
    fn generic_value_matches_direct_formula() {
        let model = reference::walk();
        let h = HarmonicFunction::at_alpha(&model, &[-0.3]).unwrap();
        let a = &h.point.a;
        let abar = &h.point.abar;
        let phi0 = |p: &DualPoint| crate::genfunc::mgf(model.mu0(), p.coords()).unwrap();
        let r = (1.0 - phi0(a)) / (1.0 - phi0(abar));
        let z = [2, 3];
        let direct = a.dot_site(&z).exp() - r * abar.dot_site(&z).exp();
        assert!((h.eval(&z).unwrap() / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_case_on_companion() {
        let model = reference::tangent_companion();
        let th = crate::geometry::theta_interval(&model).unwrap();
        let h = HarmonicFunction::at_alpha(&model, &[th.lo]).unwrap();
        assert_eq!(h.case, HarmonicCase::Tangent);
        let rep = harmonicity_residual(&model, &h, &symmetric_window(2, 8)).unwrap();
        assert!(rep.max_relative_residual < 1e-6, "{rep:?}");
    }

    #[test]
    fn multiplicative_structure() {
        let model = reference::walk();
        let h = HarmonicFunction::at_alpha(&model, &[-0.3]).unwrap();
        assert!(multiplicative_structure_check(&h, &symmetric_window(2, 6)).unwrap());
        assert!(lambda_consistency(&model, &h).unwrap());
    }

    #[test]
    fn box_enumeration() {
        let s = box_sites(&[-1, 0], &[1, 2]);
        assert_eq!(s.len(), 9);
        assert_eq!(s[0].0, vec![-1, 0]);
        assert_eq!(s[1].0, vec![-1, 1]);
        assert!(box_sites(&[1], &[0]).is_empty());
    }
}
