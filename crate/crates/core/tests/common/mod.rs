//! Oracles written directly from the definitions, sharing no numerical code
//! with the library beyond reading the step laws.

#![allow(dead_code)]

use halfspace::{LatticeMeasure, WalkModel};

pub fn mgf(m: &LatticeMeasure, a: &[f64]) -> f64 {
    m.atoms().iter().map(|at| (at.step.iter().zip(a).map(|(s, x)| *s as f64 * x).sum::<f64>()).exp() * at.prob).sum()
}

pub fn grad(m: &LatticeMeasure, a: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; a.len()];
    for at in m.atoms() {
        let w = (at.step.iter().zip(a).map(|(s, x)| *s as f64 * x).sum::<f64>()).exp() * at.prob;
        for (gi, s) in g.iter_mut().zip(at.step.iter()) {
            *gi += w * *s as f64;
        }
    }
    g
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo) < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if (f(mid) < 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// The two roots in `beta` of `phi(alpha, beta) = 1` for a model with unit
/// vertical jumps, `None` when `alpha` lies outside the projection of `D`.
pub fn fiber(mu: &LatticeMeasure, alpha: f64) -> Option<(f64, f64)> {
    let f = |b: f64| mgf(mu, &[alpha, b]) - 1.0;
    let (bmin, fmin) = golden_max(|b| -f(b), -30.0, 30.0);
    if -fmin > 0.0 {
        return None;
    }
    let lo = bisect(f, bmin - 60.0, bmin);
    let hi = bisect(f, bmin, bmin + 60.0);
    Some((lo, hi))
}

/// The interval of `alpha` with `phi0(alpha, beta-bar(alpha)) <= 1`, found
/// by bisection outward from a point inside it.
pub fn theta(model: &WalkModel) -> (f64, f64) {
    let g = |alpha: f64| match fiber(model.mu(), alpha) {
        Some((lo, _)) => mgf(model.mu0(), &[alpha, lo]) - 1.0,
        None => 1.0,
    };
    // Scan for a point of Theta, then bisect both ends.
    let inside = (-400..=400)
        .map(|k| k as f64 * 0.005)
        .filter(|&a| g(a) <= 0.0)
        .min_by(|a, b| g(*a).total_cmp(&g(*b)))
        .expect("Theta is not empty");
    let left = bisect(g, inside - 3.0, inside);
    let right = bisect(g, inside, inside + 3.0);
    (left, right)
}

/// Support function of `D = {phi <= 1}` in direction `v`, in dimension 2:
/// boundary points along rays from the minimiser of `phi`, maximised over
/// the ray angle.
pub struct SupportOracle {
    center: [f64; 2],
    mu: LatticeMeasure,
}

impl SupportOracle {
    pub fn new(mu: &LatticeMeasure) -> Self {
        let (x, _) = golden_max(
            |x| {
                let (_, v) = golden_max(|y| -mgf(mu, &[x, y]), -20.0, 20.0);
                v
            },
            -20.0,
            20.0,
        );
        let (y, _) = golden_max(|y| -mgf(mu, &[x, y]), -20.0, 20.0);
        Self { center: [x, y], mu: mu.clone() }
    }

    pub fn boundary(&self, theta: f64) -> [f64; 2] {
        let (c, s) = (theta.cos(), theta.sin());
        let t = bisect(|t| mgf(&self.mu, &[self.center[0] + t * c, self.center[1] + t * s]) - 1.0, 0.0, 40.0);
        [self.center[0] + t * c, self.center[1] + t * s]
    }

    pub fn support(&self, v: &[f64]) -> f64 {
        let h = |th: f64| {
            let p = self.boundary(th);
            p[0] * v[0] + p[1] * v[1]
        };
        let n = 64;
        let step = std::f64::consts::TAU / n as f64;
        let best = (0..n).map(|k| k as f64 * step).max_by(|a, b| h(*a).total_cmp(&h(*b))).unwrap();
        golden_max(h, best - step, best + step).1
    }
}

pub fn unit_angle(t: f64) -> Vec<f64> {
    vec![t.cos(), t.sin()]
}
