//! One-dimensional certified searches. Everything here relies on a sign
//! change or on convexity, so each result comes with a bracket.

/// Width below which a bracket counts as closed. Arguments searched here are
/// of order one; without a floor a root at exactly zero is approached
/// through a thousand subnormal midpoints.
const ABS_FLOOR: f64 = 1e-18;

/// Bisects until the bracket stops shrinking in floating point or its width
/// falls below `max(arg_tol, 1e-18)`. `positive(x)` must be false at `lo` and true at
/// `hi` (or the reverse, detected from the endpoints); the returned pair is
/// the final bracket ordered as `(false side, true side)`.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(mut positive: F, lo: f64, hi: f64, arg_tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let tol = arg_tol.max(ABS_FLOOR);
    for _ in 0..2200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b || (b - a).abs() <= tol {
            break;
        }
        if positive(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    (a, b)
}

/// Root of a continuous function with `f(lo) <= 0 <= f(hi)` or the reverse.
/// Returns the endpoint of the final bracket with the smaller `|f|`.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, arg_tol: f64) -> f64 {
    let flo = f(lo);
    let increasing = flo <= 0.0;
    let (a, b) = bisect_predicate(|x| (f(x) > 0.0) == increasing, lo, hi, arg_tol);
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

/// Doubles the distance from `start` in direction `dir` (±1) until
/// `done(x)` holds. Returns `None` after `max_doublings`.
pub fn expand_until<F: FnMut(f64) -> bool>(mut done: F, start: f64, dir: f64, initial_step: f64, max_doublings: usize) -> Option<f64> {
    let mut step = initial_step;
    for _ in 0..max_doublings {
        let x = start + dir * step;
        if done(x) {
            return Some(x);
        }
        step *= 2.0;
    }
    None
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, arg_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > arg_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let mut best = (x, fx);
    for (xx, ff) in [(c, fc), (d, fd)] {
        if ff < best.1 {
            best = (xx, ff);
        }
    }
    best
}

/// Minimises a unimodal function by scanning a uniform grid first and
/// refining the best cell by golden section. Robust against a poor initial
/// bracket.
pub fn grid_then_golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, cells: usize, arg_tol: f64) -> (f64, f64) {
    let h = (hi - lo) / cells as f64;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..=cells {
        let v = f(lo + h * i as f64);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + h * best_i.saturating_sub(1) as f64;
    let b = (lo + h * (best_i + 1) as f64).min(hi);
    let (x, v) = golden_min(&mut f, a, b, arg_tol);
    if v <= best_v {
        (x, v)
    } else {
        (lo + h * best_i as f64, best_v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 0.0);
        assert!((r - 2f64.sqrt()).abs() < 4e-16);
        let r = bisect_root(|x| 2.0 - x * x, 0.0, 2.0, 0.0);
        assert!((r - 2f64.sqrt()).abs() < 4e-16);
    }

    #[test]
    fn golden_parabola() {
        let (x, v) = golden_min(|x| (x - 0.3).abs(), -2.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
        assert!(v < 1e-9);
        let (x, _) = grid_then_golden(|x: f64| (x - 4.9).abs(), -2.0, 5.0, 50, 1e-12);
        assert!((x - 4.9).abs() < 1e-10);
    }

    #[test]
    fn expansion() {
        let x = expand_until(|x| x > 100.0, 0.0, 1.0, 1.0, 20).unwrap();
        assert_eq!(x, 128.0);
        assert!(expand_until(|_| false, 0.0, 1.0, 1.0, 5).is_none());
    }
}
