//! `sum_{t <= T} P^t(z, z')` by forward propagation of the distribution on
//! a dense grid that covers every site reachable in `T` steps.

use crate::error::{Error, Result};
use crate::model::{LatticeVector, WalkModel};

use super::bounds::TiltBounds;
use super::kernel::{BoxDomain, Kernel};
use super::{GreenEstimate, Method};

/// Grid cap of the series method, in sites.
pub const SERIES_MAX_SITES: usize = 40_000_000;

/// Odometer over the sub-box `lo..=hi` in memory order of `domain`.
fn for_each_site(domain: &BoxDomain, lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64], usize)) {
    let d = lo.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&k| domain.offset(&unit(d, k)));
    let mut z = lo.to_vec();
    loop {
        let i = domain.index(&z).expect("sub-box inside the grid");
        f(&z, i);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            let ax = order[k];
            if z[ax] < hi[ax] {
                z[ax] += 1;
                break;
            }
            z[ax] = lo[ax];
            k += 1;
        }
    }
}

fn unit(d: usize, k: usize) -> Vec<i64> {
    let mut v = vec![0; d];
    v[k] = 1;
    v
}

/// `sum_{t <= horizon} P^t(source, target)` for each target. With `domain`
/// the walk is killed on leaving it; otherwise the grid is the set of sites
/// within `horizon` steps. The error of each estimate bounds the tail
/// `t > horizon` by the tilt family.
pub fn green_series(
    model: &WalkModel,
    kernel: &Kernel,
    source: &[i64],
    targets: &[Vec<i64>],
    horizon: usize,
    domain: Option<&BoxDomain>,
) -> Result<Vec<GreenEstimate>> {
    kernel.check_site(source)?;
    for t in targets {
        if t.len() != source.len() {
            return Err(Error::Dimension("target of a different dimension".into()));
        }
        if !kernel.alive(t) {
            return Err(Error::Precondition(format!(
                "target {} is not a state of the {} kernel",
                LatticeVector(t.clone()),
                kernel.kind().name()
            )));
        }
    }
    let d = source.len();
    let reach = kernel.max_step().saturating_mul(horizon as i64);
    let grid = match domain {
        Some(b) => {
            if !b.contains(source) {
                return Err(Error::Precondition("source outside the box".into()));
            }
            b.clipped(kernel)?
        }
        None => {
            let g = BoxDomain::around(&[source], reach)?.clipped(kernel)?;
            if g.len() > SERIES_MAX_SITES {
                return Err(Error::MemoryCap { cap: SERIES_MAX_SITES });
            }
            g
        }
    };
    let n = grid.len();
    let mut cur = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    cur[grid.index(source).unwrap()] = 1.0;
    let target_idx: Vec<Option<usize>> = targets.iter().map(|t| grid.index(t)).collect();
    let mut acc = vec![0.0f64; targets.len()];
    let add = |v: &[f64], acc: &mut [f64]| {
        for (k, idx) in target_idx.iter().enumerate() {
            if let Some(i) = idx {
                acc[k] += v[*i];
            }
        }
    };
    add(&cur, &mut acc);
    let s = kernel.max_step();
    let mut lo = source.to_vec();
    let mut hi = source.to_vec();
    for _ in 0..horizon {
        let new_lo: Vec<i64> = (0..d).map(|k| (lo[k] - s).max(grid.lo[k])).collect();
        let new_hi: Vec<i64> = (0..d).map(|k| (hi[k] + s).min(grid.hi[k])).collect();
        for_each_site(&grid, &new_lo, &new_hi, |_, i| next[i] = 0.0);
        for_each_site(&grid, &lo, &hi, |z, i| {
            let m = cur[i];
            if m == 0.0 {
                return;
            }
            let law = kernel.law_row(z);
            for (step, &w) in law.steps.iter().zip(&law.weights) {
                let t: Vec<i64> = z.iter().zip(step).map(|(a, b)| a + b).collect();
                if !kernel.alive(&t) {
                    continue;
                }
                if let Some(j) = grid.index(&t) {
                    next[j] += m * w;
                }
            }
        });
        std::mem::swap(&mut cur, &mut next);
        lo = new_lo;
        hi = new_hi;
        add(&cur, &mut acc);
    }
    let bounds = TiltBounds::new(model, kernel, 32).ok();
    Ok(targets
        .iter()
        .zip(acc)
        .map(|(t, value)| {
            let mut flags = Vec::new();
            let error = match &bounds {
                Some(b) => b.log_tail_bound(source, t, horizon).exp(),
                None => {
                    flags.push("tail bound unavailable: no certified contraction".to_string());
                    f64::INFINITY
                }
            };
            if domain.is_some() {
                flags.push("box Green's function".to_string());
            }
            GreenEstimate {
                source: source.to_vec(),
                target: t.clone(),
                value,
                error,
                method: Method::Series,
                samples: None,
                flags,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{green_linear_solve, KernelKind};
    use crate::reference;

    #[test]
    fn horizon_zero_is_the_indicator() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Reflected).unwrap();
        let est = green_series(&model, &k, &[0, 1], &[vec![0, 1], vec![1, 1]], 0, None).unwrap();
        assert_eq!(est[0].value, 1.0);
        assert_eq!(est[1].value, 0.0);
    }

    #[test]
    fn killed_series_rejects_boundary_target() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Killed).unwrap();
        assert!(green_series(&model, &k, &[0, 1], &[vec![3, 0]], 10, None).is_err());
    }

    #[test]
    fn box_series_converges_to_box_solve() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Reflected).unwrap();
        let domain = BoxDomain::new(vec![-8, 0], vec![8, 8]).unwrap();
        let exact = green_linear_solve(&k, &[0, 1], &domain).unwrap();
        let est = green_series(&model, &k, &[0, 1], &[vec![3, 2]], 3000, Some(&domain)).unwrap();
        let v = exact.value(&[3, 2]);
        assert!((est[0].value - v).abs() <= est[0].error + 1e-12 * v, "{:?} vs {v}", est[0]);
        assert!(est[0].value <= v * (1.0 + 1e-12));
    }
}
