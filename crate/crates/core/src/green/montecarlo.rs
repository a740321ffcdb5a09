//! Monte Carlo estimates of `G(z, .)` from visit counts.
//!
//! Paths are split over a fixed number of workers; worker `w` draws from the
//! ChaCha8 stream `w` of the seed, so results depend only on the seed and the
//! worker count, never on thread scheduling.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::kernel::{BoxDomain, Kernel};
use super::{GreenEstimate, Method};

/// Visits of one path to one target beyond this are not counted.
pub const VISIT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloConfig {
    pub n_paths: u64,
    pub path_cap: u64,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub estimates: Vec<GreenEstimate>,
    /// Paths still alive after `path_cap` steps.
    pub capped_paths: u64,
    pub visit_cap_hits: u64,
}

#[derive(Default)]
struct Tally {
    sum: Vec<u64>,
    sum_sq: Vec<u128>,
    capped: u64,
    visit_cap_hits: u64,
}

fn run_worker(
    kernel: &Kernel,
    source: &[i64],
    index: &HashMap<Vec<i64>, usize>,
    domain: Option<&BoxDomain>,
    config: &MonteCarloConfig,
    worker: usize,
) -> Tally {
    let m = index.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(worker as u64);
    let w = config.workers as u64;
    let paths = config.n_paths / w + u64::from((worker as u64) < config.n_paths % w);
    let mut tally = Tally { sum: vec![0; m], sum_sq: vec![0; m], ..Default::default() };
    let mut visits = vec![0u64; m];
    let mut touched: Vec<usize> = Vec::new();
    let mut z = source.to_vec();
    for _ in 0..paths {
        z.copy_from_slice(source);
        let mut alive = true;
        let mut step = 0u64;
        loop {
            if let Some(&k) = index.get(&z) {
                if visits[k] == 0 {
                    touched.push(k);
                }
                if visits[k] < VISIT_CAP {
                    visits[k] += 1;
                } else {
                    tally.visit_cap_hits += 1;
                }
            }
            if step == config.path_cap {
                break;
            }
            let law = kernel.law_row(&z);
            let u: f64 = rng.gen();
            let mut c = 0.0;
            let mut moved = false;
            for (s, &p) in law.steps.iter().zip(&law.weights) {
                c += p;
                if u < c {
                    for (x, d) in z.iter_mut().zip(s) {
                        *x += d;
                    }
                    moved = true;
                    break;
                }
            }
            step += 1;
            if !moved || !kernel.alive(&z) || domain.is_some_and(|b| !b.contains(&z)) {
                alive = false;
                break;
            }
        }
        if alive {
            tally.capped += 1;
        }
        for &k in &touched {
            tally.sum[k] += visits[k];
            tally.sum_sq[k] += u128::from(visits[k]) * u128::from(visits[k]);
            visits[k] = 0;
        }
        touched.clear();
    }
    tally
}

/// Mean visit counts of `targets` over `n_paths` paths of at most
/// `path_cap` steps, killed on leaving `domain` when it is given.
pub fn green_monte_carlo(
    kernel: &Kernel,
    source: &[i64],
    targets: &[Vec<i64>],
    domain: Option<&BoxDomain>,
    config: &MonteCarloConfig,
) -> Result<MonteCarloResult> {
    kernel.check_site(source)?;
    if config.n_paths < 100 {
        return Err(Error::Precondition("Monte Carlo needs at least 100 paths".into()));
    }
    if config.workers == 0 {
        return Err(Error::Precondition("at least one worker".into()));
    }
    let mut index = HashMap::new();
    for t in targets {
        if t.len() != source.len() {
            return Err(Error::Dimension("target of a different dimension".into()));
        }
        let next = index.len();
        index.entry(t.clone()).or_insert(next);
    }
    let tallies: Vec<Tally> = (0..config.workers)
        .into_par_iter()
        .map(|w| run_worker(kernel, source, &index, domain, config, w))
        .collect();
    let m = index.len();
    let mut sum = vec![0u64; m];
    let mut sum_sq = vec![0u128; m];
    let (mut capped, mut cap_hits) = (0, 0);
    for t in &tallies {
        for k in 0..m {
            sum[k] += t.sum[k];
            sum_sq[k] += t.sum_sq[k];
        }
        capped += t.capped;
        cap_hits += t.visit_cap_hits;
    }
    let n = config.n_paths as f64;
    let reach = kernel.max_step() as f64 * config.path_cap as f64;
    let estimates = targets
        .iter()
        .map(|t| {
            let k = index[t];
            let mean = sum[k] as f64 / n;
            let var = ((sum_sq[k] as f64 / n - mean * mean) * n / (n - 1.0)).max(0.0);
            let mut flags = Vec::new();
            let dist: i64 = t.iter().zip(source).map(|(a, b)| (a - b).abs()).sum();
            if dist as f64 > reach {
                flags.push("structural zero: target beyond path cap".to_string());
            }
            if capped > 0 {
                flags.push(format!("{capped} paths reached the path cap"));
            }
            if domain.is_some() {
                flags.push("box Green's function".to_string());
            }
            GreenEstimate {
                source: source.to_vec(),
                target: t.clone(),
                value: mean,
                error: 1.96 * (var / n).sqrt(),
                method: Method::MonteCarlo,
                samples: Some(config.n_paths),
                flags,
            }
        })
        .collect();
    Ok(MonteCarloResult { estimates, capped_paths: capped, visit_cap_hits: cap_hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{green_linear_solve, KernelKind};
    use crate::reference;

    #[test]
    fn deterministic_given_seed_and_workers() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Reflected).unwrap();
        let cfg = MonteCarloConfig { n_paths: 2000, path_cap: 500, seed: 7, workers: 3 };
        let t = vec![vec![2, 1], vec![0, 0]];
        let a = green_monte_carlo(&k, &[0, 1], &t, None, &cfg).unwrap();
        let b = green_monte_carlo(&k, &[0, 1], &t, None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn agrees_with_exact_on_a_box() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Reflected).unwrap();
        let domain = BoxDomain::new(vec![-6, 0], vec![6, 6]).unwrap();
        let exact = green_linear_solve(&k, &[0, 1], &domain).unwrap();
        let t = vec![vec![1, 1], vec![2, 0], vec![-1, 2]];
        let cfg = MonteCarloConfig { n_paths: 20_000, path_cap: 100_000, seed: 11, workers: 4 };
        let mc = green_monte_carlo(&k, &[0, 1], &t, Some(&domain), &cfg).unwrap();
        assert_eq!(mc.capped_paths, 0);
        for e in &mc.estimates {
            let v = exact.value(&e.target);
            assert!((e.value - v).abs() < 2.0 * e.error, "{e:?} vs {v}");
        }
    }

    #[test]
    fn unreachable_target_is_a_structural_zero() {
        let model = reference::walk();
        let k = Kernel::new(&model, KernelKind::Reflected).unwrap();
        let cfg = MonteCarloConfig { n_paths: 100, path_cap: 5, seed: 1, workers: 1 };
        let r = green_monte_carlo(&k, &[0, 1], &[vec![50, 1]], None, &cfg).unwrap();
        assert_eq!(r.estimates[0].value, 0.0);
        assert_eq!(r.estimates[0].error, 0.0);
        assert!(r.estimates[0].flags[0].starts_with("structural zero"));
    }
}
