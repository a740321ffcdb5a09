//! Martin-kernel experiments: `K(z, z_n) = G(z, z_n) / G(z0, z_n)` along
//! `z_n ~ r q` against `h_{a-hat(q)}(z) / h_{a-hat(q)}(z0)`, the comparison
//! of two directions in one fan, and ratio limits of tilted kernels.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfunc::{mgf_minus_one, DualPoint};
use crate::geometry::{a_hat, classify, Stratum};
use crate::green::{
    green_exact_to, green_monte_carlo, slope, ExactConfig, GreenEstimate, Kernel, KernelKind, MonteCarloConfig,
};
use crate::harmonic::HarmonicFunction;
use crate::model::WalkModel;
use crate::tol;

/// Default radii ladder.
pub const DEFAULT_RADII: [f64; 5] = [10.0, 20.0, 30.0, 45.0, 60.0];

/// How `r q` is rounded to a lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    Nearest,
    Floor,
}

/// Lattice site for `r q`, clamped to height `min_height`.
pub fn target_site(q: &[f64], r: f64, rounding: Rounding, min_height: i64) -> Vec<i64> {
    let d = q.len();
    let mut z: Vec<i64> = q
        .iter()
        .map(|x| match rounding {
            Rounding::Nearest => (r * x).round() as i64,
            Rounding::Floor => (r * x).floor() as i64,
        })
        .collect();
    z[d - 1] = z[d - 1].max(min_height);
    z
}

/// Exact solves first; Monte Carlo replaces them when the box cannot certify
/// the requested accuracy and `monte_carlo` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePolicy {
    pub exact: ExactConfig,
    pub monte_carlo: Option<MonteCarloConfig>,
    pub rounding: Rounding,
}

impl Default for TracePolicy {
    fn default() -> Self {
        Self {
            exact: ExactConfig { rel_tol: 1e-4, max_sites: 400_000, ..Default::default() },
            monte_carlo: None,
            rounding: Rounding::Nearest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRow {
    pub r: f64,
    pub z_n: Vec<i64>,
    pub k: f64,
    /// `K` times the quadrature sum of the relative errors of both Green's
    /// functions.
    pub error: f64,
    /// `G(z0, z_n)`.
    pub base_green: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelTrace {
    pub z0: Vec<i64>,
    pub z: Vec<i64>,
    pub q: Vec<f64>,
    pub rows: Vec<KernelRow>,
    pub predicted: f64,
    /// Radii whose row was dropped, with the reason.
    pub dropped: Vec<(f64, String)>,
}

impl KernelTrace {
    pub fn deviations(&self) -> Vec<f64> {
        self.rows.iter().map(|r| (r.k - self.predicted).abs()).collect()
    }

    /// `|K - predicted| / predicted` at the largest radius.
    pub fn final_relative_deviation(&self) -> Option<f64> {
        self.rows.last().map(|r| (r.k - self.predicted).abs() / self.predicted)
    }

    /// `|K - predicted|` does not increase over the last `n` rows, up to
    /// their combined errors.
    pub fn nonincreasing_tail(&self, n: usize) -> bool {
        if self.rows.len() < n {
            return false;
        }
        let tail = &self.rows[self.rows.len() - n..];
        tail.windows(2).all(|w| {
            let (a, b) = ((w[0].k - self.predicted).abs(), (w[1].k - self.predicted).abs());
            b <= a + w[0].error + w[1].error
        })
    }
}

fn ratio(num: &GreenEstimate, den: &GreenEstimate) -> (f64, f64) {
    let k = num.value / den.value;
    let rel = ((num.error / num.value).powi(2) + (den.error / den.value).powi(2)).sqrt();
    (k, k * rel)
}

fn unit(q: &[f64], d: usize) -> Result<Vec<f64>> {
    if q.len() != d {
        return Err(Error::Dimension(format!("direction of length {} in dimension {d}", q.len())));
    }
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) || q[d - 1] < 0.0 {
        return Err(Error::InvalidDirection("q must be nonzero with nonnegative last coordinate".into()));
    }
    Ok(q.iter().map(|x| x / n).collect())
}

/// `G(s, z_n)` for every source `s`, one entry per radius; `None` when the
/// row is dropped.
fn column_values(
    model: &WalkModel,
    kernel: &Kernel,
    sources: &[Vec<i64>],
    targets: &[Vec<i64>],
    policy: &TracePolicy,
) -> Result<Vec<std::result::Result<Vec<GreenEstimate>, String>>> {
    targets
        .par_iter()
        .map(|z_n| {
            let (ests, domain) = green_exact_to(model, kernel, sources, z_n, &policy.exact)?;
            let certified = ests.iter().all(|e| e.flags.iter().all(|f| !f.starts_with("truncation")));
            match (&policy.monte_carlo, certified) {
                (Some(cfg), false) => {
                    let mut out = Vec::new();
                    for s in sources {
                        let mc = green_monte_carlo(kernel, s, std::slice::from_ref(z_n), None, cfg)?;
                        let e = mc.estimates.into_iter().next().expect("one target");
                        if e.value == 0.0 {
                            return Ok(Err(format!("Monte Carlo estimate from {s:?} consistent with zero")));
                        }
                        out.push(e);
                    }
                    let _ = domain;
                    Ok(Ok(out))
                }
                _ => Ok(Ok(ests)),
            }
        })
        .collect()
}

/// One trace per probe, sharing the column solves to each `z_n`.
#[allow(clippy::too_many_arguments)]
fn traces_for_kernel(
    model: &WalkModel,
    kernel: &Kernel,
    probes: &[Vec<i64>],
    z0: &[i64],
    q: &[f64],
    radii: &[f64],
    predicted: impl Fn(&[i64]) -> Result<f64>,
    policy: &TracePolicy,
) -> Result<Vec<KernelTrace>> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("radii must be increasing".into()));
    }
    let min_height = if kernel.kind() == KernelKind::Killed { 1 } else { 0 };
    let targets: Vec<Vec<i64>> = radii.iter().map(|&r| target_site(q, r, policy.rounding, min_height)).collect();
    let mut sources = vec![z0.to_vec()];
    sources.extend(probes.iter().cloned());
    let columns = column_values(model, kernel, &sources, &targets, policy)?;
    let base_h = predicted(z0)?;
    probes
        .iter()
        .enumerate()
        .map(|(p, z)| {
            let mut rows = Vec::new();
            let mut dropped = Vec::new();
            for ((r, z_n), col) in radii.iter().zip(&targets).zip(&columns) {
                match col {
                    Ok(ests) => {
                        let (k, error) = ratio(&ests[p + 1], &ests[0]);
                        let mut flags: Vec<String> = ests[0].flags.clone();
                        flags.extend(ests[p + 1].flags.iter().cloned());
                        flags.sort();
                        flags.dedup();
                        rows.push(KernelRow { r: *r, z_n: z_n.clone(), k, error, base_green: ests[0].value, flags });
                    }
                    Err(reason) => dropped.push((*r, reason.clone())),
                }
            }
            Ok(KernelTrace {
                z0: z0.to_vec(),
                z: z.clone(),
                q: q.to_vec(),
                rows,
                predicted: predicted(z)? / base_h,
                dropped,
            })
        })
        .collect()
}

/// Martin-kernel traces of the reflected walk for several probes `z`.
pub fn kernel_traces(
    model: &WalkModel,
    probes: &[Vec<i64>],
    z0: &[i64],
    q: &[f64],
    radii: &[f64],
    policy: &TracePolicy,
) -> Result<Vec<KernelTrace>> {
    model.ensure_accepted()?;
    let q = unit(q, model.dim())?;
    let h = HarmonicFunction::for_direction(model, &q)?;
    let kernel = Kernel::new(model, KernelKind::Reflected)?;
    traces_for_kernel(model, &kernel, probes, z0, &q, radii, |z| h.eval(z), policy)
}

/// Martin-kernel trace of the reflected walk for one probe.
pub fn kernel_trace(
    model: &WalkModel,
    z: &[i64],
    z0: &[i64],
    q: &[f64],
    radii: &[f64],
    policy: &TracePolicy,
) -> Result<KernelTrace> {
    Ok(kernel_traces(model, &[z.to_vec()], z0, q, radii, policy)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeComparison {
    pub z: Vec<i64>,
    pub k1: f64,
    pub k2: f64,
    pub combined_error: f64,
    pub predicted: f64,
    /// `|k1 - k2| <= max(combined_error, 0.05 predicted)`.
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonradialReport {
    pub a_hat: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    /// Angle between the two directions.
    pub angle: f64,
    pub traces1: Vec<KernelTrace>,
    pub traces2: Vec<KernelTrace>,
    pub comparisons: Vec<ProbeComparison>,
}

impl NonradialReport {
    pub fn all_agree(&self) -> bool {
        !self.comparisons.is_empty() && self.comparisons.iter().all(|c| c.agree)
    }
}

/// Kernel traces along two directions with the same boundary point.
pub fn nonradial_experiment(
    model: &WalkModel,
    q1: &[f64],
    q2: &[f64],
    probes: &[Vec<i64>],
    z0: &[i64],
    radii: &[f64],
    policy: &TracePolicy,
) -> Result<NonradialReport> {
    model.ensure_accepted()?;
    let d = model.dim();
    let (u1, u2) = (unit(q1, d)?, unit(q2, d)?);
    let (h1, h2) = (a_hat(model, &u1)?, a_hat(model, &u2)?);
    let gap = h1.point.a.distance(&h2.point.a);
    if gap > tol::ATLAS {
        return Err(Error::Precondition(format!("directions map to boundary points {gap:.3e} apart, not one fan")));
    }
    let traces1 = kernel_traces(model, probes, z0, &u1, radii, policy)?;
    let traces2 = kernel_traces(model, probes, z0, &u2, radii, policy)?;
    let comparisons = traces1
        .iter()
        .zip(&traces2)
        .filter_map(|(t1, t2)| {
            let (a, b) = (t1.rows.last()?, t2.rows.last()?);
            let combined_error = (a.error.powi(2) + b.error.powi(2)).sqrt();
            let agree = (a.k - b.k).abs() <= combined_error.max(0.05 * t1.predicted);
            Some(ProbeComparison { z: t1.z.clone(), k1: a.k, k2: b.k, combined_error, predicted: t1.predicted, agree })
        })
        .collect();
    let angle = u1.iter().zip(&u2).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0).acos();
    Ok(NonradialReport { a_hat: h1.point.a.coords().to_vec(), q1: u1, q2: u2, angle, traces1, traces2, comparisons })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioLimitReport {
    pub tilt: Vec<f64>,
    pub q: Vec<f64>,
    /// Regression slope of `log G~(z0, z_n)` against `|z_n|`.
    pub slope: f64,
    /// `(|z_n|, log G~(z0, z_n))` per radius.
    pub growth: Vec<(f64, f64)>,
    /// Ratios `G~(z, z_n) / G~(z', z_n)` against `h~(z) / h~(z')` with
    /// `h~(z) = h_{a-hat(q)}(z) e^{-a.z}`.
    pub traces: Vec<KernelTrace>,
}

/// Checks that `a` is a point of the lower boundary of `D` with
/// `phi0(a) <= 1`.
pub fn check_tilt(model: &WalkModel, a: &[f64]) -> Result<()> {
    let p = classify(model, &DualPoint::new(a.to_vec()))?;
    if !p.on_d_boundary || !matches!(p.stratum, Stratum::Minus | Stratum::Zero) {
        return Err(Error::NotSubstochastic(format!("tilt {a:?} is not on the lower boundary of D")));
    }
    if mgf_minus_one(model.mu0(), a)? > tol::STRAT {
        return Err(Error::NotSubstochastic(format!("phi0 exceeds one at the tilt {a:?}")));
    }
    Ok(())
}

/// `a-bar` of `a-hat(q)`, the natural tilt for the direction `q`.
pub fn default_tilt(model: &WalkModel, q: &[f64]) -> Result<Vec<f64>> {
    let q = unit(q, model.dim())?;
    Ok(a_hat(model, &q)?.point.abar.coords().to_vec())
}

/// Ratio limits of the reflected walk tilted by `a`. Each pair `(z, z')`
/// yields a trace of `G~(z, z_n) / G~(z', z_n)`.
pub fn ratio_limit_probe(
    model: &WalkModel,
    tilt: &[f64],
    q: &[f64],
    pairs: &[(Vec<i64>, Vec<i64>)],
    radii: &[f64],
    policy: &TracePolicy,
) -> Result<RatioLimitReport> {
    model.ensure_accepted()?;
    let d = model.dim();
    if tilt.len() != d {
        return Err(Error::Dimension(format!("tilt of length {} in dimension {d}", tilt.len())));
    }
    check_tilt(model, tilt)?;
    let q = unit(q, d)?;
    let h = HarmonicFunction::for_direction(model, &q)?;
    let a = DualPoint::new(tilt.to_vec());
    let kernel = Kernel::tilted(model, KernelKind::Reflected, tilt)?;
    let predicted = |z: &[i64]| -> Result<f64> { Ok((h.log_eval(z)? - a.dot_site(z)).exp()) };
    let mut traces = Vec::new();
    let mut growth = Vec::new();
    for (k, (z, zp)) in pairs.iter().enumerate() {
        let t = traces_for_kernel(model, &kernel, std::slice::from_ref(z), zp, &q, radii, predicted, policy)?.remove(0);
        if k == 0 {
            growth = t
                .rows
                .iter()
                .map(|r| (r.z_n.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt(), r.base_green.ln()))
                .collect();
        }
        traces.push(t);
    }
    if growth.len() < 2 {
        return Err(Error::Precondition("need at least one pair and two radii".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = growth.iter().cloned().unzip();
    Ok(RatioLimitReport { tilt: tilt.to_vec(), q, slope: slope(&xs, &ys), growth, traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn trivial_trace_is_one() {
        let model = reference::walk();
        let t = kernel_trace(&model, &[0, 1], &[0, 1], &[0.0, 1.0], &[6.0, 10.0], &TracePolicy::default()).unwrap();
        assert_eq!(t.predicted, 1.0);
        assert!(t.rows.iter().all(|r| r.k == 1.0));
    }

    #[test]
    fn rounding_modes() {
        assert_eq!(target_site(&[0.6, 0.8], 9.0, Rounding::Nearest, 0), vec![5, 7]);
        assert_eq!(target_site(&[0.6, 0.8], 9.0, Rounding::Floor, 0), vec![5, 7]);
        assert_eq!(target_site(&[0.6, 0.8], 9.9, Rounding::Floor, 0), vec![5, 7]);
        assert_eq!(target_site(&[0.6, 0.8], 9.9, Rounding::Nearest, 0), vec![6, 8]);
    }

    #[test]
    fn tilt_must_be_on_the_lower_boundary() {
        let model = reference::walk();
        assert!(check_tilt(&model, &[0.0, 0.0]).is_ok());
        assert!(check_tilt(&model, &[0.0, 2f64.ln()]).is_err());
        assert!(check_tilt(&model, &[-0.1, 0.0]).is_err());
    }
}
