//! Built-in models used by the examples, the test-suite and the CLI default.

use crate::error::Result;
use crate::genfunc::{fiber_roots, mgf_minus_one};
use crate::model::{LatticeMeasure, WalkModel};
use crate::roots;

/// The two-dimensional reference walk: drift `(0.1, -0.2)` inside, `(0.3, 0.3)`
/// on the boundary.
pub fn walk() -> WalkModel {
    let mu = LatticeMeasure::from_pairs(
        "mu",
        &[(&[1, 0], 0.25), (&[-1, 0], 0.15), (&[0, 1], 0.2), (&[0, -1], 0.4)],
    )
    .expect("reference mu");
    let mu0 = LatticeMeasure::from_pairs("mu0", &[(&[1, 0], 0.5), (&[-1, 0], 0.2), (&[0, 1], 0.3)])
        .expect("reference mu0");
    WalkModel::new(mu, mu0).expect("reference model")
}

/// Same interior law as [`walk`], with a boundary law weak enough that the
/// left end of `Theta` is a point of the zero stratum with `phi0 < 1`.
pub fn tangent_companion() -> WalkModel {
    let mu = walk().mu().clone();
    let mu0 = LatticeMeasure::from_pairs("mu0", &[(&[1, 0], 0.6), (&[-1, 0], 0.05), (&[0, 1], 0.35)])
        .expect("companion mu0");
    WalkModel::new(mu, mu0).expect("companion model")
}

/// Interior law drifting away from the boundary, `m = (0.05, 0.15)`.
fn upward_mu() -> LatticeMeasure {
    LatticeMeasure::from_pairs(
        "mu",
        &[(&[1, 0], 0.2), (&[-1, 0], 0.15), (&[0, 1], 0.4), (&[0, -1], 0.25)],
    )
    .expect("upward mu")
}

fn upward_mu0(p: f64) -> LatticeMeasure {
    LatticeMeasure::from_pairs("mu0", &[(&[1, 0], p), (&[-1, 0], 0.1), (&[0, 1], 0.9 - p)])
        .expect("upward mu0")
}

/// Upward-drifting walk whose boundary law never saturates: `phi0(a-bar) < 1`
/// along the whole lower boundary, so the boundary map has no fans.
pub fn injective_model() -> WalkModel {
    WalkModel::new(upward_mu(), upward_mu0(0.3)).expect("injective model")
}

/// Abscissa at which the fan model saturates.
pub const FAN_ALPHA: f64 = 0.1;

/// Upward-drifting walk whose boundary mass on `(1,0)` is tuned by bisection
/// so that `phi0(a-bar) = 1` exactly at `alpha = FAN_ALPHA`. Returns the
/// model and the tuned weight.
pub fn fan_model() -> Result<(WalkModel, f64)> {
    let mu = upward_mu();
    let beta_bar = fiber_roots(&mu, &[FAN_ALPHA])?.beta_bar;
    let excess = |p: f64| mgf_minus_one(&upward_mu0(p), &[FAN_ALPHA, beta_bar]).unwrap_or(f64::NAN);
    // phi0(a-bar) increases with p because e^alpha > e^beta-bar.
    let p = roots::bisect_root(excess, 1e-6, 0.9 - 1e-6, 0.0);
    Ok((WalkModel::new(mu, upward_mu0(p))?, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_models_are_accepted() {
        for m in [walk(), tangent_companion(), injective_model(), fan_model().unwrap().0] {
            m.ensure_accepted().unwrap();
        }
    }

    #[test]
    fn fan_weight_is_tuned() {
        let (model, p) = fan_model().unwrap();
        // phi0(a-bar) is linear in p, so the closed form is an independent check.
        let bb = fiber_roots(model.mu(), &[FAN_ALPHA]).unwrap().beta_bar;
        let closed = (1.0 - 0.1 * (-FAN_ALPHA).exp() - 0.9 * bb.exp()) / (FAN_ALPHA.exp() - bb.exp());
        assert!((p - closed).abs() < 1e-12, "{p} vs {closed}");
    }
}
