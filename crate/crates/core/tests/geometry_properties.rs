mod common;

use proptest::prelude::*;

use halfspace::geometry::{a_hat, quasi_potential_i, theta_interval};
use halfspace::reference;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// `a-hat` depends on the direction only, and `I` is positively
    /// homogeneous of degree one.
    #[test]
    fn a_hat_is_scale_free(t in 0.0f64..std::f64::consts::PI, scale in 0.1f64..50.0) {
        let model = reference::walk();
        let q = common::unit_angle(t);
        let scaled: Vec<f64> = q.iter().map(|x| x * scale).collect();
        let a = a_hat(&model, &q).unwrap();
        let b = a_hat(&model, &scaled).unwrap();
        prop_assert!(a.point.a.distance(&b.point.a) < 1e-10);
        let i = quasi_potential_i(&model, &q).unwrap().value;
        let is = quasi_potential_i(&model, &scaled).unwrap().value;
        prop_assert!((is - scale * i).abs() < 1e-9 * scale.max(1.0));
    }

    /// `I(0, q) >= a.q` for every `a` in `D-hat`: check against the
    /// oracle's lifted boundary points over `Theta`.
    #[test]
    fn quasi_potential_dominates_feasible_points(t in 0.0f64..std::f64::consts::PI, s in 0.0f64..1.0) {
        let model = reference::walk();
        let q = common::unit_angle(t);
        let (lo, hi) = common::theta(&model);
        let alpha = lo + s * (hi - lo);
        let (_, beta_plus) = common::fiber(model.mu(), alpha).unwrap();
        let i = quasi_potential_i(&model, &q).unwrap().value;
        prop_assert!(i >= alpha * q[0] + beta_plus * q[1] - 1e-9);
    }
}

#[test]
fn theta_matches_the_oracle_on_every_model() {
    for model in [reference::walk(), reference::tangent_companion(), reference::injective_model(), reference::fan_model().unwrap().0] {
        let th = theta_interval(&model).unwrap();
        let (lo, hi) = common::theta(&model);
        assert!((th.lo - lo).abs() < 1e-8 && (th.hi - hi).abs() < 1e-8, "{th:?} vs ({lo}, {hi})");
    }
}
