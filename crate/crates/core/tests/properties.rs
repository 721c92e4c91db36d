//! Property tests for structural invariants that should hold for every
//! valid configuration, not just hand-picked examples.

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use dp_peakon::dynamics::{integrate_at, invariants, IntegrateOptions, StopReason};
use dp_peakon::polycalc::{ExpSum, ExpTerm};
use dp_peakon::spectral::{
    adjoint_polynomials, fundamental_identity_defect, spectral_polynomials, PeakonState,
};

/// Sorted positions with gaps of at least 0.05 and masses bounded away
/// from zero.
fn state_strategy(n: usize) -> impl Strategy<Value = PeakonState> {
    let gaps = prop::collection::vec(0.05f64..1.5, n - 1);
    let masses = prop::collection::vec((0.05f64..3.0).prop_flat_map(flip_sign), n);
    (-2.0f64..0.0, gaps, masses).prop_map(|(x0, gaps, m)| {
        let mut x = vec![x0];
        for g in gaps {
            x.push(x.last().unwrap() + g);
        }
        PeakonState::new(x, m).unwrap()
    })
}

fn flip_sign(mag: f64) -> impl Strategy<Value = f64> {
    prop_oneof![Just(mag), Just(-mag)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_polynomials_start_from_the_identity(state in (2usize..=4).prop_flat_map(state_strategy)) {
        let triple = spectral_polynomials(&state);
        let [a0, b0, c0] = triple.eval(Complex64::ZERO);
        prop_assert!((a0 - Complex64::ONE).norm() < 1e-14);
        prop_assert!(b0.norm() < 1e-14);
        prop_assert!(c0.norm() < 1e-14);
        prop_assert_eq!(triple.a.degree(), state.n());
    }

    #[test]
    fn adjoint_shares_the_first_polynomial(state in (2usize..=4).prop_flat_map(state_strategy)) {
        let a = spectral_polynomials(&state).a;
        let b = adjoint_polynomials(&state).a;
        let scale = a.max_coeff_norm();
        for k in 0..=a.degree() {
            prop_assert!((a.coeff(k) - b.coeff(k)).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn fundamental_identity_holds_everywhere(state in (2usize..=4).prop_flat_map(state_strategy)) {
        if let Ok(defect) = fundamental_identity_defect(&state, 8, 0) {
            prop_assert!(defect <= 1e-10, "defect {defect}");
        }
    }

    #[test]
    fn first_invariant_is_the_total_mass(state in state_strategy(3)) {
        let inv = invariants(&state);
        let total: f64 = state.m.iter().sum();
        assert_relative_eq!(inv[0], total, max_relative = 1e-12, epsilon = 1e-12);
    }

    #[test]
    fn invariants_match_the_spectral_coefficients(state in state_strategy(3)) {
        // The closed three-peakon expressions must agree with the signed
        // coefficients of the first boundary polynomial.
        let inv = invariants(&state);
        let a = spectral_polynomials(&state).a;
        for (k, v) in inv.iter().enumerate() {
            let coeff = a.coeff(k + 1).re;
            let want = if k % 2 == 0 { -coeff } else { coeff };
            assert_relative_eq!(*v, want, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn short_flows_reverse_exactly(state in state_strategy(3)) {
        let opts = IntegrateOptions::default();
        let negated = PeakonState {
            x: state.x.clone(),
            m: state.m.iter().map(|m| -m).collect(),
        };
        let fwd = integrate_at(&state, &[0.02], &opts);
        let bwd = integrate_at(&negated, &[-0.02], &opts);
        if let (Ok(f), Ok(b)) = (fwd, bwd) {
            if f.stop == StopReason::Completed && b.stop == StopReason::Completed {
                let fs = f.final_state();
                let bs = b.final_state();
                for k in 0..3 {
                    prop_assert!((fs.x[k] - bs.x[k]).abs() <= 1e-9 * fs.x[k].abs().max(1.0));
                    prop_assert!((fs.m[k] + bs.m[k]).abs() <= 1e-9 * fs.m[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn mass_signs_never_flip(state in state_strategy(3)) {
        let opts = IntegrateOptions::default();
        if let Ok(traj) = dp_peakon::dynamics::integrate(&state, 0.3, &opts) {
            for s in &traj.states {
                for (a, b) in s.m.iter().zip(&state.m) {
                    prop_assert!(a.signum() == b.signum() || *a == 0.0);
                }
            }
        }
    }
}

fn simple_expsum_strategy() -> impl Strategy<Value = ExpSum> {
    let term = (-2.0f64..2.0, 0u32..=2, -1.5f64..1.5).prop_map(|(c, p, r)| ExpTerm {
        coeff: Complex64::new(c, 0.0),
        power: p,
        rate: Complex64::new(r, 0.0),
    });
    prop::collection::vec(term, 1..4).prop_map(ExpSum::new)
}

/// Integrating t^p e^{rt} divides the coefficient by up to rate^(p+1), so a
/// small drawn rate makes the antiderivative's coefficients huge and the
/// roundoff floor of any cancellation grows with them. Tolerances on the
/// integration round trips must be read against this scale, not absolutely.
fn coeff_scale(f: &ExpSum) -> f64 {
    f.terms()
        .iter()
        .map(|t| t.coeff.norm())
        .fold(0.0_f64, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_mirrors_the_time_axis(f in simple_expsum_strategy(), t in -2.0f64..2.0) {
        let r = f.reflected();
        let direct = f.value(t);
        let mirrored = r.value(-t);
        prop_assert!((direct - mirrored).norm() <= 1e-12 * direct.norm().max(1.0));
    }

    #[test]
    fn derivative_undoes_antiderivative(f in simple_expsum_strategy(), t in -1.0f64..1.0) {
        let anti = f.antiderivative(1e-9);
        let g = anti.derivative();
        let a = f.value(t);
        let b = g.value(t);
        let scale = coeff_scale(&anti).max(a.norm()).max(1.0);
        prop_assert!((a - b).norm() <= 1e-12 * scale, "{a} vs {b}");
    }

    #[test]
    fn antiderivative_vanishes_at_zero(f in simple_expsum_strategy()) {
        let g = f.antiderivative(1e-9);
        let scale = coeff_scale(&g).max(1.0);
        prop_assert!(g.value(0.0).norm() <= 1e-13 * scale);
    }

    #[test]
    fn addition_is_pointwise(f in simple_expsum_strategy(), g in simple_expsum_strategy(), t in -1.0f64..1.0) {
        let sum = f.add(&g);
        let a = f.value(t) + g.value(t);
        let b = sum.value(t);
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn products_multiply_pointwise(f in simple_expsum_strategy(), g in simple_expsum_strategy(), t in -1.0f64..1.0) {
        let prod = f.product(&g);
        let a = f.value(t) * g.value(t);
        let b = prod.value(t);
        prop_assert!((a - b).norm() <= 1e-11 * a.norm().max(1.0));
    }
}
