use groundlab::asymptotics::{energy_scale, epsilon, predicted_e, tilde_e, tilde_minimizer};
use groundlab::diagnostics::{profile_distance, rescale};
use groundlab::groundstate::{eigen_residual, minimize, Init, MinimizeOptions, MinimizeResult, Model};
use groundlab::potentials::{build_potential, HomogeneousModel, PotentialSpec, PowerTerm};
use groundlab::qfunctional::q_value;
use groundlab::soliton::lambda_constant;
use groundlab::{Constants, Grid64, Profile};
use proptest::prelude::*;
use std::sync::OnceLock;

fn profile() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| Profile::closed_form_1d(2.0, 1e-3, 25.0).unwrap())
}

/// Closed-form constants for `(d, p)` with a stand-in `a*`; the exponent
/// identities do not depend on its value.
fn constants(d: usize, p: f64, a_star: f64) -> Constants {
    Constants {
        d,
        p,
        a_star,
        grad_sq: 0.0,
        mass_p1: 0.0,
        c_gn: 0.0,
        lambda: lambda_constant(d, p),
    }
}

/// Both scales stay far from overflow and underflow.
fn representable(d: usize, p: f64, s: f64) -> bool {
    let rate = 4.0 * (p - 1.0) / (4.0 - d as f64 * (p - 1.0));
    (2.0 * rate * s.ln()).abs() < 300.0
}

fn subcritical() -> impl Strategy<Value = (usize, f64)> {
    (1usize..=3).prop_flat_map(|d| (Just(d), 1.05..(1.0 + 4.0 / d as f64 - 0.05)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn blow_up_scale_squares_to_the_inverse_energy_scale((d, p) in subcritical(), a_star in 0.5..50.0, rho in 1e-2..1e4) {
        let k = constants(d, p, a_star);
        prop_assume!(representable(d, p, rho / a_star.sqrt()));
        let eps = epsilon(&k, rho).unwrap();
        prop_assert!((eps * eps * energy_scale(&k, rho).unwrap() - 1.0).abs() < 1e-12);
        let rate = 4.0 * (p - 1.0) / (4.0 - d as f64 * (p - 1.0));
        let ratio = tilde_e(&k, 2.0 * rho).unwrap() / tilde_e(&k, rho).unwrap();
        prop_assert!((ratio / 2f64.powf(rate) - 1.0).abs() < 1e-12);
        prop_assert!(tilde_e(&k, rho).unwrap() < 0.0);
        prop_assert!(epsilon(&k, 1.5 * rho).unwrap() < eps);
    }

    #[test]
    fn expansion_lies_above_the_free_energy((d, p) in subcritical(), rho in 0.1..1e3, lb in 1e-3..100.0, r in 0.5..6.0) {
        let k = constants(d, p, 3.0);
        prop_assume!(representable(d, p, rho / 3f64.sqrt()));
        let te = tilde_e(&k, rho).unwrap();
        let gap = predicted_e(&k, rho, lb, r).unwrap() - te;
        // the subtraction cancels down to the rounding of ẽ
        let expected = lb / 3.0 * epsilon(&k, rho).unwrap().powf(r);
        let resolved = expected > 8.0 * f64::EPSILON * te.abs();
        prop_assert!(gap >= 0.0 && (gap > 0.0 || !resolved));
        prop_assert!((gap - expected).abs() <= 1e-12 * expected + 4.0 * f64::EPSILON * te.abs());
    }

    #[test]
    fn local_models_are_homogeneous(
        coeff in 0.1..10.0, right in 0.1..10.0, left in 0.1..10.0, exponent in 1.0..6.0,
        x in -3.0..3.0, y in -3.0..3.0, t in 0.1..10.0,
    ) {
        let models: [HomogeneousModel<f64>; 3] = [
            HomogeneousModel::Radial { coeff, exponent },
            HomogeneousModel::Diagonal { coeffs: vec![coeff, right] },
            HomogeneousModel::Piecewise { right, left, exponent },
        ];
        for m in &models {
            let pt = [x, y];
            let scaled = [t * x, t * y];
            let lhs = m.eval(&scaled);
            let rhs = f64::powf(t, m.degree()) * m.eval(&pt);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn product_and_composite_potentials_are_nonnegative(
        a in 0.5..2.0, b in -2.0..-0.5, pa in 1.0..4.0, pb in 1.0..4.0, x in -6.0..6.0,
    ) {
        let product = build_potential::<f64>(&PotentialSpec::Product { roots: vec![a, b], powers: vec![pa, pb], coeff: 1.0 }).unwrap();
        prop_assert!(product.eval(&[x]) >= 0.0);
        let composite = build_potential::<f64>(&PotentialSpec::MinComposite {
            wells: vec![
                PowerTerm { center: vec![a], exponent: pa, coeff: 1.0 },
                PowerTerm { center: vec![b], exponent: pb, coeff: 2.0 },
            ],
        }).unwrap();
        prop_assert!(composite.eval(&[x]) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn q_is_linear_in_the_model(coeff in 0.1..10.0, exponent in 1.0..4.0, y in -3.0..3.0) {
        let unit = HomogeneousModel::Radial { coeff: 1.0, exponent };
        let scaled = unit.scaled(coeff);
        let q1 = q_value(&unit, profile(), &[y]);
        prop_assert!((q_value(&scaled, profile(), &[y]) - coeff * q1).abs() <= 1e-10 * q1.abs().max(1.0));
    }

    #[test]
    fn harmonic_q_is_a_translated_parabola(y in -4.0..4.0) {
        // Q(y) = Q(0) + a*|y|² since ∫x w² = 0
        let m = HomogeneousModel::Radial { coeff: 1.0, exponent: 2.0 };
        let q0 = q_value(&m, profile(), &[0.0]);
        prop_assert!((q_value(&m, profile(), &[y]) - q0 - 6.0 * y * y).abs() < 1e-8);
    }

    #[test]
    fn rescaling_recovers_the_profile(rho in 10.0..80.0, center in -1.5..1.5) {
        let pot = build_potential::<f64>(&PotentialSpec::Zero { d: 1 }).unwrap();
        let m = Model::with_profile(pot, 2.0, profile().clone()).unwrap();
        let grid = Grid64::new(1, 6.0, 3001).unwrap();
        let u = tilde_minimizer(m.constants(), m.profile(), rho, &[center], &grid).unwrap();
        let res = MinimizeResult {
            max_point: u.max_point(),
            u,
            rho,
            energy: 0.0,
            mu: 0.0,
            grad_residual: 0.0,
            iterations: 0,
            energy_history: Vec::new(),
        };
        let u_bar = rescale(&res, m.constants()).unwrap();
        prop_assert!(profile_distance(&u_bar, m.profile()) < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn minimizers_satisfy_the_result_invariants(seed in any::<u64>(), rho in 2.0..30.0) {
        let pot = build_potential::<f64>(&PotentialSpec::power(1, 2.0)).unwrap();
        let m = Model::with_profile(pot, 2.0, profile().clone()).unwrap();
        let grid = Grid64::new(1, 5.0, 1201).unwrap();
        let opts = MinimizeOptions { record_history: true, ..MinimizeOptions::default() };
        let res = minimize(&m, &grid, rho, &Init::Random { seed }, &opts).unwrap();
        prop_assert!((res.u.norm_sq() - 1.0).abs() < 1e-12);
        prop_assert!(res.u.values().iter().all(|&v| v >= 0.0));
        prop_assert!(eigen_residual(&res.u, &m, rho, res.mu) < 10.0 * opts.tol);
        let slack = 1e-13 * res.energy.abs().max(1.0);
        prop_assert!(res.energy_history.windows(2).all(|w| w[1] <= w[0] + slack));
        prop_assert!(res.energy >= tilde_e(m.constants(), rho).unwrap() - 1e-3);
    }
}
