use super::*;
use crate::asymptotics::{tilde_e, tilde_minimizer};
use crate::potentials::{build_potential, PotentialSpec};
use crate::soliton::SolitonProfile;

fn model(spec: PotentialSpec) -> Model<f64> {
    let pot = build_potential(&spec).unwrap();
    let prof = SolitonProfile::closed_form_1d(2.0, 1e-3, 25.0).unwrap();
    Model::with_profile(pot, 2.0, prof).unwrap()
}

fn history_opts() -> MinimizeOptions<f64> {
    MinimizeOptions {
        record_history: true,
        ..MinimizeOptions::default()
    }
}

#[test]
fn harmonic_oscillator_ground_state() {
    let m = model(PotentialSpec::power(1, 2.0));
    let grid = Grid::new(1, 8.0, 801).unwrap();
    let init = Init::Gaussian {
        center: vec![0.7],
        width: 2.0,
    };
    let res = minimize(&m, &grid, 0.0, &init, &history_opts()).unwrap();
    assert!((res.energy - 0.5).abs() < 1e-3, "e = {}", res.energy);
    assert!((res.mu - 1.0).abs() < 2e-3, "mu = {}", res.mu);
    assert!((chemical_potential(&res, &m, 0.0) - 2.0 * res.energy).abs() < 1e-12);
    let exact = Field::from_fn(grid.clone(), |x| {
        std::f64::consts::PI.powf(-0.25) * (-x[0] * x[0] / 2.0).exp()
    });
    assert!(res.u.max_abs_diff(&exact).unwrap() < 1e-3);
    assert!(res.grad_residual < 1e-8);
    assert!((res.u.norm_sq() - 1.0).abs() < 1e-12);
    assert!(res.u.values().iter().all(|&v| v >= 0.0));
    assert!(res
        .energy_history
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-13 * w[0].abs().max(1.0)));
}

#[test]
fn free_problem_reproduces_the_closed_form() {
    let m = model(PotentialSpec::Zero { d: 1 });
    let rho = 8.0 * 6f64.sqrt();
    let grid = Grid::new(1, 7.5, 1921).unwrap();
    let init = Init::Gaussian {
        center: vec![0.4],
        width: 0.5,
    };
    let res = minimize(&m, &grid, rho, &init, &MinimizeOptions::default()).unwrap();
    let exact = tilde_e(m.constants(), rho).unwrap();
    assert!(
        ((res.energy - exact) / exact).abs() < 5e-3,
        "{} vs {}",
        res.energy,
        exact
    );
    let centred = tilde_minimizer(m.constants(), m.profile(), rho, &res.max_point, &grid).unwrap();
    assert!(res.u.max_abs_diff(&centred).unwrap() < 1e-3);
    // μ̃ = −1/ε² = −16
    assert!((res.mu + 16.0).abs() < 0.1, "{}", res.mu);
}

#[test]
fn energy_rejects_unnormalized_fields() {
    let m = model(PotentialSpec::power(1, 2.0));
    let grid = Grid::<f64>::new(1, 8.0, 201).unwrap();
    let u = Field::from_fn(grid, |x| (-x[0] * x[0]).exp());
    assert!(matches!(energy(&u, &m, 1.0), Err(Error::Domain(_))));
}

#[test]
fn harmonic_energy_of_the_exact_gaussian() {
    let m = model(PotentialSpec::power(1, 2.0));
    let grid = Grid::<f64>::new(1, 10.0, 4001).unwrap();
    let mut u = Field::from_fn(grid, |x| (-x[0] * x[0] / 2.0).exp());
    u.zero_boundary();
    u.normalize().unwrap();
    assert!((energy(&u, &m, 0.0).unwrap() - 0.5).abs() < 1e-5);
    assert!(energy(&u, &m, 0.0).unwrap() >= 0.0);
}

#[test]
fn unresolved_grid_is_a_resolution_error() {
    let m = model(PotentialSpec::power(1, 2.0));
    let grid = Grid::new(1, 8.0, 65).unwrap();
    match minimize(&m, &grid, 100.0, &Init::Predicted, &MinimizeOptions::default()) {
        Err(Error::Resolution { h, required }) => assert!(h > required),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn iteration_cap_reports_the_residual() {
    let m = model(PotentialSpec::power(1, 2.0));
    let grid = Grid::new(1, 8.0, 401).unwrap();
    let opts = MinimizeOptions {
        max_iter: 2,
        ..MinimizeOptions::default()
    };
    let init = Init::Gaussian {
        center: vec![2.0],
        width: 0.3,
    };
    match minimize(&m, &grid, 1.0, &init, &opts) {
        Err(Error::NonConvergence { iterations, residual }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 1e-8);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn even_potential_keeps_symmetric_starts_even() {
    let m = model(PotentialSpec::power(1, 4.0));
    let grid = Grid::new(1, 4.0, 801).unwrap();
    let res = minimize(&m, &grid, 10.0, &Init::Predicted, &MinimizeOptions::default()).unwrap();
    let v = res.u.values();
    let asym = (0..v.len())
        .map(|k| (v[k] - v[v.len() - 1 - k]).abs())
        .fold(0.0, f64::max);
    assert!(asym < 1e-8, "{asym:e}");
    assert!(eigen_residual(&res.u, &m, 10.0, res.mu) < 1e-7);
}

#[test]
fn observer_sees_the_gn_floor() {
    let m = model(PotentialSpec::power(1, 2.0));
    // the discrete quotient undershoots the continuum constant by O((h/ε)²)
    let grid = Grid::new(1, 6.0, 4801).unwrap();
    let c_gn = m.constants().c_gn;
    let mut worst = f64::INFINITY;
    let mut obs = |_: usize, u: &Field<f64>, _: f64| {
        worst = worst.min(crate::soliton::gn_ratio(u, 2.0).unwrap());
    };
    let init = Init::Random { seed: 7 };
    minimize_observed(&m, &grid, 4.0, &init, &MinimizeOptions::default(), Some(&mut obs)).unwrap();
    assert!(worst >= c_gn - 1e-6, "{worst} < {c_gn}");
}

#[test]
fn warm_sweep_is_decreasing_and_above_the_free_energy() {
    let m = model(PotentialSpec::power(1, 2.0));
    let rhos = [10.0, 14.0, 20.0];
    let results = sweep(&m, &rhos, &SweepOptions::default()).unwrap();
    for w in results.windows(2) {
        assert!(w[1].energy < w[0].energy);
    }
    for r in &results {
        assert!(r.energy >= tilde_e(m.constants(), r.rho).unwrap());
        assert!(r.max_point[0].abs() < 1e-6);
    }
    let err = sweep(&m, &[2.0, 1.0], &SweepOptions::default()).unwrap_err();
    assert!(err.to_string().contains("strictly increasing"));
}

#[test]
fn planar_anisotropic_well() {
    let pot = build_potential::<f64>(&PotentialSpec::Quadratic {
        coeffs: vec![1.0, 4.0],
        center: None,
    })
    .unwrap();
    let m = Model::new(pot, 1.5).unwrap();
    let grid = Grid::new(2, 5.0, 101).unwrap();
    let res = minimize(&m, &grid, 0.0, &Init::Predicted, &MinimizeOptions::default()).unwrap();
    // ground state of −Δ + x² + 4y²: e = (1 + 2)/2 up to O(h²)
    assert!((res.energy - 1.5).abs() < 2e-3, "{}", res.energy);
    assert!(res.max_point.iter().all(|v| v.abs() < 1e-6));
}
