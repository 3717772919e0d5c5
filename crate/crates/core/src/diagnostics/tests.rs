use super::*;
use crate::asymptotics::{tilde_e_derivative, tilde_minimizer};
use crate::groundstate::{sweep, SweepOptions};
use crate::potentials::{build_potential, PotentialSpec};
use crate::soliton::SolitonProfile;

fn model(spec: PotentialSpec) -> Model<f64> {
    let pot = build_potential(&spec).unwrap();
    let prof = SolitonProfile::closed_form_1d(2.0, 1e-3, 25.0).unwrap();
    Model::with_profile(pot, 2.0, prof).unwrap()
}

fn fake_result(u: Field<f64>, rho: f64, max_point: Vec<f64>, energy: f64) -> MinimizeResult<f64> {
    MinimizeResult {
        u,
        rho,
        energy,
        mu: 0.0,
        grad_residual: 0.0,
        iterations: 0,
        max_point,
        energy_history: Vec::new(),
    }
}

fn free_closed_form(m: &Model<f64>, rho: f64, center: f64) -> MinimizeResult<f64> {
    let grid = Grid::new(1, 6.0, 3001).unwrap();
    let u = tilde_minimizer(m.constants(), m.profile(), rho, &[center], &grid).unwrap();
    fake_result(u, rho, vec![center], tilde_e(m.constants(), rho).unwrap())
}

#[test]
fn rescaling_inverts_the_free_closed_form() {
    let m = model(PotentialSpec::Zero { d: 1 });
    for &(rho, center) in &[(20.0, 0.0), (40.0, 0.3), (60.0, -1.1)] {
        let res = free_closed_form(&m, rho, center);
        let u_bar = rescale(&res, m.constants()).unwrap();
        assert!(profile_distance(&u_bar, m.profile()) < 1e-4);
        assert!((u_bar.norm_sq() - 6.0).abs() < 1e-4, "{}", u_bar.norm_sq());
    }
}

#[test]
fn distant_equal_maxima_are_ambiguous() {
    let m = model(PotentialSpec::Zero { d: 1 });
    let grid = Grid::new(1, 6.0, 3001).unwrap();
    let bump = |x: f64| (-(x * x) * 20.0).exp();
    let mut u = Field::from_fn(grid, |x| bump(x[0] - 2.0) + bump(x[0] + 2.0));
    u.normalize().unwrap();
    let res = fake_result(u, 20.0, vec![2.0], 0.0);
    assert!(matches!(rescale(&res, m.constants()), Err(Error::Ambiguity(_))));
}

#[test]
fn decay_of_reference_shapes() {
    let prof = SolitonProfile::closed_form_1d(2.0, 1e-3, 25.0).unwrap();
    let g: Grid<f64> = reference_grid(1);
    let w = Field::from_fn(g.clone(), |z| prof.value(z[0].abs()));
    let fit = decay_check(&w).unwrap();
    assert!((fit.rate + 1.0).abs() < 0.02 && fit.ok, "{fit:?}");
    let gauss = Field::from_fn(g.clone(), |z| (-z[0] * z[0]).exp());
    let fit = decay_check(&gauss).unwrap();
    assert!(fit.ok && fit.rate < -5.0);
    let algebraic = Field::from_fn(g.clone(), |z| 1.0 / (1.0 + z[0] * z[0]));
    assert!(!decay_check(&algebraic).unwrap().ok);
    let flat = Field::from_fn(g, |_| 1.0);
    assert!(matches!(decay_check(&flat), Err(Error::Accuracy(_))));
}

#[test]
fn linkage_clusters() {
    let pts = vec![vec![0.0], vec![0.1], vec![2.0], vec![2.05], vec![0.15]];
    assert_eq!(single_linkage(&pts, 0.5), vec![vec![0, 1, 4], vec![2, 3]]);
    assert_eq!(single_linkage(&pts, f64::INFINITY).len(), 1);
    assert!(single_linkage::<f64>(&[], 1.0).is_empty());
}

#[test]
fn multiplier_identity_in_closed_cases() {
    let m = model(PotentialSpec::power(1, 2.0));
    let grid = Grid::new(1, 8.0, 801).unwrap();
    let res = minimize(&m, &grid, 0.0, &Init::Predicted, &MinimizeOptions::default()).unwrap();
    let rep = equivalence_check(&res, &m, None);
    assert!(rep.norm_ok && rep.mu_ok == Some(true));
    assert!(rep.mu_defect.unwrap() < 1e-12);

    let free = model(PotentialSpec::Zero { d: 1 });
    let rho = 30.0;
    let mut res = free_closed_form(&free, rho, 0.0);
    res.mu = crate::asymptotics::tilde_mu(free.constants(), rho).unwrap();
    let rep = equivalence_check(&res, &free, Some(tilde_e_derivative(free.constants(), rho).unwrap()));
    assert!(rep.mu_defect.unwrap() < 1e-12, "{rep:?}");
    // Hellmann–Feynman derivative on the sampled closed form
    let exact = tilde_e_derivative(free.constants(), rho).unwrap();
    assert!(((rep.e_prime_integral - exact) / exact).abs() < 1e-4);
}

#[test]
fn harmonic_sweep_concentrates_at_the_origin() {
    let m = model(PotentialSpec::power(1, 2.0));
    let rhos = [10.0, 15.0, 22.0, 33.0];
    let results = sweep(&m, &rhos, &SweepOptions::default()).unwrap();
    let rep = concentration_rate(&m, &results, &EnergyReference::ClosedForm).unwrap();
    assert!(rep.max_rate() < 1e-6);
    assert!(rep.distances_monotone(0.1), "{:?}", rep.distances_linf);
    assert!(rep.decay_ok.iter().all(|&ok| ok));
    assert_eq!(rep.fit_range, (2, 4));
    assert!(rep.fitted_slope > 0.0);
    let checks = equivalence_checks(&results, &m);
    assert!(checks[0].mu_ok.is_none() && checks[3].mu_ok.is_none());
    for c in &checks[1..3] {
        assert!(c.mu_ok == Some(true), "{c:?}");
    }
}

#[test]
fn concentration_at_a_steeper_well_is_a_violation() {
    let m = model(PotentialSpec::Product {
        roots: vec![1.0, -1.0],
        powers: vec![2.0, 4.0],
        coeff: 1.0,
    });
    let results: Vec<_> = [20.0, 40.0].iter().map(|&rho| free_closed_form(&m, rho, 1.0)).collect();
    let err = concentration_rate(&m, &results, &EnergyReference::ClosedForm).unwrap_err();
    assert!(matches!(err, Error::SelectionViolation(_)), "{err}");
}

#[test]
fn single_start_probe_is_trivially_unique() {
    let m = model(PotentialSpec::power(1, 2.0));
    let grid = Grid::new(1, 5.0, 1001).unwrap();
    let rep = uniqueness_probe(&m, &grid, 20.0, 1, 3, &MinimizeOptions::default()).unwrap();
    assert_eq!(rep.max_pairwise_distance, 0.0);
    assert_eq!(rep.clusters, vec![vec![0]]);
    let rep = uniqueness_probe(&m, &grid, 20.0, 4, 3, &MinimizeOptions::default()).unwrap();
    assert!(rep.max_pairwise_distance < 1e-6, "{}", rep.max_pairwise_distance);
    assert!(rep.energy_spread < 1e-9);
}
