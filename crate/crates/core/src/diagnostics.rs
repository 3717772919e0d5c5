//! Numerical checks of the large-`ρ` picture on computed minimizers:
//! rescaled profiles, tail decay, location and rate of concentration, the
//! energy expansion, multi-start uniqueness and the multiplier identity.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{epsilon, predicted_e, tilde_e};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::groundstate::{
    coupling, energy_parts, free_reference, minimize, Init, MinimizeOptions, MinimizeResult, Model,
};
use crate::potentials::distance;
use crate::scalar::{c, Scalar};
use crate::soliton::SolitonConstants;

/// Local maxima within this fraction of the top value compete for the
/// maximum point.
pub const ARGMAX_FRACTION: f64 = 0.99;
/// Fit window of [`decay_check`] in values of `ū`.
pub const DECAY_WINDOW: (f64, f64) = (1e-8, 1e-2);
/// Largest fitted log-slope accepted by [`decay_check`].
pub const DECAY_RATE_BOUND: f64 = -0.45;
/// Relative tolerance of the multiplier identity.
pub const MU_IDENTITY_TOL: f64 = 0.02;
/// Tolerance of the unit-mass check.
pub const NORM_TOL: f64 = 1e-8;

/// Grid in rescaled coordinates on which `ū` is compared with `w`.
pub fn reference_grid<T: Scalar>(d: usize) -> Grid<T> {
    let (half, n) = match d {
        1 => (15.0, 601),
        2 => (12.0, 241),
        _ => (8.0, 81),
    };
    Grid::new(d, c(half), n).expect("reference grid parameters are valid")
}

/// `ū(z) = √a* ε^{d/2} u(εz + x_ρ)` on [`reference_grid`].
///
/// Fails with an ambiguity error when two local maxima within 1% of the top
/// value are more than `ε` apart.
pub fn rescale<T: Scalar>(result: &MinimizeResult<T>, k: &SolitonConstants<T>) -> Result<Field<T>> {
    rescale_on(result, k, &reference_grid(result.u.grid().d()))
}

/// [`rescale`] onto a given grid of rescaled coordinates.
pub fn rescale_on<T: Scalar>(
    result: &MinimizeResult<T>,
    k: &SolitonConstants<T>,
    target: &Grid<T>,
) -> Result<Field<T>> {
    let u = &result.u;
    let g = u.grid();
    if target.d() != g.d() || k.d != g.d() {
        return Err(Error::Domain("dimension mismatch in rescale".into()));
    }
    let eps = epsilon(k, result.rho)?;
    let mut x = vec![T::zero(); g.d()];
    let mut top = vec![T::zero(); g.d()];
    g.coords(u.argmax(), &mut top);
    for idx in u.local_maxima(c(ARGMAX_FRACTION)) {
        g.coords(idx, &mut x);
        if distance(&x, &top) > eps {
            return Err(Error::Ambiguity(format!(
                "maxima near {top:?} and {x:?} are {} blow-up lengths apart at rho = {}",
                distance(&x, &top) / eps,
                result.rho
            )));
        }
    }
    let xr = &result.max_point;
    let amp = k.a_star.sqrt() * eps.powf(T::from_usize_lossy(g.d()) / c(2.0));
    let mut y = vec![T::zero(); g.d()];
    Ok(Field::from_fn(target.clone(), |z| {
        for i in 0..y.len() {
            y[i] = eps * z[i] + xr[i];
        }
        amp * u.interpolate(&y)
    }))
}

/// `‖ū − w‖_∞` over the rescaled grid.
pub fn profile_distance<T: Scalar>(u_bar: &Field<T>, prof: &crate::soliton::SolitonProfile<T>) -> T {
    let g = u_bar.grid();
    let mut z = vec![T::zero(); g.d()];
    u_bar
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            g.coords(i, &mut z);
            let r = z.iter().map(|&a| a * a).sum::<T>().sqrt();
            (v - prof.value(r)).abs()
        })
        .fold(T::zero(), T::max)
}

/// Least-squares fit of `ln ū` against `|z|` over the points with `ū` in
/// [`DECAY_WINDOW`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit<T> {
    /// Fitted slope; the bound `ū ≤ C e^{−|z|/2}` needs it near or below −1/2.
    pub rate: T,
    /// `C` of the fitted line `C e^{rate |z|}`.
    pub fitted_c: T,
    /// Smallest `C` with `ū ≤ C e^{−|z|/2}` on the whole grid.
    pub bound_c: T,
    pub points: usize,
    /// `rate ≤ DECAY_RATE_BOUND`.
    pub ok: bool,
}

/// Exponential tail check of a rescaled field. Fails with an accuracy error
/// when fewer than three points fall in the fit window.
pub fn decay_check<T: Scalar>(u_bar: &Field<T>) -> Result<DecayFit<T>> {
    let g = u_bar.grid();
    let (lo, hi) = (c::<T>(DECAY_WINDOW.0), c::<T>(DECAY_WINDOW.1));
    let mut z = vec![T::zero(); g.d()];
    let mut pts = Vec::new();
    let mut bound_c = T::zero();
    for (i, &v) in u_bar.values().iter().enumerate() {
        g.coords(i, &mut z);
        let r = z.iter().map(|&a| a * a).sum::<T>().sqrt();
        bound_c = bound_c.max(v * (r / c(2.0)).exp());
        if v >= lo && v <= hi {
            pts.push((r, v.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::Accuracy(format!(
            "only {} points with values in [{:e}, {:e}]; the box is too small for a tail fit",
            pts.len(),
            DECAY_WINDOW.0,
            DECAY_WINDOW.1
        )));
    }
    let n = T::from_usize_lossy(pts.len());
    let mr = pts.iter().map(|p| p.0).sum::<T>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mr) * (p.0 - mr)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mr) * (p.1 - ml)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::Accuracy("tail fit window spans a single radius".into()));
    }
    let rate = sxy / sxx;
    Ok(DecayFit {
        rate,
        fitted_c: (ml - rate * mr).exp(),
        bound_c,
        points: pts.len(),
        ok: rate <= c(DECAY_RATE_BOUND),
    })
}

/// What `e(ρ) − ẽ` is measured against.
#[derive(Debug, Clone)]
pub enum EnergyReference<T> {
    /// The closed form `ẽ(ρ)`.
    ClosedForm,
    /// The `V ≡ 0` minimizer on each entry's own grid, which cancels the
    /// discretization error of `ẽ` to leading order.
    Grid(MinimizeOptions<T>),
    /// Precomputed values, one per sweep entry.
    Given(Vec<T>),
}

/// Concentration data along a sweep. The sweep is one particular sequence
/// `ρ → ∞`; limits that hold only along subsequences are not distinguished.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport<T> {
    pub rho_list: Vec<T>,
    pub epsilons: Vec<T>,
    pub energies: Vec<T>,
    pub tilde_e: Vec<T>,
    /// The `ẽ` values actually subtracted (closed form or grid-consistent).
    pub reference_e: Vec<T>,
    pub predicted_e: Vec<T>,
    pub distances_linf: Vec<T>,
    pub decay: Vec<Option<DecayFit<T>>>,
    pub decay_ok: Vec<bool>,
    pub max_points: Vec<Vec<T>>,
    /// `(x_ρ − x₀)/ε` relative to the nearest selected well.
    pub rate_points: Vec<Vec<T>>,
    /// Well index nearest to each max point.
    pub nearest_well: Vec<usize>,
    pub x0: Vec<T>,
    pub y0: Vec<T>,
    pub lambda_bar_0: T,
    pub r: T,
    /// Least-squares slope through the origin of `e − ẽ` against `ε^r` over
    /// the larger half of the sweep; the expansion predicts `λ̄₀/a*`.
    pub fitted_slope: T,
    /// `a* · fitted_slope`, the fitted counterpart of `λ̄₀`.
    pub fitted_lambda_bar: T,
    /// `fitted_lambda_bar / λ̄₀`.
    pub expansion_ratio: T,
    /// Indices of the entries used in the fit.
    pub fit_range: (usize, usize),
}

impl<T: Scalar> ConcentrationReport<T> {
    /// `dist[j+1] ≤ (1 + noise) dist[j]` for every adjacent pair.
    pub fn distances_monotone(&self, noise: T) -> bool {
        self.distances_linf
            .windows(2)
            .all(|w| w[1] <= (T::one() + noise) * w[0])
    }

    /// Largest component of any rate point.
    pub fn max_rate(&self) -> T {
        self.rate_points
            .iter()
            .flatten()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Rescaled-profile distances, decay fits, concentration rates and the
/// expansion slope for a sweep ordered by increasing `ρ`.
///
/// Fails with a selection-violation error when the maximum point of the
/// largest-`ρ` entry is nearest to a well that is not among the flattest.
pub fn concentration_rate<T: Scalar>(
    model: &Model<T>,
    results: &[MinimizeResult<T>],
    reference: &EnergyReference<T>,
) -> Result<ConcentrationReport<T>> {
    let sel = model
        .selection()
        .ok_or_else(|| Error::Domain("concentration analysis needs a potential with wells".into()))?;
    if results.len() < 2 {
        return Err(Error::Domain(
            "concentration analysis needs at least two sweep entries".into(),
        ));
    }
    if results.windows(2).any(|w| !(w[1].rho > w[0].rho)) || !(results[0].rho > T::zero()) {
        return Err(Error::Domain(
            "sweep entries must have positive, strictly increasing rho".into(),
        ));
    }
    let k = model.constants();
    let prof = model.profile();
    let r = sel.degree();
    let lambda_bar_0 = sel.lambda_bar_0;
    let locations = &sel.classification.locations;

    let nearest = |x: &[T], among: &mut dyn Iterator<Item = usize>| -> usize {
        among
            .map(|i| (i, distance(x, &locations[i])))
            .fold(None, |best: Option<(usize, T)>, (i, dist)| match best {
                Some((_, b)) if b <= dist => best,
                _ => Some((i, dist)),
            })
            .expect("at least one well")
            .0
    };
    let last = results.last().expect("nonempty");
    let home = nearest(&last.max_point, &mut (0..locations.len()));
    if !sel.classification.flattest.contains(&home) {
        return Err(Error::SelectionViolation(format!(
            "at rho = {} the maximum point {:?} sits at the well {:?} of lower degree; flattest wells are {:?}",
            last.rho,
            last.max_point,
            locations[home],
            sel.classification.flattest_locations()
        )));
    }

    if let EnergyReference::Given(v) = reference {
        if v.len() != results.len() {
            return Err(Error::Domain(format!(
                "{} reference energies given for {} sweep entries",
                v.len(),
                results.len()
            )));
        }
    }
    let per_entry: Vec<_> = results
        .par_iter()
        .enumerate()
        .map(|(j, res)| -> Result<_> {
            let eps = epsilon(k, res.rho)?;
            let u_bar = rescale(res, k)?;
            let dist = profile_distance(&u_bar, prof);
            let decay = decay_check(&u_bar).ok();
            let reference_e = match reference {
                EnergyReference::ClosedForm => tilde_e(k, res.rho)?,
                EnergyReference::Grid(opts) => free_reference(model, res.u.grid(), res.rho, opts)?.energy,
                EnergyReference::Given(v) => v[j],
            };
            Ok((eps, dist, decay, reference_e))
        })
        .collect::<Result<_>>()?;

    let mut report = ConcentrationReport {
        rho_list: results.iter().map(|r| r.rho).collect(),
        epsilons: per_entry.iter().map(|e| e.0).collect(),
        energies: results.iter().map(|r| r.energy).collect(),
        tilde_e: results.iter().map(|r| tilde_e(k, r.rho)).collect::<Result<_>>()?,
        reference_e: per_entry.iter().map(|e| e.3).collect(),
        predicted_e: results
            .iter()
            .map(|r| predicted_e(k, r.rho, lambda_bar_0, sel.degree()))
            .collect::<Result<_>>()?,
        distances_linf: per_entry.iter().map(|e| e.1).collect(),
        decay_ok: per_entry.iter().map(|e| e.2.is_some_and(|d| d.ok)).collect(),
        decay: per_entry.iter().map(|e| e.2).collect(),
        max_points: results.iter().map(|r| r.max_point.clone()).collect(),
        rate_points: Vec::new(),
        nearest_well: Vec::new(),
        x0: Vec::new(),
        y0: Vec::new(),
        lambda_bar_0,
        r,
        fitted_slope: T::zero(),
        fitted_lambda_bar: T::zero(),
        expansion_ratio: T::zero(),
        fit_range: (results.len() / 2, results.len()),
    };
    for (res, &eps) in results.iter().zip(&report.epsilons) {
        let well = nearest(&res.max_point, &mut sel.z0.iter().copied());
        let x0 = &locations[well];
        report
            .rate_points
            .push(res.max_point.iter().zip(x0).map(|(&x, &a)| (x - a) / eps).collect());
        report
            .nearest_well
            .push(nearest(&res.max_point, &mut (0..locations.len())));
    }
    let home_sel = nearest(&last.max_point, &mut sel.z0.iter().copied());
    report.x0 = locations[home_sel].clone();
    report.y0 = sel
        .per_well
        .iter()
        .find(|q| q.well_index == Some(home_sel))
        .map(|q| q.y0.clone())
        .unwrap_or_default();

    let (a, b) = report.fit_range;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for j in a..b {
        let x = report.epsilons[j].powf(r);
        let y = report.energies[j] - report.reference_e[j];
        sxy = sxy + x * y;
        sxx = sxx + x * x;
    }
    report.fitted_slope = sxy / sxx;
    report.fitted_lambda_bar = report.fitted_slope * k.a_star;
    report.expansion_ratio = report.fitted_lambda_bar / lambda_bar_0;
    Ok(report)
}

/// Outcome of [`uniqueness_probe`].
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport<T> {
    pub rho: T,
    pub seeds: Vec<u64>,
    /// Largest `L∞` distance between any two converged fields, unaligned.
    pub max_pairwise_distance: T,
    /// `(max e − min e) / |min e|`.
    pub energy_spread: T,
    pub energies: Vec<T>,
    pub max_points: Vec<Vec<T>>,
    /// Single-linkage clusters of the maximum points with cutoff half the
    /// smallest well separation.
    pub clusters: Vec<Vec<usize>>,
    pub cluster_cutoff: T,
    #[serde(skip)]
    pub results: Vec<MinimizeResult<T>>,
}

/// Minimizes from `n_inits` random starts with seeds `seed, seed + 1, …`
/// concurrently and compares the results.
///
/// Requires `ε(ρ)` below a tenth of the smallest well separation.
pub fn uniqueness_probe<T: Scalar>(
    model: &Model<T>,
    grid: &Grid<T>,
    rho: T,
    n_inits: usize,
    seed: u64,
    opts: &MinimizeOptions<T>,
) -> Result<ProbeReport<T>> {
    if n_inits == 0 {
        return Err(Error::Domain("the probe needs at least one initialization".into()));
    }
    let separation = model.potential().min_separation();
    let eps = model.epsilon(rho)?;
    if separation.is_finite() && !(eps < separation / c(10.0)) {
        return Err(Error::Domain(format!(
            "rho = {rho} gives eps = {eps}, not below a tenth of the well separation {separation}"
        )));
    }
    let seeds: Vec<u64> = (0..n_inits as u64).map(|i| seed.wrapping_add(i)).collect();
    let results: Vec<MinimizeResult<T>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            minimize(model, grid, rho, &Init::Random { seed: s }, opts)
                .map_err(|e| e.context(format!("probe initialization {i} (seed {s})")))
        })
        .collect::<Result<_>>()?;

    let mut max_pairwise_distance = T::zero();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            max_pairwise_distance = max_pairwise_distance.max(results[i].u.max_abs_diff(&results[j].u)?);
        }
    }
    let energies: Vec<T> = results.iter().map(|r| r.energy).collect();
    let emin = energies.iter().copied().fold(T::infinity(), T::min);
    let emax = energies.iter().copied().fold(T::neg_infinity(), T::max);
    let max_points: Vec<Vec<T>> = results.iter().map(|r| r.max_point.clone()).collect();
    let cluster_cutoff = separation / c(2.0);
    Ok(ProbeReport {
        rho,
        seeds,
        max_pairwise_distance,
        energy_spread: (emax - emin) / emin.abs(),
        energies,
        clusters: single_linkage(&max_points, cluster_cutoff),
        max_points,
        cluster_cutoff,
        results,
    })
}

/// Connected components of the graph joining points closer than `cutoff`.
pub fn single_linkage<T: Scalar>(points: &[Vec<T>], cutoff: T) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if distance(&points[i], &points[j]) < cutoff {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let root = find(&mut label, i);
        match root_of[root] {
            Some(c) => clusters[c].push(i),
            None => {
                root_of[root] = Some(clusters.len());
                clusters.push(vec![i]);
            }
        }
    }
    clusters
}

/// Unit mass and the multiplier identity `μ = 2e + ρ e'(ρ)` at one result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport<T> {
    pub rho: T,
    pub norm_defect: T,
    pub norm_ok: bool,
    pub mu: T,
    /// `e'(ρ)` used on the right-hand side; `None` at sweep endpoints.
    pub e_prime: Option<T>,
    /// `−((p−1)/(p+1)) ρ^{p−2} ∫|u|^{p+1}`.
    pub e_prime_integral: T,
    pub mu_from_energy: Option<T>,
    pub mu_defect: Option<T>,
    pub mu_ok: Option<bool>,
}

/// Checks one result against a given `e'(ρ)`. At `ρ = 0` the identity is
/// `μ = 2e` whatever `e'` is.
pub fn equivalence_check<T: Scalar>(
    result: &MinimizeResult<T>,
    model: &Model<T>,
    e_prime: Option<T>,
) -> EquivalenceReport<T> {
    let p = model.p();
    let rho = result.rho;
    let norm_defect = (result.u.norm_sq() - T::one()).abs();
    let parts = energy_parts(&result.u, model.potential(), p);
    let e_prime_integral = if rho == T::zero() {
        T::zero()
    } else {
        -(p - T::one()) / (p + T::one()) * coupling(rho, p) / rho * parts.interaction
    };
    let e_prime = if rho == T::zero() { Some(T::zero()) } else { e_prime };
    let mu_from_energy = e_prime.map(|ep| c::<T>(2.0) * result.energy + rho * ep);
    let mu_defect = mu_from_energy.map(|m| (result.mu - m).abs() / result.mu.abs());
    EquivalenceReport {
        rho,
        norm_defect,
        norm_ok: norm_defect <= c(NORM_TOL),
        mu: result.mu,
        e_prime,
        e_prime_integral,
        mu_from_energy,
        mu_defect,
        mu_ok: mu_defect.map(|d| d < c(MU_IDENTITY_TOL)),
    }
}

/// [`equivalence_check`] along a sweep with `e'` from the three-point
/// difference on the (possibly non-uniform) `ρ` list at interior entries.
pub fn equivalence_checks<T: Scalar>(results: &[MinimizeResult<T>], model: &Model<T>) -> Vec<EquivalenceReport<T>> {
    (0..results.len())
        .map(|j| {
            let e_prime = (j > 0 && j + 1 < results.len()).then(|| {
                let (a, b, cc) = (&results[j - 1], &results[j], &results[j + 1]);
                let (h1, h2) = (b.rho - a.rho, cc.rho - b.rho);
                (-h2 / (h1 * (h1 + h2))) * a.energy
                    + ((h2 - h1) / (h1 * h2)) * b.energy
                    + (h1 / (h2 * (h1 + h2))) * cc.energy
            });
            equivalence_check(&results[j], model, e_prime)
        })
        .collect()
}

#[cfg(test)]
mod tests;
