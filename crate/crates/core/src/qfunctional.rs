//! The effective potential `Q_i(y) = ∫ V_i(x + y) w(x)² dx` felt by the
//! soliton near a well, its minimizers, and the selection of the wells where
//! concentration happens.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::potentials::{classify_wells, HomogeneousModel, Potential, WellClassification};
use crate::scalar::{c, Scalar};
use crate::soliton::SolitonProfile;

/// Two minima closer than this are the same point.
pub const DISTINCT_MINIMA: f64 = 0.05;
/// Minima whose values differ by at most this much are tied.
pub const TIED_VALUES: f64 = 1e-8;
pub const HESSIAN_STEP: f64 = 1e-3;
pub const SEARCH_HALF_WIDTH: f64 = 5.0;
/// Share of `Q` carried by the outermost unit shell of the quadrature above
/// which the truncation is reported.
pub const TAIL_WARNING: f64 = 0.01;

/// Tensor quadrature of `f ↦ ∫ f(x) w(x)² dx` with the soliton weight baked
/// into the nodes.
///
/// In one dimension the nodes are every fifth point of the profile mesh over
/// `[−r_max, r_max]`. In two dimensions the box `[−12, 12]²` with spacing
/// 0.1 is used, in three `[−8, 8]³` with spacing 0.4; the trapezoid rule is
/// spectrally accurate for these smooth, exponentially decaying weights.
#[derive(Debug, Clone)]
pub struct QQuadrature<T> {
    d: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    outer: Vec<bool>,
}

impl<T: Scalar> QQuadrature<T> {
    pub fn new(prof: &SolitonProfile<T>) -> Self {
        let d = prof.d();
        let (h, half) = match d {
            1 => (prof.step() * c(5.0), prof.r_max()),
            2 => (c(0.1), c(12.0)),
            _ => (c(0.4), c(8.0)),
        };
        let m = (half / h).round().to_usize().expect("finite quadrature size");
        let axis: Vec<T> = (0..=2 * m)
            .map(|i| (T::from_usize_lossy(i) - T::from_usize_lossy(m)) * h)
            .collect();
        let per_axis = axis.len();
        let total = per_axis.pow(d as u32);
        let mut nodes = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        let mut outer = Vec::with_capacity(total);
        let vol = h.powi(d as i32);
        for flat in 0..total {
            let mut rem = flat;
            let mut r2 = T::zero();
            let mut wt = vol;
            for _ in 0..d {
                let i = rem % per_axis;
                rem /= per_axis;
                let x = axis[i];
                nodes.push(x);
                r2 = r2 + x * x;
                if i == 0 || i == per_axis - 1 {
                    wt = wt * c(0.5);
                }
            }
            let r = r2.sqrt();
            let w = prof.value(r);
            weights.push(wt * w * w);
            outer.push(r > half - T::one());
        }
        Self {
            d,
            nodes,
            weights,
            outer,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `∫ f(x + y) w(x)² dx` and the share of it coming from the outermost
    /// unit shell.
    pub fn eval_with_tail(&self, f: &(impl Fn(&[T]) -> T + ?Sized), y: &[T]) -> (T, T) {
        let mut x = vec![T::zero(); self.d];
        let (mut total, mut shell) = (T::zero(), T::zero());
        for (k, (&wt, &out)) in self.weights.iter().zip(&self.outer).enumerate() {
            for i in 0..self.d {
                x[i] = self.nodes[k * self.d + i] + y[i];
            }
            let v = wt * f(&x);
            total = total + v;
            if out {
                shell = shell + v;
            }
        }
        let frac = if total > T::zero() { shell / total } else { T::zero() };
        (total, frac)
    }

    pub fn eval(&self, f: &(impl Fn(&[T]) -> T + ?Sized), y: &[T]) -> T {
        self.eval_with_tail(f, y).0
    }
}

/// `Q_i(y)` for the local model `V_i`. Logs a warning when the quadrature
/// truncation is not negligible.
pub fn q_value<T: Scalar>(model: &HomogeneousModel<T>, prof: &SolitonProfile<T>, y: &[T]) -> T {
    let quad = QQuadrature::new(prof);
    let (v, tail) = quad.eval_with_tail(&|x: &[T]| model.eval(x), y);
    if tail > c(TAIL_WARNING) {
        log::warn!(
            "Q quadrature tail carries {:.2}% of the value at y = {:?}",
            100.0 * tail.as_f64(),
            y
        );
    }
    v
}

/// Minimum of `Q_i` and the local geometry there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QResult<T> {
    /// Index of the well in the potential, when the result belongs to one.
    pub well_index: Option<usize>,
    pub y0: Vec<T>,
    /// `λ̄_i = min Q_i`.
    pub lambda_bar: T,
    /// Central second differences with step [`HESSIAN_STEP`].
    pub hessian: Vec<Vec<T>>,
    pub eigenvalues: Vec<T>,
    pub nondegenerate: bool,
    /// Every global minimizer found; more than one entry means the minimizer
    /// set is not a singleton.
    pub minimizers: Vec<Vec<T>>,
    pub tail_warning: bool,
}

impl<T> QResult<T> {
    pub fn unique_minimizer(&self) -> bool {
        self.minimizers.len() == 1
    }
}

/// Global minimization of `Q_i` over `[−5, 5]^d`: coarse scan (step 0.25,
/// or 0.5 in three dimensions), coordinate golden-section refinement of every
/// local minimum of the scan, then the Hessian at the best point.
pub fn minimize_q<T: Scalar>(model: &HomogeneousModel<T>, prof: &SolitonProfile<T>) -> QResult<T> {
    let quad = QQuadrature::new(prof);
    minimize_q_with(&quad, &|x: &[T]| model.eval(x))
}

/// [`minimize_q`] for an arbitrary nonnegative function in place of `V_i`.
pub fn minimize_q_with<T: Scalar>(quad: &QQuadrature<T>, f: &(dyn Fn(&[T]) -> T + Sync)) -> QResult<T> {
    let d = quad.d();
    let step = if d >= 3 { 0.5 } else { 0.25 };
    let m = (SEARCH_HALF_WIDTH / step).round() as usize;
    let per_axis = 2 * m + 1;
    let total = per_axis.pow(d as u32);
    let coord = |i: usize| c::<T>((i as f64 - m as f64) * step);
    let point = |flat: usize| -> Vec<T> {
        let mut rem = flat;
        (0..d)
            .map(|_| {
                let i = rem % per_axis;
                rem /= per_axis;
                coord(i)
            })
            .collect()
    };
    let values: Vec<T> = (0..total).into_par_iter().map(|k| quad.eval(f, &point(k))).collect();

    // scan points not larger than any of their 3^d neighbours
    let mut candidates = Vec::new();
    for k in 0..total {
        let idx: Vec<isize> = {
            let mut rem = k;
            (0..d)
                .map(|_| {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    i as isize
                })
                .collect()
        };
        let mut is_min = true;
        for nb in 0..3usize.pow(d as u32) {
            let mut rem = nb;
            let mut flat = 0usize;
            let mut stride = 1usize;
            let mut inside = true;
            let mut centre = true;
            for &i in &idx {
                let off = (rem % 3) as isize - 1;
                rem /= 3;
                centre &= off == 0;
                let j = i + off;
                if j < 0 || j >= per_axis as isize {
                    inside = false;
                    break;
                }
                flat += j as usize * stride;
                stride *= per_axis;
            }
            if inside && !centre && values[flat] < values[k] {
                is_min = false;
                break;
            }
        }
        if is_min {
            candidates.push(k);
        }
    }

    let refined: Vec<(Vec<T>, T)> = candidates
        .par_iter()
        .map(|&k| refine(quad, f, point(k), c(step)))
        .collect();
    let best = refined.iter().map(|(_, v)| *v).fold(T::infinity(), T::min);
    let tol = c::<T>(TIED_VALUES) * best.abs().max(T::one());
    let mut minimizers: Vec<Vec<T>> = Vec::new();
    let mut ordered: Vec<&(Vec<T>, T)> = refined.iter().filter(|(_, v)| *v - best <= tol).collect();
    ordered.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    for (y, _) in ordered {
        if minimizers
            .iter()
            .all(|z| crate::potentials::distance(z, y) > c(DISTINCT_MINIMA))
        {
            minimizers.push(y.clone());
        }
    }
    let y0 = minimizers[0].clone();
    let (lambda_bar, tail) = quad.eval_with_tail(f, &y0);
    let hessian = hessian(quad, f, &y0);
    let eigenvalues = symmetric_eigenvalues(&hessian);
    let scale = eigenvalues.iter().fold(T::zero(), |m, &e| m.max(e.abs()));
    let nondegenerate = eigenvalues.iter().all(|&e| e > c::<T>(1e-6) * scale.max(c(1e-300)));
    QResult {
        well_index: None,
        y0,
        lambda_bar,
        hessian,
        eigenvalues,
        nondegenerate,
        minimizers,
        tail_warning: tail > c(TAIL_WARNING),
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Coordinate golden-section descent started from a scan point with
/// bracket half-width `step` per axis.
fn refine<T: Scalar>(quad: &QQuadrature<T>, f: &(dyn Fn(&[T]) -> T + Sync), mut y: Vec<T>, step: T) -> (Vec<T>, T) {
    let mut value = quad.eval(f, &y);
    let mut width = step;
    for _sweep in 0..60 {
        let mut moved = T::zero();
        for axis in 0..y.len() {
            let centre = y[axis];
            let eval_at = |t: T| {
                let mut z = y.clone();
                z[axis] = t;
                quad.eval(f, &z)
            };
            let (t, v) = golden_section(eval_at, centre - width, centre + width, c(1e-10));
            if v < value {
                moved = moved.max((t - centre).abs());
                y[axis] = t;
                value = v;
            }
        }
        if y.len() == 1 || moved < c(1e-10) {
            break;
        }
        width = (moved * c(4.0)).max(c(1e-6)).min(step);
    }
    (y, value)
}

fn golden_section<T: Scalar>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let g = c::<T>(GOLDEN);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn hessian<T: Scalar>(quad: &QQuadrature<T>, f: &(dyn Fn(&[T]) -> T + Sync), y: &[T]) -> Vec<Vec<T>> {
    let d = y.len();
    let h = c::<T>(HESSIAN_STEP);
    let at = |shifts: &[(usize, T)]| {
        let mut z = y.to_vec();
        for &(i, s) in shifts {
            z[i] = z[i] + s;
        }
        quad.eval(f, &z)
    };
    let f0 = at(&[]);
    let mut hess = vec![vec![T::zero(); d]; d];
    for i in 0..d {
        hess[i][i] = (at(&[(i, h)]) - c::<T>(2.0) * f0 + at(&[(i, -h)])) / (h * h);
        for j in 0..i {
            let v = (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (c::<T>(4.0) * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

fn symmetric_eigenvalues<T: Scalar>(m: &[Vec<T>]) -> Vec<T> {
    let d = m.len();
    let mat = nalgebra::DMatrix::<f64>::from_fn(d, d, |i, j| m[i][j].as_f64());
    let mut ev: Vec<f64> = mat.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev.into_iter().map(c).collect()
}

/// Concentration wells predicted for the potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection<T> {
    pub classification: WellClassification<T>,
    /// One result per flattest well, in well order.
    pub per_well: Vec<QResult<T>>,
    /// Indices (into the potential's wells) minimizing `λ̄_i` among the
    /// flattest wells; more than one entry is a tie.
    pub z0: Vec<usize>,
    /// `λ̄₀`.
    pub lambda_bar_0: T,
}

impl<T: Scalar> Selection<T> {
    /// The QResult of the first selected well.
    pub fn primary(&self) -> &QResult<T> {
        let idx = self.z0[0];
        self.per_well
            .iter()
            .find(|q| q.well_index == Some(idx))
            .expect("selected well has a result")
    }

    /// Location `x₀` of the first selected well.
    pub fn x0(&self) -> &[T] {
        &self.classification.locations[self.z0[0]]
    }

    /// Degree `r` of the flattest wells.
    pub fn degree(&self) -> T {
        self.classification.degree
    }
}

/// Filters to the wells of maximal degree first, then picks the smallest
/// `λ̄_i` among those.
pub fn select_concentration<T: Scalar>(pot: &Potential<T>, prof: &SolitonProfile<T>) -> Result<Selection<T>> {
    let classification = classify_wells(pot)?;
    let quad = QQuadrature::new(prof);
    let per_well: Vec<QResult<T>> = classification
        .flattest
        .iter()
        .map(|&i| {
            let model = &pot.wells()[i].model;
            let mut q = minimize_q_with(&quad, &|x: &[T]| model.eval(x));
            q.well_index = Some(i);
            q
        })
        .collect();
    let lambda_bar_0 = per_well.iter().map(|q| q.lambda_bar).fold(T::infinity(), T::min);
    let tol = c::<T>(TIED_VALUES) * lambda_bar_0.abs().max(T::one());
    let z0 = per_well
        .iter()
        .filter(|q| q.lambda_bar - lambda_bar_0 <= tol)
        .filter_map(|q| q.well_index)
        .collect();
    Ok(Selection {
        classification,
        per_well,
        z0,
        lambda_bar_0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{build_potential, PotentialSpec};

    fn closed() -> SolitonProfile<f64> {
        SolitonProfile::closed_form_1d(2.0, 1e-3, 25.0).unwrap()
    }

    fn harmonic() -> HomogeneousModel<f64> {
        HomogeneousModel::Radial {
            coeff: 1.0,
            exponent: 2.0,
        }
    }

    #[test]
    fn harmonic_q_is_a_shifted_parabola() {
        let prof = closed();
        let q0 = q_value(&harmonic(), &prof, &[0.0]);
        // ∫x²w² for w = 1.5 sech²(x/2), quadrature oracle
        assert!((q0 - 7.739_208_8).abs() < 1e-6, "{q0}");
        for &y in &[0.5, -0.5, 1.0, -1.0] {
            let q = q_value(&harmonic(), &prof, &[y]);
            assert!((q - (q0 + 6.0 * y * y)).abs() < 1e-8);
        }
        let res = minimize_q(&harmonic(), &prof);
        assert!(res.y0[0].abs() < 1e-7);
        assert!((res.hessian[0][0] - 12.0).abs() < 1e-5);
        assert!(res.nondegenerate && res.unique_minimizer() && !res.tail_warning);
    }

    #[test]
    fn coercive_growth() {
        let prof = closed();
        let quartic = HomogeneousModel::Radial {
            coeff: 1.0,
            exponent: 4.0,
        };
        let q0 = q_value(&quartic, &prof, &[0.0]);
        assert!((q0 - 35.874_949).abs() < 1e-4, "{q0}");
        let q10 = q_value(&quartic, &prof, &[10.0]);
        let q20 = q_value(&quartic, &prof, &[20.0]);
        assert!(q10 > 100.0 * q0 && q20 > 10.0 * q10);
    }

    #[test]
    fn piecewise_minimizer_shifts_toward_the_shallow_side() {
        let prof = closed();
        let model = HomogeneousModel::Piecewise {
            right: 1.0,
            left: 4.0,
            exponent: 2.0,
        };
        let res = minimize_q(&model, &prof);
        // golden-section oracle on adaptive 1-D quadrature
        assert!((res.y0[0] - 0.614_064_86).abs() < 1e-5, "{:?}", res.y0);
        assert!((res.lambda_bar - 14.696_336).abs() < 1e-5, "{}", res.lambda_bar);
    }

    #[test]
    fn selection_filters_by_degree_first() {
        let prof = closed();
        let pot = build_potential::<f64>(&PotentialSpec::Product {
            roots: vec![1.0, -1.0],
            powers: vec![2.0, 4.0],
            coeff: 1.0,
        })
        .unwrap();
        let sel = select_concentration(&pot, &prof).unwrap();
        assert_eq!(sel.z0, vec![1]);
        assert_eq!(sel.x0(), &[-1.0]);
        assert_eq!(sel.per_well.len(), 1);
        assert!((sel.lambda_bar_0 - 4.0 * 35.874_949).abs() < 1e-3);
    }

    #[test]
    fn selection_prefers_the_softer_coefficient() {
        use crate::potentials::PowerTerm;
        let prof = closed();
        let pot = build_potential::<f64>(&PotentialSpec::MinComposite {
            wells: vec![
                PowerTerm {
                    center: vec![-3.0],
                    exponent: 4.0,
                    coeff: 16.0,
                },
                PowerTerm {
                    center: vec![3.0],
                    exponent: 4.0,
                    coeff: 1.0,
                },
            ],
        })
        .unwrap();
        let sel = select_concentration(&pot, &prof).unwrap();
        assert_eq!(sel.z0, vec![1]);
        assert_eq!(sel.per_well.len(), 2);
    }

    #[test]
    fn symmetric_double_well_is_a_tie() {
        let prof = closed();
        let pot = build_potential::<f64>(&PotentialSpec::Product {
            roots: vec![1.0, -1.0],
            powers: vec![2.0, 2.0],
            coeff: 1.0,
        })
        .unwrap();
        let sel = select_concentration(&pot, &prof).unwrap();
        assert_eq!(sel.z0, vec![0, 1]);
    }

    #[test]
    fn symmetric_double_minimum_is_not_a_singleton() {
        let quad = QQuadrature::new(&closed());
        let f = |x: &[f64]| (x[0] * x[0] - 4.0).powi(2);
        let res = minimize_q_with(&quad, &f);
        assert_eq!(res.minimizers.len(), 2, "{:?}", res.minimizers);
        assert!((res.minimizers[0][0] + res.minimizers[1][0]).abs() < 1e-6);
    }

    #[test]
    fn anisotropic_planar_well_is_centred() {
        let prof = crate::soliton::solve_soliton(2, 2.0f64, 1e-8).unwrap();
        let model = HomogeneousModel::Diagonal { coeffs: vec![1.0, 4.0] };
        let res = minimize_q(&model, &prof);
        assert!(res.y0.iter().all(|v| v.abs() < 1e-6), "{:?}", res.y0);
        assert!(res.nondegenerate);
        // Q(y) = Q(0) + a*(y1² + 4y2²)
        let a_star = crate::soliton::soliton_constants(&prof).unwrap().a_star;
        assert!((res.hessian[0][0] - 2.0 * a_star).abs() < 1e-3 * a_star);
        assert!((res.hessian[1][1] - 8.0 * a_star).abs() < 1e-3 * a_star);
    }
}
