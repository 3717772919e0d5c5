//! Trapping potentials with isolated zeros and their local homogeneous models.
//!
//! A [`Potential`] is built from a declarative [`PotentialSpec`]. Every
//! supported family knows its zeros in closed form, so the wells are derived
//! exactly instead of being searched for; [`build_potential`] then checks the
//! structural assumptions by deterministic sampling. The growth condition at
//! infinity is the caller's responsibility and is not checked.

mod model;
mod validate;

pub use model::HomogeneousModel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{c, Scalar};

use model::norm;

/// Declarative description of a potential, as it appears in configuration
/// files (tagged by `family`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `coeff · |x − center|^exponent`; the dimension is `center.len()`.
    Power {
        center: Vec<f64>,
        exponent: f64,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// `Σ coeffs[i] · (x_i − center_i)²`; the dimension is `coeffs.len()`.
    Quadratic {
        coeffs: Vec<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// One-dimensional `coeff · Π |x − roots[i]|^powers[i]`.
    Product {
        roots: Vec<f64>,
        powers: Vec<f64>,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// `min_i coeff_i · |x − center_i|^exponent_i`.
    MinComposite { wells: Vec<PowerTerm> },
    /// One-dimensional well with different stiffness on each side of `center`.
    Piecewise {
        #[serde(default)]
        center: f64,
        right: f64,
        left: f64,
        exponent: f64,
    },
    /// `V ≡ 0`. Has no wells; used for the free problem.
    Zero { d: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub center: Vec<f64>,
    pub exponent: f64,
    #[serde(default = "one")]
    pub coeff: f64,
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    /// `|x|^s` in `d` dimensions.
    pub fn power(d: usize, exponent: f64) -> Self {
        Self::Power {
            center: vec![0.0; d],
            exponent,
            coeff: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Power { center, .. } => center.len(),
            Self::Quadratic { coeffs, .. } => coeffs.len(),
            Self::Product { .. } | Self::Piecewise { .. } => 1,
            Self::MinComposite { wells } => wells.first().map_or(0, |w| w.center.len()),
            Self::Zero { d } => *d,
        }
    }
}

/// A zero `x_i` of the potential with `V(x_i + x) ≈ V_i(x)` near it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Well<T> {
    pub location: Vec<T>,
    /// Homogeneity degree `r_i` of the local model.
    pub degree: T,
    pub model: HomogeneousModel<T>,
    /// Exponent `s_i` with `|∇V(x_i + x) − ∇V_i(x)| = O(|x|^{s_i})`, when the
    /// family provides it. Recorded only; never enforced.
    pub remainder_exponent: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr<T> {
    Power { center: Vec<T>, exponent: T, coeff: T },
    Quadratic { coeffs: Vec<T>, center: Vec<T> },
    Product { roots: Vec<T>, powers: Vec<T>, coeff: T },
    MinComposite(Vec<(Vec<T>, T, T)>),
    Piecewise { center: T, right: T, left: T, exponent: T },
    Zero,
}

/// Analytic trapping potential on `R^d` with its declared wells.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    spec: PotentialSpec,
    d: usize,
    expr: Expr<T>,
    wells: Vec<Well<T>>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite_point(name: &str, x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} has non-finite coordinates")))
    }
}

fn cast<T: Scalar>(x: &[f64]) -> Vec<T> {
    x.iter().map(|&v| c(v)).collect()
}

/// Builds the potential, derives its wells and validates the structural
/// assumptions (nonnegativity, zeros at the wells, homogeneity of the local
/// models, local agreement with them) by sampling.
pub fn build_potential<T: Scalar>(spec: &PotentialSpec) -> Result<Potential<T>> {
    let d = spec.dim();
    if d == 0 {
        return Err(Error::Validation("potential has dimension 0".into()));
    }
    let (expr, wells) = match spec {
        PotentialSpec::Power {
            center,
            exponent,
            coeff,
        } => {
            finite_point("center", center)?;
            positive("exponent", *exponent)?;
            positive("coeff", *coeff)?;
            let (e, k) = (c::<T>(*exponent), c::<T>(*coeff));
            let well = Well {
                location: cast(center),
                degree: e,
                model: HomogeneousModel::Radial { coeff: k, exponent: e },
                remainder_exponent: None,
            };
            (
                Expr::Power {
                    center: cast(center),
                    exponent: e,
                    coeff: k,
                },
                vec![well],
            )
        }
        PotentialSpec::Quadratic { coeffs, center } => {
            for &ci in coeffs {
                positive("quadratic coefficient", ci)?;
            }
            let centre = center.clone().unwrap_or_else(|| vec![0.0; d]);
            if centre.len() != d {
                return Err(Error::Validation(format!(
                    "center has {} coordinates but there are {d} coefficients",
                    centre.len()
                )));
            }
            finite_point("center", &centre)?;
            let well = Well {
                location: cast(&centre),
                degree: c(2.0),
                model: HomogeneousModel::Diagonal { coeffs: cast(coeffs) },
                remainder_exponent: None,
            };
            (
                Expr::Quadratic {
                    coeffs: cast(coeffs),
                    center: cast(&centre),
                },
                vec![well],
            )
        }
        PotentialSpec::Product { roots, powers, coeff } => {
            if roots.is_empty() {
                return Err(Error::Validation(
                    "product potential has no roots, so it has no zero".into(),
                ));
            }
            if roots.len() != powers.len() {
                return Err(Error::Validation(format!(
                    "product potential has {} roots but {} powers",
                    roots.len(),
                    powers.len()
                )));
            }
            finite_point("roots", roots)?;
            for &r in powers {
                positive("root power", r)?;
            }
            if !(coeff.is_finite() && *coeff != 0.0) {
                return Err(Error::Validation(format!(
                    "coeff must be finite and nonzero, got {coeff}"
                )));
            }
            for (i, a) in roots.iter().enumerate() {
                if roots[..i].contains(a) {
                    return Err(Error::Validation(format!("repeated root {a}; merge it into one power")));
                }
            }
            // near a_j: V ≈ coeff Π_{i≠j} |a_j − a_i|^{r_i} · |x − a_j|^{r_j}
            let wells = roots
                .iter()
                .zip(powers)
                .enumerate()
                .map(|(j, (&aj, &rj))| {
                    let k: f64 = roots
                        .iter()
                        .zip(powers)
                        .enumerate()
                        .filter(|&(i, _)| i != j)
                        .map(|(_, (&ai, &ri))| (aj - ai).abs().powf(ri))
                        .product::<f64>()
                        * coeff;
                    Well {
                        location: vec![c(aj)],
                        degree: c(rj),
                        model: HomogeneousModel::Radial {
                            coeff: c(k),
                            exponent: c(rj),
                        },
                        remainder_exponent: (roots.len() > 1).then(|| c(rj)),
                    }
                })
                .collect();
            (
                Expr::Product {
                    roots: cast(roots),
                    powers: cast(powers),
                    coeff: c(*coeff),
                },
                wells,
            )
        }
        PotentialSpec::MinComposite { wells: terms } => {
            if terms.is_empty() {
                return Err(Error::Validation("min-composite potential has no wells".into()));
            }
            let mut parts = Vec::with_capacity(terms.len());
            let mut wells = Vec::with_capacity(terms.len());
            for t in terms {
                if t.center.len() != d {
                    return Err(Error::Validation("min-composite wells have mixed dimensions".into()));
                }
                finite_point("center", &t.center)?;
                positive("exponent", t.exponent)?;
                positive("coeff", t.coeff)?;
                let (e, k) = (c::<T>(t.exponent), c::<T>(t.coeff));
                parts.push((cast(&t.center), e, k));
                wells.push(Well {
                    location: cast(&t.center),
                    degree: e,
                    model: HomogeneousModel::Radial { coeff: k, exponent: e },
                    remainder_exponent: None,
                });
            }
            (Expr::MinComposite(parts), wells)
        }
        PotentialSpec::Piecewise {
            center,
            right,
            left,
            exponent,
        } => {
            finite_point("center", &[*center])?;
            positive("right", *right)?;
            positive("left", *left)?;
            positive("exponent", *exponent)?;
            let (r, l, e) = (c::<T>(*right), c::<T>(*left), c::<T>(*exponent));
            let well = Well {
                location: vec![c(*center)],
                degree: e,
                model: HomogeneousModel::Piecewise {
                    right: r,
                    left: l,
                    exponent: e,
                },
                remainder_exponent: None,
            };
            (
                Expr::Piecewise {
                    center: c(*center),
                    right: r,
                    left: l,
                    exponent: e,
                },
                vec![well],
            )
        }
        PotentialSpec::Zero { .. } => (Expr::Zero, Vec::new()),
    };
    let pot = Potential {
        spec: spec.clone(),
        d,
        expr,
        wells,
    };
    if !pot.is_zero() {
        validate::validate(&pot)?;
    }
    Ok(pot)
}

impl<T: Scalar> Potential<T> {
    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn wells(&self) -> &[Well<T>] {
        &self.wells
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.expr, Expr::Zero)
    }

    /// Largest sup-norm of a well location (0 without wells).
    pub fn extent(&self) -> T {
        self.wells
            .iter()
            .flat_map(|w| w.location.iter())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Smallest distance between two distinct wells (infinite with fewer
    /// than two wells).
    pub fn min_separation(&self) -> T {
        let mut best = T::infinity();
        for (i, a) in self.wells.iter().enumerate() {
            for b in &self.wells[..i] {
                best = best.min(distance(&a.location, &b.location));
            }
        }
        best
    }

    pub fn eval(&self, x: &[T]) -> T {
        match &self.expr {
            Expr::Power {
                center,
                exponent,
                coeff,
            } => *coeff * distance(x, center).powf(*exponent),
            Expr::Quadratic { coeffs, center } => coeffs
                .iter()
                .zip(x.iter().zip(center))
                .map(|(&ci, (&xi, &zi))| ci * (xi - zi) * (xi - zi))
                .sum(),
            Expr::Product { roots, powers, coeff } => roots
                .iter()
                .zip(powers)
                .fold(*coeff, |acc, (&a, &r)| acc * (x[0] - a).abs().powf(r)),
            Expr::MinComposite(parts) => parts
                .iter()
                .map(|(z, e, k)| *k * distance(x, z).powf(*e))
                .fold(T::infinity(), T::min),
            Expr::Piecewise {
                center,
                right,
                left,
                exponent,
            } => {
                let s = x[0] - *center;
                let k = if s >= T::zero() { *right } else { *left };
                k * s.abs().powf(*exponent)
            }
            Expr::Zero => T::zero(),
        }
    }

    /// Analytic gradient. At a zero of a power term whose exponent is at
    /// most 1 the gradient is not defined and the term contributes 0.
    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let radial_grad = |z: &[T], e: T, k: T| -> Vec<T> {
            let r = distance(x, z);
            if r == T::zero() {
                return vec![T::zero(); x.len()];
            }
            let f = k * e * r.powf(e - c(2.0));
            x.iter().zip(z).map(|(&xi, &zi)| f * (xi - zi)).collect()
        };
        match &self.expr {
            Expr::Power {
                center,
                exponent,
                coeff,
            } => radial_grad(center, *exponent, *coeff),
            Expr::Quadratic { coeffs, center } => coeffs
                .iter()
                .zip(x.iter().zip(center))
                .map(|(&ci, (&xi, &zi))| c::<T>(2.0) * ci * (xi - zi))
                .collect(),
            Expr::Product { roots, powers, coeff } => {
                let mut g = T::zero();
                for (j, (&aj, &rj)) in roots.iter().zip(powers).enumerate() {
                    let s = x[0] - aj;
                    if s == T::zero() {
                        continue;
                    }
                    let mut term = *coeff * rj * s.abs().powf(rj - T::one()) * s.signum();
                    for (i, (&ai, &ri)) in roots.iter().zip(powers).enumerate() {
                        if i != j {
                            term = term * (x[0] - ai).abs().powf(ri);
                        }
                    }
                    g = g + term;
                }
                vec![g]
            }
            Expr::MinComposite(parts) => {
                let (z, e, k) = parts
                    .iter()
                    .min_by(|a, b| {
                        let va = a.2 * distance(x, &a.0).powf(a.1);
                        let vb = b.2 * distance(x, &b.0).powf(b.1);
                        va.partial_cmp(&vb).unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .expect("nonempty");
                radial_grad(z, *e, *k)
            }
            Expr::Piecewise {
                center,
                right,
                left,
                exponent,
            } => {
                let s = x[0] - *center;
                if s == T::zero() {
                    return vec![T::zero()];
                }
                let k = if s > T::zero() { *right } else { *left };
                vec![k * *exponent * s.abs().powf(*exponent - T::one()) * s.signum()]
            }
            Expr::Zero => vec![T::zero(); x.len()],
        }
    }

    /// `V` at every point of the grid, in the grid's flat order.
    pub fn sample(&self, grid: &Grid<T>) -> Vec<T> {
        let mut x = vec![T::zero(); grid.d()];
        (0..grid.len())
            .map(|k| {
                grid.coords(k, &mut x);
                self.eval(&x)
            })
            .collect()
    }
}

pub(crate) fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    norm(&a.iter().zip(b).map(|(&x, &y)| x - y).collect::<Vec<_>>())
}

/// Output of [`classify_wells`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellClassification<T> {
    /// All zeros `Z`.
    pub locations: Vec<Vec<T>>,
    /// Largest homogeneity degree `r`.
    pub degree: T,
    /// Indices into the wells list of the flattest wells (degree `r`).
    pub flattest: Vec<usize>,
}

impl<T: Scalar> WellClassification<T> {
    pub fn flattest_locations(&self) -> Vec<Vec<T>> {
        self.flattest.iter().map(|&i| self.locations[i].clone()).collect()
    }
}

/// Degree classification of the wells. Degrees within `1e-12` of the
/// maximum count as ties.
pub fn classify_wells<T: Scalar>(pot: &Potential<T>) -> Result<WellClassification<T>> {
    if pot.wells.is_empty() {
        return Err(Error::Domain("the potential has no wells to classify".into()));
    }
    let degree = pot.wells.iter().map(|w| w.degree).fold(T::neg_infinity(), T::max);
    let flattest = pot
        .wells
        .iter()
        .enumerate()
        .filter(|(_, w)| (w.degree - degree).abs() <= c(1e-12))
        .map(|(i, _)| i)
        .collect();
    Ok(WellClassification {
        locations: pot.wells.iter().map(|w| w.location.clone()).collect(),
        degree,
        flattest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn double_well(r_left: f64) -> PotentialSpec {
        PotentialSpec::Product {
            roots: vec![1.0, -1.0],
            powers: vec![2.0, r_left],
            coeff: 1.0,
        }
    }

    #[test]
    fn single_power_well() {
        let pot = build_potential::<f64>(&PotentialSpec::power(1, 2.0)).unwrap();
        assert_eq!(pot.eval(&[3.0]), 9.0);
        let wells = pot.wells();
        assert_eq!(wells.len(), 1);
        assert_eq!(wells[0].location, vec![0.0]);
        assert_eq!(wells[0].degree, 2.0);
        let k = classify_wells(&pot).unwrap();
        assert_eq!((k.degree, k.flattest.clone()), (2.0, vec![0]));
    }

    #[test]
    fn product_wells_are_derived_from_the_expansion() {
        let pot = build_potential::<f64>(&double_well(4.0)).unwrap();
        let w = pot.wells();
        assert_eq!(w[0].location, vec![1.0]);
        assert_eq!(
            w[0].model,
            HomogeneousModel::Radial {
                coeff: 16.0,
                exponent: 2.0
            }
        );
        assert_eq!(w[1].location, vec![-1.0]);
        assert_eq!(
            w[1].model,
            HomogeneousModel::Radial {
                coeff: 4.0,
                exponent: 4.0
            }
        );
        assert_eq!(pot.eval(&[1.0]), 0.0);
        assert_eq!(pot.eval(&[-1.0]), 0.0);
        let k = classify_wells(&pot).unwrap();
        assert_eq!(k.degree, 4.0);
        assert_eq!(k.flattest_locations(), vec![vec![-1.0]]);

        let sym = build_potential::<f64>(&double_well(2.0)).unwrap();
        assert_eq!(classify_wells(&sym).unwrap().flattest, vec![0, 1]);
    }

    #[test]
    fn anisotropic_quadratic() {
        let spec = PotentialSpec::Quadratic {
            coeffs: vec![1.0, 4.0],
            center: None,
        };
        let pot = build_potential::<f64>(&spec).unwrap();
        assert_eq!(pot.wells()[0].location, vec![0.0, 0.0]);
        assert_eq!(pot.wells()[0].model.eval(&[1.0, 1.0]), 5.0);
        assert_eq!(pot.gradient(&[1.0, 1.0]), vec![2.0, 8.0]);
    }

    #[test]
    fn gradients_match_central_differences() {
        let specs = [
            double_well(4.0),
            PotentialSpec::Piecewise {
                center: 0.3,
                right: 1.0,
                left: 4.0,
                exponent: 2.0,
            },
            PotentialSpec::MinComposite {
                wells: vec![
                    PowerTerm {
                        center: vec![-2.0, 0.0],
                        exponent: 2.0,
                        coeff: 1.0,
                    },
                    PowerTerm {
                        center: vec![2.0, 0.5],
                        exponent: 4.0,
                        coeff: 3.0,
                    },
                ],
            },
            PotentialSpec::power(3, 3.0),
        ];
        for spec in &specs {
            let pot = build_potential::<f64>(spec).unwrap();
            let d = pot.d();
            for s in 0..20 {
                let x: Vec<f64> = (0..d).map(|i| -2.3 + 0.29 * s as f64 + 0.17 * i as f64).collect();
                let g = pot.gradient(&x);
                for i in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += 1e-6;
                    xm[i] -= 1e-6;
                    let fd = (pot.eval(&xp) - pot.eval(&xm)) / 2e-6;
                    assert_relative_eq!(g[i], fd, epsilon = 1e-5, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let negative = PotentialSpec::Product {
            roots: vec![0.0],
            powers: vec![2.0],
            coeff: -1.0,
        };
        let err = build_potential::<f64>(&negative).unwrap_err();
        assert!(
            matches!(err, Error::Validation(ref m) if m.contains("negative")),
            "{err}"
        );
        let no_zero = PotentialSpec::Product {
            roots: vec![],
            powers: vec![],
            coeff: 1.0,
        };
        assert!(matches!(build_potential::<f64>(&no_zero), Err(Error::Validation(_))));
        let bad_quadratic = PotentialSpec::Quadratic {
            coeffs: vec![1.0, -4.0],
            center: None,
        };
        assert!(matches!(
            build_potential::<f64>(&bad_quadratic),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn overlapping_composite_fails_the_local_model_check() {
        // the second branch undercuts the first right next to its centre
        let spec = PotentialSpec::MinComposite {
            wells: vec![
                PowerTerm {
                    center: vec![0.0],
                    exponent: 4.0,
                    coeff: 1.0,
                },
                PowerTerm {
                    center: vec![0.001],
                    exponent: 2.0,
                    coeff: 1.0,
                },
            ],
        };
        let err = build_potential::<f64>(&spec).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn zero_potential_has_no_wells() {
        let pot = build_potential::<f64>(&PotentialSpec::Zero { d: 2 }).unwrap();
        assert!(pot.is_zero() && pot.wells().is_empty());
        assert!(classify_wells(&pot).is_err());
    }

    #[test]
    fn spec_deserializes_from_tagged_form() {
        let spec: PotentialSpec =
            serde_json::from_str(r#"{"family":"product","roots":[1,-1],"powers":[2,4]}"#).unwrap();
        assert_eq!(spec, double_well(4.0));
        let bad = serde_json::from_str::<PotentialSpec>(r#"{"family":"power","center":[0],"exponent":2,"typo":1}"#);
        assert!(bad.is_err());
    }
}
