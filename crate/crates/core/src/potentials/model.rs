use serde::Serialize;

use crate::scalar::{c, Scalar};

/// Homogeneous function `V_i` describing a potential near one of its zeros,
/// in coordinates centred at the zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomogeneousModel<T> {
    /// `coeff · |x|^exponent`.
    Radial { coeff: T, exponent: T },
    /// `Σ coeffs[i] · x_i²`.
    Diagonal { coeffs: Vec<T> },
    /// One-dimensional `right · x^exponent` for `x > 0` and
    /// `left · |x|^exponent` for `x < 0`.
    Piecewise { right: T, left: T, exponent: T },
}

impl<T: Scalar> HomogeneousModel<T> {
    pub fn degree(&self) -> T {
        match self {
            Self::Radial { exponent, .. } | Self::Piecewise { exponent, .. } => *exponent,
            Self::Diagonal { .. } => c(2.0),
        }
    }

    pub fn eval(&self, x: &[T]) -> T {
        match self {
            Self::Radial { coeff, exponent } => *coeff * norm(x).powf(*exponent),
            Self::Diagonal { coeffs } => coeffs.iter().zip(x).map(|(&ci, &xi)| ci * xi * xi).sum(),
            Self::Piecewise { right, left, exponent } => {
                let s = if x[0] >= T::zero() { *right } else { *left };
                s * x[0].abs().powf(*exponent)
            }
        }
    }

    /// The model multiplied by `s > 0`.
    pub fn scaled(&self, s: T) -> Self {
        match self {
            Self::Radial { coeff, exponent } => Self::Radial {
                coeff: *coeff * s,
                exponent: *exponent,
            },
            Self::Diagonal { coeffs } => Self::Diagonal {
                coeffs: coeffs.iter().map(|&ci| ci * s).collect(),
            },
            Self::Piecewise { right, left, exponent } => Self::Piecewise {
                right: *right * s,
                left: *left * s,
                exponent: *exponent,
            },
        }
    }

    /// True when `V_i(-x) = V_i(x)`.
    pub fn is_even(&self) -> bool {
        !matches!(self, Self::Piecewise { right, left, .. } if right != left)
    }
}

pub(crate) fn norm<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_and_values() {
        let r = HomogeneousModel::Radial {
            coeff: 16.0,
            exponent: 2.0,
        };
        assert_eq!(r.degree(), 2.0);
        assert_eq!(r.eval(&[0.5]), 4.0);
        let q = HomogeneousModel::Diagonal { coeffs: vec![1.0, 4.0] };
        assert_eq!(q.eval(&[1.0, 1.0]), 5.0);
        let pw = HomogeneousModel::Piecewise {
            right: 1.0,
            left: 4.0,
            exponent: 2.0,
        };
        assert_eq!(pw.eval(&[-1.0]), 4.0);
        assert_eq!(pw.eval(&[2.0]), 4.0);
        assert!(!pw.is_even() && q.is_even());
        assert_eq!(pw.scaled(2.0).eval(&[-1.0]), 8.0);
    }
}
