//! Closed-form large-`ρ` predictions: the free problem `V ≡ 0`, its
//! minimizer, the blow-up scale `ε(ρ)`, and the two-term energy expansion.
//!
//! With `k = 4 − d(p−1)` and `s = ρ/√a*`:
//!
//! ```text
//! energy_scale(ρ) = s^{4(p−1)/k}        ẽ(ρ) = −λ · energy_scale(ρ)
//! ε(ρ)            = s^{−2(p−1)/k}       ε² · energy_scale = 1
//! predicted_e(ρ)  = ẽ(ρ) + (λ̄₀/a*) ε^r
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::{c, Scalar};
use crate::soliton::{check_subcritical, SolitonConstants, SolitonProfile};

fn check<T: Scalar>(k: &SolitonConstants<T>, rho: T) -> Result<T> {
    check_subcritical(k.d, k.p)?;
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be positive and finite, got {rho}")));
    }
    Ok(rho / k.a_star.sqrt())
}

/// `4 − d(p−1)`, positive in the subcritical range.
fn gap<T: Scalar>(k: &SolitonConstants<T>) -> T {
    c::<T>(4.0) - T::from_usize_lossy(k.d) * (k.p - T::one())
}

/// `(ρ/√a*)^{4(p−1)/(4−d(p−1))}`, the size of `|ẽ(ρ)|/λ`.
pub fn energy_scale<T: Scalar>(k: &SolitonConstants<T>, rho: T) -> Result<T> {
    let s = check(k, rho)?;
    Ok(s.powf(c::<T>(4.0) * (k.p - T::one()) / gap(k)))
}

/// `ẽ(ρ) = −λ (ρ/√a*)^{4(p−1)/(4−d(p−1))}`.
pub fn tilde_e<T: Scalar>(k: &SolitonConstants<T>, rho: T) -> Result<T> {
    Ok(-k.lambda * energy_scale(k, rho)?)
}

/// `dẽ/dρ = (4(p−1)/(4−d(p−1))) ẽ(ρ)/ρ`.
pub fn tilde_e_derivative<T: Scalar>(k: &SolitonConstants<T>, rho: T) -> Result<T> {
    Ok(c::<T>(4.0) * (k.p - T::one()) / gap(k) * tilde_e(k, rho)? / rho)
}

/// `ε(ρ) = (ρ/√a*)^{−2(p−1)/(4−d(p−1))}`.
pub fn epsilon<T: Scalar>(k: &SolitonConstants<T>, rho: T) -> Result<T> {
    let s = check(k, rho)?;
    Ok(s.powf(-c::<T>(2.0) * (k.p - T::one()) / gap(k)))
}

/// `μ̃(ρ) = −ε(ρ)^{−2}`, the multiplier of the free minimizer.
pub fn tilde_mu<T: Scalar>(k: &SolitonConstants<T>, rho: T) -> Result<T> {
    let e = epsilon(k, rho)?;
    Ok(-T::one() / (e * e))
}

/// `ẽ(ρ) + (λ̄₀/a*) ε(ρ)^r`.
pub fn predicted_e<T: Scalar>(k: &SolitonConstants<T>, rho: T, lambda_bar_0: T, r: T) -> Result<T> {
    if !(lambda_bar_0 >= T::zero()) || !(r > T::zero()) {
        return Err(Error::Domain(format!(
            "need lambda_bar_0 >= 0 and r > 0, got {lambda_bar_0} and {r}"
        )));
    }
    Ok(tilde_e(k, rho)? + lambda_bar_0 / k.a_star * epsilon(k, rho)?.powf(r))
}

/// `(1/√a*) α^{d/2} w(α|x − center|)` with `α = 1/ε(ρ)`, sampled on `grid`
/// with zero boundary values.
///
/// Fails with a resolution error when `h > ε/8`.
pub fn tilde_minimizer<T: Scalar>(
    k: &SolitonConstants<T>,
    prof: &SolitonProfile<T>,
    rho: T,
    center: &[T],
    grid: &Grid<T>,
) -> Result<Field<T>> {
    if grid.d() != k.d || center.len() != k.d || prof.d() != k.d {
        return Err(Error::Domain(
            "dimension mismatch between grid, centre and constants".into(),
        ));
    }
    let eps = epsilon(k, rho)?;
    crate::groundstate::check_resolution(grid, eps)?;
    let alpha = T::one() / eps;
    let amp = alpha.powf(T::from_usize_lossy(k.d) / c(2.0)) / k.a_star.sqrt();
    let mut u = Field::from_fn(grid.clone(), |x| {
        let r = x.iter().zip(center).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
        amp * prof.value(alpha * r)
    });
    u.zero_boundary();
    Ok(u)
}

/// The closed-form quantities at one `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport<T> {
    pub constants: SolitonConstants<T>,
    pub rho: T,
    pub tilde_e: T,
    pub epsilon: T,
    pub predicted_e: T,
}

pub fn report<T: Scalar>(k: &SolitonConstants<T>, rho: T, lambda_bar_0: T, r: T) -> Result<AsymptoticsReport<T>> {
    Ok(AsymptoticsReport {
        constants: *k,
        rho,
        tilde_e: tilde_e(k, rho)?,
        epsilon: epsilon(k, rho)?,
        predicted_e: predicted_e(k, rho, lambda_bar_0, r)?,
    })
}
