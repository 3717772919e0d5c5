use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::scalar::{c, Scalar};

use super::constants::{kinetic_ratio, soliton_constants_unchecked};
use super::profile::SolitonProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PohozaevResiduals<T> {
    /// Relative defect of `(d−2)∫|∇w|² + d∫w² = (2d/(p+1))∫w^{p+1}`.
    pub pohozaev: T,
    /// Largest relative defect of the identity chain tying `∫|∇w|²`,
    /// `∫w^{p+1}` and `∫w²` together.
    pub chain: T,
}

/// Relative defects of the two integral identities the soliton satisfies.
/// Any profile is accepted; only the true soliton makes both vanish.
pub fn pohozaev_residuals<T: Scalar>(prof: &SolitonProfile<T>) -> PohozaevResiduals<T> {
    let k = soliton_constants_unchecked(prof);
    let dd = T::from_usize_lossy(k.d);
    let two = c::<T>(2.0);
    let lhs = (dd - two) * k.grad_sq + dd * k.a_star;
    let rhs = two * dd / (k.p + T::one()) * k.mass_p1;
    let pohozaev = (lhs - rhs).abs() / rhs.abs();
    let via_p1 = dd / two * (k.p - T::one()) / (k.p + T::one()) * k.mass_p1;
    let via_mass = kinetic_ratio(k.d, k.p) * k.a_star;
    let chain = ((k.grad_sq - via_p1).abs() / k.grad_sq).max((k.grad_sq - via_mass).abs() / k.grad_sq);
    PohozaevResiduals { pohozaev, chain }
}

/// Gagliardo–Nirenberg quotient
/// `‖∇u‖₂^{(d/2)(p−1)} ‖u‖₂^{p+1−(d/2)(p−1)} / ‖u‖_{p+1}^{p+1}` of a grid field.
///
/// The discrete norms scale exactly like the continuous ones when the grid
/// is dilated together with the field, so the quotient is invariant under
/// `u ↦ c u(σ·)` up to round-off.
pub fn gn_ratio<T: Scalar>(u: &Field<T>, p: T) -> Result<T> {
    let mass = u.norm_sq();
    if !(mass > T::zero()) {
        return Err(Error::Domain("Gagliardo-Nirenberg quotient of the zero field".into()));
    }
    let d = T::from_usize_lossy(u.grid().d());
    let two = c::<T>(2.0);
    let grad = u.grad_sq();
    let lp = u.lp_pow(p + T::one());
    let grad_exp = d * (p - T::one()) / two;
    let mass_exp = p + T::one() - grad_exp;
    Ok(grad.sqrt().powf(grad_exp) * mass.sqrt().powf(mass_exp) / lp)
}

/// Half-width of the eighth-order Laplacian stencil used by
/// [`linearized_apply`].
pub const LINEARIZED_STENCIL_RADIUS: usize = 4;

const D2_COEFFS: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

/// `𝓛v = −Δv + (1 − p w^{p−1}) v`, the linearization of `−Δw + w − w^p` at
/// the soliton centred at the origin.
///
/// The Laplacian uses an eighth-order central stencil, so the result is only
/// defined on points at least four cells away from the boundary; the outer
/// band is set to zero.
pub fn linearized_apply<T: Scalar>(prof: &SolitonProfile<T>, v: &Field<T>) -> Result<Field<T>> {
    let g = v.grid();
    if g.d() != prof.d() {
        return Err(Error::Domain(format!(
            "field dimension {} does not match the profile dimension {}",
            g.d(),
            prof.d()
        )));
    }
    if g.half_width() > prof.r_max() {
        return Err(Error::Domain(format!(
            "grid half-width {} exceeds the soliton support r_max = {}",
            g.half_width(),
            prof.r_max()
        )));
    }
    let n = g.n();
    let rad = LINEARIZED_STENCIL_RADIUS;
    if n <= 2 * rad + 1 {
        return Err(Error::Domain(
            "grid too small for the linearized operator stencil".into(),
        ));
    }
    let coeffs: Vec<T> = D2_COEFFS.iter().map(|&x| c(x)).collect();
    let inv_h2 = T::one() / (g.h() * g.h());
    let p = prof.p();
    let vals = v.values();
    let mut out = vec![T::zero(); vals.len()];
    let mut idx = vec![0usize; g.d()];
    let mut x = vec![T::zero(); g.d()];
    for k in 0..vals.len() {
        g.multi_index(k, &mut idx);
        if idx.iter().any(|&i| i < rad || i + rad >= n) {
            continue;
        }
        let mut lap = T::zero();
        for axis in 0..g.d() {
            let s = g.stride(axis);
            let mut acc = coeffs[0] * vals[k];
            for (m, &cm) in coeffs.iter().enumerate().skip(1) {
                acc = acc + cm * (vals[k - m * s] + vals[k + m * s]);
            }
            lap = lap + acc;
        }
        lap = lap * inv_h2;
        g.coords(k, &mut x);
        let r = x.iter().map(|&xi| xi * xi).sum::<T>().sqrt();
        let w = prof.value(r);
        out[k] = -lap + (T::one() - p * w.powf(p - T::one())) * vals[k];
    }
    Field::from_values(g.clone(), out)
}
