//! The positive radial solution `w` of `Δw − w + w^p = 0` and every constant
//! derived from it.
//!
//! The profile is computed by shooting on `w(0)` with a classical RK4
//! integrator on a uniform radial mesh. A single shot cannot follow the
//! decaying branch much beyond `r ≈ 12` in double precision because the
//! growing mode `e^{r}` amplifies the round-off in `w(0)`, so the solver
//! restarts the bisection from the last trusted state (fixed value,
//! bisection on the slope) until the whole mesh is covered.

mod constants;
mod identities;
mod profile;
mod shooting;

pub use constants::{lambda_constant, soliton_constants, sphere_area, SolitonConstants};
pub use identities::{gn_ratio, linearized_apply, pohozaev_residuals, PohozaevResiduals};
pub use profile::SolitonProfile;
pub use shooting::{solve_soliton, solve_soliton_with, ShootingOptions};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Checks `1 < p` and, for `d >= 3`, `p < (d+2)/(d-2)`.
pub fn check_exponent<T: Scalar>(d: usize, p: T) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if !(p > T::one()) || !p.is_finite() {
        return Err(Error::Domain(format!("exponent p = {p} must satisfy p > 1")));
    }
    if d >= 3 {
        let crit = T::from_usize_lossy(d + 2) / T::from_usize_lossy(d - 2);
        if p >= crit {
            return Err(Error::Domain(format!(
                "exponent p = {p} is not below the Sobolev exponent {crit} for d = {d}"
            )));
        }
    }
    Ok(())
}

/// Checks the mass-subcritical range `1 < p < 1 + 4/d` needed by every
/// minimization routine.
pub fn check_subcritical<T: Scalar>(d: usize, p: T) -> Result<()> {
    check_exponent(d, p)?;
    let bound = T::one() + T::lit(4.0) / T::from_usize_lossy(d);
    if p >= bound {
        return Err(Error::Domain(format!(
            "exponent p = {p} violates the subcriticality bound p < 1 + 4/d = {bound}"
        )));
    }
    Ok(())
}
