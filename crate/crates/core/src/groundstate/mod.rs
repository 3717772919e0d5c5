//! Discrete energy `E_ρ` on a uniform grid and its minimization over the
//! unit `L²` sphere.
//!
//! The discrete energy uses forward differences across grid edges for the
//! kinetic term and the trapezoid rule for the rest, so its gradient with
//! respect to the weighted inner product is exactly
//! `−Δ_h u + V u − ρ^{p−1}|u|^{p−1}u` with the 3-point Laplacian. The
//! minimizer is a nonlinear conjugate-gradient method on the sphere,
//! preconditioned by `−Δ_h + V + σ` (see [`minimize`]).

mod flow;
mod init;
mod linear;
mod sweep;

pub use flow::Observer;
pub use init::{initial_field, transfer, Init};
pub use sweep::{free_reference, sweep, GridSpec, SweepMode, SweepOptions};

use std::sync::OnceLock;

use serde::Serialize;

use crate::asymptotics;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::potentials::{build_potential, Potential, PotentialSpec};
use crate::qfunctional::{select_concentration, Selection};
use crate::scalar::{c, Scalar};
use crate::soliton::{check_subcritical, soliton_constants, solve_soliton, SolitonConstants, SolitonProfile};

/// ODE residual requested from the soliton solver when a model is built.
pub const SOLITON_TOL: f64 = 1e-8;
/// A grid resolves the blow-up scale when `h ≤ ε / RESOLUTION_FACTOR`.
pub const RESOLUTION_FACTOR: f64 = 8.0;
/// Spacing chosen by [`auto_grid`] is `ε / AUTO_POINTS_PER_EPSILON`.
pub const AUTO_POINTS_PER_EPSILON: f64 = 16.0;
/// Largest total point count [`auto_grid`] will produce.
pub const AUTO_MAX_POINTS: usize = 4_000_000;

/// Potential, exponent and the soliton data every large-`ρ` routine needs.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    potential: Potential<T>,
    p: T,
    profile: SolitonProfile<T>,
    constants: SolitonConstants<T>,
    selection: OnceLock<Option<Selection<T>>>,
}

impl<T: Scalar> Model<T> {
    /// Solves the soliton for `(d, p)`; fails outside `1 < p < 1 + 4/d`.
    pub fn new(potential: Potential<T>, p: T) -> Result<Self> {
        check_subcritical(potential.d(), p)?;
        let profile = solve_soliton(potential.d(), p, c(SOLITON_TOL))?;
        Self::with_profile(potential, p, profile)
    }

    /// Reuses an already computed profile.
    pub fn with_profile(potential: Potential<T>, p: T, profile: SolitonProfile<T>) -> Result<Self> {
        check_subcritical(potential.d(), p)?;
        if profile.d() != potential.d() || profile.p() != p {
            return Err(Error::Domain(format!(
                "profile is for (d, p) = ({}, {}) but the model needs ({}, {p})",
                profile.d(),
                profile.p(),
                potential.d()
            )));
        }
        let constants = soliton_constants(&profile)?;
        Ok(Self {
            potential,
            p,
            profile,
            constants,
            selection: OnceLock::new(),
        })
    }

    /// The same exponent and soliton with `V ≡ 0`.
    pub fn free(&self) -> Self {
        let potential = build_potential(&PotentialSpec::Zero { d: self.d() }).expect("zero potential is valid");
        Self {
            potential,
            p: self.p,
            profile: self.profile.clone(),
            constants: self.constants,
            selection: OnceLock::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.potential.d()
    }
    pub fn p(&self) -> T {
        self.p
    }
    pub fn potential(&self) -> &Potential<T> {
        &self.potential
    }
    pub fn profile(&self) -> &SolitonProfile<T> {
        &self.profile
    }
    pub fn constants(&self) -> &SolitonConstants<T> {
        &self.constants
    }

    /// Predicted concentration data, computed once; `None` for `V ≡ 0`.
    pub fn selection(&self) -> Option<&Selection<T>> {
        self.selection
            .get_or_init(|| {
                if self.potential.is_zero() {
                    None
                } else {
                    select_concentration(&self.potential, &self.profile).ok()
                }
            })
            .as_ref()
    }

    /// `x₀ + ε y₀` for the first selected well (the origin for `V ≡ 0`).
    pub fn predicted_center(&self, rho: T) -> Result<Vec<T>> {
        let Some(sel) = self.selection() else {
            return Ok(vec![T::zero(); self.d()]);
        };
        let q = sel.primary();
        if rho == T::zero() {
            return Ok(sel.x0().to_vec());
        }
        let eps = asymptotics::epsilon(&self.constants, rho)?;
        Ok(sel.x0().iter().zip(&q.y0).map(|(&x, &y)| x + eps * y).collect())
    }

    /// `ε(ρ)`, or infinity at `ρ = 0`.
    pub fn epsilon(&self, rho: T) -> Result<T> {
        if rho == T::zero() {
            Ok(T::infinity())
        } else {
            asymptotics::epsilon(&self.constants, rho)
        }
    }
}

/// Errors with the required spacing when `h > ε/8`.
pub fn check_resolution<T: Scalar>(grid: &Grid<T>, eps: T) -> Result<()> {
    let required = eps / c(RESOLUTION_FACTOR);
    if grid.h() > required {
        return Err(Error::Resolution {
            h: grid.h().as_f64(),
            required: required.as_f64(),
        });
    }
    Ok(())
}

/// Grid for one `ρ`: spacing `ε/16`, half-width
/// `max(4(extent + 1), extent + kε)` (`kε` for `V ≡ 0`), where `extent` is
/// the largest well coordinate and `k` is 30, 12, 8 for `d` = 1, 2, 3 (the
/// reach of the rescaled reference grid). At `ρ = 0` the spacing is 0.02 on
/// a box of half-width at least 8.
pub fn auto_grid<T: Scalar>(model: &Model<T>, rho: T) -> Result<Grid<T>> {
    let d = model.d();
    let extent = model.potential().extent();
    let (half, h) = if rho == T::zero() {
        ((c::<T>(4.0) * (extent + T::one())).max(c(8.0)), c::<T>(0.02))
    } else {
        let eps = model.epsilon(rho)?;
        let reach = c::<T>(match d {
            1 => 30.0,
            2 => 12.0,
            _ => 8.0,
        }) * eps;
        let half = if model.potential().is_zero() {
            reach
        } else {
            (c::<T>(4.0) * (extent + T::one())).max(extent + reach)
        };
        (half, eps / c(AUTO_POINTS_PER_EPSILON))
    };
    let grid = Grid::with_max_spacing(d, half, h)?;
    if grid.len() > AUTO_MAX_POINTS {
        return Err(Error::Domain(format!(
            "automatic grid would need {} points (n = {} per axis); choose the grid explicitly",
            grid.len(),
            grid.n()
        )));
    }
    Ok(grid)
}

/// Stopping and safety knobs of [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions<T> {
    /// Bound on the sup-norm of the projected gradient.
    pub tol: T,
    /// Bound on `|E_k − E_{k−window}| / max(1, |E_k|)`.
    pub energy_tol: T,
    pub window: usize,
    pub max_iter: usize,
    /// Enforce `h ≤ ε(ρ)/8`.
    pub check_resolution: bool,
    pub record_history: bool,
}

impl<T: Scalar> Default for MinimizeOptions<T> {
    fn default() -> Self {
        Self {
            tol: c(1e-8),
            energy_tol: c(1e-12),
            window: 10,
            max_iter: 20_000,
            check_resolution: true,
            record_history: false,
        }
    }
}

/// A converged constrained minimizer.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizeResult<T> {
    pub u: Field<T>,
    pub rho: T,
    pub energy: T,
    pub mu: T,
    pub grad_residual: T,
    pub iterations: usize,
    pub max_point: Vec<T>,
    /// Energy after every accepted step (only with `record_history`).
    pub energy_history: Vec<T>,
}

/// The three integrals making up the discrete energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts<T> {
    /// `∫|∇u|²`.
    pub kinetic: T,
    /// `∫V u²`.
    pub potential: T,
    /// `∫|u|^{p+1}`.
    pub interaction: T,
}

impl<T: Scalar> EnergyParts<T> {
    pub fn energy(&self, rho: T, p: T) -> T {
        c::<T>(0.5) * (self.kinetic + self.potential) - coupling(rho, p) / (p + T::one()) * self.interaction
    }
}

/// `ρ^{p−1}`, with `0^{p−1} = 0`.
pub(crate) fn coupling<T: Scalar>(rho: T, p: T) -> T {
    if rho == T::zero() {
        T::zero()
    } else {
        rho.powf(p - T::one())
    }
}

pub fn energy_parts<T: Scalar>(u: &Field<T>, pot: &Potential<T>, p: T) -> EnergyParts<T> {
    let v = pot.sample(u.grid());
    let g = u.grid();
    let potential = u
        .values()
        .iter()
        .zip(&v)
        .enumerate()
        .map(|(k, (&x, &vk))| g.weight(k) * vk * x * x)
        .sum();
    EnergyParts {
        kinetic: u.grad_sq(),
        potential,
        interaction: u.lp_pow(p + T::one()),
    }
}

/// `E_ρ(u)` of a unit-norm field. Fails when `|‖u‖₂² − 1| > 1e−8`.
pub fn energy<T: Scalar>(u: &Field<T>, model: &Model<T>, rho: T) -> Result<T> {
    check_field(u, model)?;
    let mass = u.norm_sq();
    if !((mass - T::one()).abs() <= c(1e-8)) {
        return Err(Error::Domain(format!(
            "energy needs a unit-mass field, got ‖u‖² = {mass}"
        )));
    }
    Ok(energy_parts(u, model.potential(), model.p()).energy(rho, model.p()))
}

fn check_field<T: Scalar>(u: &Field<T>, model: &Model<T>) -> Result<()> {
    if u.grid().d() != model.d() {
        return Err(Error::Domain(format!(
            "field is {}-dimensional but the model is {}-dimensional",
            u.grid().d(),
            model.d()
        )));
    }
    Ok(())
}

/// `μ = 2e − ((p−1)/(p+1)) ρ^{p−1} ∫|u|^{p+1}`.
pub fn chemical_potential<T: Scalar>(result: &MinimizeResult<T>, model: &Model<T>, rho: T) -> T {
    let p = model.p();
    let parts = energy_parts(&result.u, model.potential(), p);
    c::<T>(2.0) * parts.energy(rho, p) - (p - T::one()) / (p + T::one()) * coupling(rho, p) * parts.interaction
}

/// Sup-norm over interior points of `−Δ_h u + V u − μ u − ρ^{p−1}|u|^{p−1}u`.
pub fn eigen_residual<T: Scalar>(u: &Field<T>, model: &Model<T>, rho: T, mu: T) -> T {
    let g = u.grid();
    let v = model.potential().sample(g);
    let lap = u.laplacian();
    let k = coupling(rho, model.p());
    let pm1 = model.p() - T::one();
    u.values()
        .iter()
        .enumerate()
        .filter(|&(i, _)| !g.is_boundary(i))
        .map(|(i, &x)| (-lap.values()[i] + (v[i] - mu) * x - k * x.abs().powf(pm1) * x).abs())
        .fold(T::zero(), T::max)
}

/// Constrained minimizer of `E_ρ` on `grid` from the given start.
///
/// Each step solves `(−Δ_h + V + |μ| + 1) z = g` for the projected
/// gradient `g = Hu − μu`, adds the exact Newton step for `g` within the
/// span of the translation modes `∂_i u` (whose curvature is `O(ε^{r+2})`
/// relative to the preconditioner), builds a Polak–Ribière direction in the
/// tangent space, and moves along the great circle through `u` in that
/// direction. The step comes from the second variation along the circle
/// and is halved until the energy decreases. The field is replaced by `|u|`
/// after every step, which never raises the discrete energy.
///
/// Stops when the projected gradient is below `tol` in sup-norm and the
/// relative energy change over the last `window` steps is below
/// `energy_tol`.
pub fn minimize<T: Scalar>(
    model: &Model<T>,
    grid: &Grid<T>,
    rho: T,
    init: &Init<T>,
    opts: &MinimizeOptions<T>,
) -> Result<MinimizeResult<T>> {
    minimize_observed(model, grid, rho, init, opts, None)
}

/// [`minimize`] calling `observer` with every accepted iterate.
pub fn minimize_observed<T: Scalar>(
    model: &Model<T>,
    grid: &Grid<T>,
    rho: T,
    init: &Init<T>,
    opts: &MinimizeOptions<T>,
    observer: Option<&mut Observer<'_, T>>,
) -> Result<MinimizeResult<T>> {
    if grid.d() != model.d() {
        return Err(Error::Domain(format!(
            "grid is {}-dimensional but the model is {}-dimensional",
            grid.d(),
            model.d()
        )));
    }
    if !(rho >= T::zero()) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be nonnegative and finite, got {rho}")));
    }
    if opts.check_resolution && rho > T::zero() {
        check_resolution(grid, model.epsilon(rho)?)?;
    }
    let u0 = initial_field(model, grid, rho, init)?;
    flow::run(model, grid, rho, u0, opts, observer)
}

#[cfg(test)]
mod tests;
