use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::{c, Scalar};

use super::{MinimizeResult, Model};

/// Starting point of a minimization.
#[derive(Debug, Clone)]
pub enum Init<T> {
    /// A given field, interpolated when it lives on another grid.
    Field(Field<T>),
    /// The free minimizer centred at the predicted point `x₀ + ε y₀`
    /// (a unit Gaussian there at `ρ = 0`).
    Predicted,
    /// The free minimizer centred at `center`.
    Tilde {
        center: Vec<T>,
    },
    Gaussian {
        center: Vec<T>,
        width: T,
    },
    /// One to three Gaussian bumps with seeded random centres, widths and
    /// amplitudes.
    Random {
        seed: u64,
    },
}

/// Unit-mass, nonnegative starting field with zero boundary values.
pub fn initial_field<T: Scalar>(model: &Model<T>, grid: &Grid<T>, rho: T, init: &Init<T>) -> Result<Field<T>> {
    let raw = match init {
        Init::Field(f) => {
            if f.grid().same_shape(grid) {
                f.clone()
            } else if f.grid().d() != grid.d() {
                return Err(Error::Domain("initial field has the wrong dimension".into()));
            } else {
                let mut x = vec![T::zero(); grid.d()];
                Field::from_fn(grid.clone(), |y| {
                    x.copy_from_slice(y);
                    f.interpolate(&x)
                })
            }
        }
        Init::Predicted => {
            let center = model.predicted_center(rho)?;
            if rho == T::zero() {
                gaussian(grid, &center, T::one())
            } else {
                tilde_on_grid(model, rho, &center, grid)?
            }
        }
        Init::Tilde { center } => tilde_on_grid(model, rho, center, grid)?,
        Init::Gaussian { center, width } => gaussian(grid, center, *width),
        Init::Random { seed } => random_bumps(model, grid, rho, *seed)?,
    };
    finish(raw)
}

fn finish<T: Scalar>(mut u: Field<T>) -> Result<Field<T>> {
    for v in u.values_mut() {
        *v = v.abs();
    }
    u.zero_boundary();
    u.normalize()
        .map_err(|_| Error::Domain("initial field vanishes on the grid interior".into()))?;
    Ok(u)
}

fn gaussian<T: Scalar>(grid: &Grid<T>, center: &[T], width: T) -> Field<T> {
    Field::from_fn(grid.clone(), |x| {
        let r2: T = x.iter().zip(center).map(|(&a, &b)| (a - b) * (a - b)).sum();
        (-r2 / (c::<T>(2.0) * width * width)).exp()
    })
}

fn tilde_on_grid<T: Scalar>(model: &Model<T>, rho: T, center: &[T], grid: &Grid<T>) -> Result<Field<T>> {
    if center.len() != grid.d() {
        return Err(Error::Domain("centre has the wrong dimension".into()));
    }
    let alpha = T::one() / model.epsilon(rho)?;
    let prof = model.profile();
    Ok(Field::from_fn(grid.clone(), |x| {
        let r: T = x.iter().zip(center).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
        prof.value(alpha * r)
    }))
}

fn random_bumps<T: Scalar>(model: &Model<T>, grid: &Grid<T>, rho: T, seed: u64) -> Result<Field<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = grid.half_width().as_f64();
    let eps = model.epsilon(rho)?.as_f64();
    let (wmin, wmax) = if eps.is_finite() { (eps, 4.0 * eps) } else { (0.5, 2.0) };
    let wmin = wmin.max(4.0 * grid.h().as_f64());
    let wmax = wmax.max(wmin * 1.5);
    let reach = if model.potential().is_zero() {
        (0.5 * half).min(if eps.is_finite() { 10.0 * eps } else { 2.0 })
    } else {
        (model.potential().extent().as_f64() + 1.0).min(0.6 * half)
    };
    let count = rng.gen_range(1..=3usize);
    let bumps: Vec<(Vec<f64>, f64, f64)> = (0..count)
        .map(|_| {
            let centre: Vec<f64> = (0..grid.d()).map(|_| rng.gen_range(-reach..reach)).collect();
            (centre, rng.gen_range(wmin..wmax), rng.gen_range(0.2..1.0))
        })
        .collect();
    Ok(Field::from_fn(grid.clone(), |x| {
        let v: f64 = bumps
            .iter()
            .map(|(ctr, width, amp)| {
                let r2: f64 = x.iter().zip(ctr).map(|(&a, &b)| (a.as_f64() - b).powi(2)).sum();
                amp * (-r2 / (2.0 * width * width)).exp()
            })
            .sum();
        c(v)
    }))
}

/// Warm start for `rho_new` from a converged result: the previous minimizer
/// is dilated about its maximum by `ε(rho_new)/ε(prev.rho)`, and the maximum
/// is moved so that `(x − x₀)/ε` is preserved.
pub fn transfer<T: Scalar>(prev: &MinimizeResult<T>, model: &Model<T>, rho_new: T, grid: &Grid<T>) -> Result<Field<T>> {
    let eps_old = model.epsilon(prev.rho)?;
    let eps_new = model.epsilon(rho_new)?;
    if !eps_old.is_finite() || !eps_new.is_finite() {
        return initial_field(model, grid, rho_new, &Init::Field(prev.u.clone()));
    }
    let s = eps_new / eps_old;
    let xp = &prev.max_point;
    let x0: Vec<T> = match model.selection() {
        Some(sel) => sel.x0().to_vec(),
        None => xp.clone(),
    };
    let centre: Vec<T> = x0.iter().zip(xp).map(|(&a, &b)| a + s * (b - a)).collect();
    let mut y = vec![T::zero(); grid.d()];
    let raw = Field::from_fn(grid.clone(), |x| {
        for i in 0..y.len() {
            y[i] = xp[i] + (x[i] - centre[i]) / s;
        }
        prev.u.interpolate(&y)
    });
    finish(raw)
}
