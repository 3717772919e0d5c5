use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

use super::{auto_grid, minimize, transfer, Init, MinimizeOptions, MinimizeResult, Model};

/// How the grid of each sweep entry is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec<T> {
    /// [`auto_grid`] per `ρ`.
    Auto,
    Fixed {
        half_width: T,
        n: usize,
    },
}

impl<T: Scalar> GridSpec<T> {
    pub fn resolve(&self, model: &Model<T>, rho: T) -> Result<Grid<T>> {
        match self {
            Self::Auto => auto_grid(model, rho),
            Self::Fixed { half_width, n } => Grid::new(model.d(), *half_width, *n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Each entry starts from the previous minimizer rescaled to the new
    /// `ε`. Sequential.
    Warm,
    /// Each entry starts from its own predicted free minimizer. Entries run
    /// concurrently.
    Independent,
}

#[derive(Debug, Clone)]
pub struct SweepOptions<T> {
    pub grid: GridSpec<T>,
    pub minimize: MinimizeOptions<T>,
    pub mode: SweepMode,
    /// Start of the first entry (of every entry in independent mode).
    pub first: Init<T>,
}

impl<T: Scalar> Default for SweepOptions<T> {
    fn default() -> Self {
        Self {
            grid: GridSpec::Auto,
            minimize: MinimizeOptions::default(),
            mode: SweepMode::Warm,
            first: Init::Predicted,
        }
    }
}

fn check_rho_list<T: Scalar>(rho_list: &[T]) -> Result<()> {
    if rho_list.is_empty() {
        return Err(Error::Domain("rho_list is empty".into()));
    }
    if rho_list.iter().any(|r| !(*r >= T::zero()) || !r.is_finite()) {
        return Err(Error::Domain("rho_list entries must be nonnegative and finite".into()));
    }
    if let Some(w) = rho_list.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!(
            "rho_list must be strictly increasing ({} is followed by {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Minimizers for every `ρ` of a strictly increasing list. An entry's
/// failure is returned with the offending `ρ` as context.
pub fn sweep<T: Scalar>(model: &Model<T>, rho_list: &[T], opts: &SweepOptions<T>) -> Result<Vec<MinimizeResult<T>>> {
    check_rho_list(rho_list)?;
    let run_one = |rho: T, init: &Init<T>| -> Result<MinimizeResult<T>> {
        let grid = opts.grid.resolve(model, rho)?;
        minimize(model, &grid, rho, init, &opts.minimize)
    };
    match opts.mode {
        SweepMode::Independent => rho_list
            .par_iter()
            .map(|&rho| run_one(rho, &opts.first).map_err(|e| e.context(format!("sweep entry rho = {rho}"))))
            .collect(),
        SweepMode::Warm => {
            let mut out: Vec<MinimizeResult<T>> = Vec::with_capacity(rho_list.len());
            for &rho in rho_list {
                let res = (|| {
                    let init = match out.last() {
                        None => opts.first.clone(),
                        Some(prev) => {
                            let grid = opts.grid.resolve(model, rho)?;
                            Init::Field(transfer(prev, model, rho, &grid)?)
                        }
                    };
                    run_one(rho, &init)
                })()
                .map_err(|e| e.context(format!("sweep entry rho = {rho}")))?;
                out.push(res);
            }
            Ok(out)
        }
    }
}

/// Minimizer of the free problem `V ≡ 0` on the same grid, started from the
/// free closed form at the origin. Its energy is the grid-consistent
/// counterpart of `ẽ(ρ)`.
pub fn free_reference<T: Scalar>(
    model: &Model<T>,
    grid: &Grid<T>,
    rho: T,
    opts: &MinimizeOptions<T>,
) -> Result<MinimizeResult<T>> {
    let free = model.free();
    let center = vec![T::zero(); model.d()];
    minimize(&free, grid, rho, &Init::Tilde { center }, opts)
        .map_err(|e| e.context(format!("free reference at rho = {rho}")))
}
