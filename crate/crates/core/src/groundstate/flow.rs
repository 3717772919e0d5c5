use crate::error::{Error, Result};
use crate::grid::{apply_neg_laplacian, Field, Grid};
use crate::scalar::{c, Scalar};

use super::linear::solve_shifted;
use super::{coupling, energy, MinimizeOptions, MinimizeResult, Model};

/// Callback receiving the iteration count, the accepted iterate and its
/// energy.
pub type Observer<'a, T> = dyn FnMut(usize, &Field<T>, T) + 'a;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Largest angle along the great circle taken in one step.
const MAX_ANGLE: f64 = 0.5;
/// Energy comparisons are blind below this multiple of the magnitude of the
/// quadratic part of the energy.
const ROUNDOFF: f64 = 1e-14;
const RESTART_EVERY: usize = 200;

struct Problem<'a, T> {
    grid: &'a Grid<T>,
    v: Vec<T>,
    w: Vec<T>,
    p: T,
    coupling: T,
}

/// Energy, gradient data and multiplier at one point.
struct State<T> {
    u: Vec<T>,
    energy: T,
    quad: T,
    g: Vec<T>,
    mu: T,
    residual: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn dot(&self, a: &[T], b: &[T]) -> T {
        self.w.iter().zip(a.iter().zip(b)).map(|(&w, (&x, &y))| w * x * y).sum()
    }

    fn apply_a0(&self, u: &[T], out: &mut [T]) {
        apply_neg_laplacian(self.grid, u, out);
        for k in 0..u.len() {
            if self.w[k] != T::zero() {
                out[k] = out[k] + self.v[k] * u[k];
            }
        }
    }

    /// `(E, ½⟨u, A₀u⟩, A₀u)`.
    fn energy(&self, u: &[T]) -> (T, T, Vec<T>) {
        let mut a0u = vec![T::zero(); u.len()];
        self.apply_a0(u, &mut a0u);
        let quad = c::<T>(0.5) * self.dot(u, &a0u);
        let pp1 = self.p + T::one();
        let inter: T = self.w.iter().zip(u).map(|(&w, &x)| w * x.abs().powf(pp1)).sum();
        (quad - self.coupling / pp1 * inter, quad, a0u)
    }

    fn state(&self, u: Vec<T>) -> State<T> {
        let (energy, quad, a0u) = self.energy(&u);
        let pm1 = self.p - T::one();
        let hu: Vec<T> = u
            .iter()
            .zip(&a0u)
            .map(|(&x, &a)| a - self.coupling * x.abs().powf(pm1) * x)
            .collect();
        let mu = self.dot(&u, &hu);
        let g: Vec<T> = hu
            .iter()
            .zip(&u)
            .zip(&self.w)
            .map(|((&h, &x), &w)| if w == T::zero() { T::zero() } else { h - mu * x })
            .collect();
        let residual = g.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        State {
            u,
            energy,
            quad,
            g,
            mu,
            residual,
        }
    }

    /// Second variation of `E` on the sphere at `s.u` applied to a tangent
    /// vector.
    fn hessian(&self, s: &State<T>, dir: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); dir.len()];
        self.apply_a0(dir, &mut out);
        let pm1 = self.p - T::one();
        for k in 0..dir.len() {
            out[k] = if self.w[k] == T::zero() {
                T::zero()
            } else {
                out[k] - (self.p * self.coupling * s.u[k].abs().powf(pm1) + s.mu) * dir[k]
            };
        }
        out
    }

    /// Second variation along the great circle through `u` in the unit
    /// tangent direction `dir`.
    fn curvature(&self, s: &State<T>, dir: &[T]) -> T {
        self.dot(dir, &self.hessian(s, dir))
    }

    /// Tangent translation modes `∂_i u`, one per axis.
    fn translation_modes(&self, u: &[T]) -> Vec<Vec<T>> {
        let g = self.grid;
        let n = g.n();
        let two_h = c::<T>(2.0) * g.h();
        let mut idx = vec![0usize; g.d()];
        (0..g.d())
            .map(|axis| {
                let st = g.stride(axis);
                let mut z: Vec<T> = (0..u.len())
                    .map(|k| {
                        g.multi_index(k, &mut idx);
                        if self.w[k] == T::zero() || idx[axis] == 0 || idx[axis] + 1 >= n {
                            T::zero()
                        } else {
                            (u[k + st] - u[k - st]) / two_h
                        }
                    })
                    .collect();
                let zu = self.dot(&z, u);
                for (zk, &uk) in z.iter_mut().zip(u) {
                    *zk = *zk - zu * uk;
                }
                z
            })
            .collect()
    }

    /// Newton step for `g` restricted to the span of the translation modes,
    /// or `None` when the second variation is not positive there.
    fn coarse_correction(&self, s: &State<T>) -> Option<Vec<T>> {
        let modes = self.translation_modes(&s.u);
        let d = modes.len();
        let hz: Vec<Vec<T>> = modes.iter().map(|z| self.hessian(s, z)).collect();
        let m: Vec<Vec<T>> = (0..d)
            .map(|i| (0..d).map(|j| self.dot(&modes[i], &hz[j])).collect())
            .collect();
        let rhs: Vec<T> = modes.iter().map(|z| self.dot(z, &s.g)).collect();
        let coef = cholesky_solve(m, rhs)?;
        let mut out = vec![T::zero(); s.u.len()];
        for (z, &a) in modes.iter().zip(&coef) {
            for (o, &zk) in out.iter_mut().zip(z) {
                *o = *o + a * zk;
            }
        }
        Some(out)
    }

    /// `|cos θ u + sin θ dir|`, renormalized.
    fn rotate(&self, u: &[T], dir: &[T], theta: T) -> Vec<T> {
        let (s, co) = theta.sin_cos();
        let mut out: Vec<T> = u.iter().zip(dir).map(|(&a, &b)| (co * a + s * b).abs()).collect();
        let nrm = self.dot(&out, &out).sqrt();
        for x in &mut out {
            *x = *x / nrm;
        }
        out
    }
}

pub(super) fn run<T: Scalar>(
    model: &Model<T>,
    grid: &Grid<T>,
    rho: T,
    u0: Field<T>,
    opts: &MinimizeOptions<T>,
    mut observer: Option<&mut Observer<'_, T>>,
) -> Result<MinimizeResult<T>> {
    let w: Vec<T> = (0..grid.len())
        .map(|k| if grid.is_boundary(k) { T::zero() } else { grid.weight(k) })
        .collect();
    let prob = Problem {
        grid,
        v: model.potential().sample(grid),
        w,
        p: model.p(),
        coupling: coupling(rho, model.p()),
    };
    let mut s = prob.state(u0.into_values());
    let mut history = vec![s.energy];
    let mut prev: Option<(Vec<T>, Vec<T>, T)> = None; // (direction, z, ⟨z, g⟩)
    let mut theta_prev = c::<T>(0.1);
    let mut iterations = 0usize;

    let converged = |s: &State<T>, history: &[T]| -> bool {
        if !(s.residual < opts.tol) {
            return false;
        }
        let n = history.len();
        n > opts.window && {
            let last = history[n - 1];
            (last - history[n - 1 - opts.window]).abs() <= opts.energy_tol * last.abs().max(T::one())
        }
    };

    while !converged(&s, &history) {
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual: s.residual.as_f64(),
            });
        }
        let sigma = s.mu.abs() + T::one();
        let mut z = solve_shifted(grid, &prob.v, sigma, &s.g);
        // the translation modes are far softer than the preconditioner suggests
        if let Some(corr) = prob.coarse_correction(&s) {
            for (zk, ck) in z.iter_mut().zip(corr) {
                *zk = *zk + ck;
            }
        }
        let zu = prob.dot(&z, &s.u);
        for (zk, &uk) in z.iter_mut().zip(&s.u) {
            *zk = *zk - zu * uk;
        }
        let zg = prob.dot(&z, &s.g);

        let mut dir: Vec<T> = z.iter().map(|&x| -x).collect();
        if let Some((d_old, z_old, zg_old)) = prev.as_ref().filter(|_| !iterations.is_multiple_of(RESTART_EVERY)) {
            // Polak–Ribière with the previous preconditioned gradient
            let beta = ((zg - prob.dot(z_old, &s.g)) / *zg_old).max(T::zero());
            let du = prob.dot(d_old, &s.u);
            for k in 0..dir.len() {
                dir[k] = dir[k] + beta * (d_old[k] - du * s.u[k]);
            }
            if prob.dot(&dir, &s.g) >= T::zero() {
                dir = z.iter().map(|&x| -x).collect();
            }
        }

        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                // steepest descent retry
                dir = z.iter().map(|&x| -x).collect();
            }
            let nrm = prob.dot(&dir, &dir).sqrt();
            if !(nrm > T::zero()) {
                break;
            }
            let unit: Vec<T> = dir.iter().map(|&x| x / nrm).collect();
            let slope = prob.dot(&s.g, &unit);
            if !(slope < T::zero()) {
                continue;
            }
            let curv = prob.curvature(&s, &unit);
            let mut theta = if curv > T::zero() {
                -slope / curv
            } else {
                theta_prev * c(2.0)
            };
            theta = theta.min(c(MAX_ANGLE));
            let blind = c::<T>(ROUNDOFF) * (s.quad.abs() + s.energy.abs());
            for _ in 0..MAX_HALVINGS {
                let cand = prob.rotate(&s.u, &unit, theta);
                let (e_new, _, _) = prob.energy(&cand);
                if e_new <= s.energy + c::<T>(ARMIJO) * theta * slope
                    || (e_new <= s.energy + blind && -theta * slope < blind)
                {
                    accepted = Some((cand, theta, dir.clone()));
                    break;
                }
                theta = theta * c(0.5);
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some((u_new, theta, dir_used)) = accepted else {
            if s.residual < opts.tol {
                break;
            }
            return Err(Error::NonConvergence {
                iterations,
                residual: s.residual.as_f64(),
            });
        };
        theta_prev = theta;
        prev = Some((dir_used, z, zg));
        s = prob.state(u_new);
        iterations += 1;
        history.push(s.energy);
        if let Some(obs) = observer.as_deref_mut() {
            let f = Field::from_values(grid.clone(), s.u.clone())?;
            obs(iterations, &f, s.energy);
        }
    }

    let u = Field::from_values(grid.clone(), s.u)?;
    let energy = energy(&u, model, rho)?;
    let max_point = u.max_point();
    Ok(MinimizeResult {
        max_point,
        energy,
        mu: s.mu,
        grad_residual: s.residual,
        iterations,
        rho,
        energy_history: if opts.record_history { history } else { Vec::new() },
        u,
    })
}

/// Solves a small symmetric positive definite system; `None` when the
/// matrix is not positive definite.
fn cholesky_solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for j in 0..n {
        let mut diag = a[j][j];
        for k in 0..j {
            diag = diag - a[j][k] * a[j][k];
        }
        if !(diag > T::zero()) {
            return None;
        }
        a[j][j] = diag.sqrt();
        for i in j + 1..n {
            let mut v = a[i][j];
            for k in 0..j {
                v = v - a[i][k] * a[j][k];
            }
            a[i][j] = v / a[j][j];
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] = b[i] - a[i][k] * b[k];
        }
        b[i] = b[i] / a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] = b[i] - a[k][i] * b[k];
        }
        b[i] = b[i] / a[i][i];
    }
    Some(b)
}
