//! Solves of `(−Δ_h + V + σ) z = b` with zero Dirichlet data, the
//! preconditioner of the minimizer.

use crate::grid::{apply_neg_laplacian, Grid};
use crate::scalar::{c, Scalar};

/// Relative residual at which the iterative solve stops.
const CG_TOL: f64 = 1e-11;
const CG_MAX_ITER: usize = 2000;

pub(crate) fn solve_shifted<T: Scalar>(g: &Grid<T>, v: &[T], sigma: T, rhs: &[T]) -> Vec<T> {
    if g.d() == 1 {
        thomas(g, v, sigma, rhs)
    } else {
        jacobi_cg(g, v, sigma, rhs)
    }
}

/// Tridiagonal elimination on the interior nodes. The matrix is strictly
/// diagonally dominant for `σ > 0`, so no pivoting is needed.
fn thomas<T: Scalar>(g: &Grid<T>, v: &[T], sigma: T, rhs: &[T]) -> Vec<T> {
    let n = g.n();
    let inv_h2 = T::one() / (g.h() * g.h());
    let off = -inv_h2;
    let m = n - 2;
    let mut cp = vec![T::zero(); m];
    let mut dp = vec![T::zero(); m];
    for i in 0..m {
        let k = i + 1;
        let diag = c::<T>(2.0) * inv_h2 + v[k] + sigma;
        if i == 0 {
            cp[0] = off / diag;
            dp[0] = rhs[k] / diag;
        } else {
            let denom = diag - off * cp[i - 1];
            cp[i] = off / denom;
            dp[i] = (rhs[k] - off * dp[i - 1]) / denom;
        }
    }
    let mut z = vec![T::zero(); n];
    z[m] = dp[m - 1];
    for i in (0..m - 1).rev() {
        z[i + 1] = dp[i] - cp[i] * z[i + 2];
    }
    z
}

/// Conjugate gradients preconditioned by the diagonal.
fn jacobi_cg<T: Scalar>(g: &Grid<T>, v: &[T], sigma: T, rhs: &[T]) -> Vec<T> {
    let len = rhs.len();
    let inv_h2 = T::one() / (g.h() * g.h());
    let dd = T::from_usize_lossy(g.d());
    let boundary: Vec<bool> = (0..len).map(|k| g.is_boundary(k)).collect();
    let diag: Vec<T> = (0..len).map(|k| c::<T>(2.0) * dd * inv_h2 + v[k] + sigma).collect();
    let apply = |x: &[T], out: &mut [T]| {
        apply_neg_laplacian(g, x, out);
        for k in 0..len {
            out[k] = if boundary[k] {
                T::zero()
            } else {
                out[k] + (v[k] + sigma) * x[k]
            };
        }
    };
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>();
    let mut x = vec![T::zero(); len];
    let mut r: Vec<T> = (0..len).map(|k| if boundary[k] { T::zero() } else { rhs[k] }).collect();
    let b_norm = dot(&r, &r).sqrt();
    if b_norm == T::zero() {
        return x;
    }
    let mut z: Vec<T> = r.iter().zip(&diag).map(|(&ri, &di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); len];
    let tol = c::<T>(CG_TOL) * b_norm;
    for _ in 0..CG_MAX_ITER {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..len {
            x[k] = x[k] + alpha * p[k];
            r[k] = r[k] - alpha * ap[k];
        }
        if dot(&r, &r).sqrt() < tol {
            break;
        }
        for k in 0..len {
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..len {
            p[k] = z[k] + beta * p[k];
        }
    }
    x
}
