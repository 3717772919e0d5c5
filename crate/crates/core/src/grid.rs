//! Uniform tensor grids on `[-L, L]^d` and real fields sampled on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// Uniform tensor grid on the box `[-L, L]^d` with `n` points per axis.
///
/// Both end points of every axis are grid points, so `h = 2L / (n - 1)`.
/// Fields used by the ground-state solver vanish on the boundary points
/// (zero Dirichlet condition).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid<T> {
    d: usize,
    half_width: T,
    n: usize,
    h: T,
}

pub const MIN_POINTS_PER_AXIS: usize = 16;

impl<T: Scalar> Grid<T> {
    pub fn new(d: usize, half_width: T, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("grid dimension must be at least 1".into()));
        }
        if n < MIN_POINTS_PER_AXIS {
            return Err(Error::Domain(format!(
                "grid needs at least {MIN_POINTS_PER_AXIS} points per axis, got {n}"
            )));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Domain(format!(
                "grid half-width must be positive and finite, got {half_width}"
            )));
        }
        let h = c::<T>(2.0) * half_width / T::from_usize_lossy(n - 1);
        Ok(Self { d, half_width, n, h })
    }

    /// Smallest grid on `[-L, L]^d` whose spacing does not exceed `h_max`.
    /// The point count is forced odd so that the origin is a grid point.
    pub fn with_max_spacing(d: usize, half_width: T, h_max: T) -> Result<Self> {
        if !(h_max > T::zero()) {
            return Err(Error::Domain(format!("spacing must be positive, got {h_max}")));
        }
        let cells = (c::<T>(2.0) * half_width / h_max)
            .ceil()
            .to_usize()
            .ok_or_else(|| Error::Domain("grid size overflow".into()))?;
        let mut n = cells.max(MIN_POINTS_PER_AXIS - 1) + 1;
        if n % 2 == 0 {
            n += 1;
        }
        Self::new(d, half_width, n)
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn half_width(&self) -> T {
        self.half_width
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn h(&self) -> T {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of the `i`-th point along any axis.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> T {
        -self.half_width + T::from_usize_lossy(i) * self.h
    }

    /// Stride of `axis` in the flat row-major layout (axis 0 slowest).
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.d).rev() {
            out[axis] = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn coords(&self, flat: usize, out: &mut [T]) {
        let mut rem = flat;
        for axis in (0..self.d).rev() {
            out[axis] = self.axis_coord(rem % self.n);
            rem /= self.n;
        }
    }

    /// True if the point lies on the boundary of the box.
    pub fn is_boundary(&self, flat: usize) -> bool {
        let mut rem = flat;
        for _ in 0..self.d {
            let i = rem % self.n;
            if i == 0 || i == self.n - 1 {
                return true;
            }
            rem /= self.n;
        }
        false
    }

    /// Trapezoid quadrature weight of a grid point.
    pub fn weight(&self, flat: usize) -> T {
        let mut rem = flat;
        let mut w = T::one();
        for _ in 0..self.d {
            let i = rem % self.n;
            w = w * if i == 0 || i == self.n - 1 {
                self.h * c(0.5)
            } else {
                self.h
            };
            rem /= self.n;
        }
        w
    }

    /// Volume element `h^d` of an interior point.
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.d as i32)
    }

    pub fn same_shape(&self, other: &Grid<T>) -> bool {
        self.d == other.d && self.n == other.n && (self.half_width - other.half_width).abs() <= self.h * c(1e-9)
    }
}

/// Real-valued function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Field<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> Field<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values }
    }

    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "field has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value at index {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<T>, mut f: impl FnMut(&[T]) -> T) -> Self {
        let mut x = vec![T::zero(); grid.d()];
        let values = (0..grid.len())
            .map(|k| {
                grid.coords(k, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zero_boundary(&mut self) {
        for k in 0..self.values.len() {
            if self.grid.is_boundary(k) {
                self.values[k] = T::zero();
            }
        }
    }

    /// Trapezoid integral of `f(u(x))`.
    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.values
            .iter()
            .enumerate()
            .map(|(k, &v)| self.grid.weight(k) * f(v))
            .sum()
    }

    pub fn norm_sq(&self) -> T {
        self.integrate(|v| v * v)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn lp_pow(&self, q: T) -> T {
        self.integrate(|v| v.abs().powf(q))
    }

    /// Discrete Dirichlet energy `int |grad u|^2`, built from forward
    /// differences across every grid edge. Its variational derivative is
    /// exactly the 3-point Laplacian used by the solver.
    pub fn grad_sq(&self) -> T {
        let g = &self.grid;
        let n = g.n();
        let mut idx = vec![0usize; g.d()];
        let mut total = T::zero();
        for k in 0..self.values.len() {
            g.multi_index(k, &mut idx);
            for (axis, &i) in idx.iter().enumerate() {
                if i + 1 < n {
                    let diff = self.values[k + g.stride(axis)] - self.values[k];
                    // edges lying inside a boundary face carry half weight per such face
                    let mut w = T::one();
                    for (other, &j) in idx.iter().enumerate() {
                        if other != axis && (j == 0 || j == n - 1) {
                            w = w * c(0.5);
                        }
                    }
                    total = total + w * diff * diff;
                }
            }
        }
        total * g.h().powi(g.d() as i32 - 2)
    }

    /// `sum_k u_k v_k w_k`, the discrete L2 inner product.
    pub fn dot(&self, other: &Field<T>) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(k, (&a, &b))| self.grid.weight(k) * a * b)
            .sum()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field<T>) -> Result<T> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::Domain("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.values {
            *v = *v * s;
        }
    }

    /// Rescales to unit L2 norm. Fails on the zero field.
    pub fn normalize(&mut self) -> Result<T> {
        let nrm = self.norm();
        if !(nrm > T::zero()) || !nrm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite field".into()));
        }
        self.scale(T::one() / nrm);
        Ok(nrm)
    }

    /// Flat index of the largest value.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        best
    }

    /// Location of the maximum refined per axis by a parabola through the
    /// discrete maximum and its two neighbours.
    pub fn max_point(&self) -> Vec<T> {
        let g = &self.grid;
        let k = self.argmax();
        let mut idx = vec![0usize; g.d()];
        g.multi_index(k, &mut idx);
        let mut x = vec![T::zero(); g.d()];
        g.coords(k, &mut x);
        for axis in 0..g.d() {
            let i = idx[axis];
            if i == 0 || i + 1 >= g.n() {
                continue;
            }
            let s = g.stride(axis);
            let (um, u0, up) = (self.values[k - s], self.values[k], self.values[k + s]);
            let curv = um - c::<T>(2.0) * u0 + up;
            if curv < T::zero() {
                let offset = (um - up) / (c::<T>(2.0) * curv);
                x[axis] = x[axis] + offset.max(-c::<T>(0.5)).min(c::<T>(0.5)) * g.h();
            }
        }
        x
    }

    /// Interior local maxima whose value is at least `fraction` of the
    /// global maximum, as flat indices.
    pub fn local_maxima(&self, fraction: T) -> Vec<usize> {
        let g = &self.grid;
        let top = self.values[self.argmax()];
        let mut idx = vec![0usize; g.d()];
        let mut out = Vec::new();
        'points: for k in 0..self.values.len() {
            let v = self.values[k];
            if v < fraction * top || v <= T::zero() || g.is_boundary(k) {
                continue;
            }
            g.multi_index(k, &mut idx);
            for axis in 0..g.d() {
                let s = g.stride(axis);
                // ties are broken towards the lower index so plateaus count once
                if self.values[k - s] >= v || self.values[k + s] > v {
                    continue 'points;
                }
            }
            out.push(k);
        }
        out
    }

    /// Tensor-product cubic Lagrange interpolation at an arbitrary point.
    /// Points outside the box evaluate to zero.
    pub fn interpolate(&self, x: &[T]) -> T {
        let g = &self.grid;
        let d = g.d();
        let n = g.n();
        let mut base = vec![0usize; d];
        let mut weights = vec![[T::zero(); 4]; d];
        for axis in 0..d {
            let s = (x[axis] + g.half_width()) / g.h();
            if s < T::zero() || s > T::from_usize_lossy(n - 1) {
                return T::zero();
            }
            let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
            let b = i.max(1).min(n - 3) - 1;
            let t = s - T::from_usize_lossy(b);
            base[axis] = b;
            weights[axis] = lagrange4(t);
        }
        let mut total = T::zero();
        let combos = 4usize.pow(d as u32);
        let mut idx = vec![0usize; d];
        for combo in 0..combos {
            let mut rem = combo;
            let mut w = T::one();
            for axis in 0..d {
                let o = rem % 4;
                rem /= 4;
                idx[axis] = base[axis] + o;
                w = w * weights[axis][o];
            }
            total = total + w * self.values[g.flat_index(&idx)];
        }
        total
    }

    /// Applies the 3-point Laplacian with zero values outside the box.
    pub fn laplacian(&self) -> Field<T> {
        let g = &self.grid;
        let mut out = vec![T::zero(); self.values.len()];
        apply_neg_laplacian(g, &self.values, &mut out);
        for v in &mut out {
            *v = -*v;
        }
        Field {
            grid: g.clone(),
            values: out,
        }
    }
}

/// Cubic Lagrange weights for nodes 0, 1, 2, 3 evaluated at `t`.
fn lagrange4<T: Scalar>(t: T) -> [T; 4] {
    let one = T::one();
    let two = c::<T>(2.0);
    let three = c::<T>(3.0);
    let six = c::<T>(6.0);
    [
        -(t - one) * (t - two) * (t - three) / six,
        t * (t - two) * (t - three) / two,
        -t * (t - one) * (t - three) / two,
        t * (t - one) * (t - two) / six,
    ]
}

/// `out = -Delta_h u` on interior points, zero on the boundary. Values of
/// `u` on boundary points are treated as the Dirichlet data.
pub(crate) fn apply_neg_laplacian<T: Scalar>(g: &Grid<T>, u: &[T], out: &mut [T]) {
    let inv_h2 = T::one() / (g.h() * g.h());
    let n = g.n();
    let d = g.d();
    let two = c::<T>(2.0);
    if d == 1 {
        out[0] = T::zero();
        out[n - 1] = T::zero();
        for k in 1..n - 1 {
            out[k] = (two * u[k] - u[k - 1] - u[k + 1]) * inv_h2;
        }
        return;
    }
    let mut idx = vec![0usize; d];
    for k in 0..u.len() {
        g.multi_index(k, &mut idx);
        if idx.iter().any(|&i| i == 0 || i == n - 1) {
            out[k] = T::zero();
            continue;
        }
        let mut acc = T::zero();
        for axis in 0..d {
            let s = g.stride(axis);
            acc = acc + two * u[k] - u[k - s] - u[k + s];
        }
        out[k] = acc * inv_h2;
    }
}
