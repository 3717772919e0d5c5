use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// Radial samples of the soliton `w` on the mesh `r_j = j h`, `0 <= r_j <= r_max`,
/// with the fitted exponential tail `C r^{-(d-1)/2} e^{-k r}` used beyond `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonProfile<T> {
    pub(crate) d: usize,
    pub(crate) p: T,
    pub(crate) h: T,
    pub(crate) w: Vec<T>,
    pub(crate) dw: Vec<T>,
    pub(crate) tail_rate: T,
    pub(crate) tail_coeff: T,
    pub(crate) residual: T,
}

impl<T: Scalar> SolitonProfile<T> {
    /// Builds a profile from samples `w_j` and derivatives `w'_j` on the mesh
    /// `r_j = j h`. The tail is fitted on the outer five units of radius and
    /// the ODE residual is recomputed from the samples.
    pub fn from_samples(d: usize, p: T, h: T, w: Vec<T>, dw: Vec<T>) -> Result<Self> {
        if w.len() != dw.len() || w.len() < 16 {
            return Err(Error::Domain(
                "profile needs matching w and w' arrays of length >= 16".into(),
            ));
        }
        if !(h > T::zero()) {
            return Err(Error::Domain("radial step must be positive".into()));
        }
        let mut prof = Self {
            d,
            p,
            h,
            w,
            dw,
            tail_rate: T::one(),
            tail_coeff: T::zero(),
            residual: T::zero(),
        };
        prof.fit_tail();
        prof.residual = prof.max_ode_residual();
        Ok(prof)
    }

    /// Closed-form one-dimensional soliton
    /// `w(x) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1)x/2)`, sampled with
    /// step `h` up to `r_max`.
    pub fn closed_form_1d(p: T, h: T, r_max: T) -> Result<Self> {
        super::check_exponent(1, p)?;
        let n = (r_max / h).round().to_usize().unwrap_or(0) + 1;
        let (w, dw): (Vec<T>, Vec<T>) = (0..n)
            .map(|j| {
                let x = T::from_usize_lossy(j) * h;
                closed_form_1d_value(p, x)
            })
            .unzip();
        Self::from_samples(1, p, h, w, dw)
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn p(&self) -> T {
        self.p
    }
    pub fn step(&self) -> T {
        self.h
    }
    pub fn r_max(&self) -> T {
        self.h * T::from_usize_lossy(self.w.len() - 1)
    }
    pub fn w0(&self) -> T {
        self.w[0]
    }
    pub fn tail_rate(&self) -> T {
        self.tail_rate
    }
    pub fn tail_coeff(&self) -> T {
        self.tail_coeff
    }
    /// Largest pointwise ODE residual over the mesh.
    pub fn residual(&self) -> T {
        self.residual
    }
    pub fn len(&self) -> usize {
        self.w.len()
    }
    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
    pub fn radius(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.h
    }
    pub fn values(&self) -> &[T] {
        &self.w
    }
    pub fn derivatives(&self) -> &[T] {
        &self.dw
    }

    /// `(r_j, w_j)` pairs.
    pub fn samples(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.w.iter().enumerate().map(|(j, &w)| (self.radius(j), w))
    }

    fn tail(&self, r: T) -> T {
        let half_deg = T::from_usize_lossy(self.d - 1) * c(0.5);
        self.tail_coeff * r.powf(-half_deg) * (-self.tail_rate * r).exp()
    }

    /// `w(r)` by cubic Hermite interpolation of the samples; the fitted tail
    /// beyond `r_max`.
    pub fn value(&self, r: T) -> T {
        let r = r.abs();
        if r >= self.r_max() {
            return self.tail(r);
        }
        let (j, t) = self.locate(r);
        let (h, w0, w1, d0, d1) = (self.h, self.w[j], self.w[j + 1], self.dw[j], self.dw[j + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let two = c::<T>(2.0);
        let three = c::<T>(3.0);
        (two * t3 - three * t2 + T::one()) * w0
            + (t3 - two * t2 + t) * h * d0
            + (three * t2 - two * t3) * w1
            + (t3 - t2) * h * d1
    }

    /// `w'(r)` for `r >= 0` (derivative of the Hermite interpolant).
    pub fn derivative(&self, r: T) -> T {
        let r = r.abs();
        if r >= self.r_max() {
            let half_deg = T::from_usize_lossy(self.d - 1) * c(0.5);
            return -self.tail(r) * (self.tail_rate + half_deg / r);
        }
        let (j, t) = self.locate(r);
        let (h, w0, w1, d0, d1) = (self.h, self.w[j], self.w[j + 1], self.dw[j], self.dw[j + 1]);
        let t2 = t * t;
        let six = c::<T>(6.0);
        let three = c::<T>(3.0);
        let four = c::<T>(4.0);
        let two = c::<T>(2.0);
        ((six * t2 - six * t) * w0 + (six * t - six * t2) * w1) / h
            + (three * t2 - four * t + T::one()) * d0
            + (three * t2 - two * t) * d1
    }

    fn locate(&self, r: T) -> (usize, T) {
        let s = r / self.h;
        let j = s.floor().to_usize().unwrap_or(0).min(self.w.len() - 2);
        (j, s - T::from_usize_lossy(j))
    }

    /// The profile `r ↦ w(s r)` resampled on the same mesh. Used to probe
    /// identities that only the true soliton satisfies.
    pub fn dilated(&self, s: T) -> Self {
        let (w, dw) = (0..self.w.len())
            .map(|j| {
                let r = self.radius(j) * s;
                (self.value(r), s * self.derivative(r))
            })
            .unzip();
        let mut out = Self {
            d: self.d,
            p: self.p,
            h: self.h,
            w,
            dw,
            tail_rate: self.tail_rate * s,
            tail_coeff: T::zero(),
            residual: T::zero(),
        };
        out.fit_tail();
        out.residual = out.max_ode_residual();
        out
    }

    /// Least-squares fit of `log(w r^{(d-1)/2}) = log C - k r` over the outer
    /// five units of the mesh (or its outer third if it is shorter).
    pub(crate) fn fit_tail(&mut self) {
        let r_max = self.r_max();
        let start = (r_max - c(5.0)).max(r_max * c(2.0 / 3.0));
        let half_deg = T::from_usize_lossy(self.d - 1) * c(0.5);
        let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for (j, &w) in self.w.iter().enumerate() {
            let r = self.radius(j);
            if r < start || !(w > T::zero()) {
                continue;
            }
            let y = (w * r.powf(half_deg)).ln();
            n = n + T::one();
            sx = sx + r;
            sy = sy + y;
            sxx = sxx + r * r;
            sxy = sxy + r * y;
        }
        let denom = n * sxx - sx * sx;
        if n < c(3.0) || !(denom.abs() > T::zero()) {
            self.tail_rate = T::nan();
            self.tail_coeff = T::zero();
            return;
        }
        let slope = (n * sxy - sx * sy) / denom;
        let intercept = (sy - slope * sx) / n;
        self.tail_rate = -slope;
        self.tail_coeff = intercept.exp();
    }

    /// Largest `|w'' + (d-1)/r w' - w + w^p|` over the mesh, with `w''` from a
    /// fourth-order central stencil and the even extension of `w` at the origin.
    pub(crate) fn max_ode_residual(&self) -> T {
        let n = self.w.len();
        let dm1 = T::from_usize_lossy(self.d - 1);
        let inv12h = T::one() / (c::<T>(12.0) * self.h);
        // w' is odd about the origin
        let at = |j: isize| -> T {
            let v = self.dw[j.unsigned_abs()];
            if j < 0 {
                -v
            } else {
                v
            }
        };
        let mut worst = T::zero();
        for j in 0..n.saturating_sub(2) {
            let ji = j as isize;
            let w2 = (at(ji - 2) - c::<T>(8.0) * at(ji - 1) + c::<T>(8.0) * at(ji + 1) - at(ji + 2)) * inv12h;
            let radial = if j == 0 {
                dm1 * w2
            } else {
                dm1 / self.radius(j) * self.dw[j]
            };
            let w = self.w[j];
            let res = (w2 + radial - w + w.abs().powf(self.p - T::one()) * w).abs();
            worst = worst.max(res);
        }
        worst
    }

    /// Two-column text dump: one header line with `d`, `p`, `w0`, `tail_rate`,
    /// then one `r w` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.w.len() * 48);
        let _ = writeln!(
            s,
            "# d={} p={} w0={:.17e} tail_rate={:.17e}",
            self.d,
            self.p.as_f64(),
            self.w0().as_f64(),
            self.tail_rate.as_f64()
        );
        for (r, w) in self.samples() {
            let _ = writeln!(s, "{:.17e} {:.17e}", r.as_f64(), w.as_f64());
        }
        s
    }

    /// Parses the format written by [`SolitonProfile::to_text`]. Derivatives
    /// are rebuilt with a fourth-order stencil.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Domain("empty profile file".into()))?;
        let mut d = None;
        let mut p = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                match k {
                    "d" => d = v.parse::<usize>().ok(),
                    "p" => p = v.parse::<f64>().ok(),
                    _ => {}
                }
            }
        }
        let (d, p) = match (d, p) {
            (Some(d), Some(p)) => (d, p),
            _ => return Err(Error::Domain("profile header must carry d and p".into())),
        };
        let mut rs = Vec::new();
        let mut ws = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next()) {
                (Some(Ok(r)), Some(Ok(w))) => {
                    rs.push(r);
                    ws.push(T::lit(w));
                }
                _ => {
                    return Err(Error::Domain(format!(
                        "malformed profile line {}: {line:?}",
                        lineno + 2
                    )))
                }
            }
        }
        if rs.len() < 16 {
            return Err(Error::Domain("profile has fewer than 16 samples".into()));
        }
        let h = T::lit((rs[rs.len() - 1] - rs[0]) / (rs.len() - 1) as f64);
        let n = ws.len();
        let at = |j: isize| -> T {
            if j < 0 {
                ws[j.unsigned_abs()]
            } else {
                ws[j as usize]
            }
        };
        let dw = (0..n)
            .map(|j| {
                let ji = j as isize;
                if j + 2 < n {
                    (at(ji - 2) - c::<T>(8.0) * at(ji - 1) + c::<T>(8.0) * at(ji + 1) - at(ji + 2)) / (c::<T>(12.0) * h)
                } else {
                    (at(ji) - at(ji - 1)) / h
                }
            })
            .collect();
        Self::from_samples(d, T::lit(p), h, ws, dw)
    }
}

/// `(w(x), w'(x))` of the closed-form one-dimensional soliton.
pub(crate) fn closed_form_1d_value<T: Scalar>(p: T, x: T) -> (T, T) {
    let one = T::one();
    let two = c::<T>(2.0);
    let amp = ((p + one) / two).powf(one / (p - one));
    let b = (p - one) / two;
    let sech = one / (b * x).cosh();
    let w = amp * sech.powf(two / (p - one));
    (w, -w * (b * x).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_interpolation_of_closed_form() {
        let prof = SolitonProfile::<f64>::closed_form_1d(2.0, 1e-3, 25.0).unwrap();
        for &x in &[0.0, 0.12345, 3.3333, 17.0001] {
            let (w, dw) = closed_form_1d_value(2.0, x);
            assert!((prof.value(x) - w).abs() < 1e-13);
            assert!((prof.derivative(x) - dw).abs() < 1e-9);
        }
        assert!((prof.tail_rate() - 1.0).abs() < 1e-6);
        assert!(prof.residual() < 1e-9, "residual {}", prof.residual());
    }

    #[test]
    fn text_format_roundtrip() {
        let prof = SolitonProfile::<f64>::closed_form_1d(3.0, 1e-2, 20.0).unwrap();
        let text = prof.to_text();
        assert!(text.starts_with("# d=1 p=3 w0="));
        let back = SolitonProfile::<f64>::from_text(&text).unwrap();
        assert_eq!(back.len(), prof.len());
        for (a, b) in back.values().iter().zip(prof.values()) {
            assert_eq!(a, b);
        }
        assert!((back.tail_rate() - prof.tail_rate()).abs() < 1e-9);
    }

    #[test]
    fn malformed_text_is_rejected() {
        assert!(SolitonProfile::<f64>::from_text("").is_err());
        assert!(SolitonProfile::<f64>::from_text("# p=2\n0 1\n").is_err());
        let bad = "# d=1 p=2\n0 1.5\n0.1 oops\n";
        assert!(SolitonProfile::<f64>::from_text(bad).is_err());
    }
}
