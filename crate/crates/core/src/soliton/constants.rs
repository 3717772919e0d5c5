use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

use super::profile::SolitonProfile;

/// Constants derived from the soliton for one `(d, p)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonConstants<T> {
    pub d: usize,
    pub p: T,
    /// `‖w‖₂²`.
    pub a_star: T,
    /// `∫|∇w|²`.
    pub grad_sq: T,
    /// `∫w^{p+1}`.
    pub mass_p1: T,
    /// Sharp constant of the Gagliardo–Nirenberg quotient.
    pub c_gn: T,
    /// `(1/2)(4 − d(p−1)) / (2(p+1) − d(p−1))`.
    pub lambda: T,
}

impl<T: Scalar> SolitonConstants<T> {
    /// `d(p−1) / (2(p+1) − d(p−1))`, the ratio `∫|∇w|² / ∫w²`.
    pub fn kinetic_ratio(&self) -> T {
        kinetic_ratio(self.d, self.p)
    }

    /// Largest relative defect of the identity chain
    /// `∫|∇w|² = (d/2)((p−1)/(p+1))∫w^{p+1} = kinetic_ratio · ∫w²`.
    pub fn identity_defect(&self) -> T {
        let dd = T::from_usize_lossy(self.d);
        let one = T::one();
        let via_p1 = dd * c(0.5) * (self.p - one) / (self.p + one) * self.mass_p1;
        let via_mass = self.kinetic_ratio() * self.a_star;
        ((self.grad_sq - via_p1).abs() / self.grad_sq).max((self.grad_sq - via_mass).abs() / self.grad_sq)
    }
}

pub(crate) fn kinetic_ratio<T: Scalar>(d: usize, p: T) -> T {
    let dd = T::from_usize_lossy(d);
    let one = T::one();
    dd * (p - one) / (c::<T>(2.0) * (p + one) - dd * (p - one))
}

/// `λ = (1/2)(4 − d(p−1)) / (2(p+1) − d(p−1))`.
pub fn lambda_constant<T: Scalar>(d: usize, p: T) -> T {
    let dd = T::from_usize_lossy(d);
    let one = T::one();
    c::<T>(0.5) * (c::<T>(4.0) - dd * (p - one)) / (c::<T>(2.0) * (p + one) - dd * (p - one))
}

/// Area of the unit sphere in `R^d` (2 for `d = 1`).
pub fn sphere_area<T: Scalar>(d: usize) -> T {
    // |S^{d+1}| = 2π |S^{d-1}| / d
    let (mut area, mut k) = if d % 2 == 1 {
        (c::<T>(2.0), 1usize)
    } else {
        (c::<T>(2.0) * T::PI(), 2usize)
    };
    while k < d {
        area = area * c::<T>(2.0) * T::PI() / T::from_usize_lossy(k);
        k += 2;
    }
    area
}

/// Radial quadrature `|S^{d-1}| ∫_0^∞ f(r) r^{d-1} dr` of mesh samples `f_j`:
/// trapezoid with the Euler–Maclaurin correction at the origin plus the
/// closed-form integral of the exponential tail `tail_at_rmax · e^{-k (r - r_max)}`.
fn radial_integral<T: Scalar>(prof: &SolitonProfile<T>, f: &[T], tail_decay: T) -> T {
    let d = prof.d;
    let h = prof.h;
    let n = f.len();
    let dm1 = (d - 1) as i32;
    let mut sum = T::zero();
    for (j, &v) in f.iter().enumerate() {
        let r = prof.radius(j);
        let weight = if j == 0 || j == n - 1 { c::<T>(0.5) } else { T::one() };
        sum = sum + weight * v * r.powi(dm1);
    }
    sum = sum * h;
    // for d = 2 the integrand r f(r) has slope f(0) at the origin
    if d == 2 {
        sum = sum + h * h / c::<T>(12.0) * f[0];
    }
    let r_max = prof.r_max();
    let tail = f[n - 1] * r_max.powi(dm1) / tail_decay;
    sphere_area::<T>(d) * (sum + tail)
}

/// Integrals of the profile and the constants built from them.
///
/// Fails with an accuracy error when the fitted tail rate is more than 10%
/// away from 1, which means the profile did not resolve its decay.
pub fn soliton_constants<T: Scalar>(prof: &SolitonProfile<T>) -> Result<SolitonConstants<T>> {
    let rate = prof.tail_rate();
    if !((rate - T::one()).abs() <= c(0.1)) {
        return Err(Error::Accuracy(format!(
            "tail decay rate {rate} is not within 10% of 1; the profile tail is not resolved"
        )));
    }
    Ok(soliton_constants_unchecked(prof))
}

pub(crate) fn soliton_constants_unchecked<T: Scalar>(prof: &SolitonProfile<T>) -> SolitonConstants<T> {
    let rate = prof.tail_rate();
    let p = prof.p;
    let d = prof.d;
    let one = T::one();
    let w2: Vec<T> = prof.w.iter().map(|&w| w * w).collect();
    let dw2: Vec<T> = prof.dw.iter().map(|&g| g * g).collect();
    let wp1: Vec<T> = prof.w.iter().map(|&w| w.abs().powf(p + one)).collect();
    // tails decay like e^{-2kr}, e^{-2kr}, e^{-(p+1)kr} (up to algebraic factors)
    let a_star = radial_integral(prof, &w2, c::<T>(2.0) * rate);
    let grad_sq = radial_integral(prof, &dw2, c::<T>(2.0) * rate);
    let mass_p1 = radial_integral(prof, &wp1, (p + one) * rate);

    let dd = T::from_usize_lossy(d);
    let two = c::<T>(2.0);
    let c_gn = a_star.powf((p - one) / two)
        * (one - (p - one) / (p + one) * dd / two)
        * kinetic_ratio(d, p).powf(dd * (p - one) / c(4.0));
    SolitonConstants {
        d,
        p,
        a_star,
        grad_sq,
        mass_p1,
        c_gn,
        lambda: lambda_constant(d, p),
    }
}
