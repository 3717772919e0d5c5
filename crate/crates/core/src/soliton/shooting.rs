use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

use super::profile::SolitonProfile;

/// Knobs of the shooting solver. The defaults are the production settings.
#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions<T> {
    /// RK4 step and mesh spacing.
    pub step: T,
    pub r_max: T,
    /// Initial bracket for `w(0)`.
    pub bracket: (T, T),
    pub max_bisections: usize,
    /// Relative disagreement between the two bracketing trajectories at
    /// which a segment stops being trusted.
    pub divergence: T,
}

impl<T: Scalar> Default for ShootingOptions<T> {
    fn default() -> Self {
        Self {
            step: c(1e-3),
            r_max: c(25.0),
            bracket: (T::one(), c(10.0)),
            max_bisections: 200,
            divergence: c(1e-7),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    /// Crossed zero: too much initial data.
    Over,
    /// Turned upward (or never left the constant state): too little.
    Under,
}

struct Trajectory<T> {
    w: Vec<T>,
    dw: Vec<T>,
}

/// Solves `w'' + (d-1)/r w' - w + w^p = 0`, `w'(0) = 0`, `w > 0`, `w → 0`
/// with default options.
pub fn solve_soliton<T: Scalar>(d: usize, p: T, tol: T) -> Result<SolitonProfile<T>> {
    solve_soliton_with(d, p, tol, &ShootingOptions::default())
}

pub fn solve_soliton_with<T: Scalar>(d: usize, p: T, tol: T, opts: &ShootingOptions<T>) -> Result<SolitonProfile<T>> {
    super::check_exponent(d, p)?;
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let ode = RadialOde { d, p, h: opts.step };
    let n = (opts.r_max / opts.step)
        .round()
        .to_usize()
        .filter(|&n| n >= 32)
        .ok_or_else(|| Error::Domain("r_max / step must be at least 32".into()))?;

    // first segment: bisection on w(0)
    let (mut lo, mut hi) = opts.bracket;
    let classify_origin = |w0: T| ode.shoot(0, ode.origin_state(w0), n, false).0;
    if classify_origin(lo) != Outcome::Under || classify_origin(hi) != Outcome::Over {
        return Err(Error::Shooting(format!(
            "bracket [{lo}, {hi}] for w(0) does not separate undershoot from overshoot"
        )));
    }
    bisect(&mut lo, &mut hi, opts.max_bisections, classify_origin);

    let mut w = vec![T::zero(); n + 1];
    let mut dw = vec![T::zero(); n + 1];
    let mid0 = (lo + hi) * c(0.5);
    w[0] = mid0;
    let mut start = 0usize;
    let mut seg_lo = ode.origin_state(lo);
    let mut seg_hi = ode.origin_state(hi);

    for _segment in 0..32 {
        let (_, a) = ode.shoot(start, seg_lo, n, true);
        let (_, b) = ode.shoot(start, seg_hi, n, true);
        let a = a.expect("recorded");
        let b = b.expect("recorded");
        let len = a.w.len().min(b.w.len());
        let mut end = start;
        for k in 1..len {
            let (wa, wb) = (a.w[k], b.w[k]);
            let mean = (wa + wb) * c(0.5);
            if !(mean > T::zero()) || (wa - wb).abs() > opts.divergence * mean {
                break;
            }
            end = start + k;
            w[end] = mean;
            dw[end] = (a.dw[k] + b.dw[k]) * c(0.5);
        }
        if end == n {
            return finish(d, p, opts.step, w, dw, tol);
        }
        if end <= start + (T::one() / opts.step).to_usize().unwrap_or(1) {
            return Err(Error::Shooting(format!(
                "trajectory could not be continued past r = {:.3}; last bracket for the slope was [{}, {}]",
                (T::from_usize_lossy(start) * opts.step).as_f64(),
                seg_lo.1,
                seg_hi.1
            )));
        }
        // restart: keep w(r_end), bisect on w'(r_end)
        start = end;
        let w_s = w[start];
        let s_guess = dw[start];
        let classify = |s: T| ode.shoot(start, (w_s, s), n, false).0;
        // less negative slope undershoots, more negative overshoots
        let mut widen = c::<T>(1e-6);
        let (mut s_under, mut s_over) = (s_guess, s_guess);
        let mut found = false;
        for _ in 0..12 {
            s_under = s_guess * (T::one() - widen);
            s_over = s_guess * (T::one() + widen);
            if classify(s_under) == Outcome::Under && classify(s_over) == Outcome::Over {
                found = true;
                break;
            }
            widen = widen * c(10.0);
        }
        if !found {
            return Err(Error::Shooting(format!(
                "no slope bracket at r = {:.3} around w' = {s_guess}",
                (T::from_usize_lossy(start) * opts.step).as_f64()
            )));
        }
        bisect(&mut s_under, &mut s_over, opts.max_bisections, classify);
        seg_lo = (w_s, s_under);
        seg_hi = (w_s, s_over);
    }
    Err(Error::Shooting("too many restart segments".into()))
}

fn finish<T: Scalar>(d: usize, p: T, h: T, w: Vec<T>, dw: Vec<T>, tol: T) -> Result<SolitonProfile<T>> {
    let prof = SolitonProfile::from_samples(d, p, h, w, dw)?;
    if !(prof.residual() < tol) {
        return Err(Error::Accuracy(format!(
            "ODE residual {} exceeds tolerance {tol}",
            prof.residual()
        )));
    }
    Ok(prof)
}

/// Bisection that keeps `under` undershooting and `over` overshooting until
/// the bracket collapses to adjacent floating-point numbers.
fn bisect<T: Scalar>(under: &mut T, over: &mut T, max_iter: usize, classify: impl Fn(T) -> Outcome) {
    for _ in 0..max_iter {
        let mid = (*under + *over) * c(0.5);
        if mid == *under || mid == *over {
            break;
        }
        match classify(mid) {
            Outcome::Under => *under = mid,
            Outcome::Over => *over = mid,
        }
    }
}

struct RadialOde<T> {
    d: usize,
    p: T,
    h: T,
}

impl<T: Scalar> RadialOde<T> {
    /// State at `r = h` from the even series `w0 + a r^2 + b r^4`.
    fn origin_state(&self, w0: T) -> (T, T) {
        let dd = T::from_usize_lossy(self.d);
        let a = (w0 - w0.powf(self.p)) / (c::<T>(2.0) * dd);
        let b = a * (T::one() - self.p * w0.powf(self.p - T::one())) / (c::<T>(4.0) * (dd + c(2.0)));
        let h = self.h;
        let h2 = h * h;
        (
            w0 + a * h2 + b * h2 * h2,
            c::<T>(2.0) * a * h + c::<T>(4.0) * b * h2 * h,
        )
    }

    #[inline]
    fn rhs(&self, r: T, w: T, dw: T) -> (T, T) {
        let dm1 = T::from_usize_lossy(self.d - 1);
        let nonlinear = w.abs().powf(self.p - T::one()) * w;
        (dw, -dm1 / r * dw + w - nonlinear)
    }

    /// Integrates from mesh index `start` (state given there; at index 0 the
    /// state is the series value at index 1) up to index `n` or the first
    /// sign event.
    fn shoot(&self, start: usize, state: (T, T), n: usize, record: bool) -> (Outcome, Option<Trajectory<T>>) {
        let h = self.h;
        let half = c::<T>(0.5);
        let sixth = c::<T>(1.0 / 6.0);
        let mut traj = record.then(|| Trajectory {
            w: Vec::with_capacity(n + 1 - start),
            dw: Vec::with_capacity(n + 1 - start),
        });
        let (mut j, (mut w, mut dw)) = if start == 0 {
            if let Some(t) = traj.as_mut() {
                t.w.push(T::nan());
                t.dw.push(T::zero());
            }
            (1usize, state)
        } else {
            (start, state)
        };
        if let Some(t) = traj.as_mut() {
            t.w.push(w);
            t.dw.push(dw);
        }
        if start == 0 && dw > T::zero() {
            return (Outcome::Under, traj);
        }
        while j < n {
            let r = T::from_usize_lossy(j) * h;
            let (k1w, k1d) = self.rhs(r, w, dw);
            let (k2w, k2d) = self.rhs(r + half * h, w + half * h * k1w, dw + half * h * k1d);
            let (k3w, k3d) = self.rhs(r + half * h, w + half * h * k2w, dw + half * h * k2d);
            let (k4w, k4d) = self.rhs(r + h, w + h * k3w, dw + h * k3d);
            w = w + h * sixth * (k1w + c::<T>(2.0) * (k2w + k3w) + k4w);
            dw = dw + h * sixth * (k1d + c::<T>(2.0) * (k2d + k3d) + k4d);
            j += 1;
            if let Some(t) = traj.as_mut() {
                t.w.push(w);
                t.dw.push(dw);
            }
            if w < T::zero() {
                return (Outcome::Over, traj);
            }
            if dw > T::zero() {
                return (Outcome::Under, traj);
            }
        }
        // no event before r_max: split on the sign of the growing mode,
        // w' + (1 + (d-1)/(2r)) w, which vanishes on the decaying branch
        let r = T::from_usize_lossy(j) * h;
        let dm1 = T::from_usize_lossy(self.d - 1);
        let growing = dw + (T::one() + dm1 / (c::<T>(2.0) * r)) * w;
        let outcome = if growing > T::zero() {
            Outcome::Under
        } else {
            Outcome::Over
        };
        (outcome, traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::profile::closed_form_1d_value;

    #[test]
    fn one_dimensional_profiles_match_closed_form() {
        for &p in &[1.5f64, 2.0, 3.0] {
            let prof = solve_soliton(1, p, 1e-8).unwrap();
            let worst = prof
                .samples()
                .map(|(r, w)| (w - closed_form_1d_value(p, r).0).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-8, "p = {p}: max error {worst:e}");
        }
    }

    #[test]
    fn known_shooting_values() {
        let prof = solve_soliton(1, 2.0f64, 1e-8).unwrap();
        assert!((prof.w0() - 1.5).abs() < 1e-10);
        let prof = solve_soliton(1, 3.0f64, 1e-8).unwrap();
        assert!((prof.w0() - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn exponent_out_of_range() {
        assert!(matches!(solve_soliton(1, 1.0f64, 1e-8), Err(Error::Domain(_))));
        assert!(matches!(solve_soliton(3, 5.0f64, 1e-8), Err(Error::Domain(_))));
        assert!(matches!(solve_soliton(1, 2.0f64, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bad_bracket_is_reported() {
        let opts = ShootingOptions {
            bracket: (2.0, 10.0),
            ..ShootingOptions::default()
        };
        let err = solve_soliton_with(1, 2.0f64, 1e-8, &opts).unwrap_err();
        match err {
            Error::Shooting(msg) => assert!(msg.contains("[2, 10]"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
    }
}
