use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

use super::{Expr, Potential};

const SAMPLE_SEED: u64 = 0x5eed_0f5a_3b1e;
pub(crate) const NONNEG_SAMPLES: usize = 100_000;
const HOMOGENEITY_SAMPLES: usize = 64;
const SHELL_DIRECTIONS: usize = 32;

pub(super) fn validate<T: Scalar>(pot: &Potential<T>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    check_nonnegative(pot, &mut rng)?;
    check_zeros(pot)?;
    check_homogeneity(pot, &mut rng)?;
    check_local_models(pot, &mut rng)
}

fn check_nonnegative<T: Scalar>(pot: &Potential<T>, rng: &mut ChaCha8Rng) -> Result<()> {
    let half = pot.extent().as_f64() + 5.0;
    let mut x = vec![T::zero(); pot.d()];
    for _ in 0..NONNEG_SAMPLES {
        for xi in x.iter_mut() {
            *xi = c(rng.gen_range(-half..half));
        }
        let v = pot.eval(&x);
        if !(v >= T::zero()) {
            return Err(Error::Validation(format!(
                "potential takes the negative or undefined value {v} at {:?}",
                x.iter().map(|v| v.as_f64()).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

fn check_zeros<T: Scalar>(pot: &Potential<T>) -> Result<()> {
    for (i, w) in pot.wells().iter().enumerate() {
        let v = pot.eval(&w.location);
        if v.abs() > c(1e-12) {
            return Err(Error::Validation(format!("well {i} is not a zero: V = {v}")));
        }
    }
    Ok(())
}

fn unit_vector<T: Scalar>(rng: &mut ChaCha8Rng, d: usize) -> Vec<T> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|&a| c(a / n)).collect();
        }
    }
}

fn directions<T: Scalar>(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<T>> {
    let mut dirs = Vec::new();
    for axis in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![T::zero(); d];
            e[axis] = c(s);
            dirs.push(e);
        }
    }
    if d > 1 {
        dirs.extend((0..SHELL_DIRECTIONS).map(|_| unit_vector(rng, d)));
    }
    dirs
}

fn check_homogeneity<T: Scalar>(pot: &Potential<T>, rng: &mut ChaCha8Rng) -> Result<()> {
    for (i, w) in pot.wells().iter().enumerate() {
        let r = w.degree;
        for _ in 0..HOMOGENEITY_SAMPLES {
            let t: T = c(rng.gen_range(0.1..10.0));
            let x = unit_vector::<T>(rng, pot.d());
            let tx: Vec<T> = x.iter().map(|&v| t * v).collect();
            let lhs = w.model.eval(&tx);
            let defect = (lhs - t.powf(r) * w.model.eval(&x)).abs() / lhs;
            if !(defect < c(1e-10)) {
                return Err(Error::Validation(format!(
                    "local model of well {i} is not homogeneous of degree {r} (relative defect {defect})"
                )));
            }
        }
    }
    Ok(())
}

/// Outer shell radius at which `V/V_i` must lie in `[0.9, 1.1]`; the inner
/// shell at 1% of it must give `[0.99, 1.01]`.
fn shell_radius<T: Scalar>(pot: &Potential<T>) -> T {
    match pot.expr {
        Expr::Product { .. } | Expr::MinComposite(_) => {
            let sep = pot.min_separation();
            if sep.is_finite() {
                c::<T>(0.02) * sep
            } else {
                c(0.1)
            }
        }
        _ => c(0.1),
    }
}

fn check_local_models<T: Scalar>(pot: &Potential<T>, rng: &mut ChaCha8Rng) -> Result<()> {
    let outer = shell_radius(pot);
    let shells = [(outer, c::<T>(0.1)), (outer * c(0.01), c::<T>(0.01))];
    for (i, w) in pot.wells().iter().enumerate() {
        for dir in directions::<T>(rng, pot.d()) {
            for &(radius, band) in &shells {
                let offset: Vec<T> = dir.iter().map(|&v| radius * v).collect();
                let x: Vec<T> = w.location.iter().zip(&offset).map(|(&a, &b)| a + b).collect();
                let ratio = pot.eval(&x) / w.model.eval(&offset);
                if !((ratio - T::one()).abs() <= band) {
                    return Err(Error::Validation(format!(
                        "potential departs from the local model of well {i} at radius {radius}: V/V_i = {ratio}"
                    )));
                }
            }
        }
    }
    Ok(())
}
