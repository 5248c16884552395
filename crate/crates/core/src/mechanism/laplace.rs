//! Laplace noise by inverse CDF over a seeded ChaCha20 stream.

use rand::distributions::Open01;
use rand::Rng as _;

use crate::error::{CsdpError, Result};
use crate::scalar::{lit, Scalar};
use crate::seeds::{rng_from_seed, Rng};

/// One draw from `Lap(0, b)`.
pub fn laplace_draw<T: Scalar>(rng: &mut Rng, scale: T) -> T {
    let u: f64 = rng.sample(Open01);
    let c = u - 0.5;
    // 1 - 2|c| lies in (0, 1] for u in (0, 1)
    let x = -c.signum() * (-2.0 * c.abs()).ln_1p();
    scale * lit(x)
}

/// `dim` i.i.d. draws from `Lap(0, scale)`.
pub fn laplace_sample<T: Scalar>(scale: T, dim: usize, seed: u64) -> Result<Vec<T>> {
    check_scale(scale)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..dim).map(|_| laplace_draw(&mut rng, scale)).collect())
}

pub(crate) fn check_scale<T: Scalar>(scale: T) -> Result<()> {
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(CsdpError::param("scale", "must be positive and finite"));
    }
    Ok(())
}

/// `Pr[Lap(0, b) <= x]`.
pub fn laplace_cdf<T: Scalar>(x: T, b: T) -> T {
    let half: T = lit(0.5);
    if x < T::zero() {
        half * (x / b).exp()
    } else {
        T::one() - half * (-x / b).exp()
    }
}

/// `ln Pr[Lap(0, b) <= x]`, accurate far into the lower tail.
pub fn laplace_log_cdf<T: Scalar>(x: T, b: T) -> T {
    let half: T = lit(0.5);
    if x < T::zero() {
        half.ln() + x / b
    } else {
        (-half * (-x / b).exp()).ln_1p()
    }
}

/// `ln Pr[Lap(0, b) > x]`.
pub fn laplace_log_sf<T: Scalar>(x: T, b: T) -> T {
    laplace_log_cdf(-x, b)
}
