//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real number type the learning pipeline is generic over.
///
/// Implemented for `f32` and `f64`. Constants coming from configuration are
/// carried as `f64` and converted with [`Scalar::of`].
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or config value.
    fn of(x: f64) -> Self;

    /// Conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::of(n as f64)
    }

    fn as_f64(self) -> f64;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Arithmetic mean; zero for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Sample standard deviation (divisor `n - 1`); zero when `n < 2`.
pub fn sample_std<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let mu = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - mu) * (x - mu)).sum();
    (ss / T::from_count(xs.len() - 1)).sqrt()
}

/// Mean/std normalization `(x - mean) / (std + eps)`.
///
/// Singletons and constant inputs map to all zeros.
pub fn standardize<T: Scalar>(xs: &[T], eps: T) -> Vec<T> {
    if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
        return vec![T::zero(); xs.len()];
    }
    let mu = mean(xs);
    let sigma = sample_std(xs);
    xs.iter().map(|&x| (x - mu) / (sigma + eps)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_two_points() {
        let z = standardize(&[2.0f64, 0.0], 1e-8);
        assert!((z[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
        assert!((z[1] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7);
    }

    #[test]
    fn standardize_degenerate_is_zero() {
        assert_eq!(standardize(&[3.0f32], 1e-8), vec![0.0]);
        assert_eq!(standardize(&[1.5f64; 4], 1e-8), vec![0.0; 4]);
        assert!(standardize::<f64>(&[], 1e-8).is_empty());
    }

    #[test]
    fn sample_std_uses_bessel_correction() {
        let s = sample_std(&[1.0f64, 2.0, 3.0, 4.0]);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
