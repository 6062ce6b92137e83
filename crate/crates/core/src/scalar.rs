//! Scalar abstraction.
//!
//! The filter recursions (prediction, gain, update) and the IBM transition
//! pair only need field arithmetic, so they are generic over [`Scalar`] and
//! run unchanged on exact rationals. Anything involving `exp`, `sqrt` or
//! `powf` (IOUP priors, oracles, steady states, diagnostics) requires
//! [`Real`], which is implemented for `f32` and `f64`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

use crate::linalg::{self, Mat};

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Num
    + NumAssign
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Conversion for configuration constants; may round for exact types.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("counts are representable")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(&self) -> bool;

    /// Hook applied to a posterior covariance after the rank-one downdate.
    /// `pred` is the predictive covariance it was computed from. Exact
    /// scalars need no conditioning.
    fn condition_covariance(_post: &mut Mat<Self>, _pred: &Mat<Self>) {}
}

/// Floating-point scalars.
pub trait Real: Scalar + Float {}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn condition_covariance(post: &mut Mat<Self>, pred: &Mat<Self>) {
        linalg::floor_covariance(post, pred);
    }
}
impl Real for f64 {}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn condition_covariance(post: &mut Mat<Self>, pred: &Mat<Self>) {
        linalg::floor_covariance(post, pred);
    }
}
impl Real for f32 {}

impl Scalar for BigRational {
    fn from_f64_lossy(x: f64) -> Self {
        Ratio::<BigInt>::from_float(x).unwrap_or_else(|| panic!("{x} is not finite"))
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

impl Scalar for Ratio<i128> {
    fn is_finite_value(&self) -> bool {
        true
    }
}

/// `base^exp` by repeated multiplication.
pub fn powi<S: Scalar>(base: &S, exp: usize) -> S {
    num_traits::pow(base.clone(), exp)
}

pub fn factorial<S: Scalar>(n: usize) -> S {
    (1..=n).fold(S::one(), |acc, k| acc * S::from_count(k))
}

pub fn two<S: Scalar>() -> S {
    S::one() + S::one()
}
