//! Gaussian ODE filtering.
//!
//! A probabilistic solver for autonomous initial value problems
//! `ẋ = f(x)`, `x(0) = x₀`: the solution and its first `q` derivatives are
//! modelled by a Gauss–Markov prior (integrated Brownian motion or
//! integrated Ornstein–Uhlenbeck process) and conditioned step by step on
//! evaluations of `f` with a Kalman filter.
//!
//! Modules:
//!
//! * [`prior`]: transition pairs `(A(h), Q(h))`, their oracles, and the
//!   Kronecker construction for coupled dimensions
//! * [`filter`]: initialization, predict, update and the solve loop
//! * [`noise`]: measurement-variance models `R`
//! * [`steady_state`]: closed-form steady states of the `q = 1`
//!   covariance recursion and order-bound checks
//! * [`problems`]: test problems and an RK4 reference integrator
//! * [`diagnostics`]: global error, misalignment, calibration, order fits
//!
//! The filter recursions and the IBM transition are generic over
//! [`Scalar`], so a step can be carried out in exact rational arithmetic
//! ([`Rational`]). Everything needing transcendental functions is generic
//! over [`Real`].

// Negated comparisons deliberately reject NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod linalg;
pub mod noise;
pub mod prior;
pub mod problems;
pub mod scalar;
pub mod steady_state;

pub use error::{FilterError, Result};
pub use filter::{Belief, InitMode, SolveOptions, StepRecord, Trajectory};
pub use linalg::Mat;
pub use noise::NoiseModel;
pub use prior::{PriorKind, PriorSpec, TransitionModel};
pub use problems::IVProblem;
pub use scalar::{Real, Scalar};

/// Arbitrary-precision rational scalar.
pub type Rational = num_rational::BigRational;

pub type Mat64 = Mat<f64>;
pub type Belief64 = Belief<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type PriorSpec64 = PriorSpec<f64>;
pub type NoiseModel64 = NoiseModel<f64>;
pub type TransitionModel64 = TransitionModel<f64>;
pub type IVProblem64 = IVProblem<f64>;

pub type Mat32 = Mat<f32>;
pub type Belief32 = Belief<f32>;
pub type Trajectory32 = Trajectory<f32>;

pub type ExactBelief = Belief<Rational>;
pub type ExactTransitionModel = TransitionModel<Rational>;
