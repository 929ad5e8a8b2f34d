//! Finite-horizon Markov decision processes and an abdominal aortic
//! aneurysm (AAA) surgery-timing model built on them.
//!
//! The decision-process core in [`mdp`] is generic over the [`Scalar`]
//! type. The aliases below fix it to `f64` for everyday use and to
//! [`BigRational`](num_rational::BigRational) for exact checks.

pub mod analysis;
pub mod mdp;
pub mod model;
pub mod params;
pub mod scalar;

pub use scalar::Scalar;

pub type Process = mdp::DecisionProcess<f64>;
pub type Values = mdp::ValueFunction<f64>;
pub type Matrix = mdp::TransitionMatrix<f64>;

pub type ExactProcess = mdp::DecisionProcess<num_rational::BigRational>;
pub type ExactValues = mdp::ValueFunction<num_rational::BigRational>;
