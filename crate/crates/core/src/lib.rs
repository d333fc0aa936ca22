//! Single-spin-flip dynamics of the one-dimensional Ising chain.
//!
//! The crate covers the irreversible "align with your left neighbour" chain
//! and its reversible Glauber counterpart: transition kernels, exact
//! stationary measures and currents, the low-temperature expansion of the
//! plus-boundary stationary measure, its Catalan-triangle closed forms, and
//! Monte Carlo trajectories.
//!
//! Exact computations are generic over [`Scalar`], implemented for `f64`,
//! `f32` and [`BigRational`]. The aliases below fix the two common choices.

pub mod catalan;
pub mod distribution;
pub mod error;
pub mod kernels;
pub mod montecarlo;
pub mod perturbation;
pub mod scalar;
pub mod spin;
pub mod stationary;
pub mod stats;

pub use num_rational::BigRational;

pub use distribution::{tv_distance, Distribution};
pub use error::{Error, Result};
pub use kernels::{Kernel, KernelKind};
pub use scalar::Scalar;
pub use spin::{Boundary, ModelParams, SpinConfig, StateClass};

pub type Params64 = ModelParams<f64>;
pub type Distribution64 = Distribution<f64>;
pub type Kernel64 = Kernel<f64>;

pub type ExactParams = ModelParams<BigRational>;
pub type ExactDistribution = Distribution<BigRational>;
pub type ExactKernel = Kernel<BigRational>;
