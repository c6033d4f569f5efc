//! Stein-factor computation for discrete distributions through reversible
//! Markov generators.
//!
//! Given a target distribution on `{0, ..., N}`, the crate builds a
//! birth-death (or dense reversible) generator with that stationary law,
//! computes expected hitting times by several independent routes, assembles
//! the deviation kernel that solves the generator-form Stein equation, and
//! certifies the resulting bounds on the Stein solution and its gradient
//! against the chain's mixing, relaxation, averaging, strong stationary and
//! deviation times. Every computed quantity has an independent verification
//! path in [`oracle`].
//!
//! The numeric code is generic over the scalar through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix the common choice.

pub mod chainparams;
pub mod distributions;
pub mod error;
pub mod generators;
pub mod hitting;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod stein;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Pmf64 = distributions::Pmf<f64>;
pub type TruncatedPmf64 = distributions::TruncatedPmf<f64>;
pub type BirthDeath64 = generators::BirthDeathGenerator<f64>;
pub type RateMatrix64 = generators::RateMatrix<f64>;
pub type Generator64 = generators::Generator<f64>;
pub type Mat64 = linalg::Mat<f64>;
pub type Spectrum64 = spectral::Spectrum<f64>;
pub type HittingTable64 = hitting::HittingTimeTable<f64>;
pub type DeviationKernel64 = stein::DeviationKernel<f64>;
pub type ChainParams64 = chainparams::ChainParams<f64>;
pub type Semigroup64 = chainparams::Semigroup<f64>;
