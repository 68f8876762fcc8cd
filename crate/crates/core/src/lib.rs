//! Pilot-aided channel estimation and nearest-neighbour decoding over
//! stationary bandlimited MIMO flat-fading channels.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the pre-log
//! calculator also runs on exact rationals. The aliases below fix the scalar
//! to `f64`, which is what the command-line tool uses.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chain;
pub mod decoder;
pub mod error;
pub mod estimator;
pub mod fading_sim;
pub mod framing;
pub mod gmi;
pub mod linalg;
pub mod prelog;
mod quadrature;
pub mod rng;
pub mod scalar;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};
pub use framing::{FrameSchedule, Slot};
pub use scalar::Real;
pub use spectra::SpectrumShape;
pub use stats::MeanEstimate;

pub type SpectralDensity = spectra::SpectralDensity<f64>;
pub type SpectralDensity32 = spectra::SpectralDensity<f32>;
pub type ChannelParams = fading_sim::ChannelParams<f64>;
pub type FadingTrace = fading_sim::FadingTrace<f64>;
pub type InterpolatorBank = estimator::InterpolatorBank<f64>;
pub type LinkChain = chain::LinkChain<f64>;
pub type Codebook = decoder::Codebook<f64>;
pub type GmiConfig = gmi::GmiConfig<f64>;
pub type GmiSampler = gmi::GmiSampler<f64>;
pub type PrelogReference = prelog::PrelogReference<f64>;
pub type ExactPrelogReference = prelog::PrelogReference<num_rational::Rational64>;
