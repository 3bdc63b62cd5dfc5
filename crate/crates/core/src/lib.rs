//! Link-level simulation and analytics for ARQ over block-fading MIMO channels.

pub mod arq;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod fec;
pub mod info;
pub mod linalg;
pub mod modulation;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tradeoff;

pub use error::{Error, Result};
pub use scalar::{Rate, Real};

/// Double-precision complex matrix.
pub type CMatrix64 = linalg::CMatrix<f64>;
/// Single-precision complex matrix.
pub type CMatrix32 = linalg::CMatrix<f32>;
/// Double-precision fading draw.
pub type ChannelDraw64 = channel::ChannelDraw<f64>;
/// Double-precision transmission chain.
pub type Link64 = arq::Link<f64>;
/// Single-precision transmission chain.
pub type Link32 = arq::Link<f32>;
/// Double-precision constellation.
pub type Constellation64 = modulation::Constellation<f64>;
/// Double-precision dispersion rotation.
pub type RotationSpec64 = modulation::RotationSpec<f64>;
