//! Finite-length bounds and asymptotics for lossless joint source-channel
//! coding of Markov sources over channels with Markov additive noise.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod bounds;
pub mod error;
pub mod markov;
pub mod measures;
pub mod optim;
pub mod oracle;
pub mod scalar;
pub mod tilted;

pub use error::{Error, Result};
pub use markov::{JointChannelChain, SourceChain, SquareMatrix, StochasticMatrix};
pub use scalar::Real;

pub type StochasticMatrixF64 = StochasticMatrix<f64>;
pub type JointChannelChainF64 = JointChannelChain<f64>;
pub type SourceChainF64 = SourceChain<f64>;
pub type StochasticMatrixF32 = StochasticMatrix<f32>;
pub type JointChannelChainF32 = JointChannelChain<f32>;
pub type SourceChainF32 = SourceChain<f32>;
pub type TiltedFamilyF64 = tilted::TiltedFamily<f64>;
pub type TiltedFamilyF32 = tilted::TiltedFamily<f32>;
