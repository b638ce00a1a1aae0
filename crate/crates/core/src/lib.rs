//! Approximate amplitude encoding on a dense statevector simulator, with a
//! quantum-SVD readout of the entropy of stock correlation matrices.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod encoding;
pub mod error;
pub mod finance;
pub mod loader_post;
pub mod mmd_train;
pub mod pipeline;
pub mod qsvd;
pub mod scalar;
pub mod simulator;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StateVector64 = simulator::StateVector<f64>;
pub type ParamVector64 = simulator::ParamVector<f64>;
pub type TargetEncoding64 = encoding::TargetEncoding<f64>;
pub type TrainRecord64 = mmd_train::TrainRecord<f64>;
pub type StockSeries64 = finance::StockSeries<f64>;
pub type SchmidtSpectrum64 = qsvd::SchmidtSpectrum<f64>;
pub type EntropyReport64 = pipeline::EntropyReport<f64>;
