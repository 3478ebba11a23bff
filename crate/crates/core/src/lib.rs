//! Wavelet-based power side-channel disassembly.
//!
//! Traces are segmented into clock-cycle windows, transformed with a continuous
//! wavelet transform, rendered to scalograms and classified by instruction.
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

pub mod bench;
pub mod classify;
pub mod cwt;
mod error;
pub mod scalar;
pub mod scalogram;
pub mod selection;
pub mod spectral;
pub mod trace;
pub mod wavelets;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use wavelets::{Symmetry, WaveletSpec};

pub type Trace = trace::Trace<f64>;
pub type LabeledWindow = trace::LabeledWindow<f64>;
pub type CoefficientMatrix = cwt::CoefficientMatrix<f64>;
pub type CwtPlan = cwt::CwtPlan<f64>;
pub type Spectrum = spectral::Spectrum<f64>;
pub type Spectrogram = spectral::Spectrogram<f64>;
pub type Dataset = classify::Dataset<f64>;
pub type CentroidModel = classify::CentroidModel<f64>;
pub type XcorrSequence = selection::XcorrSequence<f64>;

pub type TraceF32 = trace::Trace<f32>;
pub type CoefficientMatrixF32 = cwt::CoefficientMatrix<f32>;
pub type DatasetF32 = classify::Dataset<f32>;
