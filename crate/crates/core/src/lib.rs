//! Full-reference quality assessment for compressed HDR video.
//!
//! The crate is organized around a shared, perceptually weighted wavelet
//! transform: every quality feature ("atom") is computed from the same
//! per-frame Haar pyramids, so the expensive per-pixel work is done once
//! per plane per frame no matter how many features a model consumes.
//!
//! Pipeline overview:
//!
//! ```text
//! Y4M / raw YUV ──► PlanarFrame ──► SAST rescale ──► Haar DWT ──► CSF
//!                       │                                          │
//!                       ├── HDRMAX preprocessing ──► (same) ───────┤
//!                       ▼                                          ▼
//!                   transfer                            atom features ──► fusion ──► MOS
//! ```
//!
//! Modules:
//! - [`frameio`]: Y4M and raw planar YUV decoding into normalized frames.
//! - [`transfer`]: PQ EOTF, PU21 encoding, and the HDRMAX non-linearities.
//! - [`unified`]: SAST rescaling, multi-level Haar wavelets, CSF weighting.
//! - [`atoms`]: per-frame quality features computed in the shared pyramid.
//! - [`fusion`]: declarative model specs and ridge-regression fusion.
//! - [`eval`]: dataset manifests, content-separated splits, accuracy stats,
//!   and a synthetic dataset generator for self-contained testing.

pub mod atoms;
pub mod eval;
pub mod frameio;
pub mod fusion;
pub mod kernels;
pub mod plane;
pub mod transfer;
pub mod unified;

pub use atoms::{AtomsError, FeatureRecord, VideoPairExtractor};
pub use eval::{DatasetManifest, EvalError, FeatureMatrix, SplitProtocol, SplitReport};
pub use frameio::{ChromaSubsampling, FrameIoError, FrameSource, PlanarFrame, VideoPairStream};
pub use fusion::{FusionError, ModelSpec, TrainedModel};
pub use plane::Plane;
pub use transfer::{HdrmaxVariant, LocalNormConfig, TransferError};
pub use unified::{CsfWeights, UnifiedError, ViewingGeometry, WaveletPyramid};

/// Any error produced by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    FrameIo(#[from] FrameIoError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Unified(#[from] UnifiedError),
    #[error(transparent)]
    Atoms(#[from] AtomsError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
