//! Synthetic non-rigid surface clips and the machinery to learn and stitch
//! depth videos that are only defined up to a generalized bas-relief (GBR)
//! transformation `z -> alpha x + beta y + lambda z + tau`.
//!
//! Modules, bottom-up:
//! - [`tensor`], [`fft`], [`rng`], [`resample`]: numeric plumbing.
//! - [`synth`]: Fourier-noise displacement model of a deforming patch.
//! - [`render`]: orthographic Phong shading, ray-cast depth, textures.
//! - [`dataset`]: the NRSD clip container and its JSON manifest.
//! - [`invariants`]: the GBR group, derivative jets, invariant fields, moving frames, fits.
//! - [`losses`]: invariant training losses with analytic gradients, and MAE-SN.
//! - [`stitcher`]: overlap-add reconstruction of large depth videos from patches.

pub mod config;
pub mod dataset;
pub mod error;
pub mod fft;
pub mod invariants;
pub mod losses;
pub mod render;
pub mod resample;
pub mod rng;
pub mod stitcher;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use rng::SeededRng;
pub use tensor::{Frame, VideoTensor};
