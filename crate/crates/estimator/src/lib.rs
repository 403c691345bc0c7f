//! Depth estimation network for 64x64x16 grayscale clips.
//!
//! A 3D convolutional encoder-decoder with atrous context modules predicts a
//! 32x32x16 depth clip. Gradients are computed by hand-written reverse-mode
//! passes; training minimizes one of the invariant losses from `nrdk-core`
//! with Adam.

pub mod checkpoint;
pub mod config;
pub mod conv;
pub mod net;
pub mod optim;
pub mod train;
pub mod volume;

pub use config::{AdamConfig, NetConfig, TrainConfig};
pub use net::Network;
pub use train::{split_indices, train, Sample, Split, TrainOutput, TrainState};
pub use volume::Volume;
