//! Time-varying displaced surface patches.
//!
//! A patch is the bi-unit square pushed around by a band-limited vector
//! displacement synthesized in the Fourier domain, then moved rigidly:
//! `f(x, t) = E_t(x + d(x, t))`.
//!
//! Frequencies `u` are integer wavenumbers (cycles across the patch), using
//! the FFT bin convention of [`crate::fft::signed_frequency`].

mod field;
mod params;
mod surface;
mod trajectory;

pub use field::{displacement_field, grid_coord, spectral_displacement, PhaseField};
pub use params::{sample_params, DeformationParams, TrajectoryParams};
pub use surface::{build_surface, SurfaceSequence};
pub use trajectory::{axis_angle, frame_time, relative_angle, EuclideanTrajectory, Mat3};
