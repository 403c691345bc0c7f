//! Generalized bas-relief (GBR) transformations of depth maps and their
//! differential invariants.
//!
//! Pixel `(i, j)` of a `W x H` frame sits at world coordinates
//! `x = -1 + (2i + 1) / W`, `y = -1 + (2j + 1) / H`.

mod field;
mod fit;
mod gbr;
mod jet;

pub use field::{degeneracy_mask, eta, invariant, iota, moving_frame, InvariantField, InvariantKind, DEFAULT_EPS};
pub use fit::{fit_linear, fit_plane, gbr_fit, FitMode, LinearFit};
pub use gbr::{gbr_apply, GbrParams};
pub use jet::{hessian_norm, jet, jet_adjoint, JetGrad, SecondOrderJet, MIN_JET_SIDE};
