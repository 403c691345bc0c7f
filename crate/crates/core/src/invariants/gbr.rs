use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Frame;

/// Generalized bas-relief transformation `z -> alpha x + beta y + lambda z + tau`, `lambda > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbrParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub tau: f64,
}

impl GbrParams {
    pub const IDENTITY: GbrParams = GbrParams {
        alpha: 0.0,
        beta: 0.0,
        lambda: 1.0,
        tau: 0.0,
    };

    pub fn new(alpha: f64, beta: f64, lambda: f64, tau: f64) -> Result<Self> {
        let g = Self {
            alpha,
            beta,
            lambda,
            tau,
        };
        g.validate()?;
        Ok(g)
    }

    /// Stretch and translation along `z` only.
    pub fn scale_shift(lambda: f64, tau: f64) -> Result<Self> {
        Self::new(0.0, 0.0, lambda, tau)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.alpha, self.beta, self.lambda, self.tau].iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite GBR parameters {self:?}")));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Parameter(format!("GBR lambda must be > 0, got {}", self.lambda)));
        }
        Ok(())
    }

    #[inline]
    pub fn apply_at(&self, x: f64, y: f64, z: f64) -> f64 {
        self.alpha * x + self.beta * y + self.lambda * z + self.tau
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &GbrParams) -> GbrParams {
        GbrParams {
            alpha: self.alpha + self.lambda * first.alpha,
            beta: self.beta + self.lambda * first.beta,
            lambda: self.lambda * first.lambda,
            tau: self.tau + self.lambda * first.tau,
        }
    }

    pub fn inverse(&self) -> GbrParams {
        let l = 1.0 / self.lambda;
        GbrParams {
            alpha: -self.alpha * l,
            beta: -self.beta * l,
            lambda: l,
            tau: -self.tau * l,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.lambda, self.tau]
    }
}

impl Default for GbrParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Pointwise `alpha x + beta y + lambda z + tau` at pixel-center world coordinates.
pub fn gbr_apply(z: &Frame, g: &GbrParams) -> Result<Frame> {
    g.validate()?;
    Ok(Frame::from_fn(z.width(), z.height(), |i, j| {
        let (x, y) = z.world(i, j);
        g.apply_at(x, y, z.get(i, j))
    }))
}
