use std::path::Path;

use nrdk_core::invariants::InvariantKind;
use nrdk_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Architecture of the encoder-decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    /// Channel width of each stage. Stage 1 runs at input resolution, the
    /// rest at half resolution.
    pub widths: Vec<usize>,
    /// Dilation rates of the context module of each stage.
    pub dilations: Vec<Vec<usize>>,
    pub leaky_slope: f64,
    /// Multiplier on the fan-in scaled uniform initialization bound.
    pub init_scale: f64,
    /// Subtract the clip mean and divide by the clip standard deviation before the first layer.
    pub standardize_input: bool,
    /// Layer names (or name prefixes such as `enc1`) whose parameters receive zero gradient.
    pub frozen: Vec<String>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            widths: vec![16, 32, 64, 128],
            dilations: vec![vec![1, 2, 3], vec![1, 2, 3], vec![1, 2], vec![1, 2]],
            leaky_slope: 0.1,
            init_scale: 1.0,
            standardize_input: true,
            frozen: Vec::new(),
        }
    }
}

impl NetConfig {
    /// Two stages of widths 2 and 4.
    pub fn tiny() -> Self {
        Self {
            widths: vec![2, 4],
            ..Self::default()
        }
    }

    pub fn stages(&self) -> usize {
        self.widths.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::config("net.widths", "need at least two stages"));
        }
        if self.widths.contains(&0) {
            return Err(Error::config("net.widths", "widths must be > 0"));
        }
        if self.dilations.len() < self.widths.len() {
            return Err(Error::config(
                "net.dilations",
                format!("{} rate sets for {} stages", self.dilations.len(), self.widths.len()),
            ));
        }
        for rates in &self.dilations[..self.widths.len()] {
            if rates.is_empty() || rates.contains(&0) {
                return Err(Error::config("net.dilations", "each stage needs rates >= 1"));
            }
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::config("net.leaky_slope", "must lie in (0, 1)"));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::config("net.init_scale", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config("net", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("optimizer.lr", "must be finite and > 0"));
        }
        for (key, b) in [("optimizer.beta1", self.beta1), ("optimizer.beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(key, "must lie in [0, 1)"));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("optimizer.eps", "must be > 0"));
        }
        Ok(())
    }
}

/// Everything `train` needs besides the data and the architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: InvariantKind,
    pub seed: u64,
    pub optimizer: AdamConfig,
    /// Degeneracy threshold of the invariant loss, relative to the frame-median Hessian norm.
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 4,
            loss: InvariantKind::Gbr,
            seed: 0,
            optimizer: AdamConfig::default(),
            eps: nrdk_core::invariants::DEFAULT_EPS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be > 0"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("train.eps", "must be > 0"));
        }
        self.optimizer.validate()
    }
}
