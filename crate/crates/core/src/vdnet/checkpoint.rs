//! JSON model checkpoints: schema-versioned, row-major parameter dumps
//! plus the training configuration and seed needed for replay.

use super::layer::{DenseVDLayer, LayerMode};
use super::matrix::Matrix;
use super::net::{Activation, Network};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    pub mode: LayerMode,
    pub out_dim: usize,
    pub in_dim: usize,
    pub theta: Vec<f64>,
    pub noise: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub seed: u64,
    pub activation: Activation,
    pub sigma_n: f64,
    pub layers: Vec<LayerCheckpoint>,
    pub train_cfg: TrainConfig,
}

impl Checkpoint {
    pub fn from_trained(net: &Network, cfg: &TrainConfig) -> Self {
        Self {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            seed: cfg.seed,
            activation: net.activation,
            sigma_n: net.sigma_n,
            layers: net
                .layers()
                .iter()
                .map(|l| LayerCheckpoint {
                    mode: l.mode(),
                    out_dim: l.out_dim(),
                    in_dim: l.in_dim(),
                    theta: l.theta().data().to_vec(),
                    noise: l.noise().data().to_vec(),
                    bias: l.bias().to_vec(),
                })
                .collect(),
            train_cfg: *cfg,
        }
    }

    pub fn restore(&self) -> Result<(Network, TrainConfig)> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "checkpoint schema {} unsupported (expected {})",
                self.schema_version, CHECKPOINT_SCHEMA_VERSION
            )));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            layers.push(DenseVDLayer::new(
                l.mode,
                Matrix::from_vec(l.out_dim, l.in_dim, l.theta.clone())?,
                Matrix::from_vec(l.out_dim, l.in_dim, l.noise.clone())?,
                l.bias.clone(),
            )?);
        }
        if layers.is_empty() {
            return Err(Error::Config("checkpoint has no layers".into()));
        }
        Ok((
            Network {
                layers,
                activation: self.activation,
                sigma_n: self.sigma_n,
            },
            self.train_cfg,
        ))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("checkpoint parse failed: {e}")))
    }
}
