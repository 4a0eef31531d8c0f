use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Network, NetworkSpec};
use crate::data::MinMaxScaler;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON container for a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    #[serde(default)]
    pub scaler: Option<MinMaxScaler>,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn from_network(net: &Network, scaler: Option<MinMaxScaler>, config_hash: &str) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            spec: net.spec(),
            params: net.flat_params(),
            scaler,
            config_hash: config_hash.to_string(),
        }
    }

    pub fn network(&self) -> Result<Network> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        let mut net = Network::build(&self.spec, 0)?;
        net.set_flat_params(&self.params)?;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
