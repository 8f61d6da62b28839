use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classifier::Regime;
use super::spsa::{LrScale, TrainState};
use crate::ansatz::SLOT_LAYOUT_VERSION;
use crate::error::{Error, Result};
use crate::params::ParameterSet;

pub const CHECKPOINT_FORMAT: &str = "qcontrast-checkpoint/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointKind {
    Encoder,
    Classifier,
}

/// Serialized parameters plus enough optimizer state to resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub slot_layout: String,
    pub kind: CheckpointKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regime: Option<Regime>,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub iteration: usize,
    pub loss_history: Vec<f64>,
    pub lr_scale: LrScale,
    pub seeds: BTreeMap<String, u64>,
}

impl Checkpoint {
    pub fn from_state(kind: CheckpointKind, regime: Option<Regime>, state: &TrainState) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            slot_layout: SLOT_LAYOUT_VERSION.into(),
            kind,
            regime,
            gamma: state.params.gamma.clone(),
            theta: state.params.theta.clone(),
            phi: state.params.phi.clone(),
            iteration: state.iter,
            loss_history: state.loss_history.clone(),
            lr_scale: state.lr_scale,
            seeds: BTreeMap::new(),
        }
    }

    pub fn with_seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.into(), value);
        self
    }

    pub fn params(&self) -> Result<ParameterSet> {
        ParameterSet::new(self.gamma.clone(), self.theta.clone(), self.phi.clone())
    }

    pub fn train_state(&self) -> Result<TrainState> {
        let mut state = TrainState::new(self.params()?, self.lr_scale)?;
        state.iter = self.iteration;
        state.loss_history = self.loss_history.clone();
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: Option<String>,
            slot_layout: Option<String>,
        }
        let json_err = |source| Error::Json {
            path: "<checkpoint>".into(),
            source,
        };
        let header: Header = serde_json::from_str(text).map_err(json_err)?;
        let check = |what: &str, expected: &str, found: Option<String>| {
            if found.as_deref() != Some(expected) {
                return Err(Error::Schema {
                    what: what.into(),
                    expected: expected.into(),
                    found: found.unwrap_or_else(|| "<missing>".into()),
                });
            }
            Ok(())
        };
        check("checkpoint format", CHECKPOINT_FORMAT, header.format)?;
        check("checkpoint slot layout", SLOT_LAYOUT_VERSION, header.slot_layout)?;
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(json_err)?;
        ckpt.params()?;
        Ok(ckpt)
    }
}
