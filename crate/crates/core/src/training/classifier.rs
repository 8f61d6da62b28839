//! Supervised training of the classifier `V_φ A_γ(x) U_θ`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::bce_loss;
use super::model::{ClassifierModel, Measurement};
use super::spsa::{spsa_step, LrScale, SpsaConfig, TrainState};
use crate::datasets::{BinaryImage, Label, LabeledImage};
use crate::error::{Error, Result};
use crate::params::{random_angles, ParameterSet, GAMMA_LEN, PHI_LEN, THETA_LEN};
use crate::seed;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// How the classifier is initialized and which groups it trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `γ, θ` from the contrastive encoder; `γ` frozen, `θ` at a reduced rate.
    Pretrained,
    /// Every angle random and trained at the full rate.
    Random,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Pretrained => "pretrained",
            Regime::Random => "random",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrained" => Ok(Regime::Pretrained),
            "random" => Ok(Regime::Random),
            other => Err(Error::Config(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub spsa: SpsaConfig,
    /// Learning-rate multiplier on `θ` in the pretrained regime.
    pub theta_lr_scale: f64,
    pub threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            spsa: SpsaConfig {
                a: 1.0,
                max_iters: 100,
                ..SpsaConfig::default()
            },
            theta_lr_scale: 0.05,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl ClassifierConfig {
    pub fn lr_scale(&self, regime: Regime) -> LrScale {
        match regime {
            Regime::Pretrained => LrScale {
                gamma: 0.0,
                theta: self.theta_lr_scale,
                phi: 1.0,
            },
            Regime::Random => LrScale::ONES,
        }
    }
}

/// Starting angles for a regime. The pretrained regime takes `γ, θ` from the
/// encoder and `φ` from `rng`; the random regime draws all three groups.
/// `φ` is drawn first in both regimes so the two share it for a given stream.
pub fn initial_params<R: Rng + ?Sized>(
    regime: Regime,
    encoder: Option<&ParameterSet>,
    rng: &mut R,
) -> Result<ParameterSet> {
    let phi = random_angles(rng, PHI_LEN);
    match regime {
        Regime::Pretrained => {
            let enc = encoder.ok_or_else(|| {
                Error::Config("pretrained regime requires an encoder checkpoint".into())
            })?;
            ParameterSet::new(enc.gamma.clone(), enc.theta.clone(), phi)
        }
        Regime::Random => {
            let gamma = random_angles(rng, GAMMA_LEN);
            let theta = random_angles(rng, THETA_LEN);
            ParameterSet::new(gamma, theta, phi)
        }
    }
}

fn split(examples: &[LabeledImage]) -> (Vec<BinaryImage>, Vec<u8>) {
    examples.iter().map(|e| (e.image, e.label.as_u8())).unzip()
}

/// Mean BCE of the (measured) classifier scores on `examples`.
pub fn classifier_objective(
    model: &ClassifierModel,
    labels: &[u8],
    params: &ParameterSet,
    measurement: Measurement,
    sample_seed: u64,
) -> Result<f64> {
    let scores = model.measured_scores(params, measurement, &mut seed::rng(sample_seed))?;
    bce_loss(&scores, labels)
}

/// Fine-tunes `init` on `train` for `cfg.spsa.max_iters` SPSA steps.
pub fn train_classifier(
    train: &[LabeledImage],
    init: ParameterSet,
    regime: Regime,
    measurement: Measurement,
    cfg: &ClassifierConfig,
) -> Result<TrainState> {
    cfg.spsa.validate()?;
    if train.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    for group in [&init.gamma, &init.theta, &init.phi] {
        if group.is_empty() {
            return Err(Error::Structural("classifier needs gamma, theta and phi".into()));
        }
    }
    let (images, labels) = split(train);
    let model = ClassifierModel::new(&images);
    let mut state = TrainState::new(init, cfg.lr_scale(regime))?;
    while state.iter < cfg.spsa.max_iters {
        spsa_step(
            &mut state,
            |p, s| classifier_objective(&model, &labels, p, measurement, s),
            &cfg.spsa,
        )?;
    }
    Ok(state)
}

/// Label for a score: positive only when strictly above `threshold`.
pub fn label_for(score: f64, threshold: f64) -> Label {
    if score > threshold {
        Label::Bas
    } else {
        Label::Diagonal
    }
}

/// Score and predicted label of one image.
pub fn predict<R: Rng + ?Sized>(
    image: &BinaryImage,
    params: &ParameterSet,
    measurement: Measurement,
    rng: &mut R,
    threshold: f64,
) -> Result<(f64, Label)> {
    let p = super::model::classifier_score(image, params)?;
    let score = measurement.read(p, rng)?;
    Ok((score, label_for(score, threshold)))
}
