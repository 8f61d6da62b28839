//! Contrastive pretraining of the encoder angles `(γ, θ)`.
//!
//! Two phases: `γ` and `θ` are first co-optimized on one perturbed set with
//! exact overlaps; `γ` is then frozen, `θ` re-drawn, and `θ` alone is trained
//! on a second set with (optionally) shot-sampled overlaps.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::loss::{contrastive_loss, DEFAULT_TAU};
use super::model::{Measurement, OverlapEvaluator};
use super::spsa::{has_converged, spsa_step, LrScale, SpsaConfig, TrainState};
use crate::datasets::{generate_perturbed_excluding, ContrastiveSet};
use crate::error::Result;
use crate::params::{random_angles, ParameterSet, GAMMA_LEN, THETA_LEN};
use crate::seed;

/// Early-stopping rule: stop once the mean absolute loss change over the
/// last `window` iterations drops below `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub window: usize,
    pub tolerance: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            window: 20,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub tau: f64,
    /// `N_U` of the joint `(γ, θ)` phase.
    pub phase1_images: usize,
    /// `N_U` of the `θ`-only phase.
    pub phase2_images: usize,
    /// Base images held out for pair-accuracy evaluation.
    pub test_images: usize,
    pub phase1: SpsaConfig,
    pub phase2: SpsaConfig,
    pub stop: StopRule,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            phase1_images: 6,
            phase2_images: 5,
            test_images: 6,
            phase1: SpsaConfig {
                max_iters: 400,
                ..SpsaConfig::default()
            },
            phase2: SpsaConfig {
                max_iters: 200,
                ..SpsaConfig::default()
            },
            stop: StopRule::default(),
        }
    }
}

/// Disjoint perturbed image sets for the two phases and the held-out test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSets {
    pub phase1: ContrastiveSet,
    pub phase2: ContrastiveSet,
    pub test: ContrastiveSet,
}

impl EncoderSets {
    /// Draws the three sets from one seed. No image, nor its rotation,
    /// appears in more than one set.
    pub fn draw(seed_value: u64, cfg: &PretrainConfig) -> Result<Self> {
        let mut used = BTreeSet::new();
        let mut draw = |label: &str, count: usize| -> Result<ContrastiveSet> {
            let mut rng = seed::rng(seed::derive(seed_value, label));
            let images = generate_perturbed_excluding(&mut rng, count, &used)?;
            for img in &images {
                used.extend(img.rotations());
            }
            ContrastiveSet::new(&images)
        };
        Ok(Self {
            phase1: draw("phase1-images", cfg.phase1_images)?,
            phase2: draw("phase2-images", cfg.phase2_images)?,
            test: draw("test-images", cfg.test_images)?,
        })
    }
}

/// Contrastive loss of `params` on `set`.
pub fn contrastive_objective(
    evaluator: &OverlapEvaluator,
    params: &ParameterSet,
    tau: f64,
    measurement: Measurement,
    sample_seed: u64,
) -> Result<f64> {
    let m = evaluator.matrix(params, measurement, &mut seed::rng(sample_seed))?;
    contrastive_loss(&m, tau)
}

/// Runs SPSA on the contrastive loss until `spsa.max_iters` or the stop rule.
/// Groups with zero learning-rate scale in `state` stay fixed.
pub fn train_contrastive(
    set: &ContrastiveSet,
    mut state: TrainState,
    tau: f64,
    measurement: Measurement,
    spsa: &SpsaConfig,
    stop: StopRule,
) -> Result<TrainState> {
    spsa.validate()?;
    let evaluator = OverlapEvaluator::new(&set.images());
    while state.iter < spsa.max_iters {
        spsa_step(
            &mut state,
            |p, s| contrastive_objective(&evaluator, p, tau, measurement, s),
            spsa,
        )?;
        if has_converged(&state.loss_history, stop.window, stop.tolerance) {
            break;
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderOutcome {
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub phase1: TrainState,
    pub phase2: TrainState,
    pub sets: EncoderSets,
}

impl EncoderOutcome {
    pub fn params(&self) -> ParameterSet {
        ParameterSet {
            gamma: self.gamma.clone(),
            theta: self.theta.clone(),
            phi: Vec::new(),
        }
    }
}

/// Phase 1 only: joint `(γ, θ)` training from random angles, exact overlaps.
pub fn pretrain_phase1(set: &ContrastiveSet, cfg: &PretrainConfig, seed_value: u64) -> Result<TrainState> {
    let mut rng = seed::rng(seed::derive(seed_value, "phase1-init"));
    let init = ParameterSet {
        gamma: random_angles(&mut rng, GAMMA_LEN),
        theta: random_angles(&mut rng, THETA_LEN),
        phi: Vec::new(),
    };
    let spsa = SpsaConfig {
        seed: seed::derive(seed_value, "phase1-spsa"),
        ..cfg.phase1.clone()
    };
    let state = TrainState::new(init, LrScale::ONES)?;
    train_contrastive(set, state, cfg.tau, Measurement::Exact, &spsa, cfg.stop)
}

/// Phase 2 only: `γ` frozen, `θ` re-drawn and trained with `measurement`.
pub fn pretrain_phase2(
    set: &ContrastiveSet,
    gamma: &[f64],
    cfg: &PretrainConfig,
    measurement: Measurement,
    seed_value: u64,
) -> Result<TrainState> {
    let mut rng = seed::rng(seed::derive(seed_value, "phase2-init"));
    let init = ParameterSet::new(gamma.to_vec(), random_angles(&mut rng, THETA_LEN), Vec::new())?;
    let spsa = SpsaConfig {
        seed: seed::derive(seed_value, "phase2-spsa"),
        ..cfg.phase2.clone()
    };
    let lr = LrScale {
        gamma: 0.0,
        ..LrScale::ONES
    };
    let state = TrainState::new(init, lr)?;
    train_contrastive(set, state, cfg.tau, measurement, &spsa, cfg.stop)
}

/// Full two-phase pretraining from a single seed.
pub fn pretrain_encoder(cfg: &PretrainConfig, measurement: Measurement, seed_value: u64) -> Result<EncoderOutcome> {
    let sets = EncoderSets::draw(seed::derive(seed_value, "encoder-sets"), cfg)?;
    let phase1 = pretrain_phase1(&sets.phase1, cfg, seed_value)?;
    let phase2 = pretrain_phase2(&sets.phase2, &phase1.params.gamma, cfg, measurement, seed_value)?;
    Ok(EncoderOutcome {
        gamma: phase2.params.gamma.clone(),
        theta: phase2.params.theta.clone(),
        phase1,
        phase2,
        sets,
    })
}

/// Encoder angles pulled from a trained state.
pub fn encoder_params(state: &TrainState) -> (Vec<f64>, Vec<f64>) {
    (state.params.gamma.clone(), state.params.theta.clone())
}
