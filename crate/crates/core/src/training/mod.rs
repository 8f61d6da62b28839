//! Losses, the SPSA optimizer, encoder pretraining and classifier fine-tuning.

pub mod checkpoint;
pub mod classifier;
pub mod encoder;
pub mod loss;
pub mod model;
pub mod spsa;

pub use checkpoint::{Checkpoint, CheckpointKind};
pub use classifier::{initial_params, label_for, predict, train_classifier, ClassifierConfig, Regime};
pub use encoder::{pretrain_encoder, EncoderOutcome, EncoderSets, PretrainConfig, StopRule};
pub use loss::{bce_loss, contrastive_loss};
pub use model::{classifier_score, feature_state, ClassifierModel, Measurement, OverlapEvaluator};
pub use spsa::{spsa_step, spsa_step_flat, LrScale, SpsaConfig, TrainState};
