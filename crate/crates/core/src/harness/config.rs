//! Experiment configuration: one TOML file with a section per stage.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Command-line flags override the `[run]` section after loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::{ClassifierConfig, Measurement, PretrainConfig, Regime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stage and trial seed is derived from it.
    pub seed: u64,
    /// Shots per circuit when sampling.
    pub shots: u64,
    /// Exact probabilities everywhere instead of shot sampling.
    pub noiseless: bool,
    /// Worker threads for trial parallelism; 0 picks the machine default.
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            shots: 200,
            noiseless: false,
            workers: 0,
            out: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Training-set sizes `N_L`.
    pub n_train: Vec<usize>,
    pub n_test: usize,
    pub n_partitions: usize,
    pub regimes: Vec<Regime>,
    /// Redraw training sets that contain an image together with a rotation of it.
    pub avoid_rotation_pairs: bool,
    /// Encoder checkpoint for the pretrained regime.
    pub checkpoint: Option<PathBuf>,
    /// Initializations per `N_L` for the fixed-data initialization sweep; 0 skips it.
    pub init_trials: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_train: vec![4, 8, 12, 16],
            n_test: 36,
            n_partitions: 500,
            regimes: vec![Regime::Pretrained, Regime::Random],
            avoid_rotation_pairs: false,
            checkpoint: None,
            init_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneConfig {
    pub regime: Regime,
    pub n_train: usize,
    pub n_test: usize,
    pub avoid_rotation_pairs: bool,
    /// Encoder checkpoint; required for the pretrained regime.
    pub checkpoint: Option<PathBuf>,
    /// Labeled training manifest; when absent a balanced partition is drawn.
    pub train_manifest: Option<PathBuf>,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            regime: Regime::Pretrained,
            n_train: 16,
            n_test: 36,
            avoid_rotation_pairs: false,
            checkpoint: None,
            train_manifest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub checkpoint: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetsConfig {
    /// Perturbed images to emit alongside the canonical classes.
    pub perturbed: usize,
}

impl Default for DatasetsConfig {
    fn default() -> Self {
        Self { perturbed: 17 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub pretrain: PretrainConfig,
    pub classifier: ClassifierConfig,
    pub finetune: FinetuneConfig,
    pub evaluate: EvaluateConfig,
    pub sweep: SweepConfig,
    pub datasets: DatasetsConfig,
}

impl ExperimentConfig {
    /// Parses `text` layered over the defaults. Tables merge key by key, so
    /// a partial `[pretrain.phase1]` keeps the phase-1 defaults it omits.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg_err = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
        let user: toml::Table = toml::from_str(text).map_err(|e| cfg_err(&e))?;
        let mut merged = toml::Table::try_from(Self::default()).map_err(|e| cfg_err(&e))?;
        merge(&mut merged, user);
        let cfg: Self = toml::Value::Table(merged).try_into().map_err(|e| cfg_err(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn measurement(&self) -> Measurement {
        if self.run.noiseless {
            Measurement::Exact
        } else {
            Measurement::Shots(self.run.shots)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.run.seed > i64::MAX as u64 {
            return err(format!("seed {} exceeds {}", self.run.seed, i64::MAX));
        }
        if self.run.shots == 0 {
            return err("shots must be positive".into());
        }
        let p = &self.pretrain;
        if p.phase1_images < 2 || p.phase2_images < 2 || p.test_images < 2 {
            return err("pretraining sets need at least 2 base images each".into());
        }
        if !(p.tau > 0.0) {
            return err(format!("tau must be positive, got {}", p.tau));
        }
        if p.stop.window == 0 {
            return err("stop window must be positive".into());
        }
        p.phase1.validate()?;
        p.phase2.validate()?;
        self.classifier.spsa.validate()?;
        if !(0.0..=1.0).contains(&self.classifier.threshold) {
            return err(format!("threshold {} outside [0, 1]", self.classifier.threshold));
        }
        if !(self.classifier.theta_lr_scale >= 0.0) {
            return err("theta_lr_scale must be >= 0".into());
        }
        let s = &self.sweep;
        if s.n_train.is_empty() || s.regimes.is_empty() {
            return err("sweep needs at least one n_train and one regime".into());
        }
        for &n in s.n_train.iter().chain([&s.n_test, &self.finetune.n_train, &self.finetune.n_test]) {
            if n == 0 || n % 2 != 0 {
                return err(format!("set sizes must be positive and even, got {n}"));
            }
        }
        if s.n_partitions == 0 {
            return err("n_partitions must be positive".into());
        }
        if self.datasets.perturbed == 0 {
            return err("datasets.perturbed must be positive".into());
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.sweep.n_train, vec![4, 8, 12, 16]);
        assert_eq!(cfg.sweep.n_partitions, 500);
        assert_eq!(cfg.sweep.n_test, 36);
        assert_eq!(cfg.run.shots, 200);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.run.noiseless = true;
        cfg.sweep.checkpoint = Some("enc.json".into());
        cfg.pretrain.phase1.a = 0.35;
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[sweep]\nn_train = [4]\nregimes = [\"random\"]\n[pretrain.phase1]\nA = 20.0\n",
        )
        .unwrap();
        assert_eq!(cfg.sweep.n_train, vec![4]);
        assert_eq!(cfg.sweep.regimes, vec![Regime::Random]);
        assert_eq!(cfg.pretrain.phase1.big_a, 20.0);
        assert_eq!(cfg.pretrain.phase1.max_iters, 400);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[sweep]\nn_train = [3]",
            "[run]\nshots = 0",
            "[sweep]\nn_partitions = 0",
            "[run]\nbogus = 1",
            "[classifier.spsa]\nalpha = 2.0",
        ] {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }
}
