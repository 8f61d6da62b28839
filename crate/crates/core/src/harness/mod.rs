//! Experiment orchestration behind the `qcontrast` command-line tool.
//!
//! Each command takes a resolved [`ExperimentConfig`], writes its artifacts
//! under `run.out` together with the resolved config, and returns what it
//! wrote. All randomness is derived from `run.seed`: master, then a stage
//! label, then a trial index, so adding trials leaves earlier streams alone.

mod config;
mod sweep;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{DatasetsConfig, EvaluateConfig, ExperimentConfig, FinetuneConfig, RunConfig, SweepConfig};
pub use sweep::{cmd_sweep, run_trial, SweepGroup, SweepOutput, TrialSeeds};

use crate::datasets::{
    canonical_images, draw_partition, generate_bas, generate_diagonals, generate_perturbed, is_bas,
    is_diagonal, manifest_entries, read_manifest, write_manifest, BinaryImage, ContrastiveSet, Label,
    LabeledImage, Partition, REFERENCE_DIAGONAL_COUNT,
};
use crate::error::{Error, Result};
use crate::evaluation::{accuracy, pairwise_encoder_accuracy, roc, PairAccuracy, RocCurve};
use crate::params::ParameterSet;
use crate::seed;
use crate::training::{
    initial_params, pretrain_encoder, train_classifier, Checkpoint, CheckpointKind, ClassifierModel,
    TrainState,
};

pub const CONFIG_FILE: &str = "config.toml";

/// Creates the output directory and records the resolved config in it.
pub fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let out = cfg.run.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_text(&out.join(CONFIG_FILE), &cfg.to_toml()?)?;
    Ok(out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_text(path, &(json + "\n"))
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Image as four hex digits, bit 15 being the top-left pixel.
pub fn image_hex(img: &BinaryImage) -> String {
    format!("{:04x}", img.to_bits())
}

pub(crate) fn images_hex(images: &[LabeledImage]) -> String {
    images.iter().map(|e| image_hex(&e.image)).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Serialize)]
struct LossRow<'a> {
    phase: &'a str,
    iteration: usize,
    loss: f64,
}

fn loss_rows<'a>(phase: &'a str, history: &[f64]) -> Vec<LossRow<'a>> {
    history
        .iter()
        .enumerate()
        .map(|(iteration, &loss)| LossRow { phase, iteration, loss })
        .collect()
}

/// Loads a checkpoint that must exist for the requested operation.
pub fn require_checkpoint(path: Option<&Path>, kind: CheckpointKind, purpose: &str) -> Result<Checkpoint> {
    let path = path.ok_or_else(|| Error::Config(format!("{purpose} requires a checkpoint")))?;
    if !path.exists() {
        return Err(Error::Config(format!(
            "{purpose}: checkpoint {} does not exist",
            path.display()
        )));
    }
    let ckpt = Checkpoint::load(path)?;
    if ckpt.kind != kind {
        return Err(Error::Config(format!(
            "{purpose}: {} holds a {:?} checkpoint, expected {kind:?}",
            path.display(),
            ckpt.kind
        )));
    }
    Ok(ckpt)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncoderMetrics {
    /// Phase-1 angles on the phase-1 set.
    pub phase1_train: PairAccuracy,
    /// Phase-1 angles on the held-out set.
    pub phase1_test: PairAccuracy,
    /// Final angles on the phase-2 set.
    pub final_train: PairAccuracy,
    /// Final angles on the held-out set.
    pub final_test: PairAccuracy,
}

#[derive(Debug, Clone)]
pub struct PretrainOutput {
    pub checkpoint: PathBuf,
    pub phase1: TrainState,
    pub phase2: TrainState,
    pub metrics: EncoderMetrics,
}

/// Both pretraining phases. Writes `encoder.json`, `loss_history.csv`,
/// `encoder_metrics.json` and the three image manifests used.
pub fn cmd_pretrain(cfg: &ExperimentConfig) -> Result<PretrainOutput> {
    let out = prepare_out(cfg)?;
    let stage = seed::derive(cfg.run.seed, "pretrain");
    let meas = cfg.measurement();
    let outcome = pretrain_encoder(&cfg.pretrain, meas, stage)?;

    let eval_seed = seed::derive(stage, "evaluate");
    let score = |params: &ParameterSet, set: &ContrastiveSet, label: &str| {
        let mut rng = seed::rng(seed::derive(eval_seed, label));
        pairwise_encoder_accuracy(params, set, cfg.classifier.threshold, meas, &mut rng)
    };
    let p1 = &outcome.phase1.params;
    let fin = outcome.params();
    let metrics = EncoderMetrics {
        phase1_train: score(p1, &outcome.sets.phase1, "phase1-train")?,
        phase1_test: score(p1, &outcome.sets.test, "phase1-test")?,
        final_train: score(&fin, &outcome.sets.phase2, "final-train")?,
        final_test: score(&fin, &outcome.sets.test, "final-test")?,
    };

    let checkpoint = out.join("encoder.json");
    Checkpoint::from_state(CheckpointKind::Encoder, None, &outcome.phase2)
        .with_seed("master", cfg.run.seed)
        .with_seed("pretrain", stage)
        .save(&checkpoint)?;
    let mut rows = loss_rows("phase1", &outcome.phase1.loss_history);
    rows.extend(loss_rows("phase2", &outcome.phase2.loss_history));
    write_csv(&out.join("loss_history.csv"), &rows)?;
    write_json(&out.join("encoder_metrics.json"), &metrics)?;
    for (name, set) in [
        ("phase1", &outcome.sets.phase1),
        ("phase2", &outcome.sets.phase2),
        ("test", &outcome.sets.test),
    ] {
        let entries = manifest_entries(set.base(), None, &format!("perturbed/{name}"), Some(stage));
        write_manifest(&out.join(format!("encoder_{name}_images.json")), &entries)?;
    }
    Ok(PretrainOutput {
        checkpoint,
        phase1: outcome.phase1,
        phase2: outcome.phase2,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierMetrics {
    pub regime: String,
    pub n_train: usize,
    pub n_test: usize,
    pub threshold: f64,
    /// Absent when evaluating on a test manifest only.
    pub train_accuracy: Option<f64>,
    pub test_accuracy: f64,
    pub roc: Option<RocCurve>,
}

fn classifier_metrics(
    cfg: &ExperimentConfig,
    params: &ParameterSet,
    regime: &str,
    train: &[LabeledImage],
    test: &[LabeledImage],
    sample_seed: u64,
) -> Result<(ClassifierMetrics, Vec<f64>)> {
    let meas = cfg.measurement();
    let t = cfg.classifier.threshold;
    let eval = |set: &[LabeledImage], label: &str| -> Result<(Vec<f64>, Vec<u8>)> {
        let images: Vec<_> = set.iter().map(|e| e.image).collect();
        let labels = set.iter().map(|e| e.label.as_u8()).collect();
        let mut rng = seed::rng(seed::derive(sample_seed, label));
        Ok((ClassifierModel::new(&images).measured_scores(params, meas, &mut rng)?, labels))
    };
    let train_accuracy = if train.is_empty() {
        None
    } else {
        let (s, l) = eval(train, "train")?;
        Some(accuracy(&s, &l, t)?)
    };
    let (scores, labels) = eval(test, "test")?;
    let both = labels.contains(&0) && labels.contains(&1);
    let metrics = ClassifierMetrics {
        regime: regime.into(),
        n_train: train.len(),
        n_test: test.len(),
        threshold: t,
        train_accuracy,
        test_accuracy: accuracy(&scores, &labels, t)?,
        roc: if both { Some(roc(&scores, &labels)?) } else { None },
    };
    Ok((metrics, scores))
}

#[derive(Debug, Serialize)]
struct ScoreRow {
    index: usize,
    image: String,
    label: u8,
    score: f64,
}

fn score_rows(set: &[LabeledImage], scores: &[f64]) -> Vec<ScoreRow> {
    set.iter()
        .zip(scores)
        .enumerate()
        .map(|(index, (e, &score))| ScoreRow {
            index,
            image: image_hex(&e.image),
            label: e.label.as_u8(),
            score,
        })
        .collect()
}

fn labeled_manifest(path: &Path) -> Result<Vec<LabeledImage>> {
    read_manifest(path)?
        .iter()
        .map(|e| {
            e.labeled()
                .ok_or_else(|| Error::Data(format!("{}: entry without a label", path.display())))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FinetuneOutput {
    pub checkpoint: PathBuf,
    pub state: TrainState,
    pub partition: Partition,
    pub metrics: ClassifierMetrics,
}

/// Trains one classifier. The training set comes from `finetune.train_manifest`
/// or a balanced random draw; the test set is a balanced draw from the
/// canonical images not used for training.
pub fn cmd_finetune(cfg: &ExperimentConfig) -> Result<FinetuneOutput> {
    let out = prepare_out(cfg)?;
    let ft = &cfg.finetune;
    let stage = seed::derive(cfg.run.seed, "finetune");
    let encoder = match ft.regime {
        crate::training::Regime::Pretrained => Some(
            require_checkpoint(ft.checkpoint.as_deref(), CheckpointKind::Encoder, "pretrained fine-tuning")?
                .params()?,
        ),
        crate::training::Regime::Random => None,
    };
    let mut rng = seed::rng(seed::derive(stage, "partition"));
    let partition = match &ft.train_manifest {
        None => draw_partition(&mut rng, ft.n_train, ft.n_test, ft.avoid_rotation_pairs)?,
        Some(path) => {
            let train = labeled_manifest(path)?;
            let test = held_out_test(&train, ft.n_test, &mut rng)?;
            Partition { train, test }
        }
    };
    let init = initial_params(ft.regime, encoder.as_ref(), &mut seed::rng(seed::derive(stage, "init")))?;
    let mut ccfg = cfg.classifier.clone();
    ccfg.spsa.seed = seed::derive(stage, "spsa");
    let state = train_classifier(&partition.train, init, ft.regime, cfg.measurement(), &ccfg)?;
    let (metrics, scores) = classifier_metrics(
        cfg,
        &state.params,
        ft.regime.name(),
        &partition.train,
        &partition.test,
        seed::derive(stage, "evaluate"),
    )?;

    let checkpoint = out.join("classifier.json");
    Checkpoint::from_state(CheckpointKind::Classifier, Some(ft.regime), &state)
        .with_seed("master", cfg.run.seed)
        .with_seed("finetune", stage)
        .with_seed("spsa", ccfg.spsa.seed)
        .save(&checkpoint)?;
    write_csv(&out.join("loss_history.csv"), &loss_rows("finetune", &state.loss_history))?;
    write_csv(&out.join("test_scores.csv"), &score_rows(&partition.test, &scores))?;
    write_json(&out.join("classifier_metrics.json"), &metrics)?;
    for (name, set) in [("train", &partition.train), ("test", &partition.test)] {
        let entries: Vec<_> = set
            .iter()
            .flat_map(|e| manifest_entries(&[e.image], Some(e.label), &format!("partition/{name}"), Some(stage)))
            .collect();
        write_manifest(&out.join(format!("{name}_manifest.json")), &entries)?;
    }
    Ok(FinetuneOutput {
        checkpoint,
        state,
        partition,
        metrics,
    })
}

fn held_out_test<R: rand::Rng + ?Sized>(
    train: &[LabeledImage],
    n_test: usize,
    rng: &mut R,
) -> Result<Vec<LabeledImage>> {
    use rand::seq::SliceRandom;
    let mut test = Vec::with_capacity(n_test);
    for (label, mut pool) in [(Label::Bas, generate_bas()), (Label::Diagonal, generate_diagonals())] {
        pool.retain(|img| !train.iter().any(|e| e.image == *img));
        if pool.len() < n_test / 2 {
            return Err(Error::Data(format!(
                "only {} unused {label:?} images for a test set of {n_test}",
                pool.len()
            )));
        }
        pool.shuffle(rng);
        test.extend(pool[..n_test / 2].iter().map(|&image| LabeledImage { image, label }));
    }
    Ok(test)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EvaluateOutput {
    Encoder(PairAccuracy),
    Classifier(ClassifierMetrics),
}

/// Scores a checkpoint on a manifest. An encoder checkpoint yields pair
/// accuracies over the manifest images and their rotations; a classifier
/// checkpoint yields accuracy and ROC on the labeled manifest.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<EvaluateOutput> {
    let ev = &cfg.evaluate;
    let ckpt_path = ev
        .checkpoint
        .as_deref()
        .ok_or_else(|| Error::Config("evaluate requires a checkpoint".into()))?;
    if !ckpt_path.exists() {
        return Err(Error::Config(format!("checkpoint {} does not exist", ckpt_path.display())));
    }
    let ckpt = Checkpoint::load(ckpt_path)?;
    let manifest = ev
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Config("evaluate requires a manifest".into()))?;
    let out = prepare_out(cfg)?;
    let stage = seed::derive(cfg.run.seed, "evaluate");
    let params = ckpt.params()?;
    let result = match ckpt.kind {
        CheckpointKind::Encoder => {
            let images: Vec<_> = read_manifest(manifest)?.iter().map(|e| e.pixels).collect();
            let set = ContrastiveSet::new(&images)?;
            let mut rng = seed::rng(stage);
            EvaluateOutput::Encoder(pairwise_encoder_accuracy(
                &params,
                &set,
                cfg.classifier.threshold,
                cfg.measurement(),
                &mut rng,
            )?)
        }
        CheckpointKind::Classifier => {
            let test = labeled_manifest(manifest)?;
            let regime = ckpt.regime.map_or("unknown", |r| r.name());
            let (metrics, scores) = classifier_metrics(cfg, &params, regime, &[], &test, stage)?;
            write_csv(&out.join("scores.csv"), &score_rows(&test, &scores))?;
            EvaluateOutput::Classifier(metrics)
        }
    };
    write_json(&out.join("metrics.json"), &result)?;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub bas: usize,
    pub diagonals: usize,
    pub reference_diagonals: usize,
    pub brute_force_bas: usize,
    pub brute_force_diagonals: usize,
    pub diagonal_discrepancy: i64,
    pub perturbed: usize,
}

#[derive(Debug, Serialize)]
struct ImageRow<'a> {
    generator: &'a str,
    index: usize,
    label: Option<u8>,
    image: String,
}

/// Writes class manifests, a perturbed sample and a census of both classes.
pub fn cmd_datasets(cfg: &ExperimentConfig) -> Result<Census> {
    let out = prepare_out(cfg)?;
    let stage = seed::derive(cfg.run.seed, "datasets");
    let bas = generate_bas();
    let diag = generate_diagonals();
    let perturbed = generate_perturbed(&mut seed::rng(stage), cfg.datasets.perturbed)?;
    let all: Vec<_> = (0..=u16::MAX).map(BinaryImage::from_bits).collect();
    let census = Census {
        bas: bas.len(),
        diagonals: diag.len(),
        reference_diagonals: REFERENCE_DIAGONAL_COUNT,
        brute_force_bas: all.iter().filter(|i| is_bas(i)).count(),
        brute_force_diagonals: all.iter().filter(|i| is_diagonal(i)).count(),
        diagonal_discrepancy: diag.len() as i64 - REFERENCE_DIAGONAL_COUNT as i64,
        perturbed: perturbed.len(),
    };
    if census.diagonal_discrepancy != 0 {
        eprintln!(
            "note: {} diagonal images under the membership rule, reference count {}",
            census.diagonals, census.reference_diagonals
        );
    }
    let groups: [(&str, &[BinaryImage], Option<Label>, Option<u64>); 3] = [
        ("bas", &bas, Some(Label::Bas), None),
        ("diagonals", &diag, Some(Label::Diagonal), None),
        ("perturbed", &perturbed, None, Some(stage)),
    ];
    let mut rows = Vec::new();
    for (name, images, label, s) in groups {
        write_manifest(&out.join(format!("{name}.json")), &manifest_entries(images, label, name, s))?;
        rows.extend(images.iter().enumerate().map(|(index, img)| ImageRow {
            generator: name,
            index,
            label: label.map(Label::as_u8),
            image: image_hex(img),
        }));
    }
    debug_assert_eq!(canonical_images().len(), bas.len() + diag.len());
    write_csv(&out.join("images.csv"), &rows)?;
    write_json(&out.join("census.json"), &census)?;
    Ok(census)
}

