//! The draw–train–test sweep and the fixed-data initialization sweep.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::{images_hex, prepare_out, require_checkpoint, write_csv, write_json, ExperimentConfig};
use crate::datasets::{draw_partition, LabeledImage, Partition};
use crate::error::{Error, Result};
use crate::evaluation::{accuracy, aggregate, pooled_roc, GroupStats, RocCurve, TrialResult};
use crate::params::ParameterSet;
use crate::seed;
use crate::training::{
    initial_params, train_classifier, CheckpointKind, ClassifierConfig, ClassifierModel, Measurement, Regime,
};

/// Seeds for one training run. In the main sweep `init` is shared by every
/// trial; the others are per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub init: u64,
    pub spsa: u64,
    pub evaluate: u64,
}

/// One training run of `regime` on `partition`, scored on its test set.
pub fn run_trial(
    cfg: &ClassifierConfig,
    measurement: Measurement,
    encoder: Option<&ParameterSet>,
    regime: Regime,
    partition: &Partition,
    seeds: TrialSeeds,
) -> Result<(ParameterSet, f64, Vec<f64>, Vec<u8>)> {
    let init = initial_params(regime, encoder, &mut seed::rng(seeds.init))?;
    let mut ccfg = cfg.clone();
    ccfg.spsa.seed = seeds.spsa;
    let state = train_classifier(&partition.train, init, regime, measurement, &ccfg)?;
    let score = |set: &[LabeledImage], label: &str| -> Result<(Vec<f64>, Vec<u8>)> {
        let images: Vec<_> = set.iter().map(|e| e.image).collect();
        let mut rng = seed::rng(seed::derive(seeds.evaluate, label));
        let scores = ClassifierModel::new(&images).measured_scores(&state.params, measurement, &mut rng)?;
        Ok((scores, set.iter().map(|e| e.label.as_u8()).collect()))
    };
    let (train_scores, train_labels) = score(&partition.train, "train")?;
    let train_accuracy = accuracy(&train_scores, &train_labels, cfg.threshold)?;
    let (scores, labels) = score(&partition.test, "test")?;
    Ok((state.params, train_accuracy, scores, labels))
}

#[derive(Debug, Serialize)]
struct TrialRow<'a> {
    regime: &'a str,
    n_train: usize,
    trial: usize,
    seed: u64,
    train_accuracy: f64,
    test_accuracy: f64,
    train_set: String,
}

#[derive(Debug, Serialize)]
struct ScoreRow<'a> {
    regime: &'a str,
    n_train: usize,
    trial: usize,
    index: usize,
    label: u8,
    score: f64,
}

/// Statistics of one `(regime, N_L)` group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGroup {
    pub regime: Regime,
    pub n_train: usize,
    pub test_accuracy: GroupStats,
    /// ROC over the pooled test scores of every trial in the group.
    pub roc: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Summary<'a> {
    master_seed: u64,
    noiseless: bool,
    n_partitions: usize,
    n_test: usize,
    groups: &'a [SweepGroup],
    #[serde(skip_serializing_if = "Option::is_none")]
    init_sweep: Option<&'a [SweepGroup]>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub out: PathBuf,
    pub trials: Vec<TrialResult>,
    pub groups: Vec<SweepGroup>,
    pub init_trials: Vec<TrialResult>,
    pub init_groups: Vec<SweepGroup>,
}

impl SweepOutput {
    pub fn group(&self, regime: Regime, n_train: usize) -> Option<&SweepGroup> {
        self.groups.iter().find(|g| g.regime == regime && g.n_train == n_train)
    }
}

fn summarize(trials: &[TrialResult]) -> Result<Vec<SweepGroup>> {
    let stats = aggregate(trials)?;
    let mut rocs = pooled_roc(trials)?;
    Ok(stats
        .into_iter()
        .map(|((regime, n_train), test_accuracy)| SweepGroup {
            regime,
            n_train,
            test_accuracy,
            roc: rocs.remove(&(regime, n_train)).expect("same keys"),
        })
        .collect())
}

/// A unit of parallel work: one data partition trained under every regime.
struct Job {
    n_train: usize,
    trial: usize,
    partition_seed: u64,
    init_seed: u64,
}

fn run_jobs(
    cfg: &ExperimentConfig,
    encoder: Option<&ParameterSet>,
    jobs: &[Job],
    partitions: &(dyn Fn(&Job) -> Result<Partition> + Sync),
) -> Result<Vec<(Partition, Vec<TrialResult>)>> {
    let meas = cfg.measurement();
    let regimes = &cfg.sweep.regimes;
    let work = || {
        jobs.par_iter()
            .map(|job| -> Result<(Partition, Vec<TrialResult>)> {
                let partition = partitions(job)?;
                let results = regimes
                    .iter()
                    .map(|&regime| {
                        let trial_seed =
                            seed::derive_index(seed::derive(job.partition_seed, regime.name()), job.trial as u64);
                        let seeds = TrialSeeds {
                            init: job.init_seed,
                            spsa: seed::derive(trial_seed, "spsa"),
                            evaluate: seed::derive(trial_seed, "evaluate"),
                        };
                        let (_, train_accuracy, scores, labels) =
                            run_trial(&cfg.classifier, meas, encoder, regime, &partition, seeds)?;
                        Ok(TrialResult {
                            regime,
                            n_train: job.n_train,
                            trial: job.trial,
                            seed: trial_seed,
                            train_accuracy,
                            test_accuracy: accuracy(&scores, &labels, cfg.classifier.threshold)?,
                            scores,
                            labels,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((partition, results))
            })
            .collect::<Result<Vec<_>>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.run.workers)))?;
    pool.install(work)
}

fn write_trials(
    dir: &std::path::Path,
    prefix: &str,
    results: &[(Partition, Vec<TrialResult>)],
) -> Result<Vec<TrialResult>> {
    let mut rows = Vec::new();
    let mut score_rows = Vec::new();
    for (partition, trials) in results {
        for t in trials {
            rows.push(TrialRow {
                regime: t.regime.name(),
                n_train: t.n_train,
                trial: t.trial,
                seed: t.seed,
                train_accuracy: t.train_accuracy,
                test_accuracy: t.test_accuracy,
                train_set: images_hex(&partition.train),
            });
            score_rows.extend(t.scores.iter().zip(&t.labels).enumerate().map(|(index, (&score, &label))| {
                ScoreRow {
                    regime: t.regime.name(),
                    n_train: t.n_train,
                    trial: t.trial,
                    index,
                    label,
                    score,
                }
            }));
        }
    }
    write_csv(&dir.join(format!("{prefix}trials.csv")), &rows)?;
    write_csv(&dir.join(format!("{prefix}scores.csv")), &score_rows)?;
    Ok(results.iter().flat_map(|(_, t)| t.iter().cloned()).collect())
}

/// Runs `n_partitions` draw–train–test cycles per `N_L` and regime.
///
/// Both regimes see the same partition and the same initial `φ` in a given
/// trial; the random initialization is fixed across trials so that trial
/// variance reflects the data draw. Writes `trials.csv`, `scores.csv`,
/// `summary.json` and, when `init_trials > 0`, the `init_` counterparts.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let sw = &cfg.sweep;
    let encoder = if sw.regimes.contains(&Regime::Pretrained) {
        Some(require_checkpoint(sw.checkpoint.as_deref(), CheckpointKind::Encoder, "pretrained sweep")?.params()?)
    } else {
        None
    };
    let out = prepare_out(cfg)?;
    let stage = seed::derive(cfg.run.seed, "sweep");
    let init_seed = seed::derive(stage, "init");

    let jobs: Vec<Job> = sw
        .n_train
        .iter()
        .flat_map(|&n_train| {
            let parent = seed::derive(stage, &format!("partition/{n_train}"));
            (0..sw.n_partitions).map(move |trial| Job {
                n_train,
                trial,
                partition_seed: seed::derive_index(parent, trial as u64),
                init_seed,
            })
        })
        .collect();
    let draw = |job: &Job| {
        draw_partition(
            &mut seed::rng(job.partition_seed),
            job.n_train,
            sw.n_test,
            sw.avoid_rotation_pairs,
        )
    };
    let results = run_jobs(cfg, encoder.as_ref(), &jobs, &draw)?;
    let trials = write_trials(&out, "", &results)?;
    let groups = summarize(&trials)?;

    let (init_trials, init_groups) = if sw.init_trials > 0 {
        let init_parent = seed::derive(stage, "init-sweep/init");
        let jobs: Vec<Job> = sw
            .n_train
            .iter()
            .flat_map(|&n_train| {
                let partition_seed = seed::derive(stage, &format!("init-sweep/partition/{n_train}"));
                (0..sw.init_trials).map(move |trial| Job {
                    n_train,
                    trial,
                    partition_seed,
                    init_seed: seed::derive_index(init_parent, trial as u64),
                })
            })
            .collect();
        let results = run_jobs(cfg, encoder.as_ref(), &jobs, &draw)?;
        let trials = write_trials(&out, "init_", &results)?;
        let groups = summarize(&trials)?;
        (trials, groups)
    } else {
        (Vec::new(), Vec::new())
    };

    let summary = Summary {
        master_seed: cfg.run.seed,
        noiseless: cfg.run.noiseless,
        n_partitions: sw.n_partitions,
        n_test: sw.n_test,
        groups: &groups,
        init_sweep: (sw.init_trials > 0).then_some(&init_groups[..]),
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(SweepOutput {
        out,
        trials,
        groups,
        init_trials,
        init_groups,
    })
}
