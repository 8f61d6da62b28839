use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qcontrast::harness::{
    cmd_datasets, cmd_evaluate, cmd_finetune, cmd_pretrain, cmd_sweep, EvaluateOutput, ExperimentConfig,
};
use qcontrast::training::Regime;
use qcontrast::Result;

/// Contrastive pretraining and fine-tuning of a 4-qubit image classifier.
#[derive(Debug, Parser)]
#[command(name = "qcontrast", version)]
struct Cli {
    #[command(flatten)]
    run: RunFlags,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the `[run]` section of the config file.
#[derive(Debug, Args)]
struct RunFlags {
    /// TOML config file; defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per circuit.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Use exact probabilities instead of shot sampling.
    #[arg(long, global = true)]
    noiseless: bool,
    /// Worker threads for trial parallelism (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the encoder contrastively; writes a checkpoint and loss history.
    Pretrain,
    /// Train one classifier on a drawn or given training set.
    Finetune {
        /// `pretrained` or `random`.
        #[arg(long)]
        regime: Option<Regime>,
        /// Encoder checkpoint for the pretrained regime.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Training-set size (even).
        #[arg(long)]
        n_train: Option<usize>,
        /// Labeled training manifest instead of a random draw.
        #[arg(long)]
        train_manifest: Option<PathBuf>,
    },
    /// Score a checkpoint on an image manifest.
    Evaluate {
        /// Encoder or classifier checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Image manifest to score.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Repeated draw–train–test cycles for both regimes.
    Sweep {
        /// Encoder checkpoint for the pretrained regime.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Data draws per training-set size.
        #[arg(long)]
        partitions: Option<usize>,
        /// Training-set sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        n_train: Option<Vec<usize>>,
        /// Initializations per training-set size for the fixed-data sweep.
        #[arg(long)]
        init_trials: Option<usize>,
        /// Redraw training sets containing an image and one of its rotations.
        #[arg(long)]
        avoid_rotation_pairs: bool,
    },
    /// Write class manifests, a perturbed sample and a census.
    Datasets,
}

fn resolve(cli: Cli) -> Result<(ExperimentConfig, Command)> {
    let mut cfg = match &cli.run.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let r = cli.run;
    if let Some(v) = r.seed {
        cfg.run.seed = v;
    }
    if let Some(v) = r.shots {
        cfg.run.shots = v;
    }
    if r.noiseless {
        cfg.run.noiseless = true;
    }
    if let Some(v) = r.workers {
        cfg.run.workers = v;
    }
    if let Some(v) = r.out {
        cfg.run.out = v;
    }
    match &cli.command {
        Command::Finetune {
            regime,
            checkpoint,
            n_train,
            train_manifest,
        } => {
            let ft = &mut cfg.finetune;
            ft.regime = regime.unwrap_or(ft.regime);
            ft.n_train = n_train.unwrap_or(ft.n_train);
            if checkpoint.is_some() {
                ft.checkpoint.clone_from(checkpoint);
            }
            if train_manifest.is_some() {
                ft.train_manifest.clone_from(train_manifest);
            }
        }
        Command::Evaluate { checkpoint, manifest } => {
            if checkpoint.is_some() {
                cfg.evaluate.checkpoint.clone_from(checkpoint);
            }
            if manifest.is_some() {
                cfg.evaluate.manifest.clone_from(manifest);
            }
        }
        Command::Sweep {
            checkpoint,
            partitions,
            n_train,
            init_trials,
            avoid_rotation_pairs,
        } => {
            let sw = &mut cfg.sweep;
            if checkpoint.is_some() {
                sw.checkpoint.clone_from(checkpoint);
            }
            sw.n_partitions = partitions.unwrap_or(sw.n_partitions);
            if let Some(n) = n_train {
                sw.n_train.clone_from(n);
            }
            sw.init_trials = init_trials.unwrap_or(sw.init_trials);
            sw.avoid_rotation_pairs |= avoid_rotation_pairs;
        }
        Command::Pretrain | Command::Datasets => {}
    }
    cfg.validate()?;
    Ok((cfg, cli.command))
}

fn run(cli: Cli) -> Result<()> {
    let (cfg, command) = resolve(cli)?;
    let out = cfg.run.out.display().to_string();
    match command {
        Command::Pretrain => {
            let r = cmd_pretrain(&cfg)?;
            let m = &r.metrics;
            println!(
                "encoder: {} iterations phase 1, {} phase 2; final loss {:.4}",
                r.phase1.iter,
                r.phase2.iter,
                r.phase2.loss_history.last().copied().unwrap_or(f64::NAN)
            );
            for (name, acc) in [
                ("phase-1 train", &m.phase1_train),
                ("phase-1 test", &m.phase1_test),
                ("final train", &m.final_train),
                ("final test", &m.final_test),
            ] {
                println!(
                    "{name:>14}: positive {:.3} negative {:.3} overall {:.3}",
                    acc.positive, acc.negative, acc.overall
                );
            }
        }
        Command::Finetune { .. } => {
            let r = cmd_finetune(&cfg)?;
            let m = &r.metrics;
            let train = m.train_accuracy.unwrap_or(f64::NAN);
            println!("{}: train accuracy {train:.3}, test accuracy {:.3}", m.regime, m.test_accuracy);
        }
        Command::Evaluate { .. } => match cmd_evaluate(&cfg)? {
            EvaluateOutput::Encoder(a) => println!(
                "pairs: positive {:.3} negative {:.3} overall {:.3}",
                a.positive, a.negative, a.overall
            ),
            EvaluateOutput::Classifier(m) => {
                let auc = m.roc.as_ref().map_or(f64::NAN, |r| r.auc);
                println!("accuracy {:.3}, AUC {auc:.3}", m.test_accuracy);
            }
        },
        Command::Sweep { .. } => {
            let r = cmd_sweep(&cfg)?;
            for g in r.groups.iter().chain(&r.init_groups) {
                println!(
                    "{:>10} N_L={:<2} test accuracy {:.3} ± {:.3} (n={}), AUC {:.3}, Youden threshold {:.3}",
                    g.regime.name(),
                    g.n_train,
                    g.test_accuracy.mean,
                    g.test_accuracy.std,
                    g.test_accuracy.n,
                    g.roc.auc,
                    g.roc.youden_threshold
                );
            }
        }
        Command::Datasets => {
            let c = cmd_datasets(&cfg)?;
            println!(
                "bas {} diagonals {} (reference {}) perturbed {}",
                c.bas, c.diagonals, c.reference_diagonals, c.perturbed
            );
        }
    }
    eprintln!("outputs written to {out}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
