use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use wildfire_core::config::{DataSource, RunConfig, PRESETS};
use wildfire_core::data::synthetic::SyntheticConfig;
use wildfire_core::pipeline::{Evaluation, Pipeline};

#[derive(Parser, Debug)]
#[command(
    name = "wildfire",
    version,
    about = "Unsupervised wildfire anomaly detection"
)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Named preset; see `wildfire presets`.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Seed for splitting, initialisation and shuffling. Required with
    /// --preset; overrides the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Use the bundled data generator instead of the CSV inputs.
    #[arg(long, global = true)]
    synthetic: bool,

    /// Directory with weather.csv, ndvi.csv and wildfires.csv.
    #[arg(long, global = true, env = "WILDFIRE_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, split and scale the data.
    Prepare,
    /// Train the autoencoders the selected pipelines need.
    Train,
    /// Reconstruction-error thresholding on the test split.
    Detect,
    /// Latent-feature detectors on the test split.
    Cluster,
    /// Random-forest feature ranking.
    Importance,
    /// Metrics and ROC from the stored scores.
    Evaluate,
    /// Write metrics.json, roc.csv and plots.
    Report,
    /// Every step in order.
    Run,
    /// List the presets.
    Presets,
    /// Print the resolved configuration.
    Config,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            (None, Some(name)) => {
                let mut cfg = RunConfig::preset(name)?;
                let Some(seed) = self.seed else {
                    bail!("--seed is required with --preset");
                };
                cfg.set_seed(seed);
                cfg
            }
            (None, None) => bail!("pass --config FILE or --preset NAME"),
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if self.synthetic {
            cfg.use_synthetic(SyntheticConfig {
                seed: cfg.seed,
                ..SyntheticConfig::default()
            });
        } else if let Some(dir) = &self.data_dir {
            if !cfg.data.is_synthetic() {
                cfg.data = DataSource::Directory { path: dir.clone() };
            }
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_evaluations(evals: &[Evaluation]) {
    for e in evals {
        let m = &e.metrics;
        let auc = e
            .roc
            .as_ref()
            .map_or("n/a".to_string(), |r| format!("{:.3}", r.auc));
        println!(
            "{:<16} accuracy {:.3}  precision {:.3}  recall {:.3}  f1 {:.3}  mcc {:.3}  auc {auc}",
            e.pipeline.name(),
            m.accuracy,
            m.precision,
            m.recall,
            m.f1,
            m.mcc
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Command::Presets = cli.command {
        for (name, desc) in PRESETS {
            println!("{name:<16} {desc}");
        }
        return Ok(());
    }
    let cfg = cli.run.resolve()?;
    if let Command::Config = cli.command {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let pipeline = Pipeline::new(cfg)?;
    info!("config hash {}", pipeline.config_hash());
    match cli.command {
        Command::Prepare => {
            let m = pipeline.prepare()?;
            println!(
                "train {} rows, validation {} ({} + {}), test {} ({} + {})",
                m.train.rows,
                m.validation.rows,
                m.validation.nominal,
                m.validation.wildfire,
                m.test.rows,
                m.test.nominal,
                m.test.wildfire
            );
            for (split, shape) in &m.sequence_shapes {
                println!("{split} windows {shape:?}");
            }
            println!("manifest {}", pipeline.manifest_path().display());
        }
        Command::Train => {
            for (model, h) in pipeline.train()? {
                println!(
                    "{:<8} epochs {}  final train loss {:.6}  best epoch {:?}",
                    model.name(),
                    h.train.len(),
                    h.train.last().copied().unwrap_or(f64::NAN),
                    h.best_epoch
                );
            }
        }
        Command::Detect => {
            for k in pipeline.detect()? {
                println!("{}", pipeline.pipeline_dir(k).join("scores.csv").display());
            }
        }
        Command::Cluster => {
            for k in pipeline.cluster()? {
                println!("{}", pipeline.pipeline_dir(k).join("scores.csv").display());
            }
        }
        Command::Importance => {
            let r = pipeline.importance()?;
            for (rank, &f) in r.ranking.iter().enumerate() {
                println!(
                    "{:>2} {:<28} {:.4}",
                    rank + 1,
                    r.features[f],
                    r.importances[f]
                );
            }
        }
        Command::Evaluate => print_evaluations(&pipeline.evaluate()?),
        Command::Report => {
            for files in pipeline.report()? {
                println!("{}", files.metrics_json.display());
            }
        }
        Command::Run => {
            let summary = pipeline.run()?;
            print_evaluations(&summary.evaluations);
            for files in &summary.reports {
                println!("{}", files.metrics_json.display());
            }
            if let Some(r) = &summary.importance {
                println!("lowest-ranked features: {}", r.lowest(3).join(", "));
            }
        }
        Command::Presets | Command::Config => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
