use clap::{Args, Parser, Subcommand, ValueEnum};
use lmdiff::corpus::{write_documents, Label};
use lmdiff::pipeline::{self, PipelineConfig, PipelineError, Split};
use lmdiff::synth::{generate, SynthConfig};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

/// Satirical news detection by differencing two domain language models.
#[derive(Parser)]
#[command(name = "lmdiff", version)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for scoring.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override any configuration key, e.g. `--set epochs=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct SvmArgs {
    #[arg(long, value_name = "linear|poly")]
    kernel: Option<String>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long = "C", value_name = "C")]
    c: Option<f64>,
    /// Kernel gamma, or `auto`.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

impl SvmArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(k) = &self.kernel {
            out.push(("kernel", k.clone()));
        }
        if let Some(d) = self.degree {
            out.push(("degree", d.to_string()));
        }
        if let Some(c) = self.c {
            out.push(("C", c.to_string()));
        }
        if let Some(g) = &self.gamma {
            out.push(("gamma", g.clone()));
        }
        if let Some(t) = self.tol {
            out.push(("tol", t.to_string()));
        }
        out
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    True,
    Satire,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Split the training corpus into LM and classifier parts.
    Split,
    /// Build the shared vocabulary from the LM documents.
    BuildVocab,
    /// Train the domain language model(s).
    TrainLm {
        #[arg(long, value_enum, default_value = "both")]
        domain: Domain,
    },
    /// Score every sentence under both language models.
    Score {
        /// Restrict to these splits (clf, validation, test).
        #[arg(long = "split")]
        splits: Vec<Split>,
    },
    /// Reduce score sequences to feature vectors.
    Featurize,
    /// Train the SVM on classifier-split features.
    TrainClf {
        #[command(flatten)]
        svm: SvmArgs,
    },
    /// Report accuracy, precision, recall and F1.
    Evaluate {
        /// Also train and evaluate one classifier per cumulative feature group.
        #[arg(long)]
        ablation: bool,
        #[command(flatten)]
        svm: SvmArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mutual information between each feature and the label.
    Mi {
        #[arg(long, default_value = "clf")]
        split: Split,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired signed-rank tests of true- vs satire-model statistics.
    Wilcoxon {
        #[arg(long, default_value = "clf")]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage in order.
    Run {
        #[arg(long)]
        ablation: bool,
        #[command(flatten)]
        svm: SvmArgs,
    },
    /// Write a synthetic two-domain benchmark corpus.
    Synth {
        #[arg(long)]
        docs_per_domain: Option<usize>,
        /// Directory for train/validation/test JSONL files.
        #[arg(long)]
        dest: PathBuf,
    },
}

fn load_config(cli: &Cli, extra: &[(&str, String)]) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_assignment(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    for (k, v) in extra {
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), PipelineError> {
    match out {
        Some(path) => pipeline::write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).map_err(std::io::Error::from)?);
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Split => {
            pipeline::cmd_split(&load_config(cli, &[])?)?;
        }
        Command::BuildVocab => {
            pipeline::cmd_build_vocab(&load_config(cli, &[])?)?;
        }
        Command::TrainLm { domain } => {
            let cfg = load_config(cli, &[])?;
            let labels: &[Label] = match domain {
                Domain::True => &[Label::True],
                Domain::Satire => &[Label::Satire],
                Domain::Both => &Label::ALL,
            };
            for &label in labels {
                pipeline::cmd_train_lm(&cfg, label)?;
            }
        }
        Command::Score { splits } => {
            let cfg = load_config(cli, &[])?;
            let splits = if splits.is_empty() { Split::SCORED.to_vec() } else { splits.clone() };
            pipeline::cmd_score(&cfg, &splits)?;
        }
        Command::Featurize => {
            pipeline::cmd_featurize(&load_config(cli, &[])?)?;
        }
        Command::TrainClf { svm } => {
            pipeline::cmd_train_clf(&load_config(cli, &svm.overrides())?)?;
        }
        Command::Evaluate { ablation, svm, out } => {
            let cfg = load_config(cli, &svm.overrides())?;
            let report = pipeline::cmd_evaluate(&cfg)?;
            if *ablation {
                let rows = pipeline::cmd_ablation(&cfg)?;
                emit(&serde_json::json!({ "evaluation": report, "ablation": rows }), out.as_ref())?;
            } else {
                emit(&report, out.as_ref())?;
            }
        }
        Command::Mi { split, bins, out } => {
            let extra: Vec<(&str, String)> = bins.iter().map(|b| ("mi_bins", b.to_string())).collect();
            let report = pipeline::cmd_mi(&load_config(cli, &extra)?, *split)?;
            emit(&report, out.as_ref())?;
        }
        Command::Wilcoxon { split, out } => {
            let report = pipeline::cmd_wilcoxon(&load_config(cli, &[])?, *split)?;
            emit(&report, out.as_ref())?;
        }
        Command::Run { ablation, svm } => {
            let summary = pipeline::run_all(&load_config(cli, &svm.overrides())?, *ablation)?;
            emit(&summary, None)?;
        }
        Command::Synth { docs_per_domain, dest } => {
            let mut synth = SynthConfig {
                seed: cli.seed.unwrap_or(SynthConfig::default().seed),
                ..Default::default()
            };
            if let Some(n) = docs_per_domain {
                synth.docs_per_domain = *n;
            }
            let corpus = generate(&synth);
            std::fs::create_dir_all(dest)?;
            write_documents(&dest.join("train.jsonl"), &corpus.train)?;
            write_documents(&dest.join("validation.jsonl"), &corpus.validation)?;
            write_documents(&dest.join("test.jsonl"), &corpus.test)?;
            log::info!(
                "wrote {} train, {} validation, {} test documents to {}",
                corpus.train.len(),
                corpus.validation.len(),
                corpus.test.len(),
                dest.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
