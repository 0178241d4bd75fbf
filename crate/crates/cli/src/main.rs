use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use paracomp_cli::{run_pipeline, run_stage, write_synthetic, PipelineConfig, Stage, StageReport, SynthParams};

#[derive(Parser)]
#[command(name = "paracomp", version, about = "Unsupervised morphological paradigm completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file of `key = value` lines
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config field; repeatable, applied after the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    lemmas: Option<PathBuf>,
    #[arg(short, long)]
    work_dir: Option<PathBuf>,
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        for o in &self.overrides {
            cfg.set_pair(o).with_context(|| format!("--set {o}"))?;
        }
        if let Some(p) = &self.corpus {
            cfg.corpus = Some(p.clone());
        }
        if let Some(p) = &self.lemmas {
            cfg.lemmas = Some(p.clone());
        }
        if let Some(p) = &self.work_dir {
            cfg.work_dir = p.clone();
        }
        if let Some(p) = &self.gold {
            cfg.gold = Some(p.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Find candidate (lemma, form, edit tree) triples in the corpus
    Retrieve(Common),
    /// Group edit trees into paradigm slots
    Discover(Common),
    /// Split attested cells into train/dev and list test queries
    BuildData(Common),
    /// Train the configured generator
    Train(Common),
    /// Fill every paradigm cell of every input lemma
    Generate(Common),
    /// Score predictions against gold paradigms (BMAcc)
    Evaluate(Common),
    /// Run all stages in order
    Pipeline(Common),
    /// Write a synthetic suffixing language (corpus, lemmas, gold)
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        stems: usize,
        #[arg(long, default_value_t = 100)]
        lemmas: usize,
        /// Fraction of inflected forms present in the corpus
        #[arg(long, default_value_t = 0.8)]
        coverage: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn print_report(stage: Stage, report: &StageReport) {
    println!("[{}]", stage.name());
    for note in &report.notes {
        println!("  {note}");
    }
    for p in &report.outputs {
        println!("  wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let single = |stage: Stage, common: &Common| -> Result<()> {
        let cfg = common.resolve()?;
        print_report(stage, &run_stage(stage, &cfg)?);
        Ok(())
    };
    match &cli.command {
        Command::Retrieve(c) => single(Stage::Retrieve, c),
        Command::Discover(c) => single(Stage::Discover, c),
        Command::BuildData(c) => single(Stage::BuildData, c),
        Command::Train(c) => single(Stage::Train, c),
        Command::Generate(c) => single(Stage::Generate, c),
        Command::Evaluate(c) => single(Stage::Evaluate, c),
        Command::Pipeline(c) => {
            let cfg = c.resolve()?;
            for (stage, report) in run_pipeline(&cfg)? {
                print_report(stage, &report);
            }
            Ok(())
        }
        Command::Synth {
            out,
            stems,
            lemmas,
            coverage,
            seed,
        } => {
            let params = SynthParams {
                stems: *stems,
                lemmas: *lemmas,
                coverage: *coverage,
                seed: *seed,
            };
            for p in write_synthetic(out, &params).context("synth")? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
