use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use coderet::corpus::{parse_corpus, read_jsonl, write_jsonl, FunctionRecord, Language};
use coderet::encoder::Checkpoint;
use coderet::pairmine::PairCorpora;
use coderet::pipeline::{
    report_stats, run_pipeline, stage_finetune, stage_ingest, stage_mine, stage_pretrain, PipelineConfig,
};
use coderet::retrieval::{build_index, evaluate_queries, export_embeddings, read_queries};
use coderet::train::Strategy;

#[derive(Parser)]
#[command(name = "coderet", version, about = "Contrastive code retrieval toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline config (TOML); relative paths inside resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (for `ingest`, a path ending in `.jsonl` names the corpus file itself).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a source tree into corpus.jsonl.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        root: Option<PathBuf>,
        /// Comma-separated, e.g. `python,java`.
        #[arg(long, alias = "langs")]
        languages: Option<String>,
    },
    /// Build code-doc, code-comment and mined code-code pairs.
    Mine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        tau1: Option<f64>,
        #[arg(long)]
        tau2: Option<f64>,
        #[arg(long)]
        keep_fraction: Option<f64>,
    },
    /// Contrastive pretraining over a pairs directory.
    Pretrain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Fine-tune a checkpoint on labeled queries.
    Finetune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// inbatch, hardneg or ar2
        #[arg(long)]
        strategy: Option<Strategy>,
    },
    /// Rank the corpus for labeled queries and report MRR.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Also write the function embeddings as TSV.
        #[arg(long)]
        embeddings: bool,
        /// Report path; defaults to `<out>/report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Pair counts per modality and language pair.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Run ingest, mine, pretrain, finetune and eval end to end.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn load_config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required for this command")
    }
}

fn load_corpus(path: &Path) -> Result<Vec<FunctionRecord>> {
    read_jsonl(path).with_context(|| format!("reading corpus {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { common, root, languages } => {
            let mut config = common.load_config()?;
            if let Some(root) = root {
                config.corpus_root = std::env::current_dir()?.join(root);
            }
            if let Some(langs) = languages {
                config.languages = Language::parse_set(&langs)?.into_iter().collect();
            }
            let out = common.out_dir()?;
            let records = if out.extension().is_some_and(|e| e == "jsonl") {
                let parsed = parse_corpus(&config.resolve(&config.corpus_root), &config.language_set()).map_err(|e| e.in_stage("ingest"))?;
                write_jsonl(out, &parsed.records)?;
                parsed.records
            } else {
                stage_ingest(&config, out).map_err(|e| e.in_stage("ingest"))?
            };
            println!("{} functions", records.len());
        }
        Command::Mine {
            common,
            corpus,
            tau1,
            tau2,
            keep_fraction,
        } => {
            let config = common.load_config()?;
            let mut mining = config.mining();
            mining.tau1 = tau1.unwrap_or(mining.tau1);
            mining.tau2 = tau2.unwrap_or(mining.tau2);
            mining.keep_fraction = keep_fraction.or(mining.keep_fraction);
            let out = common.out_dir()?;
            stage_mine(&mining, &load_corpus(&corpus)?, out).map_err(|e| e.in_stage("mine"))?;
            print!("{}", report_stats(out)?.0);
        }
        Command::Pretrain {
            common,
            corpus,
            pairs,
            steps,
        } => {
            let mut config = common.load_config()?;
            config.steps = steps.unwrap_or(config.steps);
            let pairs = PairCorpora::read_dir(&pairs)?;
            stage_pretrain(&config.train(), config.to_json(), &load_corpus(&corpus)?, &pairs, common.out_dir()?)
                .map_err(|e| e.in_stage("pretrain"))?;
        }
        Command::Finetune {
            common,
            checkpoint,
            corpus,
            queries,
            strategy,
        } => {
            let mut config = common.load_config()?;
            config.strategy = strategy.unwrap_or(config.strategy);
            let ckpt = Checkpoint::load(&checkpoint)?;
            stage_finetune(&config, &ckpt.params, &queries, &load_corpus(&corpus)?, common.out_dir()?)
                .map_err(|e| e.in_stage("finetune"))?;
        }
        Command::Eval {
            common,
            checkpoint,
            corpus,
            queries,
            embeddings,
            report,
        } => {
            let config = common.load_config()?;
            let ckpt = Checkpoint::load(&checkpoint)?;
            let corpus = load_corpus(&corpus)?;
            let index = build_index(&ckpt.params, &corpus);
            let queries = read_queries(&queries).map_err(|e| e.in_stage("eval"))?;
            let result = evaluate_queries(&ckpt.params, &index, &queries, config.to_json()).map_err(|e| e.in_stage("eval"))?;
            let report_path = match (report, &common.out) {
                (Some(path), _) => path,
                (None, Some(out)) => out.join("report.json"),
                (None, None) => anyhow::bail!("eval needs --report or --out"),
            };
            result.save(&report_path)?;
            if embeddings {
                let dir = common.out.clone().or_else(|| report_path.parent().map(Path::to_path_buf)).unwrap_or_default();
                export_embeddings(&index, &dir.join("embeddings.tsv"))?;
            }
            let report = result;
            println!("MRR {:.4}", report.mrr);
            if let Some(map) = report.map_at_r {
                println!("MAP@R {map:.4}");
            }
        }
        Command::Stats { common, pairs } => {
            let (text, stats) = report_stats(&pairs)?;
            print!("{text}");
            if let Some(out) = &common.out {
                std::fs::create_dir_all(out)?;
                std::fs::write(out.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
            }
        }
        Command::Pipeline { common } => {
            let config = common.load_config()?;
            let out = common.out_dir()?;
            let manifest = run_pipeline(&config, out)?;
            for stage in &manifest.stages {
                println!("{:<10}{} files", stage.stage, stage.artifacts.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
