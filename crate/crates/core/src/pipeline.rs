//! End-to-end runner: ingest, mine, pretrain, fine-tune, evaluate. Each stage
//! writes into its own subdirectory and the manifest records a content hash
//! of every file produced so far.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{parse_corpus, read_jsonl, write_jsonl, FunctionRecord, Language};
use crate::encoder::{Checkpoint, EncoderParams};
use crate::pairmine::{
    build_code_code_corpus, build_code_comment_pairs, build_code_doc_pairs, pair_stats, MiningConfig, PairCorpora,
    PairStats,
};
use crate::retrieval::{build_index, evaluate_queries, read_queries, EvalReport};
use crate::train::{finetune, pretrain, write_metrics_csv, Ar2Config, FinetuneConfig, Strategy, TrainConfig};
use crate::{Error, Result};

pub const STAGES: [&str; 5] = ["ingest", "mine", "pretrain", "finetune", "eval"];
pub const MANIFEST_FILE: &str = "manifest.json";

/// Every knob of a run in one flat document. Relative paths resolve against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_root: PathBuf,
    pub languages: Vec<Language>,
    pub train_queries: Option<PathBuf>,
    pub test_queries: PathBuf,
    pub seed: u64,
    pub strategy: Strategy,

    pub tau1: f64,
    pub tau2: f64,
    pub keep_fraction: Option<f64>,
    pub top_k: usize,
    pub matcher_temperature: f64,
    pub matcher_epochs: usize,
    pub matcher_batch_size: usize,
    pub matcher_dim: usize,
    pub matcher_lr: f64,
    pub matcher_weight_decay: f64,
    pub matcher_dropout: f64,
    pub negative_ratio: usize,
    pub cross_dim: usize,
    pub cross_epochs: usize,
    pub cross_lr: f64,
    pub cross_weight_decay: f64,

    pub batch_size: usize,
    pub steps: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub warmup_steps: usize,
    pub modality_mix: [f64; 3],
    pub hybrid_languages: bool,
    pub log_every: usize,
    pub temperature: f64,
    pub dropout: f64,
    pub dim: usize,
    pub vocab_size: usize,

    pub ft_batch_size: usize,
    pub ft_steps: usize,
    pub ft_lr: f64,
    pub ft_weight_decay: f64,
    pub ft_warmup_steps: usize,
    pub ft_temperature: f64,
    pub hard_negatives: usize,
    pub hardneg_steps: usize,
    pub hardneg_lr: f64,
    pub hardneg_refresh_every: usize,

    pub ar2_negative_size: usize,
    pub ar2_pool_size: usize,
    pub ar2_rounds: usize,
    pub ar2_g_steps: usize,
    pub ar2_d_steps: usize,
    pub ar2_g_lr: f64,
    pub ar2_d_lr: f64,
    pub ar2_d_dim: usize,
    pub ar2_d_weight_decay: f64,
    pub ar2_d_batch_size: usize,
    pub ar2_refresh_every: usize,
    pub ar2_warmup_proportion: f64,

    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let m = MiningConfig::default();
        let t = TrainConfig::default();
        let f = FinetuneConfig::default();
        let a = Ar2Config::default();
        Self {
            corpus_root: PathBuf::from("src"),
            languages: Language::ALL.to_vec(),
            train_queries: Some(PathBuf::from("queries_train.jsonl")),
            test_queries: PathBuf::from("queries_test.jsonl"),
            seed: 42,
            strategy: Strategy::Ar2,
            tau1: m.tau1,
            tau2: m.tau2,
            keep_fraction: m.keep_fraction,
            top_k: m.top_k,
            matcher_temperature: m.matcher_temperature,
            matcher_epochs: m.matcher_epochs,
            matcher_batch_size: m.matcher_batch_size,
            matcher_dim: m.matcher_dim,
            matcher_lr: m.matcher_lr,
            matcher_weight_decay: m.matcher_weight_decay,
            matcher_dropout: m.matcher_dropout,
            negative_ratio: m.negative_ratio,
            cross_dim: m.cross_dim,
            cross_epochs: m.cross_epochs,
            cross_lr: m.cross_lr,
            cross_weight_decay: m.cross_weight_decay,
            batch_size: t.batch_size,
            steps: t.steps,
            lr: t.lr,
            weight_decay: t.weight_decay,
            warmup_steps: t.warmup_steps,
            modality_mix: t.modality_mix,
            hybrid_languages: t.hybrid_languages,
            log_every: t.log_every,
            temperature: t.temperature,
            dropout: t.dropout,
            dim: t.dim,
            vocab_size: t.vocab_size,
            ft_batch_size: f.batch_size,
            ft_steps: f.steps,
            ft_lr: f.lr,
            ft_weight_decay: f.weight_decay,
            ft_warmup_steps: f.warmup_steps,
            ft_temperature: f.temperature,
            hard_negatives: f.hard_negatives,
            hardneg_steps: f.hardneg_steps,
            hardneg_lr: f.hardneg_lr,
            hardneg_refresh_every: f.refresh_every,
            ar2_negative_size: a.negative_size,
            ar2_pool_size: a.pool_size,
            ar2_rounds: a.rounds,
            ar2_g_steps: a.g_steps,
            ar2_d_steps: a.d_steps,
            ar2_g_lr: a.g_lr,
            ar2_d_lr: a.d_lr,
            ar2_d_dim: a.d_dim,
            ar2_d_weight_decay: a.d_weight_decay,
            ar2_d_batch_size: a.d_batch_size,
            ar2_refresh_every: a.refresh_every,
            ar2_warmup_proportion: a.warmup_proportion,
            base_dir: PathBuf::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn language_set(&self) -> BTreeSet<Language> {
        self.languages.iter().copied().collect()
    }

    pub fn mining(&self) -> MiningConfig {
        MiningConfig {
            tau1: self.tau1,
            tau2: self.tau2,
            keep_fraction: self.keep_fraction,
            top_k: self.top_k,
            matcher_temperature: self.matcher_temperature,
            matcher_epochs: self.matcher_epochs,
            matcher_batch_size: self.matcher_batch_size,
            matcher_dim: self.matcher_dim,
            matcher_lr: self.matcher_lr,
            matcher_weight_decay: self.matcher_weight_decay,
            matcher_dropout: self.matcher_dropout,
            negative_ratio: self.negative_ratio,
            cross_dim: self.cross_dim,
            cross_epochs: self.cross_epochs,
            cross_lr: self.cross_lr,
            cross_weight_decay: self.cross_weight_decay,
            seed: self.seed,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            steps: self.steps,
            lr: self.lr,
            weight_decay: self.weight_decay,
            warmup_steps: self.warmup_steps,
            seed: self.seed,
            modality_mix: self.modality_mix,
            hybrid_languages: self.hybrid_languages,
            log_every: self.log_every,
            temperature: self.temperature,
            dropout: self.dropout,
            dim: self.dim,
            vocab_size: self.vocab_size,
        }
    }

    pub fn finetune(&self) -> FinetuneConfig {
        FinetuneConfig {
            batch_size: self.ft_batch_size,
            steps: self.ft_steps,
            lr: self.ft_lr,
            weight_decay: self.ft_weight_decay,
            warmup_steps: self.ft_warmup_steps,
            temperature: self.ft_temperature,
            seed: self.seed,
            hard_negatives: self.hard_negatives,
            hardneg_steps: self.hardneg_steps,
            hardneg_lr: self.hardneg_lr,
            refresh_every: self.hardneg_refresh_every,
        }
    }

    pub fn ar2(&self) -> Ar2Config {
        Ar2Config {
            negative_size: self.ar2_negative_size,
            pool_size: self.ar2_pool_size,
            rounds: self.ar2_rounds,
            g_steps: self.ar2_g_steps,
            d_steps: self.ar2_d_steps,
            g_lr: self.ar2_g_lr,
            d_lr: self.ar2_d_lr,
            d_dim: self.ar2_d_dim,
            d_weight_decay: self.ar2_d_weight_decay,
            d_batch_size: self.ar2_d_batch_size,
            refresh_every: self.ar2_refresh_every,
            warmup_proportion: self.ar2_warmup_proportion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() {
            return Err(Error::InvalidConfig("no languages requested".into()));
        }
        self.mining().validate()?;
        self.train().validate()?;
        self.finetune().validate()?;
        self.ar2().validate()
    }

    /// The config as embedded in artifacts.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// One hashed file, path relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHash {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub artifacts: Vec<ArtifactHash>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path.display().to_string(), e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hashes every file under `root/stage`, sorted by path.
fn hash_stage(root: &Path, stage: &str) -> Result<StageRecord> {
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(root.join(stage))
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect();
    files.sort();
    let artifacts = files
        .iter()
        .map(|f| {
            let rel = f.strip_prefix(root).unwrap_or(f);
            Ok(ArtifactHash {
                path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
                sha256: sha256_file(f)?,
                bytes: fs::metadata(f).map_err(|e| Error::io(f, e))?.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StageRecord {
        stage: stage.to_string(),
        artifacts,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses the corpus and writes `dir/corpus.jsonl`.
pub fn stage_ingest(config: &PipelineConfig, dir: &Path) -> Result<Vec<FunctionRecord>> {
    let root = config.resolve(&config.corpus_root);
    let parsed = parse_corpus(&root, &config.language_set())?;
    if parsed.records.is_empty() {
        return Err(Error::CorpusTooSmall { needed: 1, got: 0 });
    }
    create_dir(dir)?;
    write_jsonl(&dir.join("corpus.jsonl"), &parsed.records)?;
    if !parsed.warnings.is_empty() {
        write_json(&dir.join("warnings.json"), &parsed.warnings)?;
    }
    Ok(parsed.records)
}

/// Builds all three pair corpora and writes them with `stats.json`.
pub fn stage_mine(config: &MiningConfig, corpus: &[FunctionRecord], dir: &Path) -> Result<PairCorpora> {
    let mined = build_code_code_corpus(corpus, config)?;
    let pairs = PairCorpora {
        code_doc: build_code_doc_pairs(corpus),
        code_comment: build_code_comment_pairs(corpus),
        code_code: mined.pairs,
    };
    pairs.write_dir(dir)?;
    write_json(&dir.join("stats.json"), &pair_stats(&pairs.all(), corpus))?;
    Ok(pairs)
}

/// Pretrains and writes `encoder.json` and `metrics.csv`.
pub fn stage_pretrain(
    config: &TrainConfig,
    embed_config: serde_json::Value,
    corpus: &[FunctionRecord],
    pairs: &PairCorpora,
    dir: &Path,
) -> Result<EncoderParams> {
    let out = pretrain(pairs, corpus, config)?;
    create_dir(dir)?;
    write_metrics_csv(&dir.join("metrics.csv"), &out.metrics)?;
    Checkpoint::new(out.params.clone(), embed_config).save(&dir.join("encoder.json"))?;
    Ok(out.params)
}

/// Fine-tunes with `strategy` and writes `encoder.json` (plus the adversarial
/// round log for the adversarial strategy).
pub fn stage_finetune(
    config: &PipelineConfig,
    params: &EncoderParams,
    queries_path: &Path,
    corpus: &[FunctionRecord],
    dir: &Path,
) -> Result<EncoderParams> {
    let queries = read_queries(queries_path)?;
    let out = finetune(params, config.strategy, &queries, corpus, &config.finetune(), &config.ar2())?;
    create_dir(dir)?;
    Checkpoint::new(out.params.clone(), config.to_json()).save(&dir.join("encoder.json"))?;
    if config.strategy == Strategy::Ar2 {
        write_json(&dir.join("ar2_rounds.json"), &out.ar2_rounds)?;
    }
    Ok(out.params)
}

/// Evaluates on the labeled test queries and writes `report.json`.
pub fn stage_eval(
    params: &EncoderParams,
    queries_path: &Path,
    corpus: &[FunctionRecord],
    embed_config: serde_json::Value,
    dir: &Path,
) -> Result<EvalReport> {
    let queries = read_queries(queries_path)?;
    let index = build_index(params, corpus);
    let report = evaluate_queries(params, &index, &queries, embed_config)?;
    create_dir(dir)?;
    report.save(&dir.join("report.json"))?;
    Ok(report)
}

/// Runs every stage into `out`. A failing stage returns an error tagged with
/// its name; files of earlier stages and the manifest covering them remain.
pub fn run_pipeline(config: &PipelineConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    create_dir(out)?;
    fs::write(out.join("config.toml"), config.to_toml()?).map_err(|e| Error::io(out, e))?;
    let embed = config.to_json();
    let mut manifest = Manifest {
        config: embed.clone(),
        stages: Vec::new(),
    };
    let manifest_path = out.join(MANIFEST_FILE);
    let finish = |stage: &'static str, manifest: &mut Manifest| -> Result<()> {
        manifest.stages.push(hash_stage(out, stage).map_err(|e| e.in_stage(stage))?);
        manifest.save(&manifest_path)
    };
    manifest.save(&manifest_path)?;

    log::info!("stage ingest");
    let corpus = stage_ingest(config, &out.join("ingest")).map_err(|e| e.in_stage("ingest"))?;
    finish("ingest", &mut manifest)?;

    log::info!("stage mine: {} functions", corpus.len());
    let pairs = stage_mine(&config.mining(), &corpus, &out.join("mine")).map_err(|e| e.in_stage("mine"))?;
    finish("mine", &mut manifest)?;

    log::info!("stage pretrain");
    let params = stage_pretrain(&config.train(), embed.clone(), &corpus, &pairs, &out.join("pretrain"))
        .map_err(|e| e.in_stage("pretrain"))?;
    finish("pretrain", &mut manifest)?;

    log::info!("stage finetune");
    let tuned = match &config.train_queries {
        Some(path) => stage_finetune(config, &params, &config.resolve(path), &corpus, &out.join("finetune")),
        None => {
            log::warn!("no training queries configured; evaluating the pretrained encoder");
            let dir = out.join("finetune");
            create_dir(&dir)
                .and_then(|_| Checkpoint::new(params.clone(), embed.clone()).save(&dir.join("encoder.json")))
                .map(|_| params.clone())
        }
    }
    .map_err(|e| e.in_stage("finetune"))?;
    finish("finetune", &mut manifest)?;

    log::info!("stage eval");
    let report = stage_eval(&tuned, &config.resolve(&config.test_queries), &corpus, embed, &out.join("eval"))
        .map_err(|e| e.in_stage("eval"))?;
    log::info!("test MRR {:.4}", report.mrr);
    finish("eval", &mut manifest)?;
    Ok(manifest)
}

/// Reads a pairs directory and renders counts as text, alongside the raw numbers.
pub fn report_stats(pairs_dir: &Path) -> Result<(String, PairStats)> {
    let pairs = PairCorpora::read_dir(pairs_dir)?;
    let corpus_path = pairs_dir.join("corpus.jsonl");
    let corpus: Vec<FunctionRecord> = if corpus_path.exists() { read_jsonl(&corpus_path)? } else { Vec::new() };
    let stats = pair_stats(&pairs.all(), &corpus);
    let mut text = String::from("pairs per modality\n");
    for m in ["code_doc", "code_comment", "code_code"] {
        let _ = writeln!(text, "  {m:<14}{:>8}", stats.per_modality.get(m).copied().unwrap_or(0));
    }
    let _ = writeln!(text, "  {:<14}{:>8}", "total", stats.total);
    let _ = writeln!(text, "code-code pairs per language pair");
    if stats.code_code_languages.is_empty() {
        let _ = writeln!(text, "  (none)");
    }
    for (k, n) in &stats.code_code_languages {
        let _ = writeln!(text, "  {:<22}{n:>8}", k.replace('|', " - "));
    }
    let _ = writeln!(text, "  {:<22}{:>8}", "cross-language", stats.cross_language);
    Ok((text, stats))
}
