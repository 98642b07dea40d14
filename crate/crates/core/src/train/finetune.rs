use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::adversarial::{ar2_finetune, Ar2Config, Ar2Round};
use super::data::{items_from_queries, CodeBank, Drawn, Sampler};
use crate::corpus::FunctionRecord;
use crate::encoder::{contrastive_loss, optimizer_step, AdamWState, EncoderParams, LinearSchedule, Modality};
use crate::retrieval::{build_index, DenseIndex, Query};
use crate::{stage_rng, Error, Result};

/// Fine-tuning strategy. Each one continues from the result of the previous:
/// in-batch, then hard negatives, then adversarial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[serde(alias = "in-batch", alias = "in_batch")]
    Inbatch,
    #[serde(alias = "hard-negative", alias = "hard_negative")]
    Hardneg,
    Ar2,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inbatch" | "in-batch" | "in_batch" => Ok(Strategy::Inbatch),
            "hardneg" | "hard-negative" | "hard_negative" => Ok(Strategy::Hardneg),
            "ar2" => Ok(Strategy::Ar2),
            other => Err(Error::InvalidConfig(format!("unknown fine-tuning strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub warmup_steps: usize,
    pub temperature: f64,
    pub seed: u64,
    /// Hard negatives kept per query.
    pub hard_negatives: usize,
    pub hardneg_steps: usize,
    pub hardneg_lr: f64,
    /// Re-mine hard negatives with the current encoder every this many steps.
    pub refresh_every: usize,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            steps: 300,
            lr: 1e-3,
            weight_decay: 0.01,
            warmup_steps: 0,
            temperature: 20.0,
            seed: 42,
            hard_negatives: 3,
            hardneg_steps: 200,
            hardneg_lr: 5e-4,
            refresh_every: 100,
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::BatchTooSmall(self.batch_size));
        }
        if self.lr <= 0.0 || self.hardneg_lr <= 0.0 || self.temperature <= 0.0 || self.refresh_every == 0 {
            return Err(Error::InvalidConfig(
                "fine-tuning lr, temperature and refresh_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FinetuneOutput {
    pub params: EncoderParams,
    /// Loss of every optimizer step, across all phases.
    pub losses: Vec<f64>,
    pub ar2_rounds: Vec<Ar2Round>,
}

/// Top-ranked non-gold functions for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardNegatives {
    pub query_id: String,
    pub negatives: Vec<String>,
}

fn query_sampler(params: &EncoderParams, queries: &[Query], bank: &CodeBank, seed: u64, label: &str) -> Result<Sampler> {
    let items = items_from_queries(queries, bank, &params.vocab);
    if items.len() < 2 {
        return Err(Error::CorpusTooSmall { needed: 2, got: items.len() });
    }
    Ok(Sampler::new(items, true, seed, label))
}

/// Retrieves the `k` highest-scoring functions per query that are not gold for it.
pub fn mine_hard_negatives(params: &EncoderParams, queries: &[Query], index: &DenseIndex, k: usize) -> Vec<HardNegatives> {
    queries
        .iter()
        .map(|q| {
            let gold: HashSet<&str> = q.gold_ids.iter().map(String::as_str).collect();
            let qv = params.embed_ids(&params.vocab.text_ids(&q.text));
            let negatives = index
                .rank_all(&qv)
                .into_iter()
                .map(|(i, _)| index.ids[i].as_str())
                .filter(|id| !gold.contains(id))
                .take(k)
                .map(str::to_string)
                .collect();
            HardNegatives {
                query_id: q.id.clone(),
                negatives,
            }
        })
        .collect()
}

/// Runs `steps` AdamW updates on batches produced by `next_batch`.
fn run_steps(
    params: &mut EncoderParams,
    steps: usize,
    schedule: LinearSchedule,
    weight_decay: f64,
    temperature: f64,
    mut next_batch: impl FnMut(&EncoderParams, usize) -> Result<Option<Drawn>>,
    losses: &mut Vec<f64>,
) -> Result<()> {
    let mut state = AdamWState::new(params);
    for step in 0..steps {
        let Some(drawn) = next_batch(params, step)? else { continue };
        let (loss, grads) = contrastive_loss(params, &drawn.batch, temperature)?;
        optimizer_step(params, &grads, &mut state, schedule.lr(step), weight_decay);
        losses.push(loss);
    }
    if state.skipped > 0 {
        log::warn!("fine-tuning skipped {} non-finite steps", state.skipped);
    }
    Ok(())
}

/// Query-to-code contrastive fine-tuning with in-batch negatives only.
pub fn finetune_in_batch(
    params: &EncoderParams,
    queries: &[Query],
    corpus: &[FunctionRecord],
    config: &FinetuneConfig,
) -> Result<FinetuneOutput> {
    config.validate()?;
    let bank = CodeBank::new(corpus, &params.vocab);
    let mut sampler = query_sampler(params, queries, &bank, config.seed, "finetune-inbatch")?;
    let mut rng = stage_rng(config.seed, "finetune-inbatch");
    let mut params = params.clone();
    let mut losses = Vec::new();
    let schedule = LinearSchedule {
        peak: config.lr,
        warmup: config.warmup_steps,
        total: config.steps,
    };
    run_steps(
        &mut params,
        config.steps,
        schedule,
        config.weight_decay,
        config.temperature,
        |_, _| Ok(sampler.draw(config.batch_size, Modality::CodeDoc, &mut rng)),
        &mut losses,
    )?;
    Ok(FinetuneOutput {
        params,
        losses,
        ar2_rounds: Vec::new(),
    })
}

/// Continues training with each query's mined hard negatives appended as
/// shared extra columns. Negatives are re-mined every `refresh_every` steps.
pub fn finetune_hard_negative(
    params: &EncoderParams,
    queries: &[Query],
    corpus: &[FunctionRecord],
    config: &FinetuneConfig,
) -> Result<FinetuneOutput> {
    config.validate()?;
    let bank = CodeBank::new(corpus, &params.vocab);
    let mut sampler = query_sampler(params, queries, &bank, config.seed, "finetune-hardneg")?;
    let mut rng = stage_rng(config.seed, "finetune-hardneg");
    let by_key: HashMap<String, &Query> = queries.iter().map(|q| (format!("query:{}", q.id), q)).collect();
    let mut mined: HashMap<String, Vec<String>> = HashMap::new();
    let mut params = params.clone();
    let mut losses = Vec::new();
    let schedule = LinearSchedule {
        peak: config.hardneg_lr,
        warmup: 0,
        total: config.hardneg_steps,
    };
    let k = config.hard_negatives;
    run_steps(
        &mut params,
        config.hardneg_steps,
        schedule,
        config.weight_decay,
        config.temperature,
        |current, step| {
            if step % config.refresh_every == 0 {
                let index = build_index(current, corpus);
                mined = mine_hard_negatives(current, queries, &index, k)
                    .into_iter()
                    .map(|h| (format!("query:{}", h.query_id), h.negatives))
                    .collect();
            }
            let Some(mut drawn) = sampler.draw(config.batch_size, Modality::CodeDoc, &mut rng) else {
                return Ok(None);
            };
            let mut seen: HashSet<String> = drawn.column_keys.iter().cloned().collect();
            for &row in &drawn.rows {
                let key = &sampler.items[row].anchor_key;
                debug_assert!(by_key.contains_key(key));
                for id in mined.get(key).into_iter().flatten() {
                    if seen.insert(id.clone()) {
                        let i = bank.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
                        drawn.batch.negatives.push(bank.tokens[i].clone());
                        drawn.column_keys.push(id.clone());
                    }
                }
            }
            sampler.mask_false_negatives(&mut drawn);
            Ok(Some(drawn))
        },
        &mut losses,
    )?;
    Ok(FinetuneOutput {
        params,
        losses,
        ar2_rounds: Vec::new(),
    })
}

/// Runs the strategy chain up to and including `strategy`.
pub fn finetune(
    params: &EncoderParams,
    strategy: Strategy,
    queries: &[Query],
    corpus: &[FunctionRecord],
    config: &FinetuneConfig,
    ar2: &Ar2Config,
) -> Result<FinetuneOutput> {
    let mut out = finetune_in_batch(params, queries, corpus, config)?;
    if strategy == Strategy::Inbatch {
        return Ok(out);
    }
    let hard = finetune_hard_negative(&out.params, queries, corpus, config)?;
    out.params = hard.params;
    out.losses.extend(hard.losses);
    if strategy == Strategy::Hardneg {
        return Ok(out);
    }
    let adv = ar2_finetune(&out.params, None, queries, corpus, config, ar2)?;
    out.params = adv.params;
    out.losses.extend(adv.g_losses);
    out.ar2_rounds = adv.rounds;
    Ok(out)
}
