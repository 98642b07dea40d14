use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{items_from_pairs, CodeBank, ModalityScheduler, Sampler};
use super::TrainConfig;
use crate::corpus::{FunctionRecord, Language};
use crate::encoder::{
    code_pieces, optimizer_step, pieces, token_dropout, total_loss, AdamWState, Batch, EncoderParams, LinearSchedule, Modality,
    Vocab,
};
use crate::pairmine::PairCorpora;
use crate::retrieval::{alignment, uniformity};
use crate::{stage_rng, Error, Result};

pub const METRICS_HEADER: &str = "step,loss_total,loss_uni,loss_bi_doc,loss_bi_comment,l_align,l_uniform";

/// Caps the number of functions embedded for the periodic geometry diagnostics.
const DIAGNOSTIC_LIMIT: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub loss_total: f64,
    pub loss_uni: Option<f64>,
    pub loss_bi_doc: Option<f64>,
    pub loss_bi_comment: Option<f64>,
    pub l_align: Option<f64>,
    pub l_uniform: Option<f64>,
}

/// Languages present in one drawn batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub step: usize,
    pub modality: Modality,
    pub languages: Vec<Language>,
}

#[derive(Debug, Clone)]
pub struct PretrainOutput {
    pub params: EncoderParams,
    pub metrics: Vec<MetricsRow>,
    pub batches: Vec<BatchRecord>,
    pub skipped_steps: u64,
}

/// Vocabulary over function bodies and every pair text.
pub fn build_encoder_vocab(corpus: &[FunctionRecord], pairs: &PairCorpora, max_size: usize) -> Vocab {
    let mut docs: Vec<Vec<String>> = corpus.iter().map(|r| code_pieces(&r.code_tokens)).collect();
    docs.extend(
        [&pairs.code_doc, &pairs.code_comment]
            .into_iter()
            .flatten()
            .filter_map(|p| p.text.as_deref())
            .map(pieces),
    );
    Vocab::build(docs.iter().map(Vec::as_slice), max_size)
}

fn fmt_opt(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{}", r.step, r.loss_total);
        for v in [r.loss_uni, r.loss_bi_doc, r.loss_bi_comment, r.l_align, r.l_uniform] {
            fmt_opt(&mut out, v);
        }
        out.push('\n');
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Alignment over (code, positive) pairs of the first non-empty modality in
/// doc, comment, code order; uniformity over function embeddings.
fn diagnostics(params: &EncoderParams, bank: &CodeBank, samplers: &[Option<Sampler>; 3]) -> (Option<f64>, Option<f64>) {
    let n = bank.len().min(DIAGNOSTIC_LIMIT);
    let codes: Vec<Vec<f64>> = bank.tokens[..n].par_iter().map(|t| params.embed_ids(t)).collect();
    let l_uniform = uniformity(&codes).ok();
    let source = [1usize, 2, 0].into_iter().find_map(|k| samplers[k].as_ref());
    let l_align = source.and_then(|s| {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = s.items[..s.items.len().min(DIAGNOSTIC_LIMIT)]
            .par_iter()
            .map(|item| (params.embed_ids(&item.anchor), params.embed_ids(&item.positives[0].1)))
            .collect();
        alignment(pairs.iter().map(|(a, b)| (a.as_slice(), b.as_slice()))).ok()
    });
    (l_align, l_uniform)
}

/// Contrastive pretraining over the mined pair corpora.
///
/// Each step draws one batch per scheduled modality and minimizes the sum of
/// their in-batch losses. Metrics are logged before the first update, every
/// `log_every` steps, and after the last update.
pub fn pretrain(pairs: &PairCorpora, corpus: &[FunctionRecord], config: &TrainConfig) -> Result<PretrainOutput> {
    config.validate()?;
    let vocab = build_encoder_vocab(corpus, pairs, config.vocab_size);
    let mut rng = stage_rng(config.seed, "pretrain");
    let params = EncoderParams::init(vocab, config.dim, &mut rng);
    pretrain_from(params, pairs, corpus, config)
}

/// Same as [`pretrain`] but continues from existing parameters.
pub fn pretrain_from(
    mut params: EncoderParams,
    pairs: &PairCorpora,
    corpus: &[FunctionRecord],
    config: &TrainConfig,
) -> Result<PretrainOutput> {
    config.validate()?;
    let bank = CodeBank::new(corpus, &params.vocab);
    let mut rng = stage_rng(config.seed, "pretrain-batches");
    let sets = [&pairs.code_code, &pairs.code_doc, &pairs.code_comment];
    let mut samplers: [Option<Sampler>; 3] = [None, None, None];
    for (k, modality) in ModalityScheduler::ORDER.into_iter().enumerate() {
        if config.modality_mix[k] <= 0.0 {
            continue;
        }
        let items = items_from_pairs(sets[k], &bank, &params.vocab, modality);
        if items.len() >= 2 {
            samplers[k] = Some(Sampler::new(items, config.hybrid_languages, config.seed, modality.as_str()));
        } else {
            log::warn!("pretraining: too few {} items, term disabled", modality.as_str());
        }
    }
    if samplers.iter().all(Option::is_none) {
        return Err(Error::NoLossTerms);
    }

    let mut mix = config.modality_mix;
    for k in 0..3 {
        if samplers[k].is_none() {
            mix[k] = 0.0;
        }
    }
    let mut scheduler = ModalityScheduler::new(mix);
    let schedule = LinearSchedule {
        peak: config.lr,
        warmup: config.warmup_steps,
        total: config.steps,
    };
    let mut state = AdamWState::new(&params);
    let mut metrics = Vec::new();
    let mut records = Vec::new();

    for step in 0..=config.steps {
        let active = scheduler.advance();
        let mut drawn: [Option<Batch>; 3] = [None, None, None];
        for k in 0..3 {
            if !active[k] {
                continue;
            }
            if let Some(sampler) = samplers[k].as_mut() {
                if let Some(d) = sampler.draw(config.batch_size, ModalityScheduler::ORDER[k], &mut rng) {
                    if step < config.steps {
                        records.push(BatchRecord {
                            step,
                            modality: d.batch.modality,
                            languages: d.batch.languages.clone(),
                        });
                    }
                    let mut batch = d.batch;
                    for ids in batch.anchors.iter_mut().chain(batch.positives.iter_mut()) {
                        *ids = token_dropout(ids, config.dropout, &mut rng);
                    }
                    drawn[k] = Some(batch);
                }
            }
        }
        let [uni, doc, comment] = &drawn;
        let result = total_loss(&params, uni.as_ref(), doc.as_ref(), comment.as_ref(), config.temperature);
        let (terms, grads) = match result {
            Ok(r) => r,
            Err(Error::NoLossTerms) => continue,
            Err(e) => return Err(e),
        };
        if step % config.log_every == 0 || step == config.steps {
            let (l_align, l_uniform) = diagnostics(&params, &bank, &samplers);
            log::info!(
                "pretrain step {step}: loss {:.4} align {:?} uniform {:?}",
                terms.total,
                l_align,
                l_uniform
            );
            metrics.push(MetricsRow {
                step,
                loss_total: terms.total,
                loss_uni: terms.uni,
                loss_bi_doc: terms.bi_doc,
                loss_bi_comment: terms.bi_comment,
                l_align,
                l_uniform,
            });
        }
        if step < config.steps {
            let lr = schedule.lr(step);
            optimizer_step(&mut params, &grads, &mut state, lr, config.weight_decay);
        }
    }
    Ok(PretrainOutput {
        params,
        metrics,
        batches: records,
        skipped_steps: state.skipped,
    })
}
