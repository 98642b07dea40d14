//! Adversarial retriever-ranker fine-tuning. The retriever proposes hard
//! candidates; a pair scorer learns to rank gold above them; the retriever
//! then matches the scorer's distribution over each candidate pool.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::CodeBank;
use super::finetune::{mine_hard_negatives, FinetuneConfig};
use crate::corpus::FunctionRecord;
use crate::encoder::{
    code_pieces, distillation_loss, optimizer_step, pieces, AdamWState, DistillItem, EncoderParams, LinearSchedule, Vocab,
    DEFAULT_VOCAB_SIZE, MAX_CODE_LEN, MAX_TEXT_LEN,
};
use crate::pairmine::{CrossInput, CrossModelParams};
use crate::retrieval::{build_index, Query};
use crate::{stage_rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ar2Config {
    /// Negatives sampled per query from the retriever's pool each round.
    pub negative_size: usize,
    /// Depth of the retriever's non-gold pool.
    pub pool_size: usize,
    pub rounds: usize,
    pub g_steps: usize,
    pub d_steps: usize,
    pub g_lr: f64,
    pub d_lr: f64,
    pub d_dim: usize,
    pub d_weight_decay: f64,
    pub d_batch_size: usize,
    /// Re-retrieve the candidate pool after this many retriever steps.
    pub refresh_every: usize,
    /// Fraction of retriever steps spent warming up the learning rate.
    pub warmup_proportion: f64,
}

impl Default for Ar2Config {
    fn default() -> Self {
        Self {
            negative_size: 7,
            pool_size: 15,
            rounds: 3,
            g_steps: 50,
            d_steps: 200,
            g_lr: 5e-5,
            d_lr: 0.05,
            d_dim: 16,
            d_weight_decay: 1.0,
            d_batch_size: 32,
            refresh_every: 500,
            warmup_proportion: 0.1,
        }
    }
}

impl Ar2Config {
    pub fn validate(&self) -> Result<()> {
        if self.negative_size == 0 || self.pool_size < self.negative_size {
            return Err(Error::InvalidConfig("need 0 < negative_size <= pool_size".into()));
        }
        if self.rounds == 0 || !(0.0..=1.0).contains(&self.warmup_proportion) {
            return Err(Error::InvalidConfig("need rounds >= 1 and warmup_proportion in [0, 1]".into()));
        }
        if self.g_lr <= 0.0 || self.d_lr <= 0.0 || self.refresh_every == 0 || self.d_dim == 0 {
            return Err(Error::InvalidConfig("AR2 rates, refresh_every and d_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Diagnostics of one adversarial round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ar2Round {
    pub round: usize,
    pub d_loss: f64,
    /// Share of held-out (gold, random) pairs the scorer ranks correctly.
    pub d_accuracy: f64,
    pub g_loss: Option<f64>,
    /// Set when the scorer gave every candidate the same score and the
    /// retriever update was skipped.
    pub aborted: bool,
}

#[derive(Debug, Clone)]
pub struct Ar2Output {
    pub params: EncoderParams,
    pub discriminator: Discriminator,
    pub rounds: Vec<Ar2Round>,
    pub g_losses: Vec<f64>,
}

/// Pair scorer over (query text, function body) with cached inputs.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub model: CrossModelParams,
    codes: Vec<CrossInput>,
}

impl Discriminator {
    pub fn new<R: Rng>(queries: &[Query], corpus: &[FunctionRecord], dim: usize, rng: &mut R) -> Self {
        let mut docs: Vec<Vec<String>> = corpus.iter().map(|r| code_pieces(&r.code_tokens)).collect();
        docs.extend(queries.iter().map(|q| pieces(&q.text)));
        let vocab = Vocab::build(docs.iter().map(Vec::as_slice), DEFAULT_VOCAB_SIZE);
        let codes = corpus
            .iter()
            .map(|r| CrossInput::new(&vocab, code_pieces(&r.code_tokens), MAX_CODE_LEN))
            .collect();
        Self {
            model: CrossModelParams::init(vocab, dim, rng),
            codes,
        }
    }

    /// Wraps an existing scorer, tokenizing the corpus with its vocabulary.
    pub fn from_model(model: CrossModelParams, corpus: &[FunctionRecord]) -> Self {
        let codes = corpus
            .iter()
            .map(|r| CrossInput::new(&model.vocab, code_pieces(&r.code_tokens), MAX_CODE_LEN))
            .collect();
        Self { model, codes }
    }

    pub fn query_input(&self, text: &str) -> CrossInput {
        CrossInput::new(&self.model.vocab, pieces(text), MAX_TEXT_LEN)
    }

    fn logit(&self, query: &CrossInput, code: usize) -> f64 {
        let p = self.model.score(query, &self.codes[code]).clamp(1e-300, 1.0 - 1e-16);
        (p / (1.0 - p)).ln()
    }

    /// Logit of a query against the function at position `code` in the corpus.
    pub fn score(&self, query: &CrossInput, code: usize) -> f64 {
        self.logit(query, code)
    }
}

/// Fraction of (query, gold, other) triples with the gold function scored higher.
pub fn d_ranking_accuracy(d: &Discriminator, triples: &[(CrossInput, usize, usize)]) -> f64 {
    if triples.is_empty() {
        return 0.0;
    }
    let correct = triples.iter().filter(|(q, g, n)| d.score(q, *g) > d.score(q, *n)).count();
    correct as f64 / triples.len() as f64
}

struct Prepared {
    input: CrossInput,
    text_ids: Vec<u32>,
    gold: Vec<usize>,
    negatives: Vec<usize>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Adversarial fine-tuning starting from retriever `params`. The scorer
/// starts from `scorer` when given, otherwise from a fresh initialization.
pub fn ar2_finetune(
    params: &EncoderParams,
    scorer: Option<CrossModelParams>,
    queries: &[Query],
    corpus: &[FunctionRecord],
    ft: &FinetuneConfig,
    config: &Ar2Config,
) -> Result<Ar2Output> {
    config.validate()?;
    let bank = CodeBank::new(corpus, &params.vocab);
    let mut rng = stage_rng(ft.seed, "ar2");
    let mut d = match scorer {
        Some(model) => Discriminator::from_model(model, corpus),
        None => Discriminator::new(queries, corpus, config.d_dim, &mut rng),
    };
    let mut prepared: Vec<Prepared> = queries
        .iter()
        .filter_map(|q| {
            let gold: Vec<usize> = q.gold_ids.iter().filter_map(|g| bank.get(g)).collect();
            (!gold.is_empty()).then(|| Prepared {
                input: d.query_input(&q.text),
                text_ids: params.vocab.text_ids(&q.text),
                gold,
                negatives: Vec::new(),
            })
        })
        .collect();
    if prepared.len() < 2 || bank.len() <= config.negative_size {
        return Err(Error::CorpusTooSmall {
            needed: config.negative_size + 1,
            got: bank.len().min(prepared.len()),
        });
    }
    let kept: Vec<&Query> = queries.iter().filter(|q| q.gold_ids.iter().any(|g| bank.get(g).is_some())).collect();

    let mut g = params.clone();
    let mut g_state = AdamWState::new(&g);
    let mut d_state = AdamWState::new(&d.model);
    let mut pools: Vec<Vec<usize>> = Vec::new();
    let mut since_refresh = usize::MAX;
    let mut rounds = Vec::new();
    let mut g_losses = Vec::new();
    let total_g = config.rounds * config.g_steps;
    let schedule = LinearSchedule {
        peak: config.g_lr,
        warmup: (config.warmup_proportion * total_g as f64).round() as usize,
        total: total_g,
    };

    for round in 0..config.rounds {
        if since_refresh >= config.refresh_every {
            let index = build_index(&g, corpus);
            let owned: Vec<Query> = kept.iter().map(|q| (*q).clone()).collect();
            pools = mine_hard_negatives(&g, &owned, &index, config.pool_size)
                .into_iter()
                .map(|h| h.negatives.iter().filter_map(|id| bank.get(id)).collect())
                .collect();
            since_refresh = 0;
        }
        for (p, pool) in prepared.iter_mut().zip(&pools) {
            p.negatives = pool.choose_multiple(&mut rng, config.negative_size).copied().collect();
        }

        // scorer: rank gold above the retriever's negatives
        let mut d_loss = f64::NAN;
        let triples: Vec<(usize, usize, usize)> = prepared
            .iter()
            .enumerate()
            .flat_map(|(qi, p)| p.gold.iter().flat_map(move |&g| p.negatives.iter().map(move |&n| (qi, g, n))))
            .collect();
        if !triples.is_empty() {
            for _ in 0..config.d_steps {
                let batch: Vec<(&CrossInput, &CrossInput, &CrossInput)> = (0..config.d_batch_size)
                    .map(|_| {
                        let (qi, gi, ni) = triples[rng.gen_range(0..triples.len())];
                        (&prepared[qi].input, &d.codes[gi], &d.codes[ni])
                    })
                    .collect();
                let (loss, grads) = d.model.ranking_loss(&batch);
                optimizer_step(&mut d.model, &grads, &mut d_state, config.d_lr, config.d_weight_decay);
                d_loss = loss;
            }
        }

        let held_out: Vec<(CrossInput, usize, usize)> = prepared
            .iter()
            .filter_map(|p| {
                let golds: HashSet<usize> = p.gold.iter().copied().collect();
                let other = (0..50)
                    .map(|_| rng.gen_range(0..bank.len()))
                    .find(|i| !golds.contains(i))?;
                Some((p.input.clone(), p.gold[0], other))
            })
            .collect();
        let d_accuracy = d_ranking_accuracy(&d, &held_out);

        // teacher distributions over [gold, negatives...]
        let teachers: Vec<(Vec<usize>, Vec<f64>)> = prepared
            .iter()
            .map(|p| {
                let mut cands = vec![p.gold[rng.gen_range(0..p.gold.len())]];
                cands.extend(p.negatives.iter().copied());
                let logits: Vec<f64> = cands.iter().map(|&c| d.score(&p.input, c)).collect();
                (cands, logits)
            })
            .collect();
        let spread = teachers
            .iter()
            .map(|(_, l)| {
                let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = l.iter().copied().fold(f64::INFINITY, f64::min);
                max - min
            })
            .fold(0.0, f64::max);
        if !spread.is_finite() || spread < 1e-9 {
            log::warn!("AR2 round {round}: scorer is degenerate, retriever update skipped");
            rounds.push(Ar2Round {
                round,
                d_loss,
                d_accuracy,
                g_loss: None,
                aborted: true,
            });
            continue;
        }
        let items: Vec<DistillItem> = teachers
            .into_iter()
            .zip(&prepared)
            .map(|((cands, logits), p)| DistillItem {
                query: p.text_ids.clone(),
                candidates: cands.iter().map(|&c| bank.tokens[c].clone()).collect(),
                teacher: softmax(&logits),
            })
            .collect();

        let mut g_loss = None;
        let mut order: Vec<usize> = (0..items.len()).collect();
        for _ in 0..config.g_steps {
            order.shuffle(&mut rng);
            let chunk: Vec<DistillItem> = order.iter().take(ft.batch_size).map(|&i| items[i].clone()).collect();
            let (loss, grads) = distillation_loss(&g, &chunk, ft.temperature)?;
            optimizer_step(&mut g, &grads, &mut g_state, schedule.lr(g_losses.len()), ft.weight_decay);
            g_losses.push(loss);
            g_loss = Some(loss);
            since_refresh += 1;
        }
        log::info!("AR2 round {round}: scorer loss {d_loss:.4} acc {d_accuracy:.3} retriever loss {g_loss:?}");
        rounds.push(Ar2Round {
            round,
            d_loss,
            d_accuracy,
            g_loss,
            aborted: false,
        });
    }
    Ok(Ar2Output {
        params: g,
        discriminator: d,
        rounds,
        g_losses,
    })
}
