//! Self-supervised text matchers: two token-dropout views of the same text
//! are each other's positive, every other text in the batch is a negative.

use rand::seq::SliceRandom;

use super::MiningConfig;
use crate::encoder::{
    contrastive_loss, optimizer_step, pieces, token_dropout, AdamWState, Batch, EncoderParams, LinearSchedule,
    Modality, Vocab, DEFAULT_VOCAB_SIZE,
};
use crate::{stage_rng, Error, Result};

/// Matcher weights and the mean loss of each epoch.
#[derive(Debug, Clone)]
pub struct TrainedMatcher {
    pub params: EncoderParams,
    pub step_losses: Vec<f64>,
    pub epoch_losses: Vec<f64>,
}

pub fn train_matcher(texts: &[String], config: &MiningConfig) -> Result<EncoderParams> {
    train_matcher_logged(texts, config, "matcher").map(|m| m.params)
}

/// As [`train_matcher`]; `label` separates the RNG streams of different matchers.
pub fn train_matcher_logged(texts: &[String], config: &MiningConfig, label: &str) -> Result<TrainedMatcher> {
    let batch_size = config.matcher_batch_size.max(2);
    if texts.len() < 2 * batch_size {
        return Err(Error::CorpusTooSmall {
            needed: 2 * batch_size,
            got: texts.len(),
        });
    }
    let mut rng = stage_rng(config.seed, label);
    let tokenized: Vec<Vec<String>> = texts.iter().map(|t| pieces(t)).collect();
    let vocab = Vocab::build(tokenized.iter().map(Vec::as_slice), DEFAULT_VOCAB_SIZE);
    let ids: Vec<Vec<u32>> = texts.iter().map(|t| vocab.text_ids(t)).collect();
    let mut params = EncoderParams::init(vocab, config.matcher_dim, &mut rng);
    let mut state = AdamWState::new(&params);
    let temperature = 1.0 / config.matcher_temperature;

    let steps_per_epoch = texts.len() / batch_size;
    let schedule = LinearSchedule {
        peak: config.matcher_lr,
        warmup: 0,
        total: steps_per_epoch * config.matcher_epochs,
    };
    let mut order: Vec<usize> = (0..texts.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.matcher_epochs);
    let mut step_losses = Vec::new();
    let mut step = 0;
    for _ in 0..config.matcher_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks_exact(batch_size) {
            let anchors = chunk.iter().map(|&i| token_dropout(&ids[i], config.matcher_dropout, &mut rng)).collect();
            let positives = chunk.iter().map(|&i| token_dropout(&ids[i], config.matcher_dropout, &mut rng)).collect();
            let batch = Batch::new(anchors, positives, Modality::CodeCode);
            let (loss, grads) = contrastive_loss(&params, &batch, temperature)?;
            optimizer_step(&mut params, &grads, &mut state, schedule.lr(step), config.matcher_weight_decay);
            total += loss;
            step_losses.push(loss);
            step += 1;
        }
        epoch_losses.push(total / steps_per_epoch as f64);
    }
    Ok(TrainedMatcher {
        params,
        step_losses,
        epoch_losses,
    })
}
