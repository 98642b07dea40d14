//! Encoder training: multi-modal contrastive pretraining and three
//! fine-tuning strategies for text-to-code retrieval.

mod adversarial;
mod data;
mod finetune;
mod pretrain;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use adversarial::{
    ar2_finetune, d_ranking_accuracy, Ar2Config, Ar2Output, Ar2Round, Discriminator,
};
pub use data::{items_from_pairs, items_from_queries, CodeBank, Drawn, Item, ModalityScheduler, Sampler};
pub use finetune::{
    finetune, finetune_hard_negative, finetune_in_batch, mine_hard_negatives, FinetuneConfig, FinetuneOutput,
    HardNegatives, Strategy,
};
pub use pretrain::{
    build_encoder_vocab, pretrain, pretrain_from, write_metrics_csv, BatchRecord, MetricsRow, PretrainOutput, METRICS_HEADER,
};

/// Pretraining hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub warmup_steps: usize,
    pub seed: u64,
    /// Share of steps given to the code-code, code-doc and code-comment terms.
    pub modality_mix: [f64; 3],
    /// Mix every language into each batch instead of one language per batch.
    pub hybrid_languages: bool,
    pub log_every: usize,
    /// Multiplies the cosine similarity inside the softmax.
    pub temperature: f64,
    /// Token dropout applied to both sides of every training pair.
    pub dropout: f64,
    pub dim: usize,
    pub vocab_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            steps: 2000,
            lr: 2e-3,
            weight_decay: 0.01,
            warmup_steps: 100,
            seed: 42,
            modality_mix: [1.0 / 3.0; 3],
            hybrid_languages: true,
            log_every: 100,
            temperature: 1.0,
            dropout: 0.0,
            dim: crate::encoder::DEFAULT_DIM,
            vocab_size: crate::encoder::DEFAULT_VOCAB_SIZE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::BatchTooSmall(self.batch_size));
        }
        if self.modality_mix.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (self.modality_mix.iter().sum::<f64>() - 1.0).abs() > 1e-6
        {
            return Err(Error::InvalidConfig("modality_mix must be non-negative and sum to 1".into()));
        }
        if self.lr <= 0.0 || self.temperature <= 0.0 || self.dim == 0 || self.vocab_size < 2 {
            return Err(Error::InvalidConfig(
                "lr, temperature, dim and vocab_size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig("dropout must be in [0, 1)".into()));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidConfig("log_every must be at least 1".into()));
        }
        Ok(())
    }
}
