//! Shared-weight code/text encoder with hand-written gradients.

mod checkpoint;
mod loss;
mod model;
mod optim;
mod vocab;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use loss::{contrastive_loss, distillation_loss, total_loss, Batch, DistillItem, LossTerms, Modality};
pub use model::{encode, similarity, token_dropout, EncoderGrads, EncoderParams, Forward};
pub use optim::{optimizer_step, AdamWConfig, AdamWState, LinearSchedule, Parameters};
pub use vocab::{code_pieces, pieces, Vocab, UNK, UNK_ID};

/// Default embedding width.
pub const DEFAULT_DIM: usize = 64;
/// Default vocabulary cap, unknown token included.
pub const DEFAULT_VOCAB_SIZE: usize = 20_000;
pub const MAX_TEXT_LEN: usize = 128;
pub const MAX_CODE_LEN: usize = 320;
