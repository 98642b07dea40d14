//! Contrastive code retrieval at desk scale.
//!
//! The crate covers the whole flow: ingest a source tree into function
//! records ([`corpus`]), mine code-text and code-code positive pairs
//! ([`pairmine`]), train a shared-weight dual encoder ([`encoder`],
//! [`train`]) and evaluate it with exact dense retrieval ([`retrieval`]).
//! [`pipeline`] ties the stages together behind one configuration file.

pub mod corpus;
pub mod encoder;
pub mod pairmine;
pub mod pipeline;
pub mod retrieval;
pub mod train;
mod error;

pub use error::{Error, Result};

/// Independent RNG stream for one named stage of a seeded run.
pub fn stage_rng(seed: u64, stage: &str) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    // FNV-1a over the label, mixed with the run seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ h)
}
