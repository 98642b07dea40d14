//! JSON checkpoints. Floats are written with round-trip precision, so a
//! reloaded encoder produces bit-identical embeddings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::EncoderParams;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const KIND: &str = "coderet-encoder";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: String,
    pub version: u32,
    /// Resolved configuration of the run that produced the weights.
    pub config: serde_json::Value,
    pub params: EncoderParams,
}

impl Checkpoint {
    pub fn new(params: EncoderParams, config: serde_json::Value) -> Self {
        Self {
            kind: KIND.to_string(),
            version: CHECKPOINT_VERSION,
            config,
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let text = serde_json::to_string(self).map_err(|e| Error::json(path.display().to_string(), e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        if ckpt.kind != KIND {
            return Err(Error::Checkpoint(format!("{} is a `{}` file, not an encoder", path.display(), ckpt.kind)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        let p = &ckpt.params;
        let v = p.vocab.len();
        if p.embed.len() != v * p.dim || p.proj.len() != p.dim * p.dim || p.proj_bias.len() != p.dim {
            return Err(Error::Checkpoint("matrix shapes do not match vocab and dimension".into()));
        }
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reload_is_bit_stable() {
        let vocab: Vec<String> = ["<unk>", "sort", "array"].iter().map(|s| s.to_string()).collect();
        let params = EncoderParams::init(vocab.into(), 16, &mut ChaCha8Rng::seed_from_u64(5));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.json");
        Checkpoint::new(params.clone(), serde_json::json!({"dim": 16})).save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.params, params);
        assert_eq!(back.params.embed_ids(&[1, 2]), params.embed_ids(&[1, 2]));
    }
}
