//! The shared code/text encoder: mean-pooled embeddings, one affine-tanh
//! projection, L2 normalization.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::optim::Parameters;
use super::vocab::Vocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub vocab: Vocab,
    pub dim: usize,
    /// Row-major `[vocab × dim]`.
    pub embed: Vec<f64>,
    /// Row-major `[dim × dim]`; `h = proj · mean + proj_bias`.
    pub proj: Vec<f64>,
    pub proj_bias: Vec<f64>,
    /// Code and text share every weight. Always true.
    pub shared: bool,
}

/// Gradient with the same layout as [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub embed: Vec<f64>,
    pub proj: Vec<f64>,
    pub proj_bias: Vec<f64>,
}

impl EncoderParams {
    /// Embeddings ~ N(0, 1), projection ~ N(0, 1/dim), zero bias.
    pub fn init<R: Rng>(vocab: Vocab, dim: usize, rng: &mut R) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        let unit = Normal::new(0.0, 1.0).unwrap();
        let proj_dist = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).unwrap();
        let embed = (0..vocab.len() * dim).map(|_| unit.sample(rng)).collect();
        let proj = (0..dim * dim).map(|_| proj_dist.sample(rng)).collect();
        Self {
            vocab,
            dim,
            embed,
            proj,
            proj_bias: vec![0.0; dim],
            shared: true,
        }
    }

    pub fn zero_grads(&self) -> EncoderGrads {
        EncoderGrads {
            embed: vec![0.0; self.embed.len()],
            proj: vec![0.0; self.proj.len()],
            proj_bias: vec![0.0; self.dim],
        }
    }

    fn row(&self, id: u32) -> &[f64] {
        let start = id as usize * self.dim;
        &self.embed[start..start + self.dim]
    }

    /// Forward pass keeping what the backward pass needs.
    pub fn forward(&self, ids: &[u32]) -> Forward {
        assert!(!ids.is_empty(), "cannot encode an empty token list");
        let d = self.dim;
        let mut mean = vec![0.0; d];
        for &id in ids {
            for (m, e) in mean.iter_mut().zip(self.row(id)) {
                *m += e;
            }
        }
        let inv_n = 1.0 / ids.len() as f64;
        mean.iter_mut().for_each(|m| *m *= inv_n);

        let hidden: Vec<f64> = (0..d)
            .map(|r| {
                let w = &self.proj[r * d..(r + 1) * d];
                let h = w.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>() + self.proj_bias[r];
                h.tanh()
            })
            .collect();
        let norm = hidden.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let output = hidden.iter().map(|x| x / norm).collect();
        Forward {
            ids: ids.to_vec(),
            mean,
            hidden,
            norm,
            output,
        }
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, fwd: &Forward, d_out: &[f64], grads: &mut EncoderGrads) {
        let d = self.dim;
        let dot: f64 = fwd.output.iter().zip(d_out).map(|(o, g)| o * g).sum();
        // through the normalization, then tanh
        let d_pre: Vec<f64> = (0..d)
            .map(|k| {
                let dz = (d_out[k] - fwd.output[k] * dot) / fwd.norm;
                dz * (1.0 - fwd.hidden[k] * fwd.hidden[k])
            })
            .collect();

        let mut d_mean = vec![0.0; d];
        for r in 0..d {
            let g = d_pre[r];
            if g == 0.0 {
                continue;
            }
            grads.proj_bias[r] += g;
            let w = &self.proj[r * d..(r + 1) * d];
            let gw = &mut grads.proj[r * d..(r + 1) * d];
            for c in 0..d {
                gw[c] += g * fwd.mean[c];
                d_mean[c] += g * w[c];
            }
        }

        let inv_n = 1.0 / fwd.ids.len() as f64;
        for &id in &fwd.ids {
            let start = id as usize * d;
            for (ge, dm) in grads.embed[start..start + d].iter_mut().zip(&d_mean) {
                *ge += dm * inv_n;
            }
        }
    }

    /// Deterministic encoding (no dropout).
    pub fn embed_ids(&self, ids: &[u32]) -> Vec<f64> {
        self.forward(ids).output
    }
}

/// Cached intermediate values of one encoding.
#[derive(Debug, Clone)]
pub struct Forward {
    pub ids: Vec<u32>,
    pub mean: Vec<f64>,
    pub hidden: Vec<f64>,
    pub norm: f64,
    pub output: Vec<f64>,
}

/// Drops each token independently with probability `p`.
/// Returns the input unchanged if every token would be dropped.
pub fn token_dropout<R: Rng>(ids: &[u32], p: f64, rng: &mut R) -> Vec<u32> {
    if p <= 0.0 {
        return ids.to_vec();
    }
    let kept: Vec<u32> = ids.iter().copied().filter(|_| rng.gen::<f64>() >= p).collect();
    if kept.is_empty() {
        ids.to_vec()
    } else {
        kept
    }
}

/// Encodes a token list; with `dropout_p > 0` tokens are dropped before pooling.
pub fn encode<R: Rng>(params: &EncoderParams, ids: &[u32], dropout_p: f64, rng: &mut R) -> Vec<f64> {
    params.embed_ids(&token_dropout(ids, dropout_p, rng))
}

/// Cosine similarity of two unit vectors.
pub fn similarity(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl Parameters for EncoderParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.embed, &self.proj, &self.proj_bias]
    }

    fn decay_mask(&self) -> Vec<bool> {
        vec![true, true, false]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.embed, &mut self.proj, &mut self.proj_bias]
    }
}

impl Parameters for EncoderGrads {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.embed, &self.proj, &self.proj_bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.embed, &mut self.proj, &mut self.proj_bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(dim: usize, words: usize, seed: u64) -> EncoderParams {
        let tokens: Vec<String> = std::iter::once("<unk>".to_string())
            .chain((0..words).map(|i| format!("w{i}")))
            .collect();
        EncoderParams::init(tokens.into(), dim, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn output_is_unit_norm() {
        let p = toy(16, 20, 1);
        for ids in [vec![1], vec![1, 2, 3], vec![0, 0, 5, 7, 19]] {
            let out = p.embed_ids(&ids);
            let n: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_without_dropout() {
        let p = toy(8, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(encode(&p, &[1, 2], 0.0, &mut rng), encode(&p, &[1, 2], 0.0, &mut rng));
    }

    #[test]
    fn duplicating_tokens_changes_nothing() {
        let p = toy(8, 5, 3);
        let once = p.embed_ids(&[1, 4, 2]);
        let twice = p.embed_ids(&[1, 4, 2, 1, 4, 2]);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_token_matches_hand_pipeline() {
        // dim 2: embed row of token 1 is (0.5, -1.0); proj = [[1, 2], [0, -1]]; bias = (0.1, 0.2)
        let mut p = toy(2, 1, 4);
        p.embed = vec![0.0, 0.0, 0.5, -1.0];
        p.proj = vec![1.0, 2.0, 0.0, -1.0];
        p.proj_bias = vec![0.1, 0.2];
        let h0 = (0.5f64 * 1.0 + -1.0 * 2.0 + 0.1).tanh();
        let h1 = (0.5f64 * 0.0 + -1.0 * -1.0 + 0.2).tanh();
        let n = (h0 * h0 + h1 * h1).sqrt();
        let out = p.embed_ids(&[1]);
        assert!((out[0] - h0 / n).abs() < 1e-15);
        assert!((out[1] - h1 / n).abs() < 1e-15);
    }

    #[test]
    fn similarity_cases() {
        let u = [0.6, 0.8];
        assert!((similarity(&u, &u) - 1.0).abs() < 1e-12);
        assert!(similarity(&u, &[-0.8, 0.6]).abs() < 1e-12);
        assert!((similarity(&u, &[-0.6, -0.8]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn dropout_falls_back_when_everything_dropped() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(token_dropout(&[3, 4], 1.0, &mut rng), vec![3, 4]);
        let kept = token_dropout(&(0..1000).collect::<Vec<u32>>(), 0.1, &mut rng);
        assert!(kept.len() > 850 && kept.len() < 950);
    }
}
