//! Joint-input pair scorer: `σ(m_aᵀ·B·m_b + w·jaccard(a, b) + bias)` with `B`
//! symmetrized so the score of an unordered pair does not depend on order.
//! Used both to denoise mined code-code pairs and as the ranker in
//! adversarial fine-tuning.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::encoder::{optimizer_step, AdamWState, LinearSchedule, Parameters, Vocab};
use crate::Result;

/// Pieces ignored by the lexical-overlap feature.
const KEYWORDS: &[&str] = &[
    "abstract", "and", "async", "await", "bool", "boolean", "break", "case", "catch", "char", "class", "const",
    "continue", "def", "default", "do", "double", "elif", "else", "end", "extends", "false", "final", "finally",
    "float", "for", "foreach", "from", "func", "function", "if", "implements", "import", "in", "int", "interface",
    "is", "lambda", "len", "let", "long", "new", "nil", "none", "not", "null", "or", "package", "pass", "private",
    "protected", "public", "range", "return", "self", "static", "string", "super", "switch", "this", "throw",
    "throws", "true", "try", "var", "void", "while", "yield",
];

/// The overlap feature enters the logit as `OVERLAP_SCALE · jaccard`, so a unit
/// weight already spans a useful logit range.
const OVERLAP_SCALE: f64 = 10.0;

/// Overlap of the non-keyword piece sets.
pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    fn set(x: &[String]) -> HashSet<&str> {
        x.iter().map(String::as_str).filter(|p| !KEYWORDS.contains(p)).collect()
    }
    let (sa, sb) = (set(a), set(b));
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossModelParams {
    pub vocab: Vocab,
    pub dim: usize,
    /// Row-major `[vocab × dim]`.
    pub embed: Vec<f64>,
    /// Row-major `[dim × dim]`; only its symmetric part affects the score.
    pub interaction: Vec<f64>,
    pub overlap_weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// One side of a scored pair: vocabulary ids and raw pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossInput {
    pub ids: Vec<u32>,
    pub pieces: Vec<String>,
}

impl CrossInput {
    pub fn new(vocab: &Vocab, pieces: Vec<String>, max_len: usize) -> Self {
        let mut ids = vocab.encode(&pieces, max_len);
        if ids.is_empty() {
            ids.push(crate::encoder::UNK_ID);
        }
        Self { ids, pieces }
    }
}

/// A labeled training example for the scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossExample {
    pub left: CrossInput,
    pub right: CrossInput,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
}

impl Default for CrossTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 16,
            lr: 0.01,
            weight_decay: 0.01,
        }
    }
}

impl CrossModelParams {
    pub fn init<R: Rng>(vocab: Vocab, dim: usize, rng: &mut R) -> Self {
        let dist = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).unwrap();
        let embed = (0..vocab.len() * dim).map(|_| dist.sample(rng)).collect();
        Self {
            vocab,
            dim,
            embed,
            interaction: vec![0.0; dim * dim],
            overlap_weight: vec![0.0],
            bias: vec![0.0],
        }
    }

    fn pooled(&self, ids: &[u32]) -> Vec<f64> {
        let d = self.dim;
        let mut m = vec![0.0; d];
        for &id in ids {
            let row = &self.embed[id as usize * d..(id as usize + 1) * d];
            m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        let inv = 1.0 / ids.len().max(1) as f64;
        m.iter_mut().for_each(|x| *x *= inv);
        m
    }

    fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for r in 0..d {
            for c in 0..d {
                let w = 0.5 * (self.interaction[r * d + c] + self.interaction[c * d + r]);
                s += u[r] * w * v[c];
            }
        }
        s
    }

    fn logit(&self, left: &CrossInput, right: &CrossInput) -> (f64, Vec<f64>, Vec<f64>, f64) {
        let (u, v) = (self.pooled(&left.ids), self.pooled(&right.ids));
        let j = OVERLAP_SCALE * jaccard(&left.pieces, &right.pieces);
        let z = self.bilinear(&u, &v) + self.overlap_weight[0] * j + self.bias[0];
        (z, u, v, j)
    }

    /// Probability that the pair is a true match.
    pub fn score(&self, left: &CrossInput, right: &CrossInput) -> f64 {
        sigmoid(self.logit(left, right).0)
    }

    /// Adds `dz · ∂logit/∂θ` to `grads`.
    fn accumulate(&self, left: &CrossInput, right: &CrossInput, dz: f64, grads: &mut CrossModelParams) {
        let (_, u, v, j) = self.logit(left, right);
        let d = self.dim;
        grads.bias[0] += dz;
        grads.overlap_weight[0] += dz * j;
        let mut du = vec![0.0; d];
        let mut dv = vec![0.0; d];
        for r in 0..d {
            for c in 0..d {
                // logit uses (W + Wᵀ)/2, so W[r][c] receives half of both orientations
                grads.interaction[r * d + c] += dz * 0.5 * (u[r] * v[c] + u[c] * v[r]);
                let w = 0.5 * (self.interaction[r * d + c] + self.interaction[c * d + r]);
                du[r] += dz * w * v[c];
                dv[c] += dz * w * u[r];
            }
        }
        for (ids, dm) in [(&left.ids, &du), (&right.ids, &dv)] {
            let inv = 1.0 / ids.len().max(1) as f64;
            for &id in ids.iter() {
                let row = &mut grads.embed[id as usize * d..(id as usize + 1) * d];
                row.iter_mut().zip(dm.iter()).for_each(|(g, x)| *g += x * inv);
            }
        }
    }

    pub fn zero_grads(&self) -> CrossModelParams {
        CrossModelParams {
            vocab: self.vocab.clone(),
            dim: self.dim,
            embed: vec![0.0; self.embed.len()],
            interaction: vec![0.0; self.interaction.len()],
            overlap_weight: vec![0.0],
            bias: vec![0.0],
        }
    }

    /// Mean logistic loss over `examples` and its gradient.
    pub fn logistic_loss(&self, examples: &[&CrossExample]) -> (f64, CrossModelParams) {
        let mut grads = self.zero_grads();
        let n = examples.len().max(1) as f64;
        let mut loss = 0.0;
        for ex in examples {
            let z = self.logit(&ex.left, &ex.right).0;
            let y = if ex.label { 1.0 } else { 0.0 };
            // -[y ln σ(z) + (1-y) ln(1-σ(z))] = softplus(z) - y z
            loss += softplus(z) - y * z;
            self.accumulate(&ex.left, &ex.right, (sigmoid(z) - y) / n, &mut grads);
        }
        (loss / n, grads)
    }

    /// Pairwise ranking loss `-ln σ(z_pos - z_neg)` averaged over `(positive, negative)` pairs.
    pub fn ranking_loss(&self, pairs: &[(&CrossInput, &CrossInput, &CrossInput)]) -> (f64, CrossModelParams) {
        let mut grads = self.zero_grads();
        let n = pairs.len().max(1) as f64;
        let mut loss = 0.0;
        for (query, pos, neg) in pairs {
            let margin = self.logit(query, pos).0 - self.logit(query, neg).0;
            loss += softplus(-margin);
            let dz = -sigmoid(-margin) / n;
            self.accumulate(query, pos, dz, &mut grads);
            self.accumulate(query, neg, -dz, &mut grads);
        }
        (loss / n, grads)
    }
}

impl Parameters for CrossModelParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![&self.embed, &self.interaction, &self.overlap_weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.embed, &mut self.interaction, &mut self.overlap_weight, &mut self.bias]
    }

    fn decay_mask(&self) -> Vec<bool> {
        vec![true, true, false, false]
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Minibatch AdamW on the logistic loss. Returns the mean loss of each epoch.
pub fn fit_logistic<R: Rng>(
    model: &mut CrossModelParams,
    examples: &[CrossExample],
    config: &CrossTrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut state = AdamWState::new(model);
    let batch = config.batch_size.max(1);
    let per_epoch = examples.len().div_ceil(batch);
    let schedule = LinearSchedule {
        peak: config.lr,
        warmup: 0,
        total: per_epoch * config.epochs,
    };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let refs: Vec<&CrossExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let (loss, grads) = model.logistic_loss(&refs);
            optimizer_step(model, &grads, &mut state, schedule.lr(step), config.weight_decay);
            total += loss * refs.len() as f64;
            step += 1;
        }
        history.push(total / examples.len().max(1) as f64);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn tiny() -> CrossModelParams {
        let vocab: Vec<String> = ["<unk>", "a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = CrossModelParams::init(vocab.into(), 3, &mut rng);
        m.interaction.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
        m.overlap_weight[0] = 0.7;
        m.bias[0] = -0.2;
        m
    }

    fn input(m: &CrossModelParams, s: &str) -> CrossInput {
        CrossInput::new(&m.vocab, words(s), 100)
    }

    #[test]
    fn jaccard_ignores_keywords() {
        assert_eq!(jaccard(&words("return a b"), &words("def a b")), 1.0);
        assert_eq!(jaccard(&words("a b"), &words("c")), 0.0);
        assert_eq!(jaccard(&words("return"), &words("def")), 0.0);
    }

    #[test]
    fn score_is_symmetric() {
        let m = tiny();
        let (x, y) = (input(&m, "a b c"), input(&m, "c d"));
        assert!((m.score(&x, &y) - m.score(&y, &x)).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = tiny();
        let ex = vec![
            CrossExample { left: input(&m, "a b"), right: input(&m, "b c"), label: true },
            CrossExample { left: input(&m, "a d"), right: input(&m, "c"), label: false },
        ];
        let refs: Vec<&CrossExample> = ex.iter().collect();
        let (_, grads) = m.logistic_loss(&refs);
        let (q, p, n) = (input(&m, "a"), input(&m, "a b"), input(&m, "d c"));
        let (_, rgrads) = m.ranking_loss(&[(&q, &p, &n)]);
        for (analytic, f) in [
            (grads, Box::new(|mm: &CrossModelParams| mm.logistic_loss(&refs).0) as Box<dyn Fn(&CrossModelParams) -> f64>),
            (rgrads, Box::new(|mm: &CrossModelParams| mm.ranking_loss(&[(&q, &p, &n)]).0)),
        ] {
            let mut probe = m.clone();
            let a = analytic.tensors();
            for t in 0..a.len() {
                for i in 0..a[t].len() {
                    let orig = probe.tensors()[t][i];
                    probe.tensors_mut()[t][i] = orig + 1e-6;
                    let up = f(&probe);
                    probe.tensors_mut()[t][i] = orig - 1e-6;
                    let down = f(&probe);
                    probe.tensors_mut()[t][i] = orig;
                    let num = (up - down) / 2e-6;
                    let err = (a[t][i] - num).abs() / a[t][i].abs().max(num.abs()).max(1e-8);
                    assert!(err < 1e-4, "tensor {t} index {i}: {} vs {num}", a[t][i]);
                }
            }
        }
    }
}
