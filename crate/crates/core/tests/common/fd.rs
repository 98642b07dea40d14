//! Finite-difference oracle for encoder gradients.

use coderet::encoder::{Batch, EncoderGrads, EncoderParams, Modality, Parameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DIM: usize = 8;
pub const WORDS: usize = 12;
pub const STEP: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-4;

pub fn params(seed: u64) -> EncoderParams {
    let vocab: Vec<String> = std::iter::once("<unk>".to_string())
        .chain((0..WORDS).map(|i| format!("w{i}")))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = EncoderParams::init(vocab.into(), DIM, &mut rng);
    // non-zero bias so its gradient path is exercised away from the origin
    p.proj_bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.3..0.3));
    p
}

pub fn random_seq(rng: &mut ChaCha8Rng) -> Vec<u32> {
    let len = rng.gen_range(1..5);
    (0..len).map(|_| rng.gen_range(0..=WORDS as u32)).collect()
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize, modality: Modality) -> Batch {
    let anchors = (0..n).map(|_| random_seq(rng)).collect();
    let positives = (0..n).map(|_| random_seq(rng)).collect();
    Batch::new(anchors, positives, modality)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest relative error between `analytic` and central differences of `f`.
pub fn worst_error(p: &EncoderParams, analytic: &EncoderGrads, f: impl Fn(&EncoderParams) -> f64) -> f64 {
    let mut worst = 0.0f64;
    let analytic = analytic.tensors();
    let mut probe = p.clone();
    for t in 0..analytic.len() {
        for i in 0..analytic[t].len() {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + STEP;
            let up = f(&probe);
            probe.tensors_mut()[t][i] = orig - STEP;
            let down = f(&probe);
            probe.tensors_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            worst = worst.max(rel_err(analytic[t][i], numeric));
        }
    }
    worst
}
