use coderet::encoder::{contrastive_loss, encode, Batch, EncoderParams, Modality};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(dim: usize, words: usize, seed: u64) -> EncoderParams {
    let vocab: Vec<String> = std::iter::once("<unk>".to_string())
        .chain((0..words).map(|i| format!("w{i}")))
        .collect();
    EncoderParams::init(vocab.into(), dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Token `k` encodes to the k-th basis vector.
fn orthonormal(dim: usize) -> EncoderParams {
    let mut p = params(dim, dim, 0);
    p.embed = vec![0.0; (dim + 1) * dim];
    for k in 0..dim {
        p.embed[(k + 1) * dim + k] = 1.0;
    }
    p.proj = (0..dim * dim).map(|i| if i % (dim + 1) == 0 { 1.0 } else { 0.0 }).collect();
    p.proj_bias = vec![0.0; dim];
    p
}

#[test]
fn positive_at_one_negatives_at_zero() {
    let p = orthonormal(4);
    let seqs: Vec<Vec<u32>> = (1..=4).map(|k| vec![k]).collect();
    let batch = Batch::new(seqs.clone(), seqs, Modality::CodeDoc);
    let (loss, _) = contrastive_loss(&p, &batch, 1.0).unwrap();
    let expected = (1.0 + 3.0 * (-1f64).exp()).ln();
    assert!((loss - expected).abs() < 1e-12);
    assert!((loss - 0.7437).abs() < 5e-5);
}

#[test]
fn loss_decreases_with_temperature_when_positive_is_best() {
    let p = orthonormal(4);
    let seqs: Vec<Vec<u32>> = (1..=4).map(|k| vec![k]).collect();
    let batch = Batch::new(seqs.clone(), seqs, Modality::CodeCode);
    let losses: Vec<f64> = [0.5, 1.0, 2.0, 5.0, 20.0]
        .iter()
        .map(|&t| contrastive_loss(&p, &batch, t).unwrap().0)
        .collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

fn seq() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..10, 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_positive(seed in 0u64..1000, pairs in prop::collection::vec((seq(), seq()), 2..6), tau in 0.1f64..20.0) {
        let p = params(8, 9, seed);
        let (a, b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let (loss, _) = contrastive_loss(&p, &Batch::new(a, b, Modality::CodeDoc), tau).unwrap();
        prop_assert!(loss > 0.0);
    }

    #[test]
    fn loss_is_permutation_equivariant(seed in 0u64..1000, pairs in prop::collection::vec((seq(), seq()), 2..6), rot in 0usize..6) {
        let p = params(8, 9, seed);
        let mut shuffled = pairs.clone();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let run = |v: Vec<(Vec<u32>, Vec<u32>)>| {
            let (a, b): (Vec<_>, Vec<_>) = v.into_iter().unzip();
            contrastive_loss(&p, &Batch::new(a, b, Modality::CodeCode), 1.0).unwrap().0
        };
        prop_assert!((run(pairs) - run(shuffled)).abs() < 1e-9);
    }

    #[test]
    fn encoding_is_unit_norm_and_repeat_invariant(seed in 0u64..1000, ids in seq()) {
        let p = params(16, 9, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let once = encode(&p, &ids, 0.0, &mut rng);
        let doubled: Vec<u32> = ids.iter().chain(&ids).copied().collect();
        let twice = encode(&p, &doubled, 0.0, &mut rng);
        let norm: f64 = once.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-6);
        for (x, y) in once.iter().zip(&twice) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
