//! Closed-form gradients against central finite differences.

mod common;

use coderet::encoder::{contrastive_loss, distillation_loss, total_loss, DistillItem, Modality, Parameters};
use common::fd::{params, random_batch, random_seq, worst_error, TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn contrastive_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let p = params(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let batch = random_batch(&mut rng, 4, Modality::CodeCode);
        for tau in [1.0, 3.0] {
            let (_, grads) = contrastive_loss(&p, &batch, tau).unwrap();
            let err = worst_error(&p, &grads, |q| contrastive_loss(q, &batch, tau).unwrap().0);
            assert!(err <= TOLERANCE, "seed {seed} tau {tau}: relative error {err:e}");
        }
    }
}

#[test]
fn gradient_with_hard_negatives_and_mask() {
    for seed in 0..10 {
        let p = params(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let mut batch = random_batch(&mut rng, 4, Modality::CodeDoc);
        batch.negatives = (0..3).map(|_| random_seq(&mut rng)).collect();
        batch.masked = vec![(0, 4), (2, 1), (3, 6)];
        let (_, grads) = contrastive_loss(&p, &batch, 2.0).unwrap();
        let err = worst_error(&p, &grads, |q| contrastive_loss(q, &batch, 2.0).unwrap().0);
        assert!(err <= TOLERANCE, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn total_gradient_matches_finite_differences_and_sum_of_terms() {
    for seed in 0..10 {
        let p = params(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let uni = random_batch(&mut rng, 4, Modality::CodeCode);
        let doc = random_batch(&mut rng, 4, Modality::CodeDoc);
        let com = random_batch(&mut rng, 4, Modality::CodeComment);
        let (terms, grads) = total_loss(&p, Some(&uni), Some(&doc), Some(&com), 1.0).unwrap();
        let err = worst_error(&p, &grads, |q| total_loss(q, Some(&uni), Some(&doc), Some(&com), 1.0).unwrap().0.total);
        assert!(err <= TOLERANCE, "seed {seed}: relative error {err:e}");

        let mut summed = p.zero_grads();
        let mut loss_sum = 0.0;
        for b in [&uni, &doc, &com] {
            let (l, g) = contrastive_loss(&p, b, 1.0).unwrap();
            loss_sum += l;
            summed.add_assign(&g);
        }
        assert!((terms.total - loss_sum).abs() < 1e-12);
        for (a, b) in grads.tensors().iter().zip(summed.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn distillation_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let p = params(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let items: Vec<DistillItem> = (0..3)
            .map(|_| {
                let candidates: Vec<Vec<u32>> = (0..5).map(|_| random_seq(&mut rng)).collect();
                let raw: Vec<f64> = (0..5).map(|_| rng.gen_range(0.05..1.0)).collect();
                let z: f64 = raw.iter().sum();
                DistillItem {
                    query: random_seq(&mut rng),
                    candidates,
                    teacher: raw.iter().map(|x| x / z).collect(),
                }
            })
            .collect();
        let (_, grads) = distillation_loss(&p, &items, 4.0).unwrap();
        let err = worst_error(&p, &grads, |q| distillation_loss(q, &items, 4.0).unwrap().0);
        assert!(err <= TOLERANCE, "seed {seed}: relative error {err:e}");
    }
}
