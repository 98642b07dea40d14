use coderet::retrieval::{
    alignment, build_text_index, export_embeddings, import_embeddings, map_at_r, mrr, search, uniformity, DenseIndex,
};
use coderet::encoder::EncoderParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_index(n: usize, d: usize, seed: u64) -> DenseIndex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|_| unit(&mut rng, d)).collect();
    DenseIndex::from_rows((0..n).map(|i| format!("item{i:03}")).collect(), vec![None; n], rows, d).unwrap()
}

#[test]
fn mrr_values() {
    assert_eq!(mrr(&[Some(1), Some(1), Some(1)]), 1.0);
    assert!((mrr(&[Some(1), Some(2), Some(4)]) - 0.58333).abs() < 1e-5);
    assert!((mrr(&[Some(1), Some(2), Some(4)]) - 7.0 / 12.0).abs() < 1e-12);
    assert_eq!(mrr(&[None]), 0.0);
}

#[test]
fn map_at_r_values() {
    let gold = vec![vec!["a", "b"]];
    assert_eq!(map_at_r(&gold, &[vec!["b", "a", "c"]]), 1.0);
    assert_eq!(map_at_r(&[vec!["a"]], &[vec!["x", "a"]]), 0.0);
    assert_eq!(map_at_r(&[vec!["a"]], &[vec![]]), 0.0);
    // gold at ranks 1 and 3 of R = 2: only the first counts, AP = (1/1) / 2
    assert_eq!(map_at_r(&gold, &[vec!["a", "c", "b"]]), 0.5);
}

#[test]
fn alignment_and_uniformity_values() {
    let u = [0.6, 0.8];
    let neg = [-0.6, -0.8];
    assert_eq!(alignment([(&u[..], &u[..])]).unwrap(), 0.0);
    assert!((alignment([(&u[..], &neg[..])]).unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(uniformity(&[u, u]).unwrap(), 0.0);
    assert!((uniformity(&[u, neg]).unwrap() + 8.0).abs() < 1e-9);
    assert!(uniformity(&[u]).is_err());
}

#[test]
fn duplicating_a_point_can_lower_uniformity() {
    // three coincident points and one far away; copying the outlier adds
    // more far pairs than it adds coincident ones
    let a = [1.0, 0.0];
    let e = [-1.0, 0.0];
    let before = uniformity(&[a, a, a, e]).unwrap();
    let after = uniformity(&[a, a, a, e, e]).unwrap();
    assert!(after < before);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn duplicating_the_whole_set_never_lowers_uniformity(seed in 0u64..10_000, n in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| unit(&mut rng, 3)).collect();
        let doubled: Vec<Vec<f64>> = pts.iter().chain(&pts).cloned().collect();
        prop_assert!(uniformity(&doubled).unwrap() >= uniformity(&pts).unwrap() - 1e-12);
    }

    #[test]
    fn uniformity_is_non_positive(seed in 0u64..10_000, n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| unit(&mut rng, 4)).collect();
        let u = uniformity(&pts).unwrap();
        prop_assert!(u <= 0.0);
        prop_assert!(u < 0.0);
        prop_assert_eq!(u.to_bits(), uniformity(&pts).unwrap().to_bits());
    }

    #[test]
    fn mrr_improves_with_any_rank(ranks in prop::collection::vec(prop::option::of(1usize..50), 1..20), which in 0usize..20) {
        let i = which % ranks.len();
        let mut better = ranks.clone();
        better[i] = Some(better[i].map_or(49, |r| (r - 1).max(1)));
        prop_assert!(mrr(&better) >= mrr(&ranks));
        let mut rev = ranks.clone();
        rev.reverse();
        prop_assert!((mrr(&rev) - mrr(&ranks)).abs() < 1e-12);
    }

    #[test]
    fn search_prefix_consistency(seed in 0u64..1000, k1 in 1usize..30, extra in 0usize..30) {
        let index = random_index(25, 6, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let q = unit(&mut rng, 6);
        let short = search(&index, &q, k1);
        let long = search(&index, &q, k1 + extra);
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }
}

/// Score every row in a plain loop, then selection-sort by (score desc, id asc).
fn naive_ranking(index: &DenseIndex, q: &[f64]) -> Vec<(String, f64)> {
    let mut left: Vec<(String, f64)> = Vec::new();
    for i in 0..index.len() {
        let mut s = 0.0;
        for k in 0..index.dim {
            s += index.vectors[i * index.dim + k] * q[k];
        }
        left.push((index.ids[i].clone(), s));
    }
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for j in 1..left.len() {
            if left[j].1 > left[best].1 || (left[j].1 == left[best].1 && left[j].0 < left[best].0) {
                best = j;
            }
        }
        out.push(left.remove(best));
    }
    out
}

#[test]
fn search_equals_pairwise_loop() {
    let index = random_index(100, 16, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let q = unit(&mut rng, 16);
        assert_eq!(search(&index, &q, 100), naive_ranking(&index, &q));
    }
}

#[test]
fn ties_break_by_id_and_k_caps() {
    let v = vec![1.0, 0.0];
    let index =
        DenseIndex::from_rows(vec!["b".into(), "a".into()], vec![None, None], vec![v.clone(), v.clone()], 2).unwrap();
    let hits = search(&index, &v, 10);
    assert_eq!(hits.len(), 2);
    assert_eq!(hits[0].0, "a");
    assert_eq!(hits[1].0, "b");
    assert!(search(&DenseIndex::new(2), &v, 3).is_empty());
}

#[test]
fn text_index_self_retrieval_and_determinism() {
    let vocab: Vec<String> = ["<unk>", "sort", "the", "array", "read", "file"].iter().map(|s| s.to_string()).collect();
    let params = EncoderParams::init(vocab.into(), 16, &mut ChaCha8Rng::seed_from_u64(3));
    let items = vec![("q".to_string(), "sort the array".to_string())];
    let index = build_text_index(&params, &items);
    assert_eq!(index.len(), 1);
    assert_eq!(index, build_text_index(&params, &items));
    let q = params.embed_ids(&params.vocab.text_ids("sort the array"));
    assert_eq!(search(&index, &q, 1)[0].0, "q");
}

#[test]
fn export_round_trip_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let index = random_index(5, 4, 1);
    let path = dir.path().join("emb.tsv");
    export_embeddings(&index, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 6);
    let back = import_embeddings(&path).unwrap();
    assert_eq!(back.ids, index.ids);
    for (a, b) in back.vectors.iter().zip(&index.vectors) {
        assert!((a - b).abs() < 1e-15);
    }

    let empty = dir.path().join("empty.tsv");
    export_embeddings(&DenseIndex::new(3), &empty).unwrap();
    assert_eq!(std::fs::read_to_string(&empty).unwrap().lines().count(), 1);
}
