mod common;

use std::collections::HashSet;

use coderet::corpus::{FunctionRecord, Language};
use coderet::encoder::{EncoderParams, Modality};
use coderet::pairmine::{
    build_code_comment_pairs, build_code_doc_pairs, MiningConfig, PairCorpora, PairSource, TrainingPair,
};
use coderet::retrieval::{build_index, evaluate_queries, read_queries, Query};
use coderet::train::{
    ar2_finetune, build_encoder_vocab, finetune_hard_negative, finetune_in_batch, items_from_pairs,
    mine_hard_negatives, pretrain, write_metrics_csv, Ar2Config, CodeBank, FinetuneConfig, ModalityScheduler,
    Sampler, TrainConfig, METRICS_HEADER,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn code_pair(a: &str, b: &str) -> TrainingPair {
    TrainingPair {
        left_id: a.to_string(),
        right_id: b.to_string(),
        modality: Modality::CodeCode,
        source: PairSource::NameMatch,
        match_score: None,
        denoise_score: None,
        text: None,
        cross_language: false,
    }
}

fn toy_pairs(corpus: &[FunctionRecord]) -> PairCorpora {
    let (planted, _) = common::ground_truth();
    PairCorpora {
        code_doc: build_code_doc_pairs(corpus),
        code_comment: build_code_comment_pairs(corpus),
        code_code: planted.iter().map(|(a, b)| code_pair(a, b)).collect(),
    }
}

fn short(steps: usize) -> TrainConfig {
    TrainConfig {
        steps,
        log_every: 50,
        batch_size: 16,
        ..TrainConfig::default()
    }
}

fn queries(name: &str) -> Vec<Query> {
    read_queries(&common::fixture_dir().join(name)).unwrap()
}

fn test_mrr(params: &EncoderParams, corpus: &[FunctionRecord]) -> f64 {
    let index = build_index(params, corpus);
    evaluate_queries(params, &index, &queries("queries_test.jsonl"), serde_json::Value::Null)
        .unwrap()
        .mrr
}

#[test]
fn pretraining_lowers_the_loss() {
    let corpus = common::toy_corpus();
    let out = pretrain(&toy_pairs(&corpus), &corpus, &short(200)).unwrap();
    let first = out.metrics.first().unwrap();
    let last = out.metrics.last().unwrap();
    assert_eq!((first.step, last.step), (0, 200));
    assert!(last.loss_total < first.loss_total, "{} -> {}", first.loss_total, last.loss_total);
    assert_eq!(out.skipped_steps, 0);
}

#[test]
fn hybrid_batches_mix_languages() {
    let corpus = common::toy_corpus();
    let out = pretrain(&toy_pairs(&corpus), &corpus, &short(60)).unwrap();
    assert!(!out.batches.is_empty());
    // code-code rows pair a java anchor with a python partner, so conflict skipping can leave one anchor language
    for b in out.batches.iter().filter(|b| b.modality != Modality::CodeCode) {
        let langs: HashSet<Language> = b.languages.iter().copied().collect();
        assert!(langs.len() >= 2, "step {} {:?} batch has one language", b.step, b.modality);
    }
}

#[test]
fn monolingual_batches_when_hybrid_is_off() {
    let corpus = common::toy_corpus();
    let config = TrainConfig {
        hybrid_languages: false,
        ..short(60)
    };
    let out = pretrain(&toy_pairs(&corpus), &corpus, &config).unwrap();
    for b in &out.batches {
        let langs: HashSet<Language> = b.languages.iter().copied().collect();
        assert_eq!(langs.len(), 1);
    }
}

#[test]
fn unimodal_mix_draws_only_code_pairs() {
    let corpus = common::toy_corpus();
    let config = TrainConfig {
        modality_mix: [1.0, 0.0, 0.0],
        ..short(50)
    };
    let out = pretrain(&toy_pairs(&corpus), &corpus, &config).unwrap();
    assert!(out.batches.iter().all(|b| b.modality == Modality::CodeCode));
    for row in &out.metrics {
        assert!(row.loss_uni.is_some());
        assert!(row.loss_bi_doc.is_none() && row.loss_bi_comment.is_none());
    }
}

#[test]
fn scheduler_follows_the_mix() {
    let mut s = ModalityScheduler::new([0.5, 0.25, 0.25]);
    let mut counts = [0; 3];
    for _ in 0..400 {
        for (k, on) in s.advance().into_iter().enumerate() {
            counts[k] += usize::from(on);
        }
    }
    assert_eq!(counts, [400, 200, 200]);
}

#[test]
fn metrics_csv_layout() {
    let corpus = common::toy_corpus();
    let config = TrainConfig {
        modality_mix: [0.5, 0.5, 0.0],
        ..short(100)
    };
    let out = pretrain(&toy_pairs(&corpus), &corpus, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("metrics.csv");
    write_metrics_csv(&path, &out.metrics).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    let steps: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(steps, ["0", "50", "100"]);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 7);
        assert!(cells[4].is_empty(), "dropped comment term must be blank: {line}");
        assert!(cells[5].parse::<f64>().is_ok() && cells[6].parse::<f64>().is_ok());
    }
}

#[test]
fn pretraining_is_reproducible() {
    let corpus = common::toy_corpus();
    let pairs = toy_pairs(&corpus);
    let a = pretrain(&pairs, &corpus, &short(40)).unwrap();
    let b = pretrain(&pairs, &corpus, &short(40)).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn invalid_configs_are_rejected() {
    let corpus = common::toy_corpus();
    let pairs = toy_pairs(&corpus);
    let bad_mix = TrainConfig {
        modality_mix: [0.5, 0.5, 0.5],
        ..short(10)
    };
    assert!(pretrain(&pairs, &corpus, &bad_mix).is_err());
    let tiny = TrainConfig {
        batch_size: 1,
        ..short(10)
    };
    assert!(matches!(pretrain(&pairs, &corpus, &tiny), Err(coderet::Error::BatchTooSmall(1))));
    assert!(matches!(
        pretrain(&PairCorpora::default(), &corpus, &short(10)),
        Err(coderet::Error::NoLossTerms)
    ));
}

#[test]
fn code_pairs_mask_shared_positives() {
    // a has two partners; rows (a, b) and (c, a) must not treat b or a as negatives of each other
    let corpus: Vec<FunctionRecord> = ["a", "b", "c", "d"]
        .iter()
        .map(|n| common::record(&format!("m.py::{n}"), Language::Python, n, None, &[], &format!("def {n} x")))
        .collect();
    let pairs = vec![code_pair("m.py::a", "m.py::b"), code_pair("m.py::a", "m.py::c")];
    let vocab = build_encoder_vocab(&corpus, &PairCorpora::default(), 100);
    let bank = CodeBank::new(&corpus, &vocab);
    let items = items_from_pairs(&pairs, &bank, &vocab, Modality::CodeCode);
    assert_eq!(items.len(), 3);
    let a = items.iter().find(|i| i.anchor_key == "m.py::a").unwrap();
    assert_eq!(a.positives.len(), 2);
    let mut sampler = Sampler::new(items, true, 1, "t");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let Some(d) = sampler.draw(3, Modality::CodeCode, &mut rng) else { continue };
        for &(r, c) in &d.batch.masked {
            assert_ne!(r, c);
            assert!(sampler.items[d.rows[r]].positive_keys.contains(&d.column_keys[c]));
        }
        for (r, &row) in d.rows.iter().enumerate() {
            for (c, key) in d.column_keys.iter().enumerate() {
                if c != r && sampler.items[row].positive_keys.contains(key) {
                    assert!(d.batch.masked.contains(&(r, c)));
                }
            }
        }
        let keys: HashSet<&String> = d.column_keys.iter().collect();
        assert_eq!(keys.len(), d.column_keys.len(), "duplicate columns");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Consecutive draws walk a single-language stream as a permutation per epoch.
    #[test]
    fn streams_cover_each_epoch(batches in 1usize..5, per_batch in 2usize..5, seed in 0u64..1000) {
        let n = batches * per_batch;
        let corpus: Vec<FunctionRecord> = (0..n)
            .map(|i| common::record(&format!("m.py::f{i}"), Language::Python, &format!("f{i}"), None, &[], &format!("def f{i} x")))
            .collect();
        let pairs: Vec<TrainingPair> = (0..n)
            .map(|i| TrainingPair {
                modality: Modality::CodeDoc,
                text: Some(format!("does thing {i}")),
                ..code_pair(&format!("m.py::f{i}"), &format!("m.py::f{i}"))
            })
            .collect();
        let vocab = build_encoder_vocab(&corpus, &PairCorpora::default(), 100);
        let bank = CodeBank::new(&corpus, &vocab);
        let items = items_from_pairs(&pairs, &bank, &vocab, Modality::CodeDoc);
        prop_assert_eq!(items.len(), n);
        let mut sampler = Sampler::new(items, true, seed, "p");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = Vec::new();
        while seen.len() < 3 * n {
            let d = sampler.draw(per_batch, Modality::CodeDoc, &mut rng).unwrap();
            prop_assert_eq!(d.rows.len(), per_batch);
            seen.extend(d.rows.iter().copied());
        }
        for epoch in seen.chunks_exact(n) {
            let distinct: HashSet<usize> = epoch.iter().copied().collect();
            prop_assert_eq!(distinct.len(), n);
        }
    }
}

#[test]
fn finetuning_improves_over_the_pretrained_checkpoint() {
    let corpus = common::toy_corpus();
    let pre = pretrain(&toy_pairs(&corpus), &corpus, &short(300)).unwrap();
    let tuned = finetune_in_batch(&pre.params, &queries("queries_train.jsonl"), &corpus, &FinetuneConfig::default()).unwrap();
    let (before, after) = (test_mrr(&pre.params, &corpus), test_mrr(&tuned.params, &corpus));
    assert!(after > before, "fine-tuning {before:.4} -> {after:.4}");
}

#[test]
fn batch_of_two_trains() {
    let corpus = common::toy_corpus();
    let pre = pretrain(&toy_pairs(&corpus), &corpus, &short(5)).unwrap();
    let config = FinetuneConfig {
        batch_size: 2,
        steps: 10,
        ..FinetuneConfig::default()
    };
    let out = finetune_in_batch(&pre.params, &queries("queries_train.jsonl"), &corpus, &config).unwrap();
    assert_eq!(out.losses.len(), 10);
    assert!(out.losses.iter().all(|l| l.is_finite()));
}

#[test]
fn query_order_does_not_matter() {
    let corpus = common::toy_corpus();
    let pre = pretrain(&toy_pairs(&corpus), &corpus, &short(5)).unwrap();
    let mut train = queries("queries_train.jsonl");
    let config = FinetuneConfig {
        steps: 20,
        ..FinetuneConfig::default()
    };
    let a = finetune_in_batch(&pre.params, &train, &corpus, &config).unwrap();
    train.reverse();
    let b = finetune_in_batch(&pre.params, &train, &corpus, &config).unwrap();
    assert_eq!(a.params, b.params);
}

#[test]
fn hard_negatives_exclude_gold_and_are_top_ranked() {
    let corpus = common::toy_corpus();
    let pre = pretrain(&toy_pairs(&corpus), &corpus, &short(50)).unwrap();
    let p = &pre.params;
    let index = build_index(p, &corpus);
    let train = queries("queries_train.jsonl");
    let mined = mine_hard_negatives(p, &train, &index, 5);
    for (q, h) in train.iter().zip(&mined) {
        assert_eq!(h.query_id, q.id);
        assert_eq!(h.negatives.len(), 5);
        let gold: HashSet<&str> = q.gold_ids.iter().map(String::as_str).collect();
        assert!(h.negatives.iter().all(|n| !gold.contains(n.as_str())));
        let qv = p.embed_ids(&p.vocab.text_ids(&q.text));
        let score = |id: &str| {
            let row = index.row(index.position(id).unwrap());
            row.iter().zip(&qv).map(|(a, b)| a * b).sum::<f64>()
        };
        let weakest = h.negatives.iter().map(|n| score(n)).fold(f64::INFINITY, f64::min);
        for id in &index.ids {
            if !gold.contains(id.as_str()) && !h.negatives.contains(id) {
                assert!(score(id) <= weakest);
            }
        }
    }
    // a pool smaller than k + 1 attaches every non-gold function
    let all = mine_hard_negatives(p, &train[..1], &index, corpus.len() + 10);
    assert_eq!(all[0].negatives.len(), corpus.len() - train[0].gold_ids.len());
}

#[test]
fn hard_negative_finetuning_keeps_up_with_in_batch() {
    let corpus = common::toy_corpus();
    let pre = pretrain(&toy_pairs(&corpus), &corpus, &short(300)).unwrap();
    let train = queries("queries_train.jsonl");
    let config = FinetuneConfig::default();
    let ib = finetune_in_batch(&pre.params, &train, &corpus, &config).unwrap();
    let hn = finetune_hard_negative(&ib.params, &train, &corpus, &config).unwrap();
    let (a, b) = (test_mrr(&ib.params, &corpus), test_mrr(&hn.params, &corpus));
    assert!(b >= a, "hard negatives {b:.4} < in-batch {a:.4}");
}

#[test]
fn adversarial_round_trains_a_useful_scorer() {
    assert_eq!(Ar2Config::default().negative_size, 7);
    let corpus = common::toy_corpus();
    let pre = pretrain(&toy_pairs(&corpus), &corpus, &short(100)).unwrap();
    let config = Ar2Config {
        rounds: 1,
        ..Ar2Config::default()
    };
    let out = ar2_finetune(&pre.params, None, &queries("queries_train.jsonl"), &corpus, &FinetuneConfig::default(), &config)
        .unwrap();
    assert_eq!(out.rounds.len(), 1);
    assert!(!out.rounds[0].aborted);
    assert!(out.rounds[0].d_accuracy > 0.5, "accuracy {}", out.rounds[0].d_accuracy);
    assert_eq!(out.g_losses.len(), config.g_steps);
}

#[test]
fn constant_scorer_aborts_the_round() {
    let corpus = common::toy_corpus();
    let pre = pretrain(&toy_pairs(&corpus), &corpus, &short(20)).unwrap();
    let train = queries("queries_train.jsonl");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut scorer = coderet::pairmine::CrossModelParams::init(coderet::pairmine::code_vocab(&corpus), 4, &mut rng);
    for t in [&mut scorer.embed, &mut scorer.interaction, &mut scorer.overlap_weight, &mut scorer.bias] {
        t.iter_mut().for_each(|x| *x = 0.0);
    }
    let config = Ar2Config {
        rounds: 2,
        d_steps: 0,
        ..Ar2Config::default()
    };
    let out = ar2_finetune(&pre.params, Some(scorer), &train, &corpus, &FinetuneConfig::default(), &config).unwrap();
    assert!(out.rounds.iter().all(|r| r.aborted && r.g_loss.is_none()));
    assert_eq!(out.params, pre.params);
}

#[test]
fn mining_defaults_feed_training() {
    // the mined code-code corpus plugs straight into pretraining
    let corpus = common::toy_corpus();
    let mined = coderet::pairmine::build_code_code_corpus(
        &corpus,
        &MiningConfig {
            keep_fraction: Some(0.6),
            ..MiningConfig::default()
        },
    )
    .unwrap();
    let pairs = PairCorpora {
        code_code: mined.pairs,
        ..PairCorpora::default()
    };
    let config = TrainConfig {
        modality_mix: [1.0, 0.0, 0.0],
        ..short(20)
    };
    assert!(pretrain(&pairs, &corpus, &config).is_ok());
}
