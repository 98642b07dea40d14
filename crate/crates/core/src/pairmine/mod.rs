//! Positive-pair corpora: code-doc, code-comment, and code-code pairs mined
//! by name/doc similarity and then filtered by a pair scorer.

mod cross;
mod matcher;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::encoder::Modality;
pub use cross::{
    fit_logistic, jaccard, sigmoid, CrossExample, CrossInput, CrossModelParams, CrossTrainConfig,
};
pub use matcher::{train_matcher, train_matcher_logged, TrainedMatcher};

use crate::corpus::{is_trivial_function, FunctionRecord, Language};
use crate::encoder::{code_pieces, EncoderParams, Vocab, DEFAULT_VOCAB_SIZE, MAX_CODE_LEN};
use crate::{stage_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    Direct,
    NameMatch,
    DocMatch,
}

/// A positive pair. For code-text pairs `left_id` names the text
/// (`doc:<function id>` or `comment:<function id>:<k>`) and `text` holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub left_id: String,
    pub right_id: String,
    pub modality: Modality,
    pub source: PairSource,
    pub match_score: Option<f64>,
    pub denoise_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Code-code pair whose two functions are in different languages.
    #[serde(default)]
    pub cross_language: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MiningConfig {
    pub tau1: f64,
    pub tau2: f64,
    /// When set, the scorer threshold is recalibrated per run so that this
    /// fraction of the pooled name- and doc-matched candidates survive;
    /// `tau2` is then ignored.
    pub keep_fraction: Option<f64>,
    pub top_k: usize,
    pub matcher_temperature: f64,
    pub matcher_epochs: usize,
    pub matcher_batch_size: usize,
    pub matcher_dim: usize,
    pub matcher_lr: f64,
    pub matcher_weight_decay: f64,
    pub matcher_dropout: f64,
    pub negative_ratio: usize,
    pub cross_dim: usize,
    pub cross_epochs: usize,
    pub cross_lr: f64,
    pub cross_weight_decay: f64,
    pub seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            tau1: 0.75,
            tau2: 0.998,
            keep_fraction: None,
            top_k: 5,
            matcher_temperature: 0.05,
            matcher_epochs: 2,
            matcher_batch_size: 16,
            matcher_dim: 64,
            matcher_lr: 1e-3,
            matcher_weight_decay: 0.01,
            matcher_dropout: 0.1,
            negative_ratio: 1,
            cross_dim: 16,
            cross_epochs: 200,
            cross_lr: 0.05,
            cross_weight_decay: 4.0,
            seed: 42,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.tau1 > 0.0 && self.tau1 < 1.0) {
            return bad(format!("tau1 must lie in (0, 1), got {}", self.tau1));
        }
        if !(self.tau2 > 0.0 && self.tau2 < 1.0) {
            return bad(format!("tau2 must lie in (0, 1), got {}", self.tau2));
        }
        if let Some(f) = self.keep_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("keep_fraction must lie in (0, 1], got {f}"));
            }
        }
        if self.top_k == 0 || self.negative_ratio == 0 {
            return bad("top_k and negative_ratio must be at least 1".into());
        }
        if !(self.matcher_temperature > 0.0) {
            return bad("matcher_temperature must be positive".into());
        }
        Ok(())
    }
}

/// One pair per function with a non-blank doc.
pub fn build_code_doc_pairs(corpus: &[FunctionRecord]) -> Vec<TrainingPair> {
    corpus
        .iter()
        .filter_map(|r| {
            let doc = r.doc_text()?;
            Some(TrainingPair {
                left_id: format!("doc:{}", r.id),
                right_id: r.id.clone(),
                modality: Modality::CodeDoc,
                source: PairSource::Direct,
                match_score: None,
                denoise_score: None,
                text: Some(doc.to_string()),
                cross_language: false,
            })
        })
        .collect()
}

/// One pair per cleaned comment of every non-trivial function.
pub fn build_code_comment_pairs(corpus: &[FunctionRecord]) -> Vec<TrainingPair> {
    corpus
        .iter()
        .filter(|r| !is_trivial_function(&r.name))
        .flat_map(|r| {
            r.comments.iter().enumerate().map(move |(k, c)| TrainingPair {
                left_id: format!("comment:{}:{k}", r.id),
                right_id: r.id.clone(),
                modality: Modality::CodeComment,
                source: PairSource::Direct,
                match_score: None,
                denoise_score: None,
                text: Some(c.clone()),
                cross_language: false,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchField {
    NameNormalized,
    Doc,
}

impl MatchField {
    fn text(self, r: &FunctionRecord) -> Option<&str> {
        match self {
            MatchField::NameNormalized => Some(r.name_normalized.as_str()).filter(|s| !s.trim().is_empty()),
            MatchField::Doc => r.doc_text(),
        }
    }

    fn source(self) -> PairSource {
        match self {
            MatchField::NameNormalized => PairSource::NameMatch,
            MatchField::Doc => PairSource::DocMatch,
        }
    }

    /// Texts of every record that has this field.
    pub fn texts(self, corpus: &[FunctionRecord]) -> Vec<String> {
        corpus.iter().filter_map(|r| self.text(r).map(str::to_string)).collect()
    }
}

fn code_pair(a: &FunctionRecord, b: &FunctionRecord, source: PairSource, score: f64) -> TrainingPair {
    let (l, r) = if a.id <= b.id { (a, b) } else { (b, a) };
    TrainingPair {
        left_id: l.id.clone(),
        right_id: r.id.clone(),
        modality: Modality::CodeCode,
        source,
        match_score: Some(score),
        denoise_score: None,
        text: None,
        cross_language: l.language != r.language,
    }
}

/// Exact top-k neighbours of every function under the matcher, thresholded at `tau1`.
/// Each unordered pair appears once with the lower id on the left.
pub fn mine_candidate_pairs(
    corpus: &[FunctionRecord],
    matcher: &EncoderParams,
    field: MatchField,
    config: &MiningConfig,
) -> Vec<TrainingPair> {
    let items: Vec<(&FunctionRecord, Vec<f64>)> = corpus
        .iter()
        .filter_map(|r| field.text(r).map(|t| (r, t)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(r, t)| (r, matcher.embed_ids(&matcher.vocab.text_ids(t))))
        .collect();

    let neighbours: Vec<Vec<(usize, f64)>> = (0..items.len())
        .into_par_iter()
        .map(|i| {
            let mut scored: Vec<(usize, f64)> = items
                .iter()
                .enumerate()
                .filter(|(j, (r, _))| *j != i && r.id != items[i].0.id)
                .map(|(j, (_, v))| (j, v.iter().zip(&items[i].1).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0)))
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| items[a.0].0.id.cmp(&items[b.0].0.id)));
            scored.truncate(config.top_k);
            scored.retain(|(_, s)| *s > config.tau1);
            scored
        })
        .collect();

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, hits) in neighbours.iter().enumerate() {
        for &(j, score) in hits {
            let pair = code_pair(items[i].0, items[j].0, field.source(), score);
            if seen.insert((pair.left_id.clone(), pair.right_id.clone())) {
                out.push(pair);
            }
        }
    }
    out.sort_by(|a, b| a.left_id.cmp(&b.left_id).then_with(|| a.right_id.cmp(&b.right_id)));
    out
}

/// Pieces of each function body, keyed by id.
fn code_inputs<'a>(corpus: &'a [FunctionRecord], vocab: &Vocab) -> HashMap<&'a str, CrossInput> {
    corpus
        .iter()
        .map(|r| (r.id.as_str(), CrossInput::new(vocab, code_pieces(&r.code_tokens), MAX_CODE_LEN)))
        .collect()
}

/// Scorer vocabulary over every function body.
pub fn code_vocab(corpus: &[FunctionRecord]) -> Vocab {
    let docs: Vec<Vec<String>> = corpus.iter().map(|r| code_pieces(&r.code_tokens)).collect();
    Vocab::build(docs.iter().map(Vec::as_slice), DEFAULT_VOCAB_SIZE)
}

/// Labeled examples: every doc-matched pair is a positive, plus
/// `negative_ratio` random distinct function pairs per positive (drawn once).
pub fn cross_training_examples<R: Rng>(
    doc_pairs: &[TrainingPair],
    corpus: &[FunctionRecord],
    vocab: &Vocab,
    negative_ratio: usize,
    rng: &mut R,
) -> Result<Vec<CrossExample>> {
    if doc_pairs.is_empty() {
        return Err(Error::NoPositives("no doc-matched code pairs to train the pair scorer"));
    }
    if corpus.len() < 2 {
        return Err(Error::CorpusTooSmall { needed: 2, got: corpus.len() });
    }
    let inputs = code_inputs(corpus, vocab);
    let lookup = |id: &str| inputs.get(id).cloned().ok_or_else(|| Error::UnknownId(id.to_string()));
    let positives: HashSet<(&str, &str)> =
        doc_pairs.iter().map(|p| (p.left_id.as_str(), p.right_id.as_str())).collect();

    let mut examples = Vec::with_capacity(doc_pairs.len() * (1 + negative_ratio));
    for p in doc_pairs {
        examples.push(CrossExample {
            left: lookup(&p.left_id)?,
            right: lookup(&p.right_id)?,
            label: true,
        });
    }
    let wanted = doc_pairs.len() * negative_ratio;
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < wanted {
        let i = rng.gen_range(0..corpus.len());
        let j = rng.gen_range(0..corpus.len());
        attempts += 1;
        let (a, b) = (&corpus[i].id, &corpus[j].id);
        let key = if a <= b { (a.as_str(), b.as_str()) } else { (b.as_str(), a.as_str()) };
        // accept anything after many rejections so tiny corpora still terminate
        if i == j || (positives.contains(&key) && attempts < 100 * wanted) {
            continue;
        }
        examples.push(CrossExample {
            left: lookup(a)?,
            right: lookup(b)?,
            label: false,
        });
        drawn += 1;
    }
    Ok(examples)
}

/// Trains the pair scorer on doc-matched pairs against random pairs.
pub fn train_cross_model(
    doc_pairs: &[TrainingPair],
    corpus: &[FunctionRecord],
    config: &MiningConfig,
) -> Result<CrossModelParams> {
    let mut rng = stage_rng(config.seed, "cross-model");
    let vocab = code_vocab(corpus);
    let examples = cross_training_examples(doc_pairs, corpus, &vocab, config.negative_ratio, &mut rng)?;
    let mut model = CrossModelParams::init(vocab, config.cross_dim, &mut rng);
    let train = CrossTrainConfig {
        epochs: config.cross_epochs,
        lr: config.cross_lr,
        weight_decay: config.cross_weight_decay,
        ..CrossTrainConfig::default()
    };
    let history = fit_logistic(&mut model, &examples, &train, &mut rng)?;
    log::info!(
        "pair scorer: {} examples, loss {:.4} -> {:.4}",
        examples.len(),
        history.first().copied().unwrap_or(f64::NAN),
        history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(model)
}

/// Scores every candidate with the pair scorer, recording `denoise_score`.
pub fn score_pairs(candidates: &[TrainingPair], model: &CrossModelParams, corpus: &[FunctionRecord]) -> Vec<TrainingPair> {
    let inputs = code_inputs(corpus, &model.vocab);
    candidates
        .par_iter()
        .map(|p| {
            let mut p = p.clone();
            if let (Some(a), Some(b)) = (inputs.get(p.left_id.as_str()), inputs.get(p.right_id.as_str())) {
                p.denoise_score = Some(model.score(a, b));
            }
            p
        })
        .collect()
}

/// Keeps candidates the scorer rates above `threshold`.
pub fn denoise_pairs(
    candidates: &[TrainingPair],
    model: &CrossModelParams,
    corpus: &[FunctionRecord],
    threshold: f64,
) -> Vec<TrainingPair> {
    score_pairs(candidates, model, corpus)
        .into_iter()
        .filter(|p| p.denoise_score.is_some_and(|s| s > threshold))
        .collect()
}

/// Scorer threshold that lets the top `fraction` of `scored` through.
pub fn calibrate_threshold(scored: &[TrainingPair], fraction: f64) -> f64 {
    let mut scores: Vec<f64> = scored.iter().filter_map(|p| p.denoise_score).collect();
    if scores.is_empty() {
        return 0.5;
    }
    scores.sort_by(|a, b| b.total_cmp(a));
    let keep = ((fraction * scores.len() as f64).ceil() as usize).clamp(1, scores.len());
    if keep < scores.len() {
        scores[keep]
    } else {
        scores[keep - 1] * (1.0 - 1e-12)
    }
}

/// Everything produced while mining code-code pairs.
#[derive(Debug, Clone)]
pub struct CodeCodeMining {
    pub name_candidates: Vec<TrainingPair>,
    pub doc_candidates: Vec<TrainingPair>,
    /// Surviving pairs, each unordered pair once.
    pub pairs: Vec<TrainingPair>,
    pub threshold: f64,
    pub name_matcher: TrainedMatcher,
    pub doc_matcher: TrainedMatcher,
    pub cross_model: CrossModelParams,
}

/// Name and doc matchers, candidate mining, scorer training on the doc
/// candidates, then filtering of both candidate sets.
pub fn build_code_code_corpus(corpus: &[FunctionRecord], config: &MiningConfig) -> Result<CodeCodeMining> {
    config.validate()?;
    let name_matcher = train_matcher_logged(&MatchField::NameNormalized.texts(corpus), config, "name-matcher")?;
    let doc_texts = MatchField::Doc.texts(corpus);
    if doc_texts.is_empty() {
        return Err(Error::NoPositives("no documented functions, so no doc-matched pairs"));
    }
    let doc_matcher = train_matcher_logged(&doc_texts, config, "doc-matcher")?;
    let name_candidates = mine_candidate_pairs(corpus, &name_matcher.params, MatchField::NameNormalized, config);
    let doc_candidates = mine_candidate_pairs(corpus, &doc_matcher.params, MatchField::Doc, config);
    let cross_model = train_cross_model(&doc_candidates, corpus, config)?;
    let threshold = match config.keep_fraction {
        Some(f) => {
            let pooled = dedup_pairs(doc_candidates.iter().chain(&name_candidates).cloned());
            calibrate_threshold(&score_pairs(&pooled, &cross_model, corpus), f)
        }
        None => config.tau2,
    };
    let pairs = select_pairs(&name_candidates, &doc_candidates, &cross_model, corpus, config.tau1, threshold);
    log::info!(
        "code-code mining: {} name / {} doc candidates, {} kept above {threshold:.6}",
        name_candidates.len(),
        doc_candidates.len(),
        pairs.len()
    );
    Ok(CodeCodeMining {
        name_candidates,
        doc_candidates,
        pairs,
        threshold,
        name_matcher,
        doc_matcher,
        cross_model,
    })
}

/// First record of each unordered pair, in key order.
fn dedup_pairs(pairs: impl IntoIterator<Item = TrainingPair>) -> Vec<TrainingPair> {
    let mut by_key: BTreeMap<(String, String), TrainingPair> = BTreeMap::new();
    for p in pairs {
        by_key.entry((p.left_id.clone(), p.right_id.clone())).or_insert(p);
    }
    by_key.into_values().collect()
}

/// Union of the candidates above both thresholds, each unordered pair once.
/// A pair found by both matchers keeps its doc-match record.
pub fn select_pairs(
    name_candidates: &[TrainingPair],
    doc_candidates: &[TrainingPair],
    model: &CrossModelParams,
    corpus: &[FunctionRecord],
    tau1: f64,
    threshold: f64,
) -> Vec<TrainingPair> {
    let above = |c: &[TrainingPair]| -> Vec<TrainingPair> {
        c.iter().filter(|p| p.match_score.is_some_and(|s| s > tau1)).cloned().collect()
    };
    dedup_pairs(
        denoise_pairs(&above(doc_candidates), model, corpus, threshold)
            .into_iter()
            .chain(denoise_pairs(&above(name_candidates), model, corpus, threshold)),
    )
}

/// Pair counts per modality, and per language pair for code-code pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub per_modality: BTreeMap<String, usize>,
    /// Key `"a|b"` with `a ≤ b`; each unordered pair counted once.
    pub code_code_languages: BTreeMap<String, usize>,
    pub cross_language: usize,
    pub total: usize,
}

/// Language of a function id (`<relative path>::<name>`) from its file extension.
pub fn language_of_id(id: &str) -> Option<Language> {
    let path = id.split("::").next()?;
    Language::from_extension(path.rsplit_once('.')?.1)
}

/// Counts pairs. Languages come from `corpus`, falling back to the file
/// extension embedded in each id.
pub fn pair_stats(pairs: &[TrainingPair], corpus: &[FunctionRecord]) -> PairStats {
    let known: HashMap<&str, Language> = corpus.iter().map(|r| (r.id.as_str(), r.language)).collect();
    let lang = |id: &str| known.get(id).copied().or_else(|| language_of_id(id));
    let mut stats = PairStats::default();
    for p in pairs {
        stats.total += 1;
        *stats.per_modality.entry(p.modality.as_str().to_string()).or_default() += 1;
        if p.modality == Modality::CodeCode {
            stats.cross_language += usize::from(p.cross_language);
            let (Some(a), Some(b)) = (lang(&p.left_id), lang(&p.right_id)) else {
                continue;
            };
            let (a, b) = if a.as_str() <= b.as_str() { (a, b) } else { (b, a) };
            *stats.code_code_languages.entry(format!("{a}|{b}")).or_default() += 1;
        }
    }
    stats
}

/// File names of the three pair corpora inside a pairs directory.
pub const PAIR_FILES: [(&str, Modality); 3] = [
    ("code_doc.jsonl", Modality::CodeDoc),
    ("code_comment.jsonl", Modality::CodeComment),
    ("code_code.jsonl", Modality::CodeCode),
];

/// The three pair corpora of a directory; a missing file reads as empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairCorpora {
    pub code_doc: Vec<TrainingPair>,
    pub code_comment: Vec<TrainingPair>,
    pub code_code: Vec<TrainingPair>,
}

impl PairCorpora {
    pub fn get(&self, m: Modality) -> &[TrainingPair] {
        match m {
            Modality::CodeDoc => &self.code_doc,
            Modality::CodeComment => &self.code_comment,
            Modality::CodeCode => &self.code_code,
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        for (file, m) in PAIR_FILES {
            crate::corpus::write_jsonl(&dir.join(file), self.get(m))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let read = |file: &str| -> Result<Vec<TrainingPair>> {
            let path = dir.join(file);
            if path.exists() {
                crate::corpus::read_jsonl(&path)
            } else {
                Ok(Vec::new())
            }
        };
        Ok(Self {
            code_doc: read(PAIR_FILES[0].0)?,
            code_comment: read(PAIR_FILES[1].0)?,
            code_code: read(PAIR_FILES[2].0)?,
        })
    }

    pub fn all(&self) -> Vec<TrainingPair> {
        [&self.code_doc, &self.code_comment, &self.code_code].into_iter().flatten().cloned().collect()
    }
}
