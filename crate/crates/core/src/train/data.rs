//! Grouped training items, per-language cyclic streams, and batch assembly.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{FunctionRecord, Language};
use crate::encoder::{Batch, Modality, Vocab};
use crate::pairmine::TrainingPair;
use crate::retrieval::Query;
use crate::stage_rng;

/// Tokenized function bodies keyed by id.
#[derive(Debug, Clone)]
pub struct CodeBank {
    pub ids: Vec<String>,
    pub tokens: Vec<Vec<u32>>,
    pub languages: Vec<Language>,
    index: HashMap<String, usize>,
}

impl CodeBank {
    pub fn new(corpus: &[FunctionRecord], vocab: &Vocab) -> Self {
        Self {
            ids: corpus.iter().map(|r| r.id.clone()).collect(),
            tokens: corpus.iter().map(|r| vocab.code_ids(&r.code_tokens)).collect(),
            languages: corpus.iter().map(|r| r.language).collect(),
            index: corpus.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// One anchor with every positive it has; one positive is drawn each time
/// the item is used.
#[derive(Debug, Clone)]
pub struct Item {
    pub anchor_key: String,
    pub anchor: Vec<u32>,
    pub positives: Vec<(String, Vec<u32>)>,
    pub positive_keys: HashSet<String>,
    pub language: Language,
}

fn text_key(text: &str) -> String {
    format!("text:{text}")
}

/// Groups pairs of one modality by anchor code. Code-code pairs are used in
/// both directions so every member of a pair serves as an anchor.
pub fn items_from_pairs(pairs: &[TrainingPair], bank: &CodeBank, vocab: &Vocab, modality: Modality) -> Vec<Item> {
    let mut grouped: BTreeMap<String, Vec<(String, Vec<u32>)>> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.modality == modality) {
        match modality {
            Modality::CodeCode => {
                let (Some(a), Some(b)) = (bank.get(&p.left_id), bank.get(&p.right_id)) else {
                    continue;
                };
                grouped
                    .entry(p.left_id.clone())
                    .or_default()
                    .push((p.right_id.clone(), bank.tokens[b].clone()));
                grouped
                    .entry(p.right_id.clone())
                    .or_default()
                    .push((p.left_id.clone(), bank.tokens[a].clone()));
            }
            _ => {
                let (Some(_), Some(text)) = (bank.get(&p.right_id), p.text.as_deref()) else {
                    continue;
                };
                grouped
                    .entry(p.right_id.clone())
                    .or_default()
                    .push((text_key(text), vocab.text_ids(text)));
            }
        }
    }
    grouped
        .into_iter()
        .map(|(anchor_key, positives)| {
            let i = bank.get(&anchor_key).expect("grouped ids come from the bank");
            Item {
                positive_keys: positives.iter().map(|(k, _)| k.clone()).collect(),
                anchor: bank.tokens[i].clone(),
                language: bank.languages[i],
                anchor_key,
                positives,
            }
        })
        .collect()
}

/// Query items: the query text is the anchor, its gold codes the positives.
/// Items are sorted by query id, so input order does not matter.
pub fn items_from_queries(queries: &[Query], bank: &CodeBank, vocab: &Vocab) -> Vec<Item> {
    let mut items: Vec<Item> = queries
        .iter()
        .filter_map(|q| {
            let positives: Vec<(String, Vec<u32>)> = q
                .gold_ids
                .iter()
                .filter_map(|g| bank.get(g).map(|i| (g.clone(), bank.tokens[i].clone())))
                .collect();
            let first = bank.get(positives.first()?.0.as_str())?;
            Some(Item {
                anchor_key: format!("query:{}", q.id),
                anchor: vocab.text_ids(&q.text),
                positive_keys: positives.iter().map(|(k, _)| k.clone()).collect(),
                positives,
                language: bank.languages[first],
            })
        })
        .collect();
    items.sort_by(|a, b| a.anchor_key.cmp(&b.anchor_key));
    items
}

#[derive(Debug, Clone)]
struct Stream {
    members: Vec<usize>,
    order: Vec<usize>,
    pos: usize,
    epoch: u64,
}

/// Cyclic per-language streams over a fixed item list. Each stream is
/// reshuffled with a seed derived from the run seed and its epoch number.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub items: Vec<Item>,
    streams: BTreeMap<Language, Stream>,
    hybrid: bool,
    seed: u64,
    label: String,
}

/// A drawn batch plus the items it came from.
#[derive(Debug, Clone)]
pub struct Drawn {
    pub batch: Batch,
    pub rows: Vec<usize>,
    /// Key of each candidate column: positives first, then any extra negatives.
    pub column_keys: Vec<String>,
}

impl Sampler {
    pub fn new(items: Vec<Item>, hybrid: bool, seed: u64, label: &str) -> Self {
        let mut by_lang: BTreeMap<Language, Vec<usize>> = BTreeMap::new();
        for (i, item) in items.iter().enumerate() {
            by_lang.entry(item.language).or_default().push(i);
        }
        let mut sampler = Self {
            items,
            streams: BTreeMap::new(),
            hybrid,
            seed,
            label: label.to_string(),
        };
        for (lang, members) in by_lang {
            let mut s = Stream {
                order: members.clone(),
                members,
                pos: 0,
                epoch: 0,
            };
            sampler.reshuffle(lang, &mut s);
            sampler.streams.insert(lang, s);
        }
        sampler
    }

    fn reshuffle(&self, lang: Language, s: &mut Stream) {
        s.order = s.members.clone();
        let mut rng = stage_rng(self.seed, &format!("{}/{}/{}", self.label, lang, s.epoch));
        s.order.shuffle(&mut rng);
        s.pos = 0;
    }

    fn next_in(&mut self, lang: Language) -> usize {
        let mut s = self.streams.remove(&lang).expect("stream exists");
        if s.pos >= s.order.len() {
            s.epoch += 1;
            self.reshuffle(lang, &mut s);
        }
        let i = s.order[s.pos];
        s.pos += 1;
        self.streams.insert(lang, s);
        i
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of rows to take from each language for one batch.
    fn quotas<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Vec<(Language, usize)> {
        let counts: Vec<(Language, usize)> = self.streams.iter().map(|(l, s)| (*l, s.members.len())).collect();
        let total: usize = counts.iter().map(|c| c.1).sum();
        let size = batch_size.min(total);
        if !self.hybrid || counts.len() == 1 {
            let mut pick = rng.gen_range(0..total);
            for (lang, n) in &counts {
                if pick < *n {
                    return vec![(*lang, size.min(*n))];
                }
                pick -= n;
            }
        }
        let mut quotas: Vec<(Language, usize)> = counts
            .iter()
            .map(|(l, n)| (*l, ((size * n) as f64 / total as f64).round().max(1.0) as usize))
            .collect();
        while quotas.iter().map(|q| q.1).sum::<usize>() > size {
            let largest = quotas.iter_mut().max_by_key(|q| q.1).expect("non-empty");
            if largest.1 <= 1 {
                break;
            }
            largest.1 -= 1;
        }
        while quotas.iter().map(|q| q.1).sum::<usize>() < size {
            let (k, _) = quotas
                .iter()
                .enumerate()
                .map(|(k, (l, q))| (k, counts.iter().find(|c| c.0 == *l).unwrap().1 as f64 / *q as f64))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            quotas[k].1 += 1;
        }
        quotas
    }

    /// Draws up to `batch_size` rows whose anchors and positives do not collide.
    /// Returns `None` when fewer than two rows could be drawn.
    pub fn draw<R: Rng>(&mut self, batch_size: usize, modality: Modality, rng: &mut R) -> Option<Drawn> {
        if self.items.len() < 2 {
            return None;
        }
        let mut used: HashSet<String> = HashSet::new();
        let mut rows = Vec::new();
        let mut chosen = Vec::new();
        for (lang, quota) in self.quotas(batch_size, rng) {
            let budget = self.streams[&lang].members.len();
            let mut taken = 0;
            for _ in 0..budget {
                if taken == quota {
                    break;
                }
                let i = self.next_in(lang);
                let item = &self.items[i];
                let (key, tokens) = &item.positives[rng.gen_range(0..item.positives.len())];
                if used.contains(&item.anchor_key) || used.contains(key) {
                    continue;
                }
                used.insert(item.anchor_key.clone());
                used.insert(key.clone());
                rows.push(i);
                chosen.push((key.clone(), tokens.clone()));
                taken += 1;
            }
        }
        if rows.len() < 2 {
            return None;
        }
        let column_keys: Vec<String> = chosen.iter().map(|c| c.0.clone()).collect();
        let mut batch = Batch::new(
            rows.iter().map(|&i| self.items[i].anchor.clone()).collect(),
            chosen.into_iter().map(|c| c.1).collect(),
            modality,
        );
        batch.languages = rows.iter().map(|&i| self.items[i].language).collect();
        let mut drawn = Drawn {
            batch,
            rows,
            column_keys,
        };
        self.mask_false_negatives(&mut drawn);
        Some(drawn)
    }

    /// Masks every off-diagonal column that is also a positive of the row's anchor.
    pub fn mask_false_negatives(&self, drawn: &mut Drawn) {
        drawn.batch.masked.clear();
        for (r, &i) in drawn.rows.iter().enumerate() {
            for (c, key) in drawn.column_keys.iter().enumerate() {
                if c != r && self.items[i].positive_keys.contains(key) {
                    drawn.batch.masked.push((r, c));
                }
            }
        }
    }
}

/// Decides which modalities contribute to each step from their mix weights.
/// Every weight accrues `p / max p` credit per step; a modality runs when it has a full credit.
#[derive(Debug, Clone)]
pub struct ModalityScheduler {
    weights: [f64; 3],
    credit: [f64; 3],
}

impl ModalityScheduler {
    pub const ORDER: [Modality; 3] = [Modality::CodeCode, Modality::CodeDoc, Modality::CodeComment];

    pub fn new(mix: [f64; 3]) -> Self {
        let max = mix.iter().copied().fold(0.0, f64::max);
        let weights = mix.map(|p| if max > 0.0 { p / max } else { 0.0 });
        Self { weights, credit: [0.0; 3] }
    }

    pub fn advance(&mut self) -> [bool; 3] {
        let mut active = [false; 3];
        for k in 0..3 {
            if self.weights[k] <= 0.0 {
                continue;
            }
            self.credit[k] += self.weights[k];
            if self.credit[k] >= 1.0 - 1e-12 {
                self.credit[k] -= 1.0;
                active[k] = true;
            }
        }
        active
    }
}
