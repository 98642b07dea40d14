use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::DenseIndex;
use super::metrics::{alignment, average_precision_at_r, mrr, uniformity};
use crate::encoder::EncoderParams;
use crate::{Error, Result};

/// A labeled natural-language query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub gold_ids: Vec<String>,
}

pub fn read_queries(path: &Path) -> Result<Vec<Query>> {
    crate::corpus::read_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub query_ids: Vec<String>,
    /// 1-based rank of the first gold item; `null` when no gold is in the pool.
    pub per_query_rank: Vec<Option<usize>>,
    pub mrr: f64,
    pub map_at_r: Option<f64>,
    /// Over (query, gold code) pairs; absent when no gold id is indexed.
    pub l_align: Option<f64>,
    /// Over every indexed code; absent for fewer than two codes.
    pub l_uniform: Option<f64>,
    pub config: serde_json::Value,
}

impl EvalReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path.display().to_string(), e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// Ranks the whole index for every query.
pub fn evaluate_queries(
    params: &EncoderParams,
    index: &DenseIndex,
    queries: &[Query],
    config: serde_json::Value,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::InvalidConfig("no evaluation queries".into()));
    }
    let mut ranks = Vec::with_capacity(queries.len());
    let mut aps = Vec::with_capacity(queries.len());
    let mut aligned: Vec<(Vec<f64>, usize)> = Vec::new();
    for q in queries {
        let qv = params.embed_ids(&params.vocab.text_ids(&q.text));
        let gold: HashSet<&str> = q.gold_ids.iter().map(String::as_str).collect();
        let ranking = index.rank_all(&qv);
        let rank = ranking
            .iter()
            .position(|(i, _)| gold.contains(index.ids[*i].as_str()))
            .map(|p| p + 1);
        ranks.push(rank);
        let ids: Vec<&str> = ranking.iter().map(|(i, _)| index.ids[*i].as_str()).collect();
        aps.push(average_precision_at_r(&gold, &ids));
        for g in &q.gold_ids {
            if let Some(pos) = index.position(g) {
                aligned.push((qv.clone(), pos));
            }
        }
    }
    let l_align = alignment(aligned.iter().map(|(q, pos)| (q.as_slice(), index.row(*pos)))).ok();
    let rows: Vec<&[f64]> = index.rows().collect();
    let l_uniform = uniformity(&rows).ok();
    Ok(EvalReport {
        query_ids: queries.iter().map(|q| q.id.clone()).collect(),
        mrr: mrr(&ranks),
        per_query_rank: ranks,
        map_at_r: Some(aps.iter().sum::<f64>() / aps.len() as f64),
        l_align,
        l_uniform,
        config,
    })
}
