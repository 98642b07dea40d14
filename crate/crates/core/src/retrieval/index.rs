use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{FunctionRecord, Language};
use crate::encoder::EncoderParams;
use crate::{Error, Result};

/// Unit-norm embeddings with their ids, searched exhaustively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseIndex {
    pub dim: usize,
    pub ids: Vec<String>,
    pub languages: Vec<Option<Language>>,
    /// Row-major `[n × dim]`.
    pub vectors: Vec<f64>,
}

impl DenseIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            languages: Vec::new(),
            vectors: Vec::new(),
        }
    }

    pub fn from_rows(
        ids: Vec<String>,
        languages: Vec<Option<Language>>,
        rows: Vec<Vec<f64>>,
        dim: usize,
    ) -> Result<Self> {
        if ids.len() != rows.len() || languages.len() != rows.len() {
            return Err(Error::InvalidConfig("ids, languages and rows differ in length".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::InvalidConfig(format!("duplicate index id {dup}")));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidConfig(format!("every row must have {dim} columns")));
        }
        Ok(Self {
            dim,
            ids,
            languages,
            vectors: rows.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim.max(1)).take(self.len())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Every row index ordered by descending score, ties by ascending id.
    pub fn rank_all(&self, query: &[f64]) -> Vec<(usize, f64)> {
        let mut scored: Vec<(usize, f64)> = self
            .rows()
            .enumerate()
            .map(|(i, row)| (i, row.iter().zip(query).map(|(a, b)| a * b).sum()))
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.ids[a.0].cmp(&self.ids[b.0]))
        });
        scored
    }
}

/// Encodes function bodies in input order.
pub fn build_index(params: &EncoderParams, items: &[FunctionRecord]) -> DenseIndex {
    let rows: Vec<f64> = items
        .par_iter()
        .map(|r| params.embed_ids(&params.vocab.code_ids(&r.code_tokens)))
        .collect::<Vec<_>>()
        .concat();
    DenseIndex {
        dim: params.dim,
        ids: items.iter().map(|r| r.id.clone()).collect(),
        languages: items.iter().map(|r| Some(r.language)).collect(),
        vectors: rows,
    }
}

/// Encodes `(id, text)` pairs in input order.
pub fn build_text_index(params: &EncoderParams, items: &[(String, String)]) -> DenseIndex {
    let rows: Vec<f64> = items
        .par_iter()
        .map(|(_, text)| params.embed_ids(&params.vocab.text_ids(text)))
        .collect::<Vec<_>>()
        .concat();
    DenseIndex {
        dim: params.dim,
        ids: items.iter().map(|(id, _)| id.clone()).collect(),
        languages: vec![None; items.len()],
        vectors: rows,
    }
}

/// Exact top-`k` by cosine, descending, ties by ascending id. `k > n` returns all rows.
pub fn search(index: &DenseIndex, query: &[f64], k: usize) -> Vec<(String, f64)> {
    index
        .rank_all(query)
        .into_iter()
        .take(k)
        .map(|(i, s)| (index.ids[i].clone(), s))
        .collect()
}

/// Writes `id, language, v_1 .. v_d` as tab-separated rows under a header.
pub fn export_embeddings(index: &DenseIndex, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut header = vec!["id".to_string(), "language".to_string()];
    header.extend((0..index.dim).map(|k| format!("v{k}")));
    let mut write = |line: String| writeln!(out, "{line}").map_err(|e| Error::io(path, e));
    write(header.join("\t"))?;
    for (i, row) in index.rows().enumerate() {
        let mut fields = vec![
            index.ids[i].clone(),
            index.languages[i].map_or_else(|| "text".to_string(), |l| l.to_string()),
        ];
        fields.extend(row.iter().map(|v| v.to_string()));
        write(fields.join("\t"))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`export_embeddings`].
pub fn import_embeddings(path: &Path) -> Result<DenseIndex> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let dim = header.split('\t').count().saturating_sub(2);
    let (mut ids, mut langs, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let bad = || Error::InvalidConfig(format!("{}:{}: malformed embedding row", path.display(), n + 2));
        let mut fields = line.split('\t');
        ids.push(fields.next().ok_or_else(bad)?.to_string());
        langs.push(fields.next().ok_or_else(bad)?.parse::<Language>().ok());
        let row: Vec<f64> = fields.map(|f| f.parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        rows.push(row);
    }
    DenseIndex::from_rows(ids, langs, rows, dim)
}
