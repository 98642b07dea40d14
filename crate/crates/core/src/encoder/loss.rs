//! In-batch contrastive loss, the summed pre-training objective, and the
//! distillation loss used by adversarial fine-tuning. All gradients are closed form.

use serde::{Deserialize, Serialize};

use super::model::{EncoderGrads, EncoderParams, Forward};
use crate::corpus::Language;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    CodeDoc,
    CodeComment,
    CodeCode,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::CodeDoc => "code_doc",
            Modality::CodeComment => "code_comment",
            Modality::CodeCode => "code_code",
        }
    }
}

/// `N` (anchor, positive) pairs. Row `i` of the score matrix ranks positive `i`
/// against every other positive in the batch plus the shared `negatives`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub anchors: Vec<Vec<u32>>,
    pub positives: Vec<Vec<u32>>,
    /// Extra candidate columns shared by all anchors (hard negatives).
    pub negatives: Vec<Vec<u32>>,
    /// `(anchor, column)` cells removed from the softmax, e.g. a hard negative
    /// that is actually another anchor's gold. Columns index positives first,
    /// then negatives. Diagonal cells are never masked.
    pub masked: Vec<(usize, usize)>,
    pub modality: Modality,
    pub languages: Vec<Language>,
}

impl Batch {
    pub fn new(anchors: Vec<Vec<u32>>, positives: Vec<Vec<u32>>, modality: Modality) -> Self {
        Self {
            anchors,
            positives,
            negatives: Vec::new(),
            masked: Vec::new(),
            modality,
            languages: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = if x.is_finite() { (*x - max).exp() } else { 0.0 };
        sum += *x;
    }
    row.iter_mut().for_each(|x| *x /= sum);
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in acc.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Mean over anchors of `-ln softmax(τ·s(a_i, ·))_i`, and its gradient.
pub fn contrastive_loss(params: &EncoderParams, batch: &Batch, temperature: f64) -> Result<(f64, EncoderGrads)> {
    let n = batch.anchors.len();
    if n < 2 || batch.positives.len() != n {
        return Err(Error::BatchTooSmall(n.min(batch.positives.len())));
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidConfig(format!("temperature must be positive, got {temperature}")));
    }
    let anchors: Vec<Forward> = batch.anchors.iter().map(|a| params.forward(a)).collect();
    let columns: Vec<Forward> = batch
        .positives
        .iter()
        .chain(&batch.negatives)
        .map(|c| params.forward(c))
        .collect();
    let m = columns.len();

    let mut probs: Vec<Vec<f64>> = anchors
        .iter()
        .map(|a| columns.iter().map(|c| temperature * dot(&a.output, &c.output)).collect())
        .collect();
    for &(i, j) in &batch.masked {
        if i != j && i < n && j < m {
            probs[i][j] = f64::NEG_INFINITY;
        }
    }

    let mut loss = 0.0;
    for (i, row) in probs.iter_mut().enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + row.iter().filter(|x| x.is_finite()).map(|x| (x - max).exp()).sum::<f64>().ln();
        loss += log_z - row[i];
        softmax_in_place(row);
    }
    loss /= n as f64;

    // d loss / d logit_ij = (p_ij - [i == j]) / n, and logit = τ·s
    let d = params.dim;
    let mut d_anchor = vec![vec![0.0; d]; n];
    let mut d_column = vec![vec![0.0; d]; m];
    let scale = temperature / n as f64;
    for i in 0..n {
        for j in 0..m {
            let g = (probs[i][j] - if i == j { 1.0 } else { 0.0 }) * scale;
            if g == 0.0 {
                continue;
            }
            axpy(&mut d_anchor[i], g, &columns[j].output);
            axpy(&mut d_column[j], g, &anchors[i].output);
        }
    }

    let mut grads = params.zero_grads();
    for (fwd, g) in anchors.iter().zip(&d_anchor).chain(columns.iter().zip(&d_column)) {
        params.backward(fwd, g, &mut grads);
    }
    Ok((loss, grads))
}

/// Per-term values of the summed objective. Absent terms are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub uni: Option<f64>,
    pub bi_doc: Option<f64>,
    pub bi_comment: Option<f64>,
}

/// Code-code term plus the two code-text terms. A missing batch contributes zero.
pub fn total_loss(
    params: &EncoderParams,
    uni: Option<&Batch>,
    doc: Option<&Batch>,
    comment: Option<&Batch>,
    temperature: f64,
) -> Result<(LossTerms, EncoderGrads)> {
    if uni.is_none() && doc.is_none() && comment.is_none() {
        return Err(Error::NoLossTerms);
    }
    let mut grads = params.zero_grads();
    let mut terms = LossTerms::default();
    let mut run = |batch: Option<&Batch>| -> Result<Option<f64>> {
        let Some(batch) = batch else { return Ok(None) };
        let (loss, g) = contrastive_loss(params, batch, temperature)?;
        super::optim::Parameters::add_assign(&mut grads, &g);
        Ok(Some(loss))
    };
    terms.uni = run(uni)?;
    terms.bi_doc = run(doc)?;
    terms.bi_comment = run(comment)?;
    terms.total = terms.uni.unwrap_or(0.0) + terms.bi_doc.unwrap_or(0.0) + terms.bi_comment.unwrap_or(0.0);
    Ok((terms, grads))
}

/// One query and its candidate pool, with a teacher distribution over the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillItem {
    pub query: Vec<u32>,
    pub candidates: Vec<Vec<u32>>,
    /// Sums to 1 over `candidates`.
    pub teacher: Vec<f64>,
}

/// Mean over queries of `KL(teacher ‖ softmax(τ·s(q, ·)))`, and its gradient.
pub fn distillation_loss(params: &EncoderParams, items: &[DistillItem], temperature: f64) -> Result<(f64, EncoderGrads)> {
    if items.is_empty() {
        return Err(Error::BatchTooSmall(0));
    }
    let mut grads = params.zero_grads();
    let mut loss = 0.0;
    let scale = temperature / items.len() as f64;
    for item in items {
        if item.candidates.len() != item.teacher.len() || item.candidates.is_empty() {
            return Err(Error::InvalidConfig("teacher distribution does not match candidate pool".into()));
        }
        let q = params.forward(&item.query);
        let cands: Vec<Forward> = item.candidates.iter().map(|c| params.forward(c)).collect();
        let mut p: Vec<f64> = cands.iter().map(|c| temperature * dot(&q.output, &c.output)).collect();
        softmax_in_place(&mut p);
        for (&t, &s) in item.teacher.iter().zip(&p) {
            if t > 0.0 {
                loss += t * (t.ln() - s.max(f64::MIN_POSITIVE).ln());
            }
        }
        let mut d_q = vec![0.0; params.dim];
        for (j, c) in cands.iter().enumerate() {
            let g = (p[j] - item.teacher[j]) * scale;
            axpy(&mut d_q, g, &c.output);
            let d_c: Vec<f64> = q.output.iter().map(|x| g * x).collect();
            params.backward(c, &d_c, &mut grads);
        }
        params.backward(&q, &d_q, &mut grads);
    }
    Ok((loss / items.len() as f64, grads))
}
