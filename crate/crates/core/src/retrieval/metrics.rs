use std::collections::HashSet;

use crate::{Error, Result};

/// Mean reciprocal rank. `None` is a miss and contributes zero.
pub fn mrr(ranks: &[Option<usize>]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / ranks.len() as f64
}

/// Average precision over the first `R = |gold|` ranked items.
pub fn average_precision_at_r(gold: &HashSet<&str>, ranking: &[&str]) -> f64 {
    let r = gold.len();
    if r == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, id) in ranking.iter().take(r).enumerate() {
        if gold.contains(id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / r as f64
}

/// Mean over queries of [`average_precision_at_r`].
pub fn map_at_r<S: AsRef<str>>(gold_sets: &[Vec<S>], rankings: &[Vec<S>]) -> f64 {
    if gold_sets.is_empty() {
        return 0.0;
    }
    gold_sets
        .iter()
        .zip(rankings)
        .map(|(gold, ranking)| {
            let gold: HashSet<&str> = gold.iter().map(AsRef::as_ref).collect();
            let ranking: Vec<&str> = ranking.iter().map(AsRef::as_ref).collect();
            average_precision_at_r(&gold, &ranking)
        })
        .sum::<f64>()
        / gold_sets.len() as f64
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Mean squared distance between matched embeddings.
pub fn alignment<'a>(pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for (u, v) in pairs {
        sum += sq_dist(u, v);
        n += 1;
    }
    if n == 0 {
        return Err(Error::InvalidConfig("alignment needs at least one pair".into()));
    }
    Ok(sum / n as f64)
}

/// Log of the mean Gaussian potential `exp(-2‖u - v‖²)` over distinct unordered pairs.
pub fn uniformity<V: AsRef<[f64]>>(embeddings: &[V]) -> Result<f64> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::CorpusTooSmall { needed: 2, got: n });
    }
    // log-sum-exp with the largest exponent being 0 (coincident points) or below
    let mut exps = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            exps.push(-2.0 * sq_dist(embeddings[i].as_ref(), embeddings[j].as_ref()));
        }
    }
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
    Ok((max + sum.ln() - (exps.len() as f64).ln()).min(0.0))
}
