//! Ranking metrics: nDCG@k, Recall@k with a relevance floor, rank-biased
//! overlap, overlap ratio and newly retrieved relevant documents.
//!
//! Metrics that are undefined for a query (no qualifying judgements) return
//! `None` so callers can skip the query instead of averaging in a zero.

mod stats;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RankedList;

pub use stats::{mean, paired_t_test, TTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub k: usize,
    pub min_rel: u32,
    pub rbo_p: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            k: 1000,
            min_rel: 2,
            rbo_p: 0.99,
        }
    }
}

/// Graded judgements. Unjudged pairs have grade 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgements: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.judgements
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgements
            .get(query_id)
            .and_then(|q| q.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgements.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgements.keys().map(String::as_str)
    }

    pub fn contains_query(&self, query_id: &str) -> bool {
        self.judgements.contains_key(query_id)
    }

    /// Parses TREC qrels lines `query_id iter doc_id grade`. Negative grades count as 0.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut qrels = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", fields.len())));
            }
            let grade: i64 = fields[3]
                .parse()
                .map_err(|_| bad(format!("bad grade `{}`", fields[3])))?;
            qrels.insert(fields[0], fields[2], grade.max(0) as u32);
        }
        Ok(qrels)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path)
    }

    /// TREC qrels text, sorted by query then doc.
    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (q, docs) in &self.judgements {
            for (d, g) in docs {
                out.push_str(&format!("{q} 0 {d} {g}\n"));
            }
        }
        out
    }
}

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// nDCG@k with gain `2^g − 1` and discount `1 / log2(rank + 1)`.
pub fn ndcg_at(run: &RankedList, qrels: &Qrels, k: usize) -> Option<f64> {
    let judged = qrels.for_query(&run.query_id)?;
    let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) * discount(i + 1))
        .sum();
    let dcg: f64 = run
        .iter()
        .take(k)
        .map(|e| gain(judged.get(&e.doc_id).copied().unwrap_or(0)) * discount(e.rank))
        .sum();
    Some(dcg / idcg)
}

/// Fraction of documents with grade ≥ `min_rel` found in the top `k`.
pub fn recall_at(run: &RankedList, qrels: &Qrels, k: usize, min_rel: u32) -> Option<f64> {
    let judged = qrels.for_query(&run.query_id)?;
    let total = judged.values().filter(|&&g| g >= min_rel).count();
    if total == 0 {
        return None;
    }
    let found = run
        .iter()
        .take(k)
        .filter(|e| judged.get(&e.doc_id).is_some_and(|&g| g >= min_rel))
        .count();
    Some(found as f64 / total as f64)
}

fn check_unique<S: AsRef<str>>(list: &[S]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut seen = HashSet::with_capacity(list.len());
    for d in list {
        if !seen.insert(d.as_ref()) {
            return Err(Error::DuplicateInList(d.as_ref().to_string()));
        }
    }
    Ok(())
}

/// Extrapolated rank-biased overlap over the common evaluation depth
/// `D = min(|a|, |b|)`:
/// `(1 − p) · Σ_{d ≤ D} p^{d−1} · A_d + p^D · A_D`.
pub fn rbo<S: AsRef<str>>(a: &[S], b: &[S], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("rbo p must lie in (0, 1), got {p}")));
    }
    check_unique(a)?;
    check_unique(b)?;
    let depth = a.len().min(b.len());
    let mut seen_a: HashSet<&str> = HashSet::with_capacity(depth);
    let mut seen_b: HashSet<&str> = HashSet::with_capacity(depth);
    let mut overlap = 0usize;
    let mut weight = 1.0;
    let mut sum = 0.0;
    let mut agreement = 0.0;
    for d in 0..depth {
        let (x, y) = (a[d].as_ref(), b[d].as_ref());
        if x == y {
            overlap += 1;
        } else {
            overlap += usize::from(seen_b.contains(x)) + usize::from(seen_a.contains(y));
        }
        seen_a.insert(x);
        seen_b.insert(y);
        agreement = overlap as f64 / (d + 1) as f64;
        sum += weight * agreement;
        weight *= p;
    }
    // `weight` is now p^D
    Ok((1.0 - p) * sum + weight * agreement)
}

/// `|set(a) ∩ set(b)| / |set(a)|`.
pub fn overlap_ratio<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64> {
    let set_a: HashSet<&str> = a.iter().map(AsRef::as_ref).collect();
    if set_a.is_empty() {
        return Err(Error::EmptyList);
    }
    let set_b: HashSet<&str> = b.iter().map(AsRef::as_ref).collect();
    Ok(set_a.intersection(&set_b).count() as f64 / set_a.len() as f64)
}

/// Documents in `retrieved` with grade ≥ `min_rel` that `first_stage` missed.
pub fn new_relevant_per_query(
    first_stage: &RankedList,
    retrieved: &RankedList,
    qrels: &Qrels,
    min_rel: u32,
) -> Result<usize> {
    if first_stage.query_id != retrieved.query_id {
        return Err(Error::QueryIdMismatch {
            expected: first_stage.query_id.clone(),
            found: retrieved.query_id.clone(),
        });
    }
    let seen: HashSet<&str> = first_stage.iter().map(|e| e.doc_id.as_str()).collect();
    Ok(retrieved
        .iter()
        .filter(|e| !seen.contains(e.doc_id.as_str()))
        .filter(|e| qrels.grade(&retrieved.query_id, &e.doc_id) >= min_rel)
        .count())
}
