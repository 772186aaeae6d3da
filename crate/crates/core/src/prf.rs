//! Lexical pseudo-relevance feedback baselines (RM3, Bo1) and reciprocal
//! rank fusion.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::distill::merge_query;
use crate::error::{Error, Result};
use crate::index::Index;
use crate::types::{rank_order, Provenance, RankedList, SparseQuery};

pub const DEFAULT_RRF_K: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrfConfig {
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub lambda: f64,
}

impl Default for PrfConfig {
    fn default() -> Self {
        Self {
            fb_docs: 10,
            fb_terms: 50,
            lambda: 0.5,
        }
    }
}

impl PrfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fb_docs == 0 || self.fb_terms == 0 {
            return Err(Error::Config("fb_docs and fb_terms must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidLambda(self.lambda));
        }
        Ok(())
    }
}

/// Result of a feedback expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    /// Normalised expansion terms alone; `None` if feedback produced nothing.
    pub expansion: Option<SparseQuery>,
    /// Expansion interpolated with the original query.
    pub query: SparseQuery,
}

fn top_terms(weights: HashMap<&str, f64>, n: usize) -> Option<SparseQuery> {
    let mut ranked: Vec<(&str, f64)> = weights.into_iter().filter(|&(_, w)| w > 0.0).collect();
    ranked.sort_by(|a, b| rank_order(*a, *b));
    ranked.truncate(n);
    SparseQuery::from_positive(
        ranked.into_iter().map(|(t, w)| (t.to_string(), w)),
        Provenance::Expanded,
    )
    .map(|q| q.l1_normalized())
}

fn finish(original: &SparseQuery, expansion: Option<SparseQuery>, lambda: f64) -> Result<Expansion> {
    let query = match &expansion {
        Some(e) => merge_query(original, e, lambda)?,
        None => original.l1_normalized().with_provenance(Provenance::Merged),
    };
    Ok(Expansion { expansion, query })
}

fn feedback_docs<'a>(index: &'a Index, reranked: &'a RankedList, fb_docs: usize) -> Result<Vec<(u32, f64)>> {
    if reranked.is_empty() {
        return Err(Error::EmptyList);
    }
    reranked
        .iter()
        .take(fb_docs)
        .map(|e| {
            index
                .doc_idx(&e.doc_id)
                .map(|d| (d, e.score))
                .ok_or_else(|| Error::UnknownDoc(e.doc_id.clone()))
        })
        .collect()
}

/// RM3: `P(t|R) ∝ Σ_d P(t|d) · softmax(score)_d` over the top `fb_docs`,
/// with `P(t|d) = tf / doclen`.
pub fn rm3_expand(
    index: &Index,
    reranked: &RankedList,
    config: &PrfConfig,
    original: &SparseQuery,
) -> Result<Expansion> {
    config.validate()?;
    let fb = feedback_docs(index, reranked, config.fb_docs)?;
    let max = fb.iter().map(|&(_, s)| s).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = fb.iter().map(|&(_, s)| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();

    let mut weights: HashMap<&str, f64> = HashMap::new();
    for (&(doc, _), e) in fb.iter().zip(&exps) {
        let row = index.direct_row(doc);
        let len: u32 = row.iter().map(|p| p.tf).sum();
        if len == 0 {
            continue;
        }
        let p_doc = e / z;
        for p in row {
            *weights.entry(index.term(p.id)).or_insert(0.0) +=
                f64::from(p.tf) / f64::from(len) * p_doc;
        }
    }
    finish(original, top_terms(weights, config.fb_terms), config.lambda)
}

/// Bose-Einstein 1 term weight with `P_n = cf / N`.
pub fn bo1_weight(tf_fb: f64, cf: u64, num_docs: usize) -> f64 {
    if tf_fb <= 0.0 || cf == 0 || num_docs == 0 {
        return 0.0;
    }
    let pn = cf as f64 / num_docs as f64;
    tf_fb * ((1.0 + pn) / pn).log2() + (1.0 + pn).log2()
}

/// Bo1 over the top `fb_docs`.
pub fn bo1_expand(
    index: &Index,
    reranked: &RankedList,
    config: &PrfConfig,
    original: &SparseQuery,
) -> Result<Expansion> {
    config.validate()?;
    let fb = feedback_docs(index, reranked, config.fb_docs)?;
    let mut tf_fb: BTreeMap<u32, u64> = BTreeMap::new();
    for &(doc, _) in &fb {
        for p in index.direct_row(doc) {
            *tf_fb.entry(p.id).or_insert(0) += u64::from(p.tf);
        }
    }
    let weights: HashMap<&str, f64> = tf_fb
        .into_iter()
        .map(|(t, tf)| {
            let term = index.term(t);
            (term, bo1_weight(tf as f64, index.cf(term), index.num_docs()))
        })
        .collect();
    finish(original, top_terms(weights, config.fb_terms), config.lambda)
}

/// Reciprocal rank fusion: `Σ 1 / (k + rank)` over the lists containing a doc.
pub fn rrf_fuse(lists: &[RankedList], k: usize, depth: usize) -> Result<RankedList> {
    if lists.len() < 2 {
        return Err(Error::TooFewLists {
            need: 2,
            got: lists.len(),
        });
    }
    if depth == 0 {
        return Err(Error::ZeroDepth);
    }
    let query_id = &lists[0].query_id;
    for l in &lists[1..] {
        if &l.query_id != query_id {
            return Err(Error::QueryIdMismatch {
                expected: query_id.clone(),
                found: l.query_id.clone(),
            });
        }
    }
    // Collect contributions per doc, then add them smallest-rank first so the
    // sum does not depend on list order.
    let mut contribs: HashMap<&str, Vec<usize>> = HashMap::new();
    for l in lists {
        for e in l {
            contribs.entry(&e.doc_id).or_default().push(e.rank);
        }
    }
    let scored = contribs
        .into_iter()
        .map(|(d, mut ranks)| {
            ranks.sort_unstable();
            let s = ranks.iter().map(|&r| 1.0 / (k + r) as f64).sum();
            (d.to_string(), s)
        })
        .collect();
    RankedList::top_k(query_id.clone(), scored, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Document;

    fn list(qid: &str, ids: &[&str]) -> RankedList {
        RankedList::from_ordered(
            qid,
            ids.iter()
                .enumerate()
                .map(|(i, d)| (d.to_string(), -(i as f64)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn bo1_hand_value() {
        assert!((bo1_weight(1.0, 10, 10) - 2.0).abs() < 1e-12);
        assert_eq!(bo1_weight(0.0, 10, 10), 0.0);
        assert!(bo1_weight(3.0, 5, 100) > bo1_weight(2.0, 5, 100));
    }

    #[test]
    fn rrf_arithmetic_and_identity() {
        let a = list("q", &["x", "y", "z"]);
        let fused = rrf_fuse(&[a.clone(), a.clone()], 60, 10).unwrap();
        assert_eq!(fused.doc_ids(), a.doc_ids());
        assert!((fused.entries()[0].score - 2.0 / 61.0).abs() < 1e-15);
    }

    #[test]
    fn rrf_rejects_bad_input() {
        let a = list("q1", &["x"]);
        let b = list("q2", &["x"]);
        assert!(matches!(rrf_fuse(&[a.clone(), b], 60, 5), Err(Error::QueryIdMismatch { .. })));
        assert!(matches!(rrf_fuse(&[a], 60, 5), Err(Error::TooFewLists { .. })));
    }

    #[test]
    fn rrf_double_presence_wins() {
        let a = list("q", &["both", "only_a"]);
        let b = list("q", &["only_b", "both"]);
        let fused = rrf_fuse(&[a, b], 60, 10).unwrap();
        assert_eq!(fused.doc_ids()[0], "both");
    }

    fn index() -> Index {
        Index::build(vec![
            Document::new("d1", "solo"),
            Document::new("d2", "alpha beta beta"),
            Document::new("d3", "alpha gamma"),
            Document::new("d4", "delta"),
        ])
        .unwrap()
    }

    #[test]
    fn rm3_single_term_feedback() {
        let idx = index();
        let reranked = list("q", &["d1", "d2"]);
        let cfg = PrfConfig {
            fb_docs: 1,
            fb_terms: 50,
            lambda: 1.0,
        };
        let orig = SparseQuery::from_text("alpha").unwrap();
        let e = rm3_expand(&idx, &reranked, &cfg, &orig).unwrap();
        let exp = e.expansion.unwrap();
        assert_eq!(exp.len(), 1);
        assert_eq!(exp.get("solo"), Some(1.0));
        assert_eq!(e.query.weights(), exp.weights());
    }

    #[test]
    fn rm3_lambda_zero_is_original() {
        let idx = index();
        let cfg = PrfConfig {
            lambda: 0.0,
            ..PrfConfig::default()
        };
        let orig = SparseQuery::from_text("alpha beta").unwrap();
        let e = rm3_expand(&idx, &list("q", &["d2", "d3"]), &cfg, &orig).unwrap();
        assert_eq!(e.query.weights(), orig.l1_normalized().weights());
    }

    #[test]
    fn bo1_never_selects_absent_terms() {
        let idx = index();
        let orig = SparseQuery::from_text("alpha").unwrap();
        let cfg = PrfConfig {
            fb_docs: 2,
            fb_terms: 50,
            lambda: 0.5,
        };
        let e = bo1_expand(&idx, &list("q", &["d2", "d3"]), &cfg, &orig).unwrap();
        let exp = e.expansion.unwrap();
        assert!(exp.get("delta").is_none() && exp.get("solo").is_none());
        assert!(exp.get("beta").is_some());
    }

    #[test]
    fn fb_terms_caps_expansion() {
        let idx = index();
        let orig = SparseQuery::from_text("alpha").unwrap();
        let cfg = PrfConfig {
            fb_docs: 4,
            fb_terms: 2,
            lambda: 0.5,
        };
        let all = list("q", &["d1", "d2", "d3", "d4"]);
        for e in [
            rm3_expand(&idx, &all, &cfg, &orig).unwrap(),
            bo1_expand(&idx, &all, &cfg, &orig).unwrap(),
        ] {
            assert_eq!(e.expansion.unwrap().len(), 2);
            assert!(e.query.len() <= 3);
        }
    }
}
