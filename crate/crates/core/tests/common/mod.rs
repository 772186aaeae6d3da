//! Shared helpers: brute-force reference implementations and random instances.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use odis::distill::Features;
use odis::index::term_frequencies;
use odis::{Document, RankedList};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn ranked(qid: &str, ids: &[String]) -> RankedList {
    RankedList::from_ordered(
        qid,
        ids.iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), (ids.len() - i) as f64))
            .collect(),
    )
    .unwrap()
}

/// A random permutation of `len` ids drawn from a pool of `pool` names.
pub fn random_list<R: Rng>(rng: &mut R, len: usize, pool: usize) -> Vec<String> {
    let mut ids: Vec<String> = (0..pool.max(len)).map(|i| format!("d{i}")).collect();
    ids.shuffle(rng);
    ids.truncate(len);
    ids
}

pub fn ndcg_oracle(run: &[String], grades: &HashMap<String, u32>, k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, d) in run.iter().enumerate() {
        if i >= k {
            break;
        }
        let g = *grades.get(d).unwrap_or(&0) as f64;
        dcg += (2f64.powf(g) - 1.0) / (i as f64 + 2.0).log2();
    }
    let mut ideal: Vec<u32> = grades.values().copied().collect();
    ideal.sort();
    ideal.reverse();
    let mut idcg = 0.0;
    for (i, g) in ideal.iter().enumerate() {
        if i >= k {
            break;
        }
        idcg += (2f64.powf(*g as f64) - 1.0) / (i as f64 + 2.0).log2();
    }
    dcg / idcg
}

pub fn recall_oracle(run: &[String], grades: &HashMap<String, u32>, k: usize, min_rel: u32) -> f64 {
    let relevant: Vec<&String> = grades.iter().filter(|(_, &g)| g >= min_rel).map(|(d, _)| d).collect();
    let top = &run[..run.len().min(k)];
    let found = relevant.iter().filter(|d| top.contains(d)).count();
    found as f64 / relevant.len() as f64
}

/// Extrapolated RBO evaluated at depth `min(|a|, |b|)`, recomputing every
/// prefix overlap from scratch.
pub fn rbo_oracle(a: &[String], b: &[String], p: f64) -> f64 {
    let depth = a.len().min(b.len());
    let mut sum = 0.0;
    let mut last = 0.0;
    for d in 1..=depth {
        let pa: HashSet<&String> = a[..d].iter().collect();
        let x = b[..d].iter().filter(|y| pa.contains(y)).count();
        last = x as f64 / d as f64;
        sum += p.powi(d as i32 - 1) * last;
    }
    (1.0 - p) * sum + p.powi(depth as i32) * last
}

pub fn overlap_oracle(a: &[String], b: &[String]) -> f64 {
    let mut ua: Vec<&String> = a.iter().collect();
    ua.sort();
    ua.dedup();
    let hits = ua.iter().filter(|d| b.contains(d)).count();
    hits as f64 / ua.len() as f64
}

/// BM25 by scanning every document for every query term.
pub fn bm25_oracle(docs: &[Document], query: &BTreeMap<String, f64>) -> Vec<(String, f64)> {
    let tfs: Vec<BTreeMap<String, u32>> = docs.iter().map(|d| term_frequencies(&d.text)).collect();
    let n = docs.len() as f64;
    let lens: Vec<f64> = tfs.iter().map(|t| t.values().sum::<u32>() as f64).collect();
    let avgdl = lens.iter().sum::<f64>() / n;
    let mut out = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let mut s = 0.0;
        for (t, w) in query {
            let df = tfs.iter().filter(|m| m.contains_key(t)).count() as f64;
            let Some(&tf) = tfs[i].get(t) else { continue };
            let tf = tf as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            s += w * idf * tf * 2.2 / (tf + 1.2 * (1.0 - 0.75 + 0.75 * lens[i] / avgdl));
        }
        if s > 0.0 {
            out.push((d.doc_id.clone(), s));
        }
    }
    sort_scored(&mut out);
    out
}

/// TF-IDF dot product by scanning every document.
pub fn tfidf_oracle(docs: &[Document], query: &BTreeMap<String, f64>) -> Vec<(String, f64)> {
    let tfs: Vec<BTreeMap<String, u32>> = docs.iter().map(|d| term_frequencies(&d.text)).collect();
    let n = docs.len() as f64;
    let mut out = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let mut s = 0.0;
        for (t, w) in query {
            let df = tfs.iter().filter(|m| m.contains_key(t)).count() as f64;
            if let Some(&tf) = tfs[i].get(t) {
                s += w * (1.0 + (tf as f64).ln()) * ((n + 1.0) / (df + 1.0)).ln();
            }
        }
        if s > 0.0 {
            out.push((d.doc_id.clone(), s));
        }
    }
    sort_scored(&mut out);
    out
}

fn sort_scored(v: &mut [(String, f64)]) {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
}

/// Small random corpus over a vocabulary of `vocab` short words.
pub fn random_corpus<R: Rng>(rng: &mut R, num_docs: usize, vocab: usize, max_len: usize) -> Vec<Document> {
    (0..num_docs)
        .map(|i| {
            let len = rng.gen_range(0..=max_len);
            let words: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
            Document::new(format!("doc{i:03}"), words.join(" "))
        })
        .collect()
}

/// Random sparse features: each doc gets `per_doc` distinct terms out of
/// `num_terms`, with values in (0, 5).
pub fn random_features<R: Rng>(rng: &mut R, docs: &[String], num_terms: usize, per_doc: usize) -> Features {
    let terms: Vec<String> = (0..num_terms).map(|i| format!("t{i:03}")).collect();
    docs.iter()
        .map(|d| {
            let row: BTreeMap<String, f64> = terms
                .choose_multiple(rng, per_doc.min(num_terms))
                .map(|t| (t.clone(), rng.gen_range(0.01..5.0)))
                .collect();
            (d.clone(), row)
        })
        .collect()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Pairwise loss written out directly: every pair (i above j) weighted by
/// `1/rank_i − 1/rank_j`, softplus pairs restricted to an upper member in
/// the top 50 once the ranking exceeds 200 documents.
pub fn loss_oracle(
    theta: &BTreeMap<String, f64>,
    features: &Features,
    ranking: &[String],
    softplus_variant: bool,
    r: f64,
) -> f64 {
    let score = |d: &String| -> f64 {
        features[d]
            .iter()
            .map(|(t, v)| theta.get(t).map_or(0.0, |w| w.max(0.0) * v))
            .sum()
    };
    let o: Vec<f64> = ranking.iter().map(score).collect();
    let n = ranking.len();
    let mut data = 0.0;
    for i in 0..n {
        if softplus_variant && n > 200 && i + 1 > 50 {
            break;
        }
        for j in (i + 1)..n {
            let w = 1.0 / (i + 1) as f64 - 1.0 / (j + 1) as f64;
            let m = o[j] - o[i];
            data += w * if softplus_variant { softplus(m) } else { m };
        }
    }
    data + r * theta.values().map(|t| t.abs()).sum::<f64>()
}

pub struct Fixture {
    pub index: odis::index::Index,
    pub queries: Vec<odis::harness::Query>,
    pub qrels: odis::eval::Qrels,
    pub teacher: odis::scoring::TeacherWeights,
}

/// The frozen seed-7 mismatch collection.
pub fn seed7() -> Fixture {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synth-seed7");
    let corpus = odis::harness::read_corpus(dir.join("corpus.jsonl")).unwrap();
    Fixture {
        index: odis::index::Index::build(corpus).unwrap(),
        queries: odis::harness::read_queries(dir.join("queries.tsv")).unwrap(),
        qrels: odis::eval::Qrels::read(dir.join("qrels.txt")).unwrap(),
        teacher: serde_json::from_str(&std::fs::read_to_string(dir.join("teacher.json")).unwrap()).unwrap(),
    }
}
