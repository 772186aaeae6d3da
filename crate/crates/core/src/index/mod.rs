//! Direct and inverted indexes over a document collection, with BM25
//! first-stage retrieval and TF-IDF weighted term-query execution.
//!
//! Terms and documents are assigned dense ids in lexicographic order, so
//! postings sorted by doc id are also sorted by the external `doc_id` string.

mod persist;
mod text;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Document, RankedList, SparseQuery};

pub use text::{is_stopword, tokenize, STOPWORDS};

pub type TermId = u32;
pub type DocIdx = u32;

/// BM25 saturation parameter.
pub const BM25_K1: f64 = 1.2;
/// BM25 length normalisation.
pub const BM25_B: f64 = 0.75;

/// A `(id, term frequency)` pair inside a direct row or posting list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub id: u32,
    pub tf: u32,
}

/// Collection-level statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_docs: usize,
    pub avgdl: f64,
    pub num_terms: usize,
    pub total_tokens: u64,
}

#[derive(Debug, Clone)]
pub struct Index {
    vocab: Vec<String>,
    term_ids: HashMap<String, TermId>,
    doc_ids: Vec<String>,
    doc_lookup: HashMap<String, DocIdx>,
    texts: Vec<String>,
    doclen: Vec<u32>,
    direct: Vec<Vec<Posting>>,
    inverted: Vec<Vec<Posting>>,
    cf: Vec<u64>,
    stats: CorpusStats,
}

/// Smoothed TF-IDF feature: `(1 + ln tf) * ln((N + 1) / (df + 1))`, 0 when tf = 0.
pub fn tfidf(tf: u32, df: usize, num_docs: usize) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    (1.0 + f64::from(tf).ln()) * ((num_docs as f64 + 1.0) / (df as f64 + 1.0)).ln()
}

/// BM25 idf, `ln((N - df + 0.5) / (df + 0.5) + 1)`; always positive.
pub fn bm25_idf(df: usize, num_docs: usize) -> f64 {
    let (n, df) = (num_docs as f64, df as f64);
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

/// Per-term BM25 contribution of one document, without the query weight.
pub fn bm25_term(tf: u32, doclen: u32, avgdl: f64, idf: f64) -> f64 {
    let tf = f64::from(tf);
    let norm = if avgdl > 0.0 {
        1.0 - BM25_B + BM25_B * f64::from(doclen) / avgdl
    } else {
        1.0
    };
    idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm)
}

/// Counts tokens of `text` into a sorted term → tf map.
pub fn term_frequencies(text: &str) -> BTreeMap<String, u32> {
    let mut tfs = BTreeMap::new();
    for term in tokenize(text) {
        *tfs.entry(term).or_insert(0) += 1;
    }
    tfs
}

impl Index {
    /// Builds both indexes from a corpus. Input order does not matter.
    pub fn build(corpus: impl IntoIterator<Item = Document>) -> Result<Self> {
        let mut docs: Vec<Document> = corpus.into_iter().collect();
        for doc in &docs {
            if doc.doc_id.is_empty() {
                return Err(Error::EmptyDocId);
            }
        }
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = docs.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(Error::DuplicateDocId(w[0].doc_id.clone()));
        }

        let counted: Vec<BTreeMap<String, u32>> =
            docs.par_iter().map(|d| term_frequencies(&d.text)).collect();

        let mut vocab: Vec<String> = counted
            .iter()
            .flat_map(|tfs| tfs.keys().cloned())
            .collect();
        vocab.sort_unstable();
        vocab.dedup();
        let term_ids: HashMap<String, TermId> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();

        let direct: Vec<Vec<Posting>> = counted
            .iter()
            .map(|tfs| {
                // BTreeMap order == vocab order, so rows come out sorted by term id.
                tfs.iter()
                    .map(|(t, &tf)| Posting {
                        id: term_ids[t],
                        tf,
                    })
                    .collect()
            })
            .collect();

        let (doc_ids, texts): (Vec<String>, Vec<String>) =
            docs.into_iter().map(|d| (d.doc_id, d.text)).unzip();
        Ok(Self::assemble(vocab, doc_ids, texts, direct))
    }

    /// Fills in the inverted side and statistics from the direct rows.
    fn assemble(
        vocab: Vec<String>,
        doc_ids: Vec<String>,
        texts: Vec<String>,
        direct: Vec<Vec<Posting>>,
    ) -> Self {
        let term_ids = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let doc_lookup = doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i as DocIdx))
            .collect();
        let inverted = transpose(&direct, vocab.len());
        let doclen: Vec<u32> = direct
            .iter()
            .map(|row| row.iter().map(|p| p.tf).sum())
            .collect();
        let cf: Vec<u64> = inverted
            .iter()
            .map(|plist| plist.iter().map(|p| u64::from(p.tf)).sum())
            .collect();
        let total_tokens: u64 = doclen.iter().map(|&l| u64::from(l)).sum();
        let num_docs = doc_ids.len();
        let stats = CorpusStats {
            num_docs,
            avgdl: if num_docs == 0 {
                0.0
            } else {
                total_tokens as f64 / num_docs as f64
            },
            num_terms: vocab.len(),
            total_tokens,
        };
        Self {
            vocab,
            term_ids,
            doc_ids,
            doc_lookup,
            texts,
            doclen,
            direct,
            inverted,
            cf,
            stats,
        }
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn num_docs(&self) -> usize {
        self.stats.num_docs
    }

    pub fn is_empty(&self) -> bool {
        self.stats.num_docs == 0
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.vocab[id as usize]
    }

    pub fn doc_idx(&self, doc_id: &str) -> Option<DocIdx> {
        self.doc_lookup.get(doc_id).copied()
    }

    pub fn doc_id(&self, idx: DocIdx) -> &str {
        &self.doc_ids[idx as usize]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn document(&self, doc_id: &str) -> Option<Document> {
        self.doc_idx(doc_id)
            .map(|i| Document::new(doc_id, self.texts[i as usize].clone()))
    }

    /// Documents in doc_id order.
    pub fn documents(&self) -> impl Iterator<Item = Document> + '_ {
        self.doc_ids
            .iter()
            .zip(&self.texts)
            .map(|(id, text)| Document::new(id.clone(), text.clone()))
    }

    pub fn df(&self, term: &str) -> usize {
        self.term_id(term)
            .map_or(0, |t| self.inverted[t as usize].len())
    }

    /// Collection frequency: total occurrences of `term`.
    pub fn cf(&self, term: &str) -> u64 {
        self.term_id(term).map_or(0, |t| self.cf[t as usize])
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<u32> {
        self.doc_idx(doc_id).map(|i| self.doclen[i as usize])
    }

    pub fn tf(&self, doc_id: &str, term: &str) -> u32 {
        match (self.doc_idx(doc_id), self.term_id(term)) {
            (Some(d), Some(t)) => {
                let row = &self.direct[d as usize];
                row.binary_search_by_key(&t, |p| p.id)
                    .map_or(0, |pos| row[pos].tf)
            }
            _ => 0,
        }
    }

    /// Direct-index row of a document: `(term id, tf)` sorted by term id.
    pub fn direct_row(&self, idx: DocIdx) -> &[Posting] {
        &self.direct[idx as usize]
    }

    /// Posting list of a term: `(doc idx, tf)` sorted by doc idx.
    pub fn postings(&self, term: TermId) -> &[Posting] {
        &self.inverted[term as usize]
    }

    /// Term → tf map of a document.
    pub fn term_counts(&self, doc_id: &str) -> Result<BTreeMap<String, u32>> {
        let idx = self
            .doc_idx(doc_id)
            .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))?;
        Ok(self.direct[idx as usize]
            .iter()
            .map(|p| (self.vocab[p.id as usize].clone(), p.tf))
            .collect())
    }

    pub fn tfidf_by_id(&self, term: TermId, tf: u32) -> f64 {
        tfidf(tf, self.inverted[term as usize].len(), self.stats.num_docs)
    }

    /// Non-zero TF-IDF features of a document as `(term id, value)` sorted by term id.
    pub fn feature_row(&self, idx: DocIdx) -> Vec<(TermId, f64)> {
        self.direct[idx as usize]
            .iter()
            .map(|p| (p.id, self.tfidf_by_id(p.id, p.tf)))
            .filter(|&(_, v)| v > 0.0)
            .collect()
    }

    /// Token-level TF-IDF feature vector of a document. Zero-valued features are omitted.
    pub fn tfidf_vector(&self, doc_id: &str) -> Result<BTreeMap<String, f64>> {
        let idx = self
            .doc_idx(doc_id)
            .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))?;
        Ok(self
            .feature_row(idx)
            .into_iter()
            .map(|(t, v)| (self.vocab[t as usize].clone(), v))
            .collect())
    }

    /// BM25 top-k. Query weights multiply the per-term contributions.
    pub fn bm25_retrieve(
        &self,
        query_id: &str,
        query: &SparseQuery,
        k: usize,
    ) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroDepth);
        }
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let avgdl = self.stats.avgdl;
        self.accumulate(query_id, query, k, |term, weight, posting| {
            let idf = bm25_idf(self.inverted[term as usize].len(), self.stats.num_docs);
            weight * bm25_term(posting.tf, self.doclen[posting.id as usize], avgdl, idf)
        })
    }

    /// Scores `Σ_t w_t · tfidf(t, d)` by walking the query terms' posting lists.
    /// Only documents with a positive score are returned.
    pub fn execute_sparse_query(
        &self,
        query_id: &str,
        query: &SparseQuery,
        k: usize,
    ) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::ZeroDepth);
        }
        self.accumulate(query_id, query, k, |term, weight, posting| {
            weight * self.tfidf_by_id(term, posting.tf)
        })
    }

    /// Term-at-a-time accumulation in ascending term order.
    fn accumulate<F>(&self, query_id: &str, query: &SparseQuery, k: usize, contrib: F) -> Result<RankedList>
    where
        F: Fn(TermId, f64, &Posting) -> f64,
    {
        let mut acc: HashMap<DocIdx, f64> = HashMap::new();
        for (term, weight) in query.iter() {
            let Some(tid) = self.term_id(term) else {
                continue;
            };
            for posting in &self.inverted[tid as usize] {
                *acc.entry(posting.id).or_insert(0.0) += contrib(tid, weight, posting);
            }
        }
        let scored: Vec<(String, f64)> = acc
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(d, s)| (self.doc_ids[d as usize].clone(), s))
            .collect();
        RankedList::top_k(query_id, scored, k)
    }
}

/// Inverts `(row, col, value)` rows into per-column lists sorted by row.
fn transpose(rows: &[Vec<Posting>], num_cols: usize) -> Vec<Vec<Posting>> {
    let mut cols: Vec<Vec<Posting>> = vec![Vec::new(); num_cols];
    for (r, row) in rows.iter().enumerate() {
        for p in row {
            cols[p.id as usize].push(Posting {
                id: r as u32,
                tf: p.tf,
            });
        }
    }
    cols
}
