//! Synthetic test collections with controlled vocabulary mismatch.
//!
//! Each topic owns a set of core terms. The first `head_terms` of them are the
//! words queries are built from, and each head has a private synonym. A
//! topical document is "mismatched" with probability `mismatch_rate`: all its
//! head occurrences are swapped for synonyms, which hides it from the raw
//! query while its other core terms still tie it to the topic.
//!
//! Judgements: mismatched on-topic docs get grade 3, other on-topic docs
//! grade 2; everything else is unjudged (grade 0).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trec::{format_corpus, format_queries, Query};
use crate::error::{Error, Result};
use crate::eval::Qrels;
use crate::index::{is_stopword, tokenize};
use crate::scoring::TeacherWeights;
use crate::types::Document;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: usize,
    pub max: usize,
}

impl Range {
    fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub num_docs: usize,
    pub vocab_size: usize,
    pub num_topics: usize,
    pub num_queries: usize,
    pub docs_per_topic: Range,
    pub mismatch_rate: f64,
    pub noise_sd: f64,
    pub seed: u64,
    /// Core terms per topic, heads included.
    pub topic_terms: usize,
    pub head_terms: usize,
    pub query_terms: usize,
    pub doc_len: Range,
    /// Share of a topical document's tokens drawn from its topic's core terms.
    pub topical_fraction: f64,
    /// Probability that an off-topic document mentions a random head term.
    pub stray_head_rate: f64,
    /// Probability that an off-topic document borrows a few core terms.
    pub stray_core_rate: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_docs: 2000,
            vocab_size: 5000,
            num_topics: 20,
            num_queries: 50,
            docs_per_topic: Range { min: 30, max: 60 },
            mismatch_rate: 0.5,
            noise_sd: 0.0,
            seed: 7,
            topic_terms: 20,
            head_terms: 4,
            query_terms: 3,
            doc_len: Range { min: 30, max: 80 },
            topical_fraction: 0.3,
            stray_head_rate: 0.3,
            stray_core_rate: 0.2,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_docs == 0 || self.num_topics == 0 || self.num_queries == 0 {
            return bad("num_docs, num_topics and num_queries must be positive");
        }
        if !(0.0..=1.0).contains(&self.mismatch_rate) {
            return bad("mismatch_rate must lie in [0, 1]");
        }
        if self.noise_sd < 0.0 {
            return bad("noise_sd must be non-negative");
        }
        if self.head_terms == 0 || self.head_terms >= self.topic_terms {
            return bad("need 0 < head_terms < topic_terms");
        }
        if self.query_terms == 0 || self.query_terms > self.head_terms {
            return bad("need 0 < query_terms <= head_terms");
        }
        if self.docs_per_topic.min == 0 || self.docs_per_topic.min > self.docs_per_topic.max {
            return bad("docs_per_topic must satisfy 0 < min <= max");
        }
        if self.doc_len.min == 0 || self.doc_len.min > self.doc_len.max {
            return bad("doc_len must satisfy 0 < min <= max");
        }
        let reserved = self.num_topics * (self.topic_terms + self.head_terms);
        if reserved + 100 > self.vocab_size {
            return bad("vocab_size too small for the topic vocabulary");
        }
        if self.num_topics * self.docs_per_topic.min > self.num_docs {
            return bad("num_docs too small for docs_per_topic.min");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCollection {
    pub corpus: Vec<Document>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
    pub teacher: TeacherWeights,
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const QUERIES_FILE: &str = "queries.tsv";
pub const QRELS_FILE: &str = "qrels.txt";
pub const TEACHER_FILE: &str = "teacher.json";

impl SynthCollection {
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CORPUS_FILE), format_corpus(&self.corpus)?)?;
        fs::write(dir.join(QUERIES_FILE), format_queries(&self.queries))?;
        fs::write(dir.join(QRELS_FILE), self.qrels.to_trec())?;
        fs::write(
            dir.join(TEACHER_FILE),
            serde_json::to_string_pretty(&self.teacher)? + "\n",
        )?;
        Ok(())
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// `n` distinct pronounceable pseudo-words that survive tokenization intact.
fn pseudo_words(n: usize, rng: &mut impl Rng) -> Vec<String> {
    let mut seen = HashSet::with_capacity(n);
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.gen_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
            w.push(*VOWELS.choose(rng).unwrap() as char);
            if rng.gen_bool(0.3) {
                w.push(*CONSONANTS.choose(rng).unwrap() as char);
            }
        }
        if is_stopword(&w) || !seen.insert(w.clone()) {
            continue;
        }
        words.push(w);
    }
    words
}

fn zipf(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / (r as f64).powf(s))).expect("non-empty")
}

struct Topic {
    heads: Vec<String>,
    synonyms: Vec<String>,
    others: Vec<String>,
}

struct Draft {
    topic: Option<usize>,
    mismatched: bool,
    tokens: Vec<String>,
}

/// Builds a collection. Output is fully determined by the spec.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthCollection> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut words = pseudo_words(spec.vocab_size, &mut rng).into_iter();
    let topics: Vec<Topic> = (0..spec.num_topics)
        .map(|_| {
            let core: Vec<String> = words.by_ref().take(spec.topic_terms).collect();
            let synonyms = words.by_ref().take(spec.head_terms).collect();
            let (heads, others) = core.split_at(spec.head_terms);
            Topic {
                heads: heads.to_vec(),
                synonyms,
                others: others.to_vec(),
            }
        })
        .collect();
    let background: Vec<String> = words.collect();
    let bg_dist = zipf(background.len(), 1.0);
    let core_dist = zipf(spec.topic_terms - spec.head_terms, 0.8);

    let mut drafts: Vec<Draft> = Vec::with_capacity(spec.num_docs);
    for (t, topic) in topics.iter().enumerate() {
        let count = spec.docs_per_topic.sample(&mut rng);
        for i in 0..count {
            // the first document of every topic stays lexically reachable
            let mismatched = i > 0 && rng.gen_bool(spec.mismatch_rate);
            let len = spec.doc_len.sample(&mut rng);
            let n_topical = ((len as f64 * spec.topical_fraction).round() as usize).max(1);
            let mut tokens: Vec<String> = (0..len - n_topical.min(len))
                .map(|_| background[bg_dist.sample(&mut rng)].clone())
                .collect();
            for _ in 0..n_topical {
                tokens.push(topic.others[core_dist.sample(&mut rng)].clone());
            }
            for (h, head) in topic.heads.iter().enumerate() {
                let present = h == 0 || rng.gen_bool(0.5);
                if !present {
                    continue;
                }
                let reps = rng.gen_range(1..=2);
                let word = if mismatched { &topic.synonyms[h] } else { head };
                tokens.extend(std::iter::repeat_n(word.clone(), reps));
            }
            tokens.shuffle(&mut rng);
            drafts.push(Draft {
                topic: Some(t),
                mismatched,
                tokens,
            });
        }
    }
    if drafts.len() > spec.num_docs {
        return Err(Error::Config(format!(
            "topics produced {} documents, more than num_docs={}",
            drafts.len(),
            spec.num_docs
        )));
    }
    while drafts.len() < spec.num_docs {
        let len = spec.doc_len.sample(&mut rng);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| background[bg_dist.sample(&mut rng)].clone())
            .collect();
        if rng.gen_bool(spec.stray_head_rate) {
            let topic = topics.choose(&mut rng).unwrap();
            tokens.push(topic.heads.choose(&mut rng).unwrap().clone());
        }
        if rng.gen_bool(spec.stray_core_rate) {
            let topic = topics.choose(&mut rng).unwrap();
            for _ in 0..rng.gen_range(1..=3) {
                tokens.push(topic.others[core_dist.sample(&mut rng)].clone());
            }
        }
        tokens.shuffle(&mut rng);
        drafts.push(Draft {
            topic: None,
            mismatched: false,
            tokens,
        });
    }
    // doc ids are assigned after shuffling so id order carries no relevance signal
    drafts.shuffle(&mut rng);
    let width = spec.num_docs.to_string().len().max(4);
    let doc_ids: Vec<String> = (0..drafts.len()).map(|i| format!("D{i:0width$}")).collect();

    let mut topic_order: Vec<usize> = (0..spec.num_topics).collect();
    topic_order.shuffle(&mut rng);
    let qwidth = spec.num_queries.to_string().len();
    let mut queries = Vec::with_capacity(spec.num_queries);
    let mut qrels = Qrels::new();
    let mut teacher_queries = BTreeMap::new();
    for q in 0..spec.num_queries {
        let qid = format!("Q{q:0qwidth$}");
        let t = topic_order[q % spec.num_topics];
        let topic = &topics[t];
        let terms = reachable_query_terms(spec, topic, t, &drafts, &mut rng)?;
        queries.push(Query::new(qid.clone(), terms.join(" ")));

        for (draft, doc_id) in drafts.iter().zip(&doc_ids) {
            if draft.topic == Some(t) {
                qrels.insert(qid.clone(), doc_id.clone(), if draft.mismatched { 3 } else { 2 });
            }
        }

        let mut weights = BTreeMap::new();
        for (head, syn) in topic.heads.iter().zip(&topic.synonyms) {
            let w: f64 = rng.gen_range(1.0..2.0);
            weights.insert(head.clone(), w);
            weights.insert(syn.clone(), w);
        }
        for other in &topic.others {
            weights.insert(other.clone(), rng.gen_range(0.2..1.0));
        }
        teacher_queries.insert(qid, weights);
    }

    let corpus = drafts
        .into_iter()
        .zip(doc_ids)
        .map(|(d, id)| Document::new(id, d.tokens.join(" ")))
        .collect();
    Ok(SynthCollection {
        corpus,
        queries,
        qrels,
        teacher: TeacherWeights {
            noise_sd: spec.noise_sd,
            seed: spec.seed,
            queries: teacher_queries,
        },
    })
}

const MAX_QUERY_ATTEMPTS: usize = 64;

/// Draws query terms (always including the topic's first head) and checks
/// that some judged-relevant document still contains one of them.
fn reachable_query_terms(
    spec: &SynthSpec,
    topic: &Topic,
    t: usize,
    drafts: &[Draft],
    rng: &mut impl Rng,
) -> Result<Vec<String>> {
    for _ in 0..MAX_QUERY_ATTEMPTS {
        let mut terms = vec![topic.heads[0].clone()];
        let rest: Vec<&String> = topic.heads[1..]
            .choose_multiple(rng, spec.query_terms - 1)
            .collect();
        terms.extend(rest.into_iter().cloned());
        let wanted: BTreeSet<String> = terms.iter().flat_map(|w| tokenize(w)).collect();
        let reachable = drafts
            .iter()
            .filter(|d| d.topic == Some(t))
            .any(|d| d.tokens.iter().any(|tok| wanted.contains(tok)));
        if reachable {
            return Ok(terms);
        }
    }
    Err(Error::Config(format!(
        "could not draw a lexically reachable query for topic {t}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthSpec {
        SynthSpec {
            num_docs: 300,
            vocab_size: 800,
            num_topics: 5,
            num_queries: 8,
            docs_per_topic: Range { min: 10, max: 20 },
            seed: 3,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        let other = generate_synthetic(&SynthSpec { seed: 4, ..small() }).unwrap();
        assert_ne!(a.corpus, other.corpus);
    }

    #[test]
    fn no_mismatch_means_every_relevant_doc_matches() {
        let spec = SynthSpec {
            mismatch_rate: 0.0,
            ..small()
        };
        let c = generate_synthetic(&spec).unwrap();
        let texts: BTreeMap<&str, BTreeSet<String>> = c
            .corpus
            .iter()
            .map(|d| (d.doc_id.as_str(), tokenize(&d.text).into_iter().collect()))
            .collect();
        for q in &c.queries {
            let qterms: BTreeSet<String> = tokenize(&q.text).into_iter().collect();
            for (doc, &g) in c.qrels.for_query(&q.id).unwrap() {
                assert_eq!(g, 2);
                assert!(!texts[doc.as_str()].is_disjoint(&qterms), "{} / {doc}", q.id);
            }
        }
    }

    #[test]
    fn full_mismatch_keeps_one_reachable_doc() {
        let spec = SynthSpec {
            mismatch_rate: 1.0,
            ..small()
        };
        let c = generate_synthetic(&spec).unwrap();
        for q in &c.queries {
            let qterms: BTreeSet<String> = tokenize(&q.text).into_iter().collect();
            let reachable = c
                .qrels
                .for_query(&q.id)
                .unwrap()
                .keys()
                .filter(|d| {
                    let doc = c.corpus.iter().find(|x| &x.doc_id == *d).unwrap();
                    tokenize(&doc.text).iter().any(|t| qterms.contains(t))
                })
                .count();
            assert!(reachable >= 1);
        }
    }

    #[test]
    fn sizes_and_grades() {
        let c = generate_synthetic(&small()).unwrap();
        assert_eq!(c.corpus.len(), 300);
        assert_eq!(c.queries.len(), 8);
        assert_eq!(c.teacher.queries.len(), 8);
        let grades: BTreeSet<u32> = c
            .queries
            .iter()
            .flat_map(|q| c.qrels.for_query(&q.id).unwrap().values().copied())
            .collect();
        assert_eq!(grades, BTreeSet::from([2, 3]));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate_synthetic(&SynthSpec { mismatch_rate: 1.5, ..small() }).is_err());
        assert!(generate_synthetic(&SynthSpec { vocab_size: 50, ..small() }).is_err());
        assert!(generate_synthetic(&SynthSpec { num_docs: 20, ..small() }).is_err());
    }
}
