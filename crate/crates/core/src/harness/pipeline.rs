//! Budgeted retrieve → re-rank → feedback → retrieve → re-rank pipelines.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trec::Query;
use crate::distill::{merge_query, sparsify, train_odis, Features, QueryModelRecord, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{rbo, Qrels};
use crate::index::Index;
use crate::prf::{bo1_expand, rm3_expand, rrf_fuse, PrfConfig, DEFAULT_RRF_K};
use crate::scoring::{rerank, QrelsOracleTeacher, RemoteTeacher, ScoreBudget, Scorer, TeacherWeights};
use crate::types::{RankedList, SparseQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain re-ranking of the first stage.
    #[default]
    None,
    Odis,
    Rm3,
    Bo1,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::None => "none",
            Method::Odis => "odis",
            Method::Rm3 => "rm3",
            Method::Bo1 => "bo1",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Method::None),
            "odis" => Ok(Method::Odis),
            "rm3" => Ok(Method::Rm3),
            "bo1" => Ok(Method::Bo1),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Optional reciprocal rank fusion of BM25 with TF-IDF retrieval of the raw
/// query as the first stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub enabled: bool,
    pub k: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            k: DEFAULT_RRF_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub method: Method,
    pub first_stage_k: usize,
    pub total_budget: usize,
    pub output_depth: usize,
    /// Weight of feedback terms against the original query.
    pub lambda: f64,
    /// Distillation sparsity target and PRF expansion size.
    pub fb_terms: usize,
    pub fb_docs: usize,
    pub fusion: FusionConfig,
    /// Optimiser settings; `sparsity_target` and `seed` are taken from
    /// `fb_terms` and `seed` at run time.
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::None,
            first_stage_k: 500,
            total_budget: 1000,
            output_depth: 1000,
            lambda: 0.5,
            fb_terms: 50,
            fb_docs: 10,
            fusion: FusionConfig::default(),
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.first_stage_k == 0 || self.total_budget == 0 || self.output_depth == 0 {
            return Err(Error::Config(
                "first_stage_k, total_budget and output_depth must be positive".into(),
            ));
        }
        if self.first_stage_k > self.total_budget {
            return Err(Error::Config(format!(
                "first_stage_k ({}) exceeds total_budget ({})",
                self.first_stage_k, self.total_budget
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidLambda(self.lambda));
        }
        self.prf_config().validate()?;
        self.train_config().validate()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            sparsity_target: self.fb_terms,
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn prf_config(&self) -> PrfConfig {
        PrfConfig {
            fb_docs: self.fb_docs,
            fb_terms: self.fb_terms,
            lambda: self.lambda,
        }
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub cap: usize,
    pub used: usize,
    pub first_stage_scored: usize,
    pub second_stage_scored: usize,
    /// Second stage scored more than `total_budget − first_stage_k` documents.
    pub reallocated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub first_stage_ms: f64,
    pub first_rerank_ms: f64,
    pub feedback_ms: f64,
    pub second_stage_ms: f64,
    pub second_rerank_ms: f64,
    pub total_ms: f64,
}

/// Everything a pipeline saw for one query.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub query_id: String,
    pub method: Method,
    pub first_stage: Vec<String>,
    pub first_reranked: Option<RankedList>,
    /// Feedback model: distilled student or PRF expansion terms.
    pub feedback_model: Option<QueryModelRecord>,
    pub feedback_terms: usize,
    pub executed_query: Option<SparseQuery>,
    /// RBO of the student's ordering of the first stage against the teacher's.
    pub student_rerank_rbo: Option<f64>,
    pub second_stage: Vec<String>,
    pub second_reranked: Option<RankedList>,
    pub budget: BudgetLedger,
    pub flags: Vec<String>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub final_ranking: RankedList,
    pub diagnostics: Diagnostics,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Orders `candidates` by a sparse query's TF-IDF score; unmatched docs score 0.
pub fn student_rerank(index: &Index, student: &SparseQuery, candidates: &RankedList) -> Result<RankedList> {
    let mut scored = Vec::with_capacity(candidates.len());
    for e in candidates {
        let features = index.tfidf_vector(&e.doc_id)?;
        let s: f64 = student
            .iter()
            .map(|(t, w)| features.get(t).map_or(0.0, |v| w * v))
            .sum();
        scored.push((e.doc_id.clone(), s));
    }
    RankedList::from_scores(candidates.query_id.clone(), scored)
}

fn first_stage(index: &Index, query: &Query, original: &SparseQuery, config: &PipelineConfig) -> Result<RankedList> {
    let bm25 = index.bm25_retrieve(&query.id, original, config.first_stage_k)?;
    if !config.fusion.enabled {
        return Ok(bm25);
    }
    let tfidf = index.execute_sparse_query(&query.id, original, config.first_stage_k)?;
    if bm25.is_empty() || tfidf.is_empty() {
        return Ok(if bm25.is_empty() { tfidf } else { bm25 });
    }
    rrf_fuse(&[bm25, tfidf], config.fusion.k, config.first_stage_k)
}

enum Feedback {
    Query(SparseQuery),
    Degraded(&'static str),
}

/// Runs one query end to end with the configured feedback method.
///
/// The final list holds exactly the documents the teacher scored for this
/// query, ordered by teacher score. Budget accounting is shared between both
/// re-ranking passes, so documents retrieved twice are scored once.
pub fn run_pipeline<S: Scorer + ?Sized>(
    index: &Index,
    query: &Query,
    teacher: &S,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let started = Instant::now();
    let mut diag = Diagnostics {
        query_id: query.id.clone(),
        method: config.method,
        ..Diagnostics::default()
    };
    let mut budget = ScoreBudget::new(config.total_budget);

    let original = match SparseQuery::from_text(&query.text) {
        Ok(q) => q,
        Err(Error::EmptyQuery) => {
            diag.flags.push("empty_query".into());
            return Ok(finish(query, budget, diag, config, started));
        }
        Err(e) => return Err(e),
    };

    let t = Instant::now();
    let stage1 = first_stage(index, query, &original, config)?;
    diag.timings.first_stage_ms = ms(t);
    diag.first_stage = stage1.doc_ids().iter().map(|s| s.to_string()).collect();
    if stage1.is_empty() {
        diag.flags.push("empty_first_stage".into());
        return Ok(finish(query, budget, diag, config, started));
    }

    let t = Instant::now();
    let reranked = rerank(teacher, index, &query.text, &stage1, &mut budget)?;
    diag.timings.first_rerank_ms = ms(t);
    diag.budget.first_stage_scored = budget.used();
    let Some(reranked) = reranked else {
        diag.flags.push("budget_exhausted".into());
        return Ok(finish(query, budget, diag, config, started));
    };
    diag.first_reranked = Some(reranked.clone());

    if config.method == Method::None {
        return Ok(finish(query, budget, diag, config, started));
    }

    let t = Instant::now();
    let feedback = match config.method {
        Method::Odis => distil(index, &query.id, &original, &stage1, &reranked, config, &mut diag)?,
        Method::Rm3 | Method::Bo1 => {
            let prf = config.prf_config();
            let expansion = if config.method == Method::Rm3 {
                rm3_expand(index, &reranked, &prf, &original)?
            } else {
                bo1_expand(index, &reranked, &prf, &original)?
            };
            if let Some(e) = &expansion.expansion {
                diag.feedback_terms = e.len();
                diag.feedback_model = Some(QueryModelRecord::expanded(
                    &query.id,
                    &config.method.to_string(),
                    e,
                    config.lambda,
                ));
            } else {
                diag.flags.push("empty_expansion".into());
            }
            Feedback::Query(expansion.query)
        }
        Method::None => unreachable!(),
    };
    diag.timings.feedback_ms = ms(t);

    let executed = match feedback {
        Feedback::Query(q) => q,
        Feedback::Degraded(flag) => {
            diag.flags.push(flag.into());
            return Ok(finish(query, budget, diag, config, started));
        }
    };

    let depth = (config.total_budget - config.first_stage_k + stage1.len()).max(1);
    let t = Instant::now();
    let stage2 = if config.method == Method::Odis {
        index.execute_sparse_query(&query.id, &executed, depth)?
    } else {
        index.bm25_retrieve(&query.id, &executed, depth)?
    };
    diag.timings.second_stage_ms = ms(t);
    diag.executed_query = Some(executed);
    diag.second_stage = stage2.doc_ids().iter().map(|s| s.to_string()).collect();

    if !stage2.is_empty() {
        let before = budget.used();
        let t = Instant::now();
        diag.second_reranked = rerank(teacher, index, &query.text, &stage2, &mut budget)?;
        diag.timings.second_rerank_ms = ms(t);
        diag.budget.second_stage_scored = budget.used() - before;
        diag.budget.reallocated =
            diag.budget.second_stage_scored > config.total_budget - config.first_stage_k;
    }
    Ok(finish(query, budget, diag, config, started))
}

fn distil(
    index: &Index,
    query_id: &str,
    original: &SparseQuery,
    stage1: &RankedList,
    reranked: &RankedList,
    config: &PipelineConfig,
    diag: &mut Diagnostics,
) -> Result<Feedback> {
    if reranked.len() < 2 {
        return Ok(Feedback::Degraded("too_few_docs_to_distil"));
    }
    let mut features = Features::with_capacity(stage1.len());
    for e in stage1 {
        features.insert(e.doc_id.clone(), index.tfidf_vector(&e.doc_id)?);
    }
    let train = config.train_config();
    let model = train_odis(&features, reranked, Some(original), &train)?;
    if !model.converged {
        diag.flags.push("max_epochs_reached".into());
    }
    let Some(student) = sparsify(&model, train.sparsity_target, train.nonzero_threshold) else {
        return Ok(Feedback::Degraded("empty_student"));
    };
    diag.feedback_terms = student.len();
    diag.feedback_model = Some(QueryModelRecord::distilled(query_id, &model, &student, config.lambda));
    let student_order = student_rerank(index, &student, reranked)?;
    diag.student_rerank_rbo = Some(rbo(&student_order.doc_ids(), &reranked.doc_ids(), 0.99)?);
    Ok(Feedback::Query(merge_query(original, &student, config.lambda)?))
}

fn finish(
    query: &Query,
    budget: ScoreBudget,
    mut diag: Diagnostics,
    config: &PipelineConfig,
    started: Instant,
) -> PipelineOutput {
    diag.budget.cap = budget.cap();
    diag.budget.used = budget.used();
    let final_ranking = budget.ranking(&query.id).truncated(config.output_depth);
    diag.timings.total_ms = ms(started);
    PipelineOutput {
        final_ranking,
        diagnostics: diag,
    }
}

/// Where per-query teachers come from.
#[derive(Debug, Clone)]
pub enum TeacherSource {
    HiddenLinear(TeacherWeights),
    QrelsOracle { qrels: Qrels, seed: u64 },
    Remote(RemoteTeacher),
}

impl TeacherSource {
    pub fn teacher_for<'a>(&'a self, query: &Query, index: &Index) -> Result<Box<dyn Scorer + 'a>> {
        match self {
            TeacherSource::HiddenLinear(w) => w
                .teacher_for(&query.id, index)
                .map(|t| Box::new(t) as Box<dyn Scorer>)
                .ok_or_else(|| Error::Config(format!("no teacher weights for query `{}`", query.id))),
            TeacherSource::QrelsOracle { qrels, seed } => {
                let grades = qrels
                    .for_query(&query.id)
                    .map(|g| g.iter().map(|(d, &v)| (d.clone(), v)).collect())
                    .unwrap_or_default();
                Ok(Box::new(QrelsOracleTeacher::new(grades, *seed)))
            }
            TeacherSource::Remote(r) => Ok(Box::new(r)),
        }
    }
}

/// Runs every query (in parallel) and returns outputs in input order.
pub fn run_queries(
    index: &Index,
    queries: &[Query],
    teachers: &TeacherSource,
    config: &PipelineConfig,
) -> Result<Vec<PipelineOutput>> {
    config.validate()?;
    queries
        .par_iter()
        .map(|q| {
            let teacher = teachers.teacher_for(q, index)?;
            run_pipeline(index, q, &teacher, config)
        })
        .collect()
}

/// [`run_pipeline`] with online distillation as the feedback step.
pub fn run_odis_pipeline<S: Scorer + ?Sized>(
    index: &Index,
    query: &Query,
    teacher: &S,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    let config = PipelineConfig {
        method: Method::Odis,
        ..config.clone()
    };
    run_pipeline(index, query, teacher, &config)
}

/// [`run_pipeline`] with a lexical PRF baseline, or plain re-ranking for
/// [`Method::None`].
pub fn run_baseline_pipeline<S: Scorer + ?Sized>(
    index: &Index,
    query: &Query,
    teacher: &S,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    if config.method == Method::Odis {
        return Err(Error::Config("baseline pipeline needs method none, rm3 or bo1".into()));
    }
    run_pipeline(index, query, teacher, config)
}
