//! Per-query metric reports over run files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::eval::{
    mean, ndcg_at, new_relevant_per_query, overlap_ratio, paired_t_test, rbo, recall_at,
    MetricConfig, Qrels, TTest,
};
use crate::error::Result;
use crate::types::RankedList;

pub type Run = BTreeMap<String, RankedList>;

#[derive(Debug, Clone, Default)]
pub struct EvalOptions<'a> {
    pub metrics: MetricConfig,
    /// Exhaustive teacher ranking for RBO.
    pub reference: Option<&'a Run>,
    /// First-stage run for overlap and newly found relevant documents.
    pub first_stage: Option<&'a Run>,
    /// Second system for paired significance tests.
    pub compare: Option<&'a Run>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    /// metric → query_id → value
    pub per_query: BTreeMap<String, BTreeMap<String, f64>>,
    /// Queries in the run without judgements.
    pub skipped: Vec<String>,
    /// metric → run vs compare
    pub t_tests: BTreeMap<String, TTest>,
}

impl EvalReport {
    fn put(&mut self, metric: &str, qid: &str, value: f64) {
        self.per_query
            .entry(metric.to_string())
            .or_default()
            .insert(qid.to_string(), value);
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        let values: Vec<f64> = self.per_query.get(metric)?.values().copied().collect();
        mean(&values)
    }

    pub fn value(&self, metric: &str, qid: &str) -> Option<f64> {
        self.per_query.get(metric)?.get(qid).copied()
    }

    /// `{"metric": {"query_id": value, ..., "mean": value}}`, plus a
    /// `paired_t_test` object when a comparison run was given.
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        for (metric, values) in &self.per_query {
            let mut m: Map<String, Value> = values.iter().map(|(q, v)| (q.clone(), json!(v))).collect();
            if let Some(avg) = self.mean(metric) {
                m.insert("mean".into(), json!(avg));
            }
            root.insert(metric.clone(), Value::Object(m));
        }
        if !self.t_tests.is_empty() {
            root.insert("paired_t_test".into(), json!(self.t_tests));
        }
        Value::Object(root)
    }

    pub fn to_table(&self) -> String {
        let metrics: Vec<&String> = self.per_query.keys().collect();
        let mut qids: Vec<&String> = self.per_query.values().flat_map(|m| m.keys()).collect();
        qids.sort();
        qids.dedup();
        let qwidth = qids.iter().map(|q| q.len()).max().unwrap_or(0).max("query".len());
        let widths: Vec<usize> = metrics.iter().map(|m| m.len().max(8)).collect();

        let mut out = String::new();
        let _ = write!(out, "{:<qwidth$}", "query");
        for (m, w) in metrics.iter().zip(&widths) {
            let _ = write!(out, "  {m:>w$}");
        }
        out.push('\n');
        let cell = |v: Option<f64>, w: usize| match v {
            Some(v) => format!("  {v:>w$.4}"),
            None => format!("  {:>w$}", "-"),
        };
        for q in &qids {
            let _ = write!(out, "{q:<qwidth$}");
            for (m, &w) in metrics.iter().zip(&widths) {
                out.push_str(&cell(self.value(m, q), w));
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<qwidth$}", "mean");
        for (m, &w) in metrics.iter().zip(&widths) {
            out.push_str(&cell(self.mean(m), w));
        }
        out.push('\n');
        for (metric, t) in &self.t_tests {
            let _ = writeln!(
                out,
                "paired t-test {metric}: n={} mean_diff={:+.4} t={} p={:.4}",
                t.n,
                t.mean_diff,
                t.t.map_or("degenerate".to_string(), |t| format!("{t:.3}")),
                t.p_value
            );
        }
        out
    }
}

fn ids(list: &RankedList) -> Vec<&str> {
    list.doc_ids()
}

/// Computes nDCG@k and R@k for every judged query in `run`, plus the
/// optional reference, first-stage and comparison measures.
pub fn evaluate_run(run: &Run, qrels: &Qrels, options: &EvalOptions<'_>) -> Result<EvalReport> {
    let m = &options.metrics;
    let ndcg_name = format!("ndcg@{}", m.k);
    let recall_name = format!("recall@{}", m.k);
    let mut report = EvalReport::default();
    let mut other = EvalReport::default();

    for (qid, list) in run {
        if !qrels.contains_query(qid) {
            log::warn!("query `{qid}` has no judgements; skipped");
            report.skipped.push(qid.clone());
            continue;
        }
        if let Some(v) = ndcg_at(list, qrels, m.k) {
            report.put(&ndcg_name, qid, v);
        }
        if let Some(v) = recall_at(list, qrels, m.k, m.min_rel) {
            report.put(&recall_name, qid, v);
        }
        if let Some(reference) = options.reference.and_then(|r| r.get(qid)) {
            if !list.is_empty() && !reference.is_empty() {
                report.put("rbo", qid, rbo(&ids(list), &ids(reference), m.rbo_p)?);
            }
        }
        if let Some(first) = options.first_stage.and_then(|r| r.get(qid)) {
            if !list.is_empty() {
                report.put("overlap", qid, overlap_ratio(&ids(list), &ids(first))?);
            }
            let new_rel = new_relevant_per_query(first, list, qrels, m.min_rel)?;
            report.put("new_rel", qid, new_rel as f64);
        }
        if let Some(cmp) = options.compare {
            let empty = RankedList::empty(qid.clone());
            let cmp_list = cmp.get(qid).unwrap_or(&empty);
            if let Some(v) = ndcg_at(cmp_list, qrels, m.k) {
                other.put(&ndcg_name, qid, v);
            }
            if let Some(v) = recall_at(cmp_list, qrels, m.k, m.min_rel) {
                other.put(&recall_name, qid, v);
            }
        }
    }

    if options.compare.is_some() {
        for metric in [&ndcg_name, &recall_name] {
            let (Some(a), Some(b)) = (report.per_query.get(metric), other.per_query.get(metric)) else {
                continue;
            };
            let (xs, ys): (Vec<f64>, Vec<f64>) = a
                .iter()
                .filter_map(|(q, &x)| b.get(q).map(|&y| (x, y)))
                .unzip();
            if let Some(t) = paired_t_test(&xs, &ys) {
                report.t_tests.insert(metric.clone(), t);
            }
        }
    }
    Ok(report)
}
