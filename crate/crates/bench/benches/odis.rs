use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use odis::distill::{train_odis, Features, TrainConfig};
use odis::eval::rbo;
use odis::harness::{generate_synthetic, SynthCollection, SynthSpec};
use odis::index::Index;
use odis::scoring::rerank;
use odis::scoring::ScoreBudget;
use odis::{Provenance, SparseQuery};

fn collection() -> (SynthCollection, Index) {
    let coll = generate_synthetic(&SynthSpec::default()).expect("default spec is valid");
    let index = Index::build(coll.corpus.clone()).expect("non-empty corpus");
    (coll, index)
}

fn retrieval(c: &mut Criterion) {
    let (coll, index) = collection();
    let q = &coll.queries[0];
    let query = SparseQuery::from_text(&q.text).unwrap();
    c.bench_function("bm25_top1000", |b| {
        b.iter(|| index.bm25_retrieve(&q.id, black_box(&query), 1000).unwrap())
    });

    // a student-sized query: the top terms of the first three hits
    let mut terms = std::collections::BTreeMap::new();
    for e in index.bm25_retrieve(&q.id, &query, 3).unwrap().entries() {
        for (t, w) in index.tfidf_vector(&e.doc_id).unwrap().into_iter().take(20) {
            *terms.entry(t).or_insert(0.0) += w;
        }
    }
    let weighted = SparseQuery::from_positive(terms, Provenance::Distilled).unwrap();
    c.bench_function("sparse_query_top1000", |b| {
        b.iter(|| index.execute_sparse_query(&q.id, black_box(&weighted), 1000).unwrap())
    });
}

fn distillation(c: &mut Criterion) {
    let (coll, index) = collection();
    let q = &coll.queries[0];
    let query = SparseQuery::from_text(&q.text).unwrap();
    let teacher = coll.teacher.teacher_for(&q.id, &index).unwrap();
    let first = index.bm25_retrieve(&q.id, &query, 100).unwrap();
    let mut budget = ScoreBudget::new(100);
    let ranked = rerank(&teacher, &index, &q.text, &first, &mut budget).unwrap().unwrap();
    let features: Features = ranked
        .entries()
        .iter()
        .map(|e| (e.doc_id.clone(), index.tfidf_vector(&e.doc_id).unwrap()))
        .collect();
    let config = TrainConfig::default();

    let mut group = c.benchmark_group("distill");
    group.sample_size(10);
    group.bench_function("train_odis_100docs", |b| {
        b.iter(|| train_odis(black_box(&features), &ranked, Some(&query), &config).unwrap())
    });
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let a: Vec<String> = (0..1000).map(|i| format!("d{i}")).collect();
    let mut b_list = a.clone();
    b_list.reverse();
    c.bench_function("rbo_1000", |b| b.iter(|| rbo(black_box(&a), black_box(&b_list), 0.99).unwrap()));
}

criterion_group!(benches, retrieval, distillation, metrics);
criterion_main!(benches);
