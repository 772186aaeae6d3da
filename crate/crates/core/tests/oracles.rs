mod common;

use std::collections::BTreeMap;

use common::*;
use odis::distill::{distill_loss, loss_gradient, DistilledModel, LossVariant};
use odis::index::Index;
use odis::{Provenance, SparseQuery};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_query<R: Rng>(rng: &mut R, vocab: usize) -> BTreeMap<String, f64> {
    (0..rng.gen_range(1..5))
        .map(|_| (format!("w{}", rng.gen_range(0..vocab + 3)), rng.gen_range(0.1..3.0)))
        .collect()
}

fn assert_same_ranking(got: &odis::RankedList, want: &[(String, f64)], k: usize) {
    let want = &want[..want.len().min(k)];
    assert_eq!(got.len(), want.len());
    for (e, (d, s)) in got.iter().zip(want) {
        assert_eq!(&e.doc_id, d);
        assert!((e.score - s).abs() < 1e-9 * s.abs().max(1.0), "{} vs {}", e.score, s);
    }
}

#[test]
fn bm25_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..40 {
        let n = rng.gen_range(1..100);
        let docs = random_corpus(&mut rng, n, 30, 25);
        let index = Index::build(docs.clone()).unwrap();
        let q = random_query(&mut rng, 30);
        let k = rng.gen_range(1..120);
        let query = SparseQuery::new(q.clone(), Provenance::Original).unwrap();
        let got = index.bm25_retrieve("q", &query, k).unwrap();
        assert_same_ranking(&got, &bm25_oracle(&docs, &q), k);
    }
}

#[test]
fn sparse_execution_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..40 {
        let n = rng.gen_range(1..100);
        let docs = random_corpus(&mut rng, n, 30, 25);
        let index = Index::build(docs.clone()).unwrap();
        let q = random_query(&mut rng, 30);
        let k = rng.gen_range(1..120);
        let query = SparseQuery::new(q.clone(), Provenance::Distilled).unwrap();
        let got = index.execute_sparse_query("q", &query, k).unwrap();
        assert_same_ranking(&got, &tfidf_oracle(&docs, &q), k);
    }
}

#[test]
fn index_statistics_match_raw_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let docs = random_corpus(&mut rng, 60, 20, 30);
    let index = Index::build(docs.clone()).unwrap();
    for d in &docs {
        let tfs = odis::index::term_frequencies(&d.text);
        assert_eq!(index.doc_len(&d.doc_id), Some(tfs.values().sum()));
        for (t, &tf) in &tfs {
            assert_eq!(index.tf(&d.doc_id, t), tf);
        }
    }
    for t in index.vocab() {
        let df = docs
            .iter()
            .filter(|d| odis::index::term_frequencies(&d.text).contains_key(t))
            .count();
        assert_eq!(index.df(t), df);
    }
}

fn random_theta<R: Rng>(rng: &mut R, num_terms: usize) -> BTreeMap<String, f64> {
    (0..num_terms)
        .map(|i| {
            // keep clear of the kinks at 0
            let mag = rng.gen_range(0.01..1.0);
            let sign = if rng.gen_bool(0.7) { 1.0 } else { -1.0 };
            (format!("t{i:03}"), sign * mag)
        })
        .collect()
}

#[test]
fn loss_matches_direct_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (n, variant) in [(15, LossVariant::Linear), (15, LossVariant::Softplus), (230, LossVariant::Softplus)] {
        let ids = random_list(&mut rng, n, n);
        let features = random_features(&mut rng, &ids, 40, 6);
        let theta = random_theta(&mut rng, 40);
        let model = DistilledModel::from_theta(theta.clone());
        let ranking = ranked("q", &ids);
        let got = distill_loss(&model, &features, &ranking, variant, 0.5).unwrap().total();
        let want = loss_oracle(&theta, &features, &ids, variant == LossVariant::Softplus, 0.5);
        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{variant}: {got} vs {want}");
    }
}

#[test]
fn gradient_matches_finite_differences_of_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ids = random_list(&mut rng, 12, 12);
    let features = random_features(&mut rng, &ids, 10, 4);
    let theta = random_theta(&mut rng, 10);
    let model = DistilledModel::from_theta(theta.clone());
    let ranking = ranked("q", &ids);
    for variant in [LossVariant::Linear, LossVariant::Softplus] {
        let sp = variant == LossVariant::Softplus;
        let grad = loss_gradient(&model, &features, &ranking, variant, 0.3).unwrap();
        for t in theta.keys() {
            let h = 1e-6;
            let mut up = theta.clone();
            *up.get_mut(t).unwrap() += h;
            let mut down = theta.clone();
            *down.get_mut(t).unwrap() -= h;
            let fd = (loss_oracle(&up, &features, &ids, sp, 0.3) - loss_oracle(&down, &features, &ids, sp, 0.3)) / (2.0 * h);
            let g = grad.get(t).copied().unwrap_or(0.0);
            assert!((g - fd).abs() < 1e-6 * fd.abs().max(1.0), "{variant} {t}: {g} vs {fd}");
        }
    }
}
