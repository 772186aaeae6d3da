//! TREC-style file formats: run files, TSV query files and JSON-lines corpora.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Document, RankedList};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads `query_id<TAB>text` lines.
pub fn read_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut queries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, body) = line
            .split_once('\t')
            .ok_or_else(|| parse_error(path, i + 1, "expected query_id<TAB>text"))?;
        queries.push(Query::new(id.trim(), body.trim()));
    }
    Ok(queries)
}

pub fn format_queries(queries: &[Query]) -> String {
    queries
        .iter()
        .map(|q| format!("{}\t{}\n", q.id, q.text))
        .collect()
}

/// Reads a JSON-lines corpus of `{"doc_id", "text"}` objects.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn format_corpus(docs: &[Document]) -> Result<String> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d)?);
        out.push('\n');
    }
    Ok(out)
}

/// `query_id Q0 doc_id rank score tag`, score with 10 significant digits.
pub fn format_run<'a>(lists: impl IntoIterator<Item = &'a RankedList>, tag: &str) -> String {
    let mut out = String::new();
    for list in lists {
        for e in list {
            let _ = writeln!(
                out,
                "{} Q0 {} {} {:.9e} {}",
                list.query_id,
                e.doc_id,
                e.rank,
                e.score + 0.0, // -0 prints as 0
                tag
            );
        }
    }
    out
}

pub fn write_run<'a>(
    path: impl AsRef<Path>,
    lists: impl IntoIterator<Item = &'a RankedList>,
    tag: &str,
) -> Result<()> {
    fs::write(path, format_run(lists, tag))?;
    Ok(())
}

/// Parses a run file into per-query rankings ordered by the rank column.
pub fn parse_run(text: &str, origin: &Path) -> Result<BTreeMap<String, RankedList>> {
    let mut rows: BTreeMap<String, Vec<(usize, String, f64)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(parse_error(origin, i + 1, format!("expected 6 fields, got {}", f.len())));
        }
        let rank: usize = f[3]
            .parse()
            .map_err(|_| parse_error(origin, i + 1, format!("bad rank `{}`", f[3])))?;
        let score: f64 = f[4]
            .parse()
            .map_err(|_| parse_error(origin, i + 1, format!("bad score `{}`", f[4])))?;
        rows.entry(f[0].to_string())
            .or_default()
            .push((rank, f[2].to_string(), score));
    }
    rows.into_iter()
        .map(|(qid, mut r)| {
            r.sort_by_key(|row| row.0);
            let list = RankedList::from_ordered(
                qid.clone(),
                r.into_iter().map(|(_, d, s)| (d, s)).collect(),
            )
            .map_err(|e| parse_error(origin, 0, format!("query {qid}: {e}")))?;
            Ok((qid, list))
        })
        .collect()
}

pub fn read_run(path: impl AsRef<Path>) -> Result<BTreeMap<String, RankedList>> {
    let path = path.as_ref();
    parse_run(&fs::read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_round_trip() {
        let a = RankedList::from_scores("q1", vec![("d1".into(), 0.5), ("d2".into(), 1.25e-7)]).unwrap();
        let b = RankedList::from_scores("q2", vec![("d3".into(), -3.0)]).unwrap();
        let text = format_run([&a, &b], "tag");
        assert!(text.starts_with("q1 Q0 d1 1 5.000000000e-1 tag\n"));
        let parsed = parse_run(&text, Path::new("run")).unwrap();
        assert_eq!(parsed["q1"], a);
        assert_eq!(parsed["q2"], b);
    }

    #[test]
    fn negative_zero_prints_as_zero() {
        let a = RankedList::from_scores("q", vec![("d".into(), -0.0)]).unwrap();
        assert_eq!(format_run([&a], "t"), "q Q0 d 1 0.000000000e0 t\n");
    }

    #[test]
    fn malformed_run_line() {
        let err = parse_run("q1 Q0 d1 x 1.0 t\n", Path::new("run")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn queries_and_corpus_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let qs = vec![Query::new("1", "hello world"), Query::new("2", "x")];
        let qpath = dir.path().join("q.tsv");
        fs::write(&qpath, format_queries(&qs)).unwrap();
        assert_eq!(read_queries(&qpath).unwrap(), qs);

        let docs = vec![Document::new("a", "some \"quoted\" text"), Document::new("b", "")];
        let cpath = dir.path().join("c.jsonl");
        fs::write(&cpath, format_corpus(&docs).unwrap()).unwrap();
        assert_eq!(read_corpus(&cpath).unwrap(), docs);
    }
}
