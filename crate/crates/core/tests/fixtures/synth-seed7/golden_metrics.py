"""Reference metrics for bm25.run, written independently of the Rust code.

Also re-derives the BM25 top 100 from corpus.jsonl and checks it against the
run file. Usage: python3 golden_metrics.py > golden_metrics.json
"""
import json
import math
import re
import sys
from collections import Counter, defaultdict
from pathlib import Path

HERE = Path(__file__).parent
STOP = set("""a about above after again against all am an and any are as at be because been
before being below between both but by can could did do does doing down during each few for
from further had has have having he her here hers herself him himself his how i if in into is
it its itself just me more most my myself no nor not now of off on once only or other our ours
ourselves out over own same she should so some such than that the their theirs them themselves
then there these they this those through to too under until up very was we were what when where
which while who whom why will with would you your yours yourself yourselves""".split())


def tokens(text):
    return [t for t in re.split(r"[^0-9a-z]+", text.lower()) if t and t not in STOP]


def bm25_check(run):
    docs = [json.loads(l) for l in (HERE / "corpus.jsonl").read_text().splitlines() if l]
    tfs = {d["doc_id"]: Counter(tokens(d["text"])) for d in docs}
    n = len(docs)
    avgdl = sum(sum(c.values()) for c in tfs.values()) / n
    df = Counter(t for c in tfs.values() for t in c)
    for line in (HERE / "queries.tsv").read_text().splitlines():
        qid, text = line.split("\t")
        q = Counter(tokens(text))
        scores = {}
        for d, c in tfs.items():
            dl = sum(c.values())
            s = 0.0
            for t, w in q.items():
                if t in c:
                    idf = math.log((n - df[t] + 0.5) / (df[t] + 0.5) + 1)
                    s += w * idf * c[t] * 2.2 / (c[t] + 1.2 * (0.25 + 0.75 * dl / avgdl))
            if s > 0:
                scores[d] = s
        top = sorted(scores.items(), key=lambda x: (-x[1], x[0]))[:100]
        got = run[qid]
        assert [d for d, _ in top] == [d for d, _ in got], qid
        for (_, a), (_, b) in zip(top, got):
            assert abs(a - b) <= 1e-8 * max(1.0, abs(a)), (qid, a, b)


def ndcg(ranked, grades, k):
    dcg = sum((2 ** grades.get(d, 0) - 1) / math.log2(i + 2) for i, d in enumerate(ranked[:k]))
    ideal = sorted(grades.values(), reverse=True)[:k]
    idcg = sum((2 ** g - 1) / math.log2(i + 2) for i, g in enumerate(ideal))
    return dcg / idcg


def recall(ranked, grades, k, min_rel):
    rel = {d for d, g in grades.items() if g >= min_rel}
    return len(rel & set(ranked[:k])) / len(rel)


def main():
    grades = defaultdict(dict)
    for line in (HERE / "qrels.txt").read_text().splitlines():
        qid, _, doc, g = line.split()
        grades[qid][doc] = int(g)
    rows = defaultdict(list)
    for line in (HERE / "bm25.run").read_text().splitlines():
        qid, _, doc, rank, score, _ = line.split()
        rows[qid].append((int(rank), doc, float(score)))
    run = {q: [(d, s) for _, d, s in sorted(r)] for q, r in rows.items()}
    bm25_check(run)
    out = {"ndcg@10": {}, "ndcg@1000": {}, "recall@100": {}}
    for qid, lst in sorted(run.items()):
        ids = [d for d, _ in lst]
        out["ndcg@10"][qid] = ndcg(ids, grades[qid], 10)
        out["ndcg@1000"][qid] = ndcg(ids, grades[qid], 1000)
        out["recall@100"][qid] = recall(ids, grades[qid], 100, 2)
    for m in out.values():
        m["mean"] = sum(m.values()) / len(m)
    json.dump(out, sys.stdout, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
