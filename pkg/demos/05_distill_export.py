"""
Exporting a distillation training set
=====================================

Each query that yields at least one judged-relevant document produces a
training record: the query text plus its refined embedding as the target
vector. Queries whose feedback round comes back empty are dropped, so a
student encoder only ever trains on grounded targets.
"""

import json
import tempfile

from rede import (
    OracleJudge,
    PipelineConfig,
    SearchEngine,
    build_dense_index,
    build_sparse_index,
    export_distill_dataset,
    generate_benchmark,
)

bench = generate_benchmark(seed=12, n_queries=8)
# sabotage two queries: no relevant documents anywhere -> no training record
for query in bench.queries[:2]:
    bench.qrels[query.query_id] = {}

engine = SearchEngine(
    bench.corpus,
    build_sparse_index(bench.corpus),
    build_dense_index(bench.doc_ids, bench.doc_vectors),
    bench.encoder,
    judge=OracleJudge(bench.qrels),
    config=PipelineConfig(k_initial=20, output_depth=100),
)

with tempfile.NamedTemporaryFile(mode="r", suffix=".jsonl") as f:
    written = export_distill_dataset(engine, bench.queries, f.name)
    records = [json.loads(line) for line in f.read().splitlines()]

print(f"{written} records exported from {len(bench.queries)} queries "
      f"({len(bench.queries) - written} had empty feedback)")
for record in records[:3]:
    head = ", ".join(f"{x:.3f}" for x in record["target"][:4])
    print(f"  {record['query_id']}: '{record['text']}' -> target[{head}, ...]")
