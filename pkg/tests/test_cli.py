import json

import pytest

from rede.cli import run_command
from rede.config import GATEWAY_URL_ENV, load_run_config
from rede.corpus import read_run_file
from rede.sparse import load_sparse_index

DOCS = [
    ("d1", "apple banana fruit market"),
    ("d2", "apple orchard harvest season"),
    ("d3", "banana plantation tropical fruit"),
    ("d4", "stock market trading floor"),
    ("d5", "orbital mechanics satellite launch"),
    ("d6", "satellite dish antenna signal"),
    ("d7", "fruit salad recipe kitchen"),
    ("d8", "trading algorithms market signal"),
]
QUERIES = [("q1", "apple banana"), ("q2", "satellite launch"), ("q3", "market trading")]
QRELS = {"q1": ["d1", "d2", "d3", "d7"], "q2": ["d5", "d6"], "q3": ["d4", "d8"]}


@pytest.fixture
def workspace(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text(
        "\n".join(json.dumps({"_id": d, "title": "", "text": t}) for d, t in DOCS) + "\n"
    )
    queries = tmp_path / "queries.tsv"
    queries.write_text("".join(f"{q}\t{t}\n" for q, t in QUERIES))
    qrels = tmp_path / "qrels.txt"
    qrels.write_text(
        "".join(f"{q} 0 {d} 1\n" for q, docs in QRELS.items() for d in docs)
    )
    script = tmp_path / "mock_script.json"
    script.write_text(json.dumps([
        {"match_substring": 'Output "1" if the passage', "text": "1",
         "first_token_logprobs": {"1": -0.1, "0": -2.5}},
        {"match_substring": "", "text": "apple banana fruit market harvest"},
    ]))
    emb_dir = tmp_path / "emb"
    assert run_command([
        "ingest-dense", "--corpus", str(corpus), "--dim", "32", "--out", str(emb_dir),
    ]) == 0
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "paths": {
            "corpus": str(corpus),
            "queries": str(queries),
            "qrels": str(qrels),
            "embeddings_manifest": str(emb_dir / "embeddings.manifest.json"),
        },
        "pipeline": {"initial_retriever": "hybrid", "k_initial": 4, "output_depth": 8},
        "hyde": {"n_samples": 3, "task_template": "web_search"},
        "judge": {"backend": "llm", "template_id": "default"},
        "gateway": {"backend": "mock", "mock_script": str(script)},
        "encoder": {"backend": "hash", "dim": 32},
    }))
    return tmp_path


def test_index_sparse(workspace, tmp_path):
    out = tmp_path / "sparse.idx"
    code = run_command([
        "index-sparse", "--corpus", str(workspace / "corpus.jsonl"), "--out", str(out),
    ])
    assert code == 0
    assert load_sparse_index(str(out)).doc_count == len(DOCS)


def test_ingest_dense_validates_existing_bundle(workspace):
    manifest = workspace / "emb" / "embeddings.manifest.json"
    assert run_command(["ingest-dense", "--manifest", str(manifest)]) == 0


def test_ingest_dense_requires_inputs():
    assert run_command(["ingest-dense"]) == 1


@pytest.mark.parametrize("method", ["bm25", "dense", "hybrid", "avgprf", "rede",
                                    "rede-hyde-default", "hyde", "hyde-prf", "rerank"])
def test_search_every_method(workspace, method):
    out = workspace / f"run_{method}.trec"
    code = run_command([
        "search", "--config", str(workspace / "config.json"),
        "--method", method, "--out", str(out),
    ])
    assert code == 0
    runs = read_run_file(str(out))
    assert [r.query_id for r in runs] == [q for q, _ in QUERIES]


def test_search_with_queries_flag(workspace, tmp_path):
    # queries supplied on the command line instead of in the config
    alt = tmp_path / "alt_queries.tsv"
    alt.write_text("z1\tsatellite antenna\n")
    out = workspace / "alt.trec"
    code = run_command([
        "search", "--method", "rede", "--config", str(workspace / "config.json"),
        "--queries", str(alt), "--out", str(out),
    ])
    assert code == 0
    assert [r.query_id for r in read_run_file(str(out))] == ["z1"]


def test_search_writes_traces(workspace):
    out = workspace / "run.trec"
    trace_path = workspace / "trace.jsonl"
    code = run_command([
        "search", "--config", str(workspace / "config.json"),
        "--method", "rede", "--out", str(out), "--trace", str(trace_path),
    ])
    assert code == 0
    traces = [json.loads(line) for line in trace_path.read_text().splitlines()]
    assert len(traces) == len(QUERIES)
    assert all(t["path_taken"] == "rede" for t in traces)  # all-relevant mock judge
    assert all(t["judge_calls"] == 4 for t in traces)


def test_search_deterministic(workspace):
    args = ["search", "--config", str(workspace / "config.json"), "--method", "rede"]
    out1, out2 = workspace / "a.trec", workspace / "b.trec"
    assert run_command(args + ["--out", str(out1)]) == 0
    assert run_command(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_parallel_matches_serial(workspace):
    args = ["search", "--config", str(workspace / "config.json"), "--method", "hybrid"]
    serial, parallel = workspace / "s.trec", workspace / "p.trec"
    assert run_command(args + ["--out", str(serial)]) == 0
    assert run_command(args + ["--out", str(parallel), "--parallel", "3"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_unknown_subcommand_exits_1(capsys):
    assert run_command(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_method_exits_1(workspace):
    code = run_command([
        "search", "--config", str(workspace / "config.json"),
        "--method", "astrology", "--out", "x.trec",
    ])
    assert code == 1


def test_missing_embeddings_exits_2(workspace, capsys):
    config = json.loads((workspace / "config.json").read_text())
    config["paths"]["embeddings_manifest"] = str(workspace / "missing" / "m.json")
    bad = workspace / "bad_config.json"
    bad.write_text(json.dumps(config))
    code = run_command([
        "search", "--config", str(bad), "--method", "dense",
        "--out", str(workspace / "r.trec"),
    ])
    assert code == 2
    assert "missing" in capsys.readouterr().err


def test_eval(workspace, capsys):
    run_path = workspace / "run.trec"
    report_path = workspace / "report.json"
    assert run_command([
        "search", "--config", str(workspace / "config.json"),
        "--method", "bm25", "--out", str(run_path),
    ]) == 0
    code = run_command([
        "eval", "--run", str(run_path), "--qrels", str(workspace / "qrels.txt"),
        "--k", "10", "--out", str(report_path),
    ])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["metric"] == "ndcg"
    assert 0.0 <= report["mean"] <= 1.0
    assert len(report["per_query"]) == len(QUERIES)


def test_bench(workspace):
    report_path = workspace / "bench.json"
    code = run_command([
        "bench", "--config", str(workspace / "config.json"),
        "--method", "rede", "--warmup", "1", "--out", str(report_path),
    ])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert len(report["per_query_ms"]) == len(QUERIES) - 1
    assert report["llm_call_counts"]["judge"] == 4 * (len(QUERIES) - 1)


def test_export_distill(workspace):
    out = workspace / "distill.jsonl"
    code = run_command([
        "export-distill", "--config", str(workspace / "config.json"), "--out", str(out),
    ])
    assert code == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == len(QUERIES)  # all-relevant judge: every query exports
    assert all(len(r["target"]) == 32 for r in records)


def test_judge_subcommand(workspace):
    out = workspace / "judgments.jsonl"
    code = run_command([
        "judge", "--config", str(workspace / "config.json"), "--out", str(out),
    ])
    assert code == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 4 * len(QUERIES)
    assert all(r["label"] is True for r in records)


def test_judge_over_run_file(workspace):
    run_path = workspace / "cands.trec"
    assert run_command([
        "search", "--config", str(workspace / "config.json"),
        "--method", "bm25", "--out", str(run_path),
    ]) == 0
    out = workspace / "judgments.jsonl"
    assert run_command([
        "judge", "--config", str(workspace / "config.json"),
        "--run", str(run_path), "--out", str(out),
    ]) == 0
    assert out.read_text().strip()


def test_env_var_overrides_gateway_url(workspace, monkeypatch):
    monkeypatch.setenv(GATEWAY_URL_ENV, "http://example.invalid:9")
    cfg = load_run_config(str(workspace / "config.json"))
    assert cfg["gateway"]["url"] == "http://example.invalid:9"
