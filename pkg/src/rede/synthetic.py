"""Self-contained synthetic retrieval benchmarks.

Documents sit in Gaussian topic clusters: each cluster has a unit-norm
center, a private token vocabulary, and documents whose embeddings are
noisy copies of the center and whose texts mix private and shared
tokens. Each query has a hidden true point near its cluster center; the
qrels mark the documents closest to that point, while the planted query
vector is a noisier (weak-encoder) view of it and the query text leaks
some shared tokens. Initial retrieval therefore finds only part of the
relevant set, which is exactly the regime where feedback over the stored
document embeddings pays off. A table-backed encoder serves the planted
vectors, so everything runs without a model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Document, Qrels, Query
from .errors import BackendUnavailable


class TableEncoder:
    """Encoder backed by an exact text -> vector table (deterministic by construction)."""

    def __init__(self, table: dict[str, np.ndarray], dim: int):
        self.table = table
        self.dim = dim

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ValueError("texts must be a non-empty list")
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            vec = self.table.get(text)
            if vec is None:
                raise BackendUnavailable(f"no planted vector for text {text!r}")
            out[i] = vec
        return out


@dataclass
class SyntheticBenchmark:
    corpus: Corpus
    queries: list[Query]
    qrels: Qrels
    doc_ids: list[str]
    doc_vectors: np.ndarray  # (n_docs, dim) float32
    encoder: TableEncoder


def generate_benchmark(
    seed: int,
    n_clusters: int = 5,
    dim: int = 16,
    n_docs: int = 200,
    n_queries: int = 20,
    vocab_per_cluster: int = 30,
    shared_vocab: int = 25,
    tokens_per_doc: int = 40,
    shared_per_doc: int = 12,
    own_per_query: int = 2,
    shared_per_query: int = 2,
    doc_noise: float = 0.35,
    true_noise: float = 0.25,
    encoder_noise: float = 0.9,
    n_relevant: int = 15,
) -> SyntheticBenchmark:
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(n_clusters, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    own_vocab = [
        [f"topic{c}word{w}" for w in range(vocab_per_cluster)] for c in range(n_clusters)
    ]
    shared = [f"common{w}" for w in range(shared_vocab)]

    corpus: Corpus = {}
    doc_ids: list[str] = []
    doc_vectors = np.zeros((n_docs, dim), dtype=np.float32)
    for i in range(n_docs):
        cluster = int(rng.integers(n_clusters))
        doc_id = f"d{i:04d}"
        tokens = list(rng.choice(own_vocab[cluster], size=tokens_per_doc - shared_per_doc))
        tokens += list(rng.choice(shared, size=shared_per_doc))
        rng.shuffle(tokens)
        corpus[doc_id] = Document(doc_id, "", " ".join(tokens))
        doc_vectors[i] = centers[cluster] + rng.normal(scale=doc_noise, size=dim)
        doc_ids.append(doc_id)

    def query_text(cluster: int) -> str:
        own = rng.choice(own_vocab[cluster], size=own_per_query, replace=False)
        mixed = rng.choice(shared, size=shared_per_query, replace=False)
        return " ".join(list(own) + list(mixed))

    queries: list[Query] = []
    qrels: Qrels = {}
    table: dict[str, np.ndarray] = {}
    for i in range(n_queries):
        cluster = int(rng.integers(n_clusters))
        query_id = f"q{i:03d}"
        text = query_text(cluster)
        while text in table:  # query texts key the planted-vector table
            text = query_text(cluster)
        true_point = centers[cluster] + rng.normal(scale=true_noise, size=dim)
        table[text] = (true_point + rng.normal(scale=encoder_noise, size=dim)).astype(np.float32)
        nearest = np.argsort(-(doc_vectors @ true_point))[:n_relevant]
        qrels[query_id] = {doc_ids[j]: 1 for j in nearest}
        queries.append(Query(query_id, text))

    return SyntheticBenchmark(corpus, queries, qrels, doc_ids, doc_vectors, TableEncoder(table, dim))
