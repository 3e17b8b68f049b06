"""Precomputed document-embedding store with exact nearest-neighbor search.

The on-disk bundle is three files: raw little-endian float32 vectors
(row-major), a JSON manifest ``{"dim": D, "count": N, "id_file": ...}``,
and a newline-separated doc-id file. Search is exact brute force by
inner product (cosine behind a flag); ties break by ascending doc_id.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import requests

from .corpus import RankedList, tokenize
from .errors import (
    BackendUnavailable,
    DimMismatch,
    DuplicateDocId,
    NonFiniteVector,
    SizeMismatch,
    UnknownDocId,
)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass
class DenseIndex:
    dim: int
    ids: list[str]
    vectors: np.ndarray  # (count, dim) float32
    id_to_row: dict[str, int]
    _ids_array: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self._ids_array is None:
            self._ids_array = np.array(self.ids)

    @property
    def count(self) -> int:
        return len(self.ids)


def ingest_embeddings(vectors_path: str, manifest_path: str) -> DenseIndex:
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    dim, count = int(manifest["dim"]), int(manifest["count"])
    id_file = manifest["id_file"]
    if not os.path.isabs(id_file):
        id_file = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), id_file)

    expected = count * dim * 4
    actual = os.path.getsize(vectors_path)
    if actual != expected:
        raise SizeMismatch(
            f"vectors file is {actual} bytes, expected {expected} ({count} x {dim} float32)"
        )
    vectors = np.fromfile(vectors_path, dtype="<f4").reshape(count, dim)
    if not np.all(np.isfinite(vectors)):
        bad = int(np.argwhere(~np.isfinite(vectors).all(axis=1))[0][0])
        raise NonFiniteVector(f"non-finite value in row {bad}")

    with open(id_file, "r", encoding="utf-8") as f:
        ids = [line.rstrip("\n") for line in f if line.strip()]
    if len(ids) != count:
        raise SizeMismatch(f"id file has {len(ids)} ids, manifest declares {count}")
    id_to_row: dict[str, int] = {}
    for row, doc_id in enumerate(ids):
        if doc_id in id_to_row:
            raise DuplicateDocId(doc_id)
        id_to_row[doc_id] = row
    return DenseIndex(dim, ids, vectors, id_to_row)


def write_embeddings(out_dir: str, ids: list[str], vectors: np.ndarray, name: str = "embeddings") -> str:
    """Write a bundle ingest_embeddings can read; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    arr = np.ascontiguousarray(vectors, dtype="<f4")
    if arr.ndim != 2 or arr.shape[0] != len(ids):
        raise SizeMismatch(f"vectors shape {arr.shape} does not match {len(ids)} ids")
    vec_path = os.path.join(out_dir, f"{name}.f32")
    id_path = os.path.join(out_dir, f"{name}.ids.txt")
    manifest_path = os.path.join(out_dir, f"{name}.manifest.json")
    arr.tofile(vec_path)
    with open(id_path, "w", encoding="utf-8") as f:
        for doc_id in ids:
            f.write(doc_id + "\n")
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(
            {"dim": arr.shape[1], "count": arr.shape[0], "id_file": os.path.basename(id_path),
             "vectors_file": os.path.basename(vec_path)},
            f,
            indent=2,
        )
        f.write("\n")
    return manifest_path


def load_bundle(manifest_path: str, vectors_path: str | None = None) -> DenseIndex:
    """Ingest using the manifest's own vectors_file when no explicit path is given."""
    if vectors_path is None:
        with open(manifest_path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
        name = manifest.get("vectors_file")
        if name is None:
            raise SizeMismatch("manifest has no 'vectors_file'; pass vectors_path explicitly")
        vectors_path = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), name)
    return ingest_embeddings(vectors_path, manifest_path)


def fetch_embedding(index: DenseIndex, doc_id: str) -> np.ndarray:
    """Exact stored row; no copy-time transformation."""
    row = index.id_to_row.get(doc_id)
    if row is None:
        raise UnknownDocId(doc_id)
    return index.vectors[row]


def dense_search(index: DenseIndex, query_vector: np.ndarray, k: int,
                 similarity: str = "dot") -> RankedList:
    """Top-k by inner product (or cosine), ties broken by ascending doc_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(query_vector)
    if q.shape != (index.dim,):
        raise DimMismatch(f"query has shape {q.shape}, index dim is {index.dim}")
    scores = index.vectors @ q
    if similarity == "cosine":
        norms = np.linalg.norm(index.vectors, axis=1) * (np.linalg.norm(q) or 1.0)
        scores = np.divide(scores, norms, out=np.zeros_like(scores, dtype=np.float64), where=norms > 0)
    elif similarity != "dot":
        raise ValueError(f"unsupported similarity: {similarity!r}")
    # primary key: score descending; secondary: doc_id ascending
    order = np.lexsort((index._ids_array, -scores))
    top = order[: min(k, index.count)]
    return RankedList("", [(index.ids[i], float(scores[i])) for i in top])


class HashingEncoder:
    """Deterministic hashed bag-of-words encoder for offline tests and demos.

    Buckets each token by 64-bit FNV-1a of its UTF-8 bytes mod dim, counts
    occurrences, and L2-normalizes; empty text maps to the zero vector.
    """

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim

    @staticmethod
    def _fnv1a(data: bytes) -> int:
        h = _FNV_OFFSET
        for byte in data:
            h = ((h ^ byte) * _FNV_PRIME) & _FNV_MASK
        return h

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ValueError("texts must be a non-empty list")
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            for token in tokenize(text):
                out[i, self._fnv1a(token.encode("utf-8")) % self.dim] += 1.0
            norm = np.linalg.norm(out[i])
            if norm > 0:
                out[i] /= norm
        return out


class HttpEncoder:
    """Encoder backed by an HTTP service: POST {"texts": [...]} -> {"vectors": [[...]]}."""

    def __init__(self, url: str, dim: int | None = None, timeout: float = 30.0):
        self.url = url
        self.dim = dim
        self.timeout = timeout

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ValueError("texts must be a non-empty list")
        try:
            resp = requests.post(self.url, json={"texts": texts}, timeout=self.timeout)
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except (requests.RequestException, KeyError, ValueError) as exc:
            raise BackendUnavailable(f"encoder backend at {self.url}: {exc}") from exc
        arr = np.asarray(vectors, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] != len(texts):
            raise DimMismatch(f"backend returned shape {arr.shape} for {len(texts)} texts")
        if self.dim is None:
            self.dim = int(arr.shape[1])
        elif arr.shape[1] != self.dim:
            raise DimMismatch(f"backend returned dim {arr.shape[1]}, expected {self.dim}")
        return arr


def encode(backend, texts: list[str]) -> np.ndarray:
    """One vector per text, constant dim, via any encoder backend."""
    vectors = backend.encode(texts)
    if vectors.shape[0] != len(texts):
        raise DimMismatch(f"backend returned {vectors.shape[0]} vectors for {len(texts)} texts")
    return vectors


def build_dense_index(corpus_ids: list[str], vectors: np.ndarray) -> DenseIndex:
    """In-memory index from already-encoded vectors (ingest path skipped)."""
    arr = np.ascontiguousarray(vectors, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] != len(corpus_ids):
        raise SizeMismatch(f"vectors shape {arr.shape} does not match {len(corpus_ids)} ids")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteVector("non-finite value in vectors")
    id_to_row: dict[str, int] = {}
    for row, doc_id in enumerate(corpus_ids):
        if doc_id in id_to_row:
            raise DuplicateDocId(doc_id)
        id_to_row[doc_id] = row
    return DenseIndex(arr.shape[1], list(corpus_ids), arr, id_to_row)
