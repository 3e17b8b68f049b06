"""BM25 inverted index and ranked keyword search.

Scoring is the Robertson variant with the (k1+1) numerator:

    score(q, d) = sum over query-token occurrences t of
                  idf(t) * tf * (k1+1) / (tf + k1 * (1 - b + b * dl/avgdl))
    idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))

Duplicate query tokens contribute once per occurrence. Documents matching
no query term are excluded from search results.
"""

from __future__ import annotations

import json
import math
import struct
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus, RankedList, tokenize
from .errors import EmptyCorpus, MalformedRecord, UnknownDocId

_MAGIC = b"SPIDX"
_VERSION = 1
_MIN_AVGDL = 1e-9


@dataclass
class SparseIndex:
    postings: dict[str, list[tuple[str, int]]]
    doc_lengths: dict[str, int]
    avg_doc_length: float
    doc_count: int
    k1: float = 0.9
    b: float = 0.4
    # per-doc term frequencies, derived from postings; rebuilt on load
    _doc_tf: dict[str, dict[str, int]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")
        if not self._doc_tf:
            for term, posting in self.postings.items():
                for doc_id, tf in posting:
                    self._doc_tf.setdefault(doc_id, {})[term] = tf

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        return math.log(1 + (self.doc_count - df + 0.5) / (df + 0.5))


def build_sparse_index(corpus: Corpus, k1: float = 0.9, b: float = 0.4) -> SparseIndex:
    if not corpus:
        raise EmptyCorpus("corpus is empty")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    total = 0
    for doc_id, doc in corpus.items():
        tokens = tokenize(doc.search_text)
        doc_lengths[doc_id] = len(tokens)
        total += len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((doc_id, tf))
    if total == 0:
        raise EmptyCorpus("every document tokenizes to nothing")
    avgdl = max(total / len(corpus), _MIN_AVGDL)
    return SparseIndex(postings, doc_lengths, avgdl, len(corpus), k1, b)


def bm25_score(index: SparseIndex, query_tokens: list[str], doc_id: str) -> float:
    if doc_id not in index.doc_lengths:
        raise UnknownDocId(doc_id)
    tf_map = index._doc_tf.get(doc_id, {})
    dl = index.doc_lengths[doc_id]
    norm = index.k1 * (1 - index.b + index.b * dl / index.avg_doc_length)
    score = 0.0
    for term in query_tokens:
        tf = tf_map.get(term)
        if not tf:
            continue
        score += index.idf(term) * tf * (index.k1 + 1) / (tf + norm)
    return score


def sparse_search(index: SparseIndex, query_text: str, k: int) -> RankedList:
    """Top-k docs by BM25, ties broken by ascending doc_id; zero scores dropped."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query_tokens = tokenize(query_text)
    scores: dict[str, float] = {}
    for term, count in Counter(query_tokens).items():
        posting = index.postings.get(term)
        if not posting:
            continue
        idf = index.idf(term)
        for doc_id, tf in posting:
            dl = index.doc_lengths[doc_id]
            norm = index.k1 * (1 - index.b + index.b * dl / index.avg_doc_length)
            contrib = idf * tf * (index.k1 + 1) / (tf + norm)
            scores[doc_id] = scores.get(doc_id, 0.0) + count * contrib
    ranked = sorted(
        ((doc_id, s) for doc_id, s in scores.items() if s > 0),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return RankedList("", ranked[:k])


def save_sparse_index(index: SparseIndex, path: str) -> None:
    """Serialize to a single binary file: magic, u16 version, u64 length, JSON payload."""
    payload = json.dumps(
        {
            "postings": {t: p for t, p in index.postings.items()},
            "doc_lengths": index.doc_lengths,
            "avg_doc_length": index.avg_doc_length,
            "doc_count": index.doc_count,
            "k1": index.k1,
            "b": index.b,
        }
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<HQ", _VERSION, len(payload)))
        f.write(payload)


def load_sparse_index(path: str) -> SparseIndex:
    with open(path, "rb") as f:
        magic = f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise MalformedRecord(0, f"bad index magic {magic!r}")
        version, length = struct.unpack("<HQ", f.read(10))
        if version != _VERSION:
            raise MalformedRecord(0, f"unsupported index version {version}")
        payload = f.read(length)
        if len(payload) != length:
            raise MalformedRecord(0, "truncated index payload")
    obj = json.loads(payload.decode("utf-8"))
    postings = {t: [(doc_id, tf) for doc_id, tf in p] for t, p in obj["postings"].items()}
    return SparseIndex(
        postings,
        obj["doc_lengths"],
        obj["avg_doc_length"],
        obj["doc_count"],
        obj["k1"],
        obj["b"],
    )
