"""Query-vector refinement and end-to-end search orchestration.

The refinement rules all take the arithmetic mean of the live query
vector and a bag of document vectors:

  * feedback update   - vectors are stored embeddings of the documents a
    judge marked relevant (fetched from the dense index, never re-encoded)
  * hypothetical update - vectors are encodings of sampled hypothetical
    documents
  * average-PRF update - vectors are embeddings of all initial candidates
    (identical to the feedback update when everything is judged relevant)

``SearchEngine`` wires indices, encoder, judge and gateway together and
exposes one entry point per retrieval method. When the judge returns an
empty relevant set, the engine follows the configured default policy:
keep the plain encoder vector, fall back to hypothetical-document
generation over the same candidates, or return no results (ablation
mode). Every search returns a trace carrying candidates, judgments,
per-stage wall times and LLM call counts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .corpus import Corpus, Query, RankedList
from .dense import DenseIndex, dense_search, fetch_embedding
from .errors import ConfigError, DimMismatch, EmptyRelevantSet, JudgeUnavailable, MissingJudgment
from .fusion import FusionConfig, hybrid_search
from .hyde import HydeConfig, generate_hypothetical_docs
from .judge import RelevanceJudgment, RelevantSet, judge_candidates
from .sparse import SparseIndex, sparse_search

INITIAL_RETRIEVERS = ("sparse", "dense", "hybrid")
DEFAULT_POLICIES = ("encoder_only", "hyde_prf", "none")
METHODS = (
    "bm25", "dense", "hybrid", "avgprf", "hyde", "hyde-prf",
    "rede", "rede-hyde-default", "rerank",
)


@dataclass
class PipelineConfig:
    initial_retriever: str = "hybrid"
    k_initial: int = 20
    max_kstar: int | None = None  # None: use k_initial
    default_policy: str = "encoder_only"
    output_depth: int = 1000
    llm_max_workers: int = 1

    def __post_init__(self) -> None:
        if self.initial_retriever not in INITIAL_RETRIEVERS:
            raise ConfigError(f"initial_retriever must be one of {INITIAL_RETRIEVERS}")
        if self.default_policy not in DEFAULT_POLICIES:
            raise ConfigError(f"default_policy must be one of {DEFAULT_POLICIES}")
        if self.k_initial < 1:
            raise ConfigError("k_initial must be >= 1")
        if self.output_depth < 1:
            raise ConfigError("output_depth must be >= 1")
        if self.max_kstar is None:
            self.max_kstar = self.k_initial
        if not 1 <= self.max_kstar <= self.k_initial:
            raise ConfigError(f"max_kstar must satisfy 1 <= max_kstar <= k_initial ({self.k_initial})")


@dataclass
class SearchTrace:
    query_id: str
    candidates: RankedList
    judgments: list[RelevanceJudgment] = field(default_factory=list)
    kstar: int = 0
    path_taken: str = ""
    judge_calls: int = 0
    generation_calls: int = 0
    wall_times: dict[str, float] = field(default_factory=dict)
    refined_vector: np.ndarray | None = None

    @property
    def llm_calls(self) -> int:
        return self.judge_calls + self.generation_calls

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "candidates": [[doc_id, score] for doc_id, score in self.candidates.entries],
            "judgments": [
                {"doc_id": j.doc_id, "p_relevant": j.p_relevant, "label": j.label}
                for j in self.judgments
            ],
            "kstar": self.kstar,
            "path_taken": self.path_taken,
            "judge_calls": self.judge_calls,
            "generation_calls": self.generation_calls,
            "llm_calls": self.llm_calls,
            "wall_times": self.wall_times,
            "refined_vector": None
            if self.refined_vector is None
            else [float(x) for x in self.refined_vector],
        }


def _mean_update(query_vec: np.ndarray, vectors: Sequence[np.ndarray], what: str) -> np.ndarray:
    """Mean of the query vector and all given vectors, permutation-exact.

    Per-dimension exact summation (math.fsum) makes the result independent
    of vector order, so feedback and average-PRF paths agree bit-for-bit
    whenever they see the same vectors.
    """
    vectors = list(vectors)
    if not vectors:
        raise EmptyRelevantSet(f"{what} requires at least one vector")
    q = np.asarray(query_vec, dtype=np.float32)
    for v in vectors:
        if np.asarray(v).shape != q.shape:
            raise DimMismatch(f"{what}: vector shape {np.asarray(v).shape} != query shape {q.shape}")
    stacked = np.vstack([q] + [np.asarray(v, dtype=np.float32) for v in vectors]).astype(np.float64)
    totals = np.array([math.fsum(stacked[:, d]) for d in range(stacked.shape[1])])
    return (totals / stacked.shape[0]).astype(np.float32)


def rede_update(query_vec: np.ndarray, relevant_embeddings: Sequence[np.ndarray]) -> np.ndarray:
    """Refined query: mean of the query vector and the relevant-document embeddings."""
    return _mean_update(query_vec, relevant_embeddings, "feedback update")


def hyde_update(query_vec: np.ndarray, hypo_vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Refined query: mean of the query vector and the hypothetical-document vectors."""
    return _mean_update(query_vec, hypo_vectors, "hypothetical update")


def avg_prf_update(query_vec: np.ndarray, topk_embeddings: Sequence[np.ndarray]) -> np.ndarray:
    """Refined query: mean of the query vector and all top-k candidate embeddings."""
    return _mean_update(query_vec, topk_embeddings, "average-PRF update")


def select_feedback_docs(relevant_set: RelevantSet, max_kstar: int) -> list[str]:
    """Cap the relevant set at max_kstar docs (already ordered by p, then rank)."""
    return [doc_id for doc_id, _ in relevant_set.docs[:max_kstar]]


def rerank_by_judge(candidates: RankedList, judgments: list[RelevanceJudgment]) -> RankedList:
    """Reorder candidates by descending p_relevant; ties keep the original order."""
    p_map = {j.doc_id: j.p_relevant for j in judgments}
    for doc_id, _ in candidates.entries:
        if doc_id not in p_map:
            raise MissingJudgment(doc_id)
    reordered = sorted(
        ((doc_id, p_map[doc_id]) for doc_id, _ in candidates.entries),
        key=lambda pair: -pair[1],
    )
    return RankedList(candidates.query_id, reordered)


class _Timer:
    def __init__(self) -> None:
        self.times: dict[str, float] = {}
        self._start = time.perf_counter()

    def stage(self, name: str):
        return _Stage(self, name)

    def finish(self) -> dict[str, float]:
        self.times["total"] = time.perf_counter() - self._start
        return self.times


class _Stage:
    def __init__(self, timer: _Timer, name: str):
        self.timer, self.name = timer, name

    def __enter__(self):
        self._t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.timer.times[self.name] = self.timer.times.get(self.name, 0.0) + (
            time.perf_counter() - self._t0
        )
        return False


class SearchEngine:
    """All retrieval methods over one corpus, sharing indices and backends."""

    def __init__(
        self,
        corpus: Corpus,
        sparse_index: SparseIndex | None,
        dense_index: DenseIndex | None,
        encoder,
        judge=None,
        gateway=None,
        config: PipelineConfig | None = None,
        fusion_config: FusionConfig | None = None,
        hyde_config: HydeConfig | None = None,
    ):
        self.corpus = corpus
        self.sparse_index = sparse_index
        self.dense_index = dense_index
        self.encoder = encoder
        self.judge = judge
        self.gateway = gateway
        self.config = config or PipelineConfig()
        self.fusion_config = fusion_config or FusionConfig()
        self.hyde_config = hyde_config or HydeConfig()
        self.doc_texts = {doc_id: doc.search_text for doc_id, doc in corpus.items()}

    # -- shared stages -----------------------------------------------------

    def encode_query(self, text: str) -> np.ndarray:
        return self.encoder.encode([text])[0]

    def initial_retrieval(self, query: Query, query_vec: np.ndarray | None = None) -> RankedList:
        cfg = self.config
        if cfg.initial_retriever in ("sparse", "hybrid") and self.sparse_index is None:
            raise ConfigError(f"{cfg.initial_retriever} retrieval requires a sparse index")
        if cfg.initial_retriever in ("dense", "hybrid") and self.dense_index is None:
            raise ConfigError(f"{cfg.initial_retriever} retrieval requires a dense index")
        if cfg.initial_retriever == "sparse":
            result = sparse_search(self.sparse_index, query.text, cfg.k_initial)
        elif cfg.initial_retriever == "dense":
            result = dense_search(self.dense_index, self._require_vec(query, query_vec), cfg.k_initial)
        else:
            result = hybrid_search(
                self.sparse_index,
                self.dense_index,
                query.text,
                self._require_vec(query, query_vec),
                cfg.k_initial,
                self.fusion_config,
            )
        result.query_id = query.query_id
        return result

    def _require_vec(self, query: Query, query_vec: np.ndarray | None) -> np.ndarray:
        return query_vec if query_vec is not None else self.encode_query(query.text)

    def _counter_snapshot(self) -> tuple[int, int]:
        if self.gateway is None:
            return (0, 0)
        return (self.gateway.counter.logprob_calls, self.gateway.counter.text_calls)

    def _llm_workers(self) -> int:
        workers = self.config.llm_max_workers
        if self.gateway is not None:
            workers = min(workers, getattr(self.gateway, "parallelism", workers))
        return max(workers, 1)

    def _context_hyde_config(self) -> HydeConfig:
        docs = self.hyde_config.context_docs or self.config.k_initial
        return replace(self.hyde_config, context_docs=docs)

    def _finalize(self, query: Query, refined: np.ndarray, depth: int) -> RankedList:
        result = dense_search(self.dense_index, refined, depth)
        result.query_id = query.query_id
        return result

    # -- feedback search -----------------------------------------------------

    def rede_rf_search(self, query: Query, default_policy: str | None = None
                       ) -> tuple[RankedList, SearchTrace]:
        """Initial retrieval, pointwise judging, feedback update, final search."""
        cfg = self.config
        policy = default_policy if default_policy is not None else cfg.default_policy
        if policy not in DEFAULT_POLICIES:
            raise ConfigError(f"default_policy must be one of {DEFAULT_POLICIES}")
        if self.judge is None:
            raise ConfigError("feedback search requires a judge backend")
        timer = _Timer()
        judge0, gen0 = self._counter_snapshot()

        with timer.stage("encode"):
            qvec = self.encode_query(query.text)
        with timer.stage("initial_retrieval"):
            candidates = self.initial_retrieval(query, qvec)

        judgments: list[RelevanceJudgment] = []
        feedback_ids: list[str] = []
        with timer.stage("judge"):
            if candidates.entries:
                try:
                    relevant = judge_candidates(
                        self.judge, query, candidates, self.doc_texts, self._llm_workers()
                    )
                    judgments = relevant.judgments
                    feedback_ids = select_feedback_docs(relevant, cfg.max_kstar)
                except JudgeUnavailable:
                    feedback_ids = []  # fall through to the default policy

        trace = SearchTrace(query.query_id, candidates, judgments, kstar=len(feedback_ids))

        if feedback_ids:
            with timer.stage("update"):
                embeddings = [fetch_embedding(self.dense_index, d) for d in feedback_ids]
                refined = rede_update(qvec, embeddings)
            trace.path_taken = "rede"
        elif policy == "encoder_only":
            refined = qvec
            trace.path_taken = "default_encoder"
        elif policy == "hyde_prf":
            with timer.stage("generation"):
                refined = self._hyde_refine(query, qvec, candidates)
            trace.path_taken = "default_hyde_prf"
        else:  # "none": ablation mode, no results for this query
            trace.path_taken = "none"
            trace.wall_times = timer.finish()
            trace.judge_calls, trace.generation_calls = self._counter_delta(judge0, gen0)
            return RankedList(query.query_id, []), trace

        with timer.stage("final_search"):
            result = self._finalize(query, refined, cfg.output_depth)
        trace.refined_vector = refined
        trace.wall_times = timer.finish()
        trace.judge_calls, trace.generation_calls = self._counter_delta(judge0, gen0)
        return result, trace

    def _counter_delta(self, judge0: int, gen0: int) -> tuple[int, int]:
        judge1, gen1 = self._counter_snapshot()
        return judge1 - judge0, gen1 - gen0

    def _hyde_refine(self, query: Query, qvec: np.ndarray, candidates: RankedList | None) -> np.ndarray:
        context = None
        hyde_cfg = self.hyde_config
        if candidates is not None:
            context = [self.doc_texts.get(d, "") for d in candidates.doc_ids()]
            hyde_cfg = self._context_hyde_config()
        docs = generate_hypothetical_docs(
            self.gateway, hyde_cfg, query.text, context, self._llm_workers()
        )
        vectors = self.encoder.encode(docs)
        return hyde_update(qvec, list(vectors))

    # -- generation-based search ----------------------------------------------

    def hyde_search(self, query: Query, with_context: bool = False
                    ) -> tuple[RankedList, SearchTrace]:
        """Hypothetical-document search; with_context feeds initial candidates in."""
        timer = _Timer()
        judge0, gen0 = self._counter_snapshot()
        with timer.stage("encode"):
            qvec = self.encode_query(query.text)
        candidates = RankedList(query.query_id, [])
        if with_context:
            with timer.stage("initial_retrieval"):
                candidates = self.initial_retrieval(query, qvec)
        with timer.stage("generation"):
            refined = self._hyde_refine(query, qvec, candidates if with_context else None)
        with timer.stage("final_search"):
            result = self._finalize(query, refined, self.config.output_depth)
        trace = SearchTrace(
            query.query_id,
            candidates,
            path_taken="hyde_prf" if with_context else "hyde",
            refined_vector=refined,
        )
        trace.wall_times = timer.finish()
        trace.judge_calls, trace.generation_calls = self._counter_delta(judge0, gen0)
        return result, trace

    # -- baselines ------------------------------------------------------------

    def avg_prf_search(self, query: Query) -> tuple[RankedList, SearchTrace]:
        """Treat every initial candidate as relevant and refine over all of them."""
        timer = _Timer()
        with timer.stage("encode"):
            qvec = self.encode_query(query.text)
        with timer.stage("initial_retrieval"):
            candidates = self.initial_retrieval(query, qvec)
        with timer.stage("update"):
            if candidates.entries:
                embeddings = [fetch_embedding(self.dense_index, d) for d in candidates.doc_ids()]
                refined = avg_prf_update(qvec, embeddings)
                path = "avg_prf"
            else:
                refined = qvec
                path = "default_encoder"
        with timer.stage("final_search"):
            result = self._finalize(query, refined, self.config.output_depth)
        trace = SearchTrace(
            query.query_id, candidates, kstar=len(candidates.entries),
            path_taken=path, refined_vector=refined,
        )
        trace.wall_times = timer.finish()
        return result, trace

    def rerank_search(self, query: Query) -> tuple[RankedList, SearchTrace]:
        """Judge the initial candidates and reorder them by p_relevant."""
        if self.judge is None:
            raise ConfigError("reranking requires a judge backend")
        timer = _Timer()
        judge0, gen0 = self._counter_snapshot()
        with timer.stage("encode"):
            qvec = self.encode_query(query.text)
        with timer.stage("initial_retrieval"):
            candidates = self.initial_retrieval(query, qvec)
        with timer.stage("judge"):
            relevant = judge_candidates(
                self.judge, query, candidates, self.doc_texts, self._llm_workers()
            )
        with timer.stage("update"):
            result = rerank_by_judge(candidates, relevant.judgments)
        trace = SearchTrace(
            query.query_id, candidates, relevant.judgments,
            kstar=relevant.kstar, path_taken="rerank",
        )
        trace.wall_times = timer.finish()
        trace.judge_calls, trace.generation_calls = self._counter_delta(judge0, gen0)
        return result, trace

    def first_stage_search(self, query: Query, retriever: str) -> tuple[RankedList, SearchTrace]:
        """Plain sparse, dense, or hybrid retrieval at output depth."""
        timer = _Timer()
        depth = self.config.output_depth
        if retriever == "bm25":
            with timer.stage("initial_retrieval"):
                result = sparse_search(self.sparse_index, query.text, depth)
        elif retriever == "dense":
            with timer.stage("encode"):
                qvec = self.encode_query(query.text)
            with timer.stage("initial_retrieval"):
                result = dense_search(self.dense_index, qvec, depth)
        elif retriever == "hybrid":
            with timer.stage("encode"):
                qvec = self.encode_query(query.text)
            with timer.stage("initial_retrieval"):
                result = hybrid_search(
                    self.sparse_index, self.dense_index, query.text, qvec, depth, self.fusion_config
                )
        else:
            raise ConfigError(f"unknown first-stage retriever {retriever!r}")
        result.query_id = query.query_id
        trace = SearchTrace(query.query_id, result, path_taken=retriever)
        trace.wall_times = timer.finish()
        return result, trace

    # -- method dispatch ---------------------------------------------------

    def search(self, method: str, query: Query) -> tuple[RankedList, SearchTrace]:
        if method in ("bm25", "dense", "hybrid"):
            return self.first_stage_search(query, method)
        if method == "avgprf":
            return self.avg_prf_search(query)
        if method == "hyde":
            return self.hyde_search(query, with_context=False)
        if method == "hyde-prf":
            return self.hyde_search(query, with_context=True)
        if method == "rede":
            return self.rede_rf_search(query)
        if method == "rede-hyde-default":
            return self.rede_rf_search(query, default_policy="hyde_prf")
        if method == "rerank":
            return self.rerank_search(query)
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
