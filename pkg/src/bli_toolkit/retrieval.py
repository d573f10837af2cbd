"""Exact top-N translation retrieval under the NN and CSLS criteria.

Scores are cosine similarities (dot products of unit rows) accumulated in
float64. Every query block is zero-padded to a fixed number of rows before
the matrix product, so the arithmetic seen by any single query does not
depend on how the queries were batched. Ties are broken by ascending
target index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSpace
from .errors import RetrievalError

BLOCK_ROWS = 256
CRITERIA = ("nn", "csls")


@dataclass(frozen=True)
class CslsParams:
    K: int = 10
    rs_pool: int | None = 50000

    def __post_init__(self):
        if self.K < 1:
            raise RetrievalError("CSLS K must be at least 1")
        if self.rs_pool is not None and self.rs_pool < 1:
            raise RetrievalError("rs_pool must be positive")


@dataclass(frozen=True)
class RetrievalResult:
    criterion: str
    depth: int
    indices: np.ndarray  # (queries, min(depth, |tgt|)) target rows, best first
    scores: np.ndarray

    def __len__(self) -> int:
        return self.indices.shape[0]

    def tokens(self, tgt: EmbeddingSpace) -> list[list[str]]:
        return [[tgt.words[j] for j in row] for row in self.indices]


def _as_queries(queries) -> np.ndarray:
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2:
        raise RetrievalError(f"queries must be a matrix, got shape {q.shape}")
    return q


def _blocks(q: np.ndarray, other: np.ndarray, block: int = BLOCK_ROWS):
    """Yield (start, stop, q[start:stop] @ other.T) on fixed-height padded blocks."""
    pad = np.zeros((block, q.shape[1]), dtype=np.float64)
    for start in range(0, q.shape[0], block):
        stop = min(start + block, q.shape[0])
        pad[: stop - start] = q[start:stop]
        pad[stop - start :] = 0.0
        yield start, stop, (pad @ other.T)[: stop - start]


def _top_n_row(scores: np.ndarray, n: int) -> np.ndarray:
    """Indices of the n best scores; equal scores ordered by index."""
    m = scores.shape[0]
    if n >= m:
        return np.lexsort((np.arange(m), -scores))
    part = np.argpartition(-scores, n - 1)[:n]
    threshold = scores[part].min()
    cand = np.nonzero(scores >= threshold)[0]
    order = np.lexsort((cand, -scores[cand]))
    return cand[order[:n]]


def _rank(score_blocks, n_queries: int, depth: int, criterion: str, n_targets: int) -> RetrievalResult:
    width = min(depth, n_targets)
    idx = np.empty((n_queries, width), dtype=np.int64)
    val = np.empty((n_queries, width), dtype=np.float64)
    for start, stop, s in score_blocks:
        for r in range(stop - start):
            top = _top_n_row(s[r], width)
            idx[start + r] = top
            val[start + r] = s[r, top]
    return RetrievalResult(criterion, depth, idx, val)


def _check_target(tgt: EmbeddingSpace, q: np.ndarray):
    if q.shape[1] != tgt.dim:
        raise RetrievalError(f"query dimension {q.shape[1]} != target dimension {tgt.dim}")
    if len(tgt) == 0:
        raise RetrievalError("empty target vocabulary")


def nn_topk(queries, tgt: EmbeddingSpace, N: int) -> RetrievalResult:
    """Rank targets by cosine similarity to each (unit) query row."""
    if N < 1:
        raise RetrievalError("retrieval depth N must be at least 1")
    q = _as_queries(queries)
    _check_target(tgt, q)
    t = tgt.matrix.astype(np.float64)
    return _rank(_blocks(q, t), q.shape[0], N, "nn", len(tgt))


def _mean_topk(sim: np.ndarray, k: int) -> np.ndarray:
    if k == sim.shape[1]:
        return sim.mean(axis=1)
    part = np.partition(sim, sim.shape[1] - k, axis=1)[:, sim.shape[1] - k :]
    return part.mean(axis=1)


def csls_penalties(queries, tgt: EmbeddingSpace, params: CslsParams, src_full=None):
    """Neighbourhood densities ``(r_T per query, r_S per target)``.

    ``r_T(q)`` is the mean cosine of q to its K nearest targets and
    ``r_S(t)`` the mean cosine of t to its K nearest rows among the first
    ``rs_pool`` rows of ``src_full`` (the queries themselves if omitted).
    """
    q = _as_queries(queries)
    _check_target(tgt, q)
    src = q if src_full is None else _as_queries(src_full)
    if params.rs_pool is not None:
        src = src[: params.rs_pool]
    K = params.K
    if K > len(tgt):
        raise RetrievalError(f"CSLS K={K} exceeds target vocabulary size {len(tgt)}")
    if K > src.shape[0]:
        raise RetrievalError(f"CSLS K={K} exceeds source pool size {src.shape[0]}")
    t = tgt.matrix.astype(np.float64)
    r_t = np.empty(q.shape[0])
    for start, stop, s in _blocks(q, t):
        r_t[start:stop] = _mean_topk(s, K)
    r_s = np.empty(len(tgt))
    for start, stop, s in _blocks(t, src):
        r_s[start:stop] = _mean_topk(s, K)
    return r_t, r_s


def csls_topk(queries, src_full, tgt: EmbeddingSpace, N: int, params: CslsParams) -> RetrievalResult:
    """Rank targets by ``2 cos(q, t) - r_T(q) - r_S(t)``."""
    if N < 1:
        raise RetrievalError("retrieval depth N must be at least 1")
    q = _as_queries(queries)
    r_t, r_s = csls_penalties(q, tgt, params, src_full=src_full)
    t = tgt.matrix.astype(np.float64)

    def scored():
        for start, stop, s in _blocks(q, t):
            yield start, stop, 2.0 * s - r_t[start:stop, None] - r_s[None, :]

    return _rank(scored(), q.shape[0], N, "csls", len(tgt))


def retrieve(criterion: str, queries, src_full, tgt: EmbeddingSpace, N: int, params: CslsParams | None = None):
    if criterion == "nn":
        return nn_topk(queries, tgt, N)
    if criterion == "csls":
        return csls_topk(queries, src_full, tgt, N, params or CslsParams())
    raise RetrievalError(f"unknown retrieval criterion {criterion!r}")
