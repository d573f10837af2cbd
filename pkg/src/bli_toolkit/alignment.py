"""Supervised linear maps between embedding spaces.

Vectors are rows and a map acts as ``x -> x @ W``. Three fitting methods are
provided: unconstrained least squares, orthogonal Procrustes, and gradient
descent on the relaxed CSLS (RCSLS) loss started from a given map.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from os import PathLike

import numpy as np

from .embeddings import EmbeddingSpace, normalize
from .errors import AlignmentError, RankDeficiencyWarning
from .lexicon import BilingualLexicon

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOLERANCE = 1e-5
KINDS = ("unconstrained", "orthogonal")


@dataclass(frozen=True)
class LinearMap:
    matrix: np.ndarray
    kind: str = "unconstrained"
    method: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise AlignmentError(f"map matrix must be 2-D, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise AlignmentError("map matrix has non-finite entries")
        if self.kind not in KINDS:
            raise AlignmentError(f"unknown map kind {self.kind!r}")
        if self.kind == "orthogonal":
            if m.shape[0] != m.shape[1]:
                raise AlignmentError("orthogonal map must be square")
            if orthogonality_defect(m) > ORTHOGONALITY_TOLERANCE:
                raise AlignmentError("matrix flagged orthogonal is not orthogonal")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_src(self) -> int:
        return self.matrix.shape[0]

    @property
    def d_tgt(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, d: int) -> "LinearMap":
        return cls(np.eye(d), kind="orthogonal", method="identity")

    def residual(self, tm: "TrainMatrices") -> float:
        """Frobenius norm of ``X W - Y``."""
        return float(np.linalg.norm(tm.X @ self.matrix - tm.Y))

    def orthogonality_defect(self) -> float:
        return orthogonality_defect(self.matrix)


def orthogonality_defect(w: np.ndarray) -> float:
    """``||W^T W - I||_F``."""
    w = np.asarray(w, dtype=np.float64)
    return float(np.linalg.norm(w.T @ w - np.eye(w.shape[1])))


@dataclass(frozen=True)
class TrainMatrices:
    X: np.ndarray
    Y: np.ndarray
    dropped: int = 0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise AlignmentError(f"incompatible training matrices {X.shape} and {Y.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class RcslsConfig:
    k_neighbors: int = 10
    epochs: int = 10
    step: float = 1.0
    neighbor_pool: int = 20000
    orthogonal_project: bool = False

    def __post_init__(self):
        if self.k_neighbors < 1 or self.epochs < 1 or self.neighbor_pool < 1:
            raise AlignmentError("RCSLS k_neighbors, epochs and neighbor_pool must be positive")
        if not self.step > 0:
            raise AlignmentError("RCSLS step must be positive")
        if self.k_neighbors > self.neighbor_pool:
            raise AlignmentError(
                f"k_neighbors={self.k_neighbors} exceeds neighbor_pool={self.neighbor_pool}"
            )


def center(space: EmbeddingSpace) -> EmbeddingSpace:
    """Mean-centre the rows of ``space`` and re-normalise them."""
    m = space.matrix.astype(np.float64)
    m -= m.mean(axis=0)
    return normalize(EmbeddingSpace(space.words, m, language=space.language))


def build_train_matrices(
    train: BilingualLexicon, src: EmbeddingSpace, tgt: EmbeddingSpace
) -> TrainMatrices:
    """Stack source/target vectors for every pair with both sides in vocabulary."""
    if not (src.normalized and tgt.normalized):
        raise AlignmentError("training spaces must be normalized")
    si, ti = [], []
    for s, t in train.pairs:
        a, b = src.lookup(s), tgt.lookup(t)
        if a is None or b is None:
            continue
        si.append(a)
        ti.append(b)
    if not si:
        raise AlignmentError("no training pair has both words in vocabulary")
    return TrainMatrices(src.matrix[si], tgt.matrix[ti], dropped=len(train) - len(si))


def fit_least_squares(tm: TrainMatrices, rcond: float | None = None) -> LinearMap:
    """Minimum-norm solution of ``min ||X W - Y||_F`` via an SVD pseudoinverse."""
    n, d = tm.X.shape
    if n < d:
        warnings.warn(f"only {n} training pairs for {d} source dimensions", RankDeficiencyWarning)
    w, _, rank, _ = np.linalg.lstsq(tm.X, tm.Y, rcond=rcond)
    if rank < d:
        warnings.warn(f"training matrix has rank {rank} < {d}", RankDeficiencyWarning)
    return LinearMap(w, kind="unconstrained", method="lstsq", params={"n": n, "rank": int(rank)})


def procrustes_matrix(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    try:
        u, _, vt = np.linalg.svd(X.T @ Y)
    except np.linalg.LinAlgError as exc:
        raise AlignmentError(f"SVD did not converge: {exc}") from exc
    return u @ vt


def nearest_orthogonal(w: np.ndarray) -> np.ndarray:
    """Closest orthogonal matrix in Frobenius norm (polar factor)."""
    try:
        u, _, vt = np.linalg.svd(w)
    except np.linalg.LinAlgError as exc:
        raise AlignmentError(f"SVD did not converge: {exc}") from exc
    return u @ vt


def fit_procrustes(tm: TrainMatrices) -> LinearMap:
    """Orthogonal ``W = U V^T`` from the SVD ``X^T Y = U S V^T``."""
    if tm.X.shape[1] != tm.Y.shape[1]:
        raise AlignmentError(
            f"Procrustes needs equal dimensions, got {tm.X.shape[1]} and {tm.Y.shape[1]}"
        )
    w = procrustes_matrix(tm.X, tm.Y)
    return LinearMap(w, kind="orthogonal", method="procrustes", params={"n": tm.n})


# --- RCSLS -----------------------------------------------------------------


def _unit_rows(z: np.ndarray):
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    if np.any(norms == 0):
        raise AlignmentError("mapped vector collapsed to zero")
    return z / norms[:, None], norms


def _topk_indices(sim: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k largest entries of each row (unordered)."""
    if k >= sim.shape[1]:
        return np.broadcast_to(np.arange(sim.shape[1]), sim.shape).copy()
    return np.argpartition(-sim, k - 1, axis=1)[:, :k]


def rcsls_loss_and_grad(
    w: np.ndarray,
    X: np.ndarray,
    Y: np.ndarray,
    src_pool: np.ndarray,
    tgt_pool: np.ndarray,
    k: int,
    with_grad: bool = True,
):
    """Relaxed CSLS loss at ``w`` and its gradient with neighbourhoods held fixed.

    ``X``/``Y`` hold the training pairs (unit rows), ``src_pool``/``tgt_pool``
    the vocabulary prefixes over which the k-NN neighbourhoods are taken.
    """
    n = X.shape[0]
    Zt, zn = _unit_rows(X @ w)  # mapped training sources
    P = src_pool @ w
    Pt, pn = _unit_rows(P)

    # -2 cos(x_i W, y_i)
    c_pos = np.einsum("ij,ij->i", Zt, Y)

    # mean cos between x_i W and its k nearest targets
    sim_t = Zt @ tgt_pool.T
    nt = _topk_indices(sim_t, k)
    c_t = np.take_along_axis(sim_t, nt, axis=1).mean(axis=1)

    # mean cos between y_i and its k nearest mapped sources
    sim_s = Y @ Pt.T
    ns = _topk_indices(sim_s, k)
    c_s = np.take_along_axis(sim_s, ns, axis=1).mean(axis=1)

    loss = float(np.mean(-2.0 * c_pos + c_t + c_s))
    if not with_grad:
        return loss, None

    # d cos(z, y) / dz = (y/|y| - cos * z_hat) / |z|  (target rows are unit length)
    y_bar = tgt_pool[nt].mean(axis=1)
    g_z = (-2.0 * (Y - c_pos[:, None] * Zt) + (y_bar - c_t[:, None] * Zt)) / zn[:, None]
    grad = X.T @ g_z

    # pool rows receive (y_i - c_ij * p_hat_j) / |p_j| / k from every i listing them
    sims = np.take_along_axis(sim_s, ns, axis=1)
    g_p = np.zeros_like(P)
    flat = ns.ravel()
    np.add.at(g_p, flat, np.repeat(Y, k, axis=0) - sims.ravel()[:, None] * Pt[flat])
    g_p /= pn[:, None] * k
    grad += src_pool.T @ g_p
    return loss, grad / n


@dataclass
class RcslsTrace:
    losses: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    accepted: list = field(default_factory=list)


def fit_rcsls(
    tm: TrainMatrices,
    src_full: EmbeddingSpace,
    tgt_full: EmbeddingSpace,
    cfg: RcslsConfig | None = None,
    init: LinearMap | None = None,
    trace: RcslsTrace | None = None,
) -> LinearMap:
    """Refine ``init`` by full-batch gradient descent on the RCSLS loss.

    Neighbourhoods are recomputed every epoch over the first
    ``cfg.neighbor_pool`` rows of each vocabulary. A step that does not
    lower the loss is rejected and the step size halved, so the recorded
    epoch losses never increase. ``trace.losses[0]`` is the loss at init.
    """
    cfg = cfg or RcslsConfig()
    if init is None:
        init = fit_procrustes(tm)
    if init.d_src != tm.X.shape[1] or init.d_tgt != tm.Y.shape[1]:
        raise AlignmentError("initial map does not match training dimensions")
    src_pool = src_full.matrix[: cfg.neighbor_pool].astype(np.float64)
    tgt_pool = tgt_full.matrix[: cfg.neighbor_pool].astype(np.float64)
    if cfg.k_neighbors > min(len(src_pool), len(tgt_pool)):
        raise AlignmentError(
            f"k_neighbors={cfg.k_neighbors} exceeds available pool "
            f"({len(src_pool)} source, {len(tgt_pool)} target rows)"
        )
    trace = trace if trace is not None else RcslsTrace()

    w = np.array(init.matrix, dtype=np.float64)
    if cfg.orthogonal_project:
        w = nearest_orthogonal(w)
    step = cfg.step
    loss, grad = rcsls_loss_and_grad(w, tm.X, tm.Y, src_pool, tgt_pool, cfg.k_neighbors)
    if not np.isfinite(loss):
        raise AlignmentError("RCSLS loss is not finite at init")
    trace.losses.append(loss)
    for epoch in range(cfg.epochs):
        cand = w - step * grad
        if cfg.orthogonal_project:
            cand = nearest_orthogonal(cand)
        cand_loss, cand_grad = rcsls_loss_and_grad(
            cand, tm.X, tm.Y, src_pool, tgt_pool, cfg.k_neighbors
        )
        if not np.isfinite(cand_loss):
            raise AlignmentError(f"RCSLS loss became non-finite at epoch {epoch + 1}")
        trace.steps.append(step)
        if cand_loss < loss:
            w, loss, grad = cand, cand_loss, cand_grad
            trace.accepted.append(True)
        else:
            step /= 2.0
            trace.accepted.append(False)
        trace.losses.append(loss)
        logger.debug("rcsls epoch %d loss %.8f step %.4g", epoch + 1, loss, step)

    kind = "orthogonal" if cfg.orthogonal_project else "unconstrained"
    params = {
        "k_neighbors": cfg.k_neighbors,
        "epochs": cfg.epochs,
        "step": cfg.step,
        "neighbor_pool": cfg.neighbor_pool,
        "orthogonal_project": cfg.orthogonal_project,
        "final_loss": loss,
    }
    return LinearMap(w, kind=kind, method="rcsls", params=params)


def apply_map(lmap: LinearMap, space: EmbeddingSpace, renormalize: bool = True) -> EmbeddingSpace:
    if space.dim != lmap.d_src:
        raise AlignmentError(f"map expects dimension {lmap.d_src}, space has {space.dim}")
    mapped = space.matrix.astype(np.float64) @ lmap.matrix
    out = EmbeddingSpace(space.words, mapped, language=space.language)
    return normalize(out) if renormalize else out


# --- map files ---------------------------------------------------------------


def save_map(lmap: LinearMap, path: str | PathLike) -> None:
    doc = {
        "d_src": lmap.d_src,
        "d_tgt": lmap.d_tgt,
        "kind": lmap.kind,
        "method": lmap.method,
        "params": lmap.params,
        "matrix": [[float(v) for v in row] for row in lmap.matrix],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_map(path: str | PathLike) -> LinearMap:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise AlignmentError(f"cannot read map file {path}: {exc}") from exc
    try:
        m = np.array(doc["matrix"], dtype=np.float64)
        if m.shape != (doc["d_src"], doc["d_tgt"]):
            raise AlignmentError(
                f"{path}: matrix shape {m.shape} disagrees with d_src/d_tgt"
            )
        return LinearMap(m, kind=doc["kind"], method=doc.get("method", ""), params=doc.get("params", {}))
    except KeyError as exc:
        raise AlignmentError(f"{path}: missing field {exc}") from exc
