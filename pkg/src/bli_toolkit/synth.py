"""Synthetic aligned spaces for tests and smoke runs.

The target space is the source space under a random rotation, optionally
perturbed by Gaussian noise and re-normalised, so the generating rotation is
the ground truth for any alignment method.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .alignment import LinearMap, save_map
from .embeddings import EmbeddingSpace, save_text_embeddings
from .lexicon import BilingualLexicon


def random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-random rotation (orthogonal, determinant +1)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@dataclass(frozen=True)
class RotatedFixture:
    src: EmbeddingSpace
    tgt: EmbeddingSpace
    lexicon: BilingualLexicon
    rotation: np.ndarray


def source_words(n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"s{i:0{width}d}" for i in range(n)]


def target_words(n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"t{i:0{width}d}" for i in range(n)]


def make_rotated_fixture(seed: int, n: int, d: int, noise: float = 0.0) -> RotatedFixture:
    """Source rows are random unit vectors; target row i is ``src_i @ R`` (+ noise).

    ``noise`` is the expected norm of the additive Gaussian perturbation
    relative to the unit rows. The dictionary pairs source i with target i.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(seed)
    x = random_unit_rows(rng, n, d).astype(np.float32).astype(np.float64)
    rot = random_rotation(rng, d)
    y = x @ rot
    if noise:
        y = y + noise * rng.standard_normal((n, d)) / np.sqrt(d)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    sw, tw = source_words(n), target_words(n)
    src = EmbeddingSpace(sw, x, language="src", normalized=True)
    tgt = EmbeddingSpace(tw, y, language="tgt", normalized=True)
    lex = BilingualLexicon(tuple(zip(sw, tw)), direction="src-tgt")
    return RotatedFixture(src, tgt, lex, rot)


def make_linear_fixture(seed: int, n: int, d: int):
    """Return ``(X, Y, A)`` with ``Y = X @ A`` for a random dense ``A``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d))
    a = rng.standard_normal((d, d))
    return x, x @ a, a


def write_fixture(fx: RotatedFixture, outdir) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "src": outdir / "src.vec",
        "tgt": outdir / "tgt.vec",
        "dict": outdir / "dict.txt",
        "rotation": outdir / "rotation.json",
    }
    save_text_embeddings(fx.src, paths["src"])
    save_text_embeddings(fx.tgt, paths["tgt"])
    with open(paths["dict"], "w", encoding="utf-8") as fh:
        for s, t in fx.lexicon.pairs:
            fh.write(f"{s} {t}\n")
    save_map(LinearMap(fx.rotation, kind="orthogonal", method="generator"), paths["rotation"])
    return paths
