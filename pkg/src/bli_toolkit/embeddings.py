"""Word-embedding spaces: loading, validation, normalisation and subsetting.

Text vector files follow the word2vec/fastText layout::

    <count> <dim>
    <token> <f1> ... <fdim>
    ...

Vectors are held as float32; norms are accumulated in float64.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Sequence

import numpy as np

from .errors import EmbeddingFormatError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-5


class EmbeddingSpace:
    """An ordered vocabulary with one row vector per token.

    Instances are immutable: the matrix is flagged read-only and the
    token index is built once at construction.
    """

    __slots__ = ("language", "words", "matrix", "normalized", "_index")

    def __init__(
        self,
        words: Sequence[str],
        matrix,
        language: str = "",
        normalized: bool = False,
    ):
        matrix = np.array(matrix, dtype=np.float32, copy=True)
        if matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {matrix.shape}")
        words = tuple(words)
        if len(words) != matrix.shape[0]:
            raise ValueError(
                f"{len(words)} words but {matrix.shape[0]} matrix rows"
            )
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            seen = set()
            dup = next(w for w in words if w in seen or seen.add(w))
            raise ValueError(f"duplicate token {dup!r}")
        if not np.all(np.isfinite(matrix)):
            bad = int(np.nonzero(~np.all(np.isfinite(matrix), axis=1))[0][0])
            raise ValueError(f"non-finite vector for token {words[bad]!r}")
        if normalized and matrix.shape[0]:
            norms = _row_norms(matrix)
            if np.max(np.abs(norms - 1.0)) > NORM_TOLERANCE:
                raise ValueError("space flagged normalized but rows are not unit length")
        matrix.setflags(write=False)
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "language", language)
        object.__setattr__(self, "normalized", bool(normalized))
        object.__setattr__(self, "_index", index)

    def __setattr__(self, name, value):
        raise AttributeError("EmbeddingSpace is immutable")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __repr__(self) -> str:
        return (
            f"EmbeddingSpace(language={self.language!r}, n={len(self)}, "
            f"dim={self.dim}, normalized={self.normalized})"
        )

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def lookup(self, token: str) -> int | None:
        return self._index.get(token)

    def vector(self, token: str) -> np.ndarray:
        return self.matrix[self._index[token]]


@dataclass(frozen=True)
class LoadStats:
    """Bookkeeping from :func:`load_text_embeddings`."""

    header_count: int
    header_dim: int
    retained: int
    duplicates: int
    malformed: int


def _row_norms(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    return np.sqrt(np.einsum("ij,ij->i", m, m))


def _parse_header(line: str, path) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise EmbeddingFormatError(f"{path}: header must be '<count> <dim>', got {line.strip()!r}")
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise EmbeddingFormatError(f"{path}: non-numeric header {line.strip()!r}") from None
    if count < 0 or dim < 1:
        raise EmbeddingFormatError(f"{path}: invalid header values {count} {dim}")
    return count, dim


def load_text_embeddings(
    path: str | PathLike,
    max_vocab: int | None = None,
    language: str = "",
    nfc: bool = False,
) -> tuple[EmbeddingSpace, LoadStats]:
    """Read a text vector file, keeping at most ``max_vocab`` rows in file order.

    Duplicate tokens keep their first occurrence. Lines that cannot be
    parsed as ``token + dim floats`` (tokens containing spaces, stray
    fields, non-numeric values) are skipped and counted. A line with
    fewer than ``dim`` values is a truncated vector and raises.
    """
    if max_vocab is not None and max_vocab < 1:
        raise ValueError("max_vocab must be a positive integer")
    try:
        fh = open(path, encoding="utf-8", errors="strict")
    except OSError as exc:
        raise EmbeddingFormatError(f"cannot read embedding file {path}: {exc}") from exc

    words: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    duplicates = malformed = 0
    with fh:
        header = fh.readline()
        if not header.strip():
            raise EmbeddingFormatError(f"{path}: missing header line")
        count, dim = _parse_header(header, path)
        for lineno, line in enumerate(fh, start=2):
            if max_vocab is not None and len(words) >= max_vocab:
                break
            fields = line.rstrip("\r\n").rstrip(" ").split(" ")
            if len(fields) < dim + 1:
                if len(fields) == 1 and not fields[0]:
                    malformed += 1
                    continue
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(fields) - 1}"
                )
            if len(fields) > dim + 1 or not fields[0]:
                malformed += 1
                continue
            try:
                vec = np.array(fields[1:], dtype=np.float32)
            except ValueError:
                malformed += 1
                continue
            if not np.all(np.isfinite(vec)):
                malformed += 1
                continue
            token = unicodedata.normalize("NFC", fields[0]) if nfc else fields[0]
            if token in seen:
                duplicates += 1
                continue
            seen.add(token)
            words.append(token)
            rows.append(vec)

    if not words:
        raise EmbeddingFormatError(f"{path}: no usable vectors")
    if duplicates or malformed:
        logger.info("%s: skipped %d duplicate and %d malformed lines", path, duplicates, malformed)
    space = EmbeddingSpace(words, np.vstack(rows), language=language)
    return space, LoadStats(count, dim, len(words), duplicates, malformed)


def save_text_embeddings(space: EmbeddingSpace, path: str | PathLike) -> None:
    """Write ``space`` in the text vector format (9 significant digits, exact for float32)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(space)} {space.dim}\n")
        for word, row in zip(space.words, space.matrix):
            fh.write(word)
            fh.write(" ")
            fh.write(" ".join(format(float(v), ".9g") for v in row))
            fh.write("\n")


def normalize(space: EmbeddingSpace) -> EmbeddingSpace:
    """Scale every row to unit L2 norm. Zero rows are rejected by name."""
    norms = _row_norms(space.matrix)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValueError(f"cannot normalize zero vector for token {space.words[zero[0]]!r}")
    if space.normalized:
        return space
    unit = space.matrix.astype(np.float64) / norms[:, None]
    return EmbeddingSpace(space.words, unit, language=space.language, normalized=True)


def lookup(space: EmbeddingSpace, token: str) -> int | None:
    return space.lookup(token)


def subset(space: EmbeddingSpace, keep: Iterable[int]) -> EmbeddingSpace:
    """Select rows (and their tokens) in the given order."""
    keep = np.asarray(list(keep), dtype=np.int64)
    n = len(space)
    if keep.size and (keep.min() < 0 or keep.max() >= n):
        raise IndexError(f"subset index out of range for space of size {n}")
    if np.unique(keep).size != keep.size:
        raise ValueError("subset indices must be unique")
    words = [space.words[i] for i in keep]
    return EmbeddingSpace(
        words,
        space.matrix[keep].reshape(keep.size, space.dim),
        language=space.language,
        normalized=space.normalized,
    )
