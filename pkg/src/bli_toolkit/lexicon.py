"""Bilingual dictionaries and their per-source grouping."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from os import PathLike

from .embeddings import EmbeddingSpace
from .errors import DictionaryFormatError, EvaluationError


@dataclass(frozen=True)
class BilingualLexicon:
    """Ordered (source, target) pairs without exact duplicates."""

    pairs: tuple[tuple[str, str], ...]
    direction: str = ""
    duplicates: int = 0

    def __post_init__(self):
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("lexicon contains duplicated (source, target) pairs")

    @classmethod
    def from_pairs(cls, pairs, direction: str = "") -> "BilingualLexicon":
        """Build a lexicon, dropping exact duplicates (first occurrence kept)."""
        pairs = [(p[0], p[1]) for p in pairs]
        kept = list(dict.fromkeys(pairs))
        return cls(tuple(kept), direction, duplicates=len(pairs) - len(kept))

    def __len__(self) -> int:
        return len(self.pairs)

    def sources(self) -> list[str]:
        return [s for s, _ in self.pairs]


@dataclass(frozen=True)
class GroupedLexicon:
    """One entry per unique source token with its ordered gold translations."""

    entries: tuple[tuple[str, tuple[str, ...]], ...]
    direction: str = ""
    _sources: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sources = [s for s, _ in self.entries]
        if len(set(sources)) != len(sources):
            raise ValueError("grouped lexicon has repeated source tokens")
        if any(not golds for _, golds in self.entries):
            raise ValueError("every source needs at least one gold target")
        object.__setattr__(self, "_sources", frozenset(sources))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, source: str) -> bool:
        return source in self._sources

    def sources(self) -> list[str]:
        return [s for s, _ in self.entries]

    def flatten(self) -> list[tuple[str, str]]:
        return [(s, t) for s, golds in self.entries for t in golds]

    def num_pairs(self) -> int:
        return sum(len(golds) for _, golds in self.entries)


def load_dictionary(path: str | PathLike, direction: str = "", nfc: bool = False) -> BilingualLexicon:
    """Read a whitespace-separated two-column dictionary.

    Blank lines are ignored. Any other line without exactly two fields is an
    error reported with its line number.
    """
    pairs = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                fields = line.split()
                if not fields:
                    continue
                if len(fields) != 2:
                    raise DictionaryFormatError(
                        f"{path}:{lineno}: expected 2 fields, found {len(fields)}"
                    )
                if nfc:
                    fields = [unicodedata.normalize("NFC", f) for f in fields]
                pairs.append((fields[0], fields[1]))
    except OSError as exc:
        raise DictionaryFormatError(f"cannot read dictionary {path}: {exc}") from exc
    return BilingualLexicon.from_pairs(pairs, direction=direction)


def group_by_source(lex: BilingualLexicon) -> GroupedLexicon:
    groups: dict[str, list[str]] = {}
    for src, tgt in lex.pairs:
        golds = groups.setdefault(src, [])
        if tgt not in golds:
            golds.append(tgt)
    return GroupedLexicon(tuple((s, tuple(g)) for s, g in groups.items()), lex.direction)


def reconcile(lex: GroupedLexicon, src_space: EmbeddingSpace) -> tuple[GroupedLexicon, int]:
    """Drop entries whose source token has no vector; gold targets are kept as-is."""
    usable = tuple((s, golds) for s, golds in lex.entries if s in src_space)
    if not usable:
        raise EvaluationError("no dictionary source word is present in the source vocabulary")
    return GroupedLexicon(usable, lex.direction), len(lex) - len(usable)
