"""Precision@k for bilingual lexicon induction, exact and stem-based.

Stem-based matching follows the soft-match procedure: when no gold target
appears among the top-k candidates, the candidates are extended with their
stems and a hit is counted if a gold target or its stem is in that set.

Scoring is per unique source word by default (a source is correct when any
of its gold targets is found). ``per_pair=True`` scores every
(source, target) pair on its own instead.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import asdict, dataclass, field

from .embeddings import EmbeddingSpace
from .errors import EvaluationError
from .lexicon import GroupedLexicon
from .retrieval import RetrievalResult
from .stemming import StemRuleSet, stem

DEFAULT_KS = (1, 5, 10)
UNDEFINED = None  # improvement over a zero baseline


@dataclass
class PrecisionReport:
    mode: str
    ks: list[int]
    precision: dict[int, float]
    evaluated_sources: int
    dropped_sources: int = 0
    correct: dict[int, int] = field(default_factory=dict)
    exact_hits: dict[int, int] = field(default_factory=dict)
    stem_hits: dict[int, int] = field(default_factory=dict)
    per_pair: bool = False
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("precision", "correct", "exact_hits", "stem_hits"):
            d[key] = {str(k): v for k, v in d[key].items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PrecisionReport":
        d = dict(d)
        for key in ("precision", "correct", "exact_hits", "stem_hits"):
            d[key] = {int(k): v for k, v in d.get(key, {}).items()}
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def percent(self, k: int) -> float:
        return 100.0 * self.precision[k]


def _check(result: RetrievalResult, lex: GroupedLexicon, ks) -> list[int]:
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise EvaluationError("ks must be positive integers")
    if len(result) != len(lex):
        raise EvaluationError(f"{len(result)} ranked lists for {len(lex)} lexicon entries")
    if len(lex) == 0:
        raise EvaluationError("nothing to evaluate")
    if result.depth < ks[-1]:
        raise EvaluationError(f"retrieval depth {result.depth} is below max k {ks[-1]}")
    return ks


def _nfc(words, enabled):
    return [unicodedata.normalize("NFC", w) for w in words] if enabled else list(words)


def _score(result, lex, tgt, ks, rules, per_pair, nfc):
    """Return (total, correct, exact_hits, stem_hits) keyed by k."""
    candidates = result.tokens(tgt)
    correct = {k: 0 for k in ks}
    exact = {k: 0 for k in ks}
    soft = {k: 0 for k in ks}
    total = 0
    for (_, golds), cands in zip(lex.entries, candidates):
        golds = _nfc(golds, nfc)
        cands = _nfc(cands, nfc)
        units = [(g,) for g in golds] if per_pair else [tuple(golds)]
        total += len(units)
        for k in ks:
            top = cands[:k]
            top_set = set(top)
            full = None
            for unit in units:
                if any(g in top_set for g in unit):
                    exact[k] += 1
                    correct[k] += 1
                    continue
                if rules is None:
                    continue
                if full is None:
                    full = top_set | {stem(rules, c) for c in top}
                if any(g in full or stem(rules, g) in full for g in unit):
                    soft[k] += 1
                    correct[k] += 1
    return total, correct, exact, soft


def _report(mode, ks, total, correct, exact, soft, per_pair, dropped, config):
    return PrecisionReport(
        mode=mode,
        ks=list(ks),
        precision={k: correct[k] / total for k in ks},
        evaluated_sources=total,
        dropped_sources=dropped,
        correct=correct,
        exact_hits=exact,
        stem_hits=soft,
        per_pair=per_pair,
        config=dict(config or {}),
    )


def evaluate_exact(
    result: RetrievalResult,
    lex: GroupedLexicon,
    tgt: EmbeddingSpace,
    ks=DEFAULT_KS,
    per_pair: bool = False,
    dropped_sources: int = 0,
    config: dict | None = None,
    nfc: bool = False,
) -> PrecisionReport:
    ks = _check(result, lex, ks)
    total, correct, exact, soft = _score(result, lex, tgt, ks, None, per_pair, nfc)
    return _report("exact", ks, total, correct, exact, soft, per_pair, dropped_sources, config)


def evaluate_stem(
    result: RetrievalResult,
    lex: GroupedLexicon,
    tgt: EmbeddingSpace,
    rules: StemRuleSet,
    ks=DEFAULT_KS,
    per_pair: bool = False,
    dropped_sources: int = 0,
    config: dict | None = None,
    nfc: bool = False,
) -> PrecisionReport:
    ks = _check(result, lex, ks)
    total, correct, exact, soft = _score(result, lex, tgt, ks, rules, per_pair, nfc)
    return _report("stem", ks, total, correct, exact, soft, per_pair, dropped_sources, config)


def improvement_percent(base: PrecisionReport, improved: PrecisionReport) -> dict[int, float | None]:
    """Relative gain ``100 * (improved - base) / base`` per k; ``None`` when base is zero."""
    if list(base.ks) != list(improved.ks):
        raise EvaluationError(f"reports have different ks: {base.ks} vs {improved.ks}")
    return {k: relative_gain(base.precision[k], improved.precision[k]) for k in base.ks}


def relative_gain(base: float, improved: float) -> float | None:
    if base == 0:
        return UNDEFINED
    return 100.0 * (improved - base) / base
