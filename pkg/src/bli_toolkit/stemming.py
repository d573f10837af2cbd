"""Longest-suffix stripping driven by per-language rule files.

A rule file has one ``<suffix> <min_stem_len>`` pair per line; ``#`` starts
a comment line. At most one suffix is stripped per word.
"""

from __future__ import annotations

from dataclasses import dataclass
from os import PathLike

from .errors import ConfigError


@dataclass(frozen=True)
class StemRuleSet:
    language: str
    suffixes: tuple[tuple[str, int], ...] = ()
    name: str = ""

    def __post_init__(self):
        for suffix, min_len in self.suffixes:
            if not suffix:
                raise ValueError("empty suffix in stem rules")
            if min_len < 1:
                raise ValueError(f"minimum stem length for {suffix!r} must be positive")
        # stable sort keeps file order among equal lengths
        ordered = tuple(sorted(self.suffixes, key=lambda r: -len(r[0])))
        object.__setattr__(self, "suffixes", ordered)

    @classmethod
    def identity(cls, language: str = "") -> "StemRuleSet":
        return cls(language, (), name="identity")

    @property
    def id(self) -> str:
        return self.name or ("identity" if not self.suffixes else f"rules:{self.language}")

    def __call__(self, word: str) -> str:
        return stem(self, word)


def stem(rules: StemRuleSet, word: str) -> str:
    for suffix, min_len in rules.suffixes:
        if word.endswith(suffix) and len(word) - len(suffix) >= min_len:
            return word[: len(word) - len(suffix)]
    return word


def stem_all(rules: StemRuleSet, words) -> list[str]:
    return [stem(rules, w) for w in words]


def load_rules(path: str | PathLike, language: str = "") -> StemRuleSet:
    rules = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                fields = line.split()
                if len(fields) != 2:
                    raise ConfigError(f"{path}:{lineno}: expected '<suffix> <min_stem_len>'")
                try:
                    rules.append((fields[0], int(fields[1])))
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: minimum stem length must be an integer") from None
    except OSError as exc:
        raise ConfigError(f"cannot read stem rules {path}: {exc}") from exc
    try:
        return StemRuleSet(language, tuple(rules), name=str(path).rsplit("/", 1)[-1])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
