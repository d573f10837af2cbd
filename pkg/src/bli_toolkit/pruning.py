"""Vocabulary pruning: keep only tokens written in the target language's script.

Tokens containing an ASCII letter are dropped when ``forbid_ascii_letters``
is set; digits and punctuation never cause a drop on their own. With script
ranges and ``require_allowed_char``, a token must also contain at least one
character from an allowed range.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .embeddings import EmbeddingSpace, subset
from .errors import BliError, ConfigError

# Presets for the non-Latin target languages pruning is meant for.
SCRIPT_PRESETS: dict[str, tuple[tuple[int, int], ...]] = {
    "cyrillic": ((0x0400, 0x04FF), (0x0500, 0x052F)),
    "sinhala": ((0x0D80, 0x0DFF),),
    "tamil": ((0x0B80, 0x0BFF),),
    "cjk": ((0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFAFF)),
    "japanese": (
        (0x3040, 0x309F),
        (0x30A0, 0x30FF),
        (0x3400, 0x4DBF),
        (0x4E00, 0x9FFF),
        (0xFF66, 0xFF9F),
    ),
}
LANGUAGE_PRESETS = {"ru": "cyrillic", "si": "sinhala", "ta": "tamil", "zh": "cjk", "ja": "japanese"}


class Decision(enum.Enum):
    KEEP = "keep"
    DROP = "drop"


@dataclass(frozen=True)
class PrunePolicy:
    forbid_ascii_letters: bool = True
    allowed_script_ranges: tuple[tuple[int, int], ...] | None = None
    require_allowed_char: bool = False
    name: str = ""

    def __post_init__(self):
        ranges = self.allowed_script_ranges
        if ranges is not None:
            ranges = tuple((int(a), int(b)) for a, b in ranges)
            prev_hi = -1
            for lo, hi in ranges:
                if not 0 <= lo <= hi <= 0x10FFFF:
                    raise ValueError(f"invalid code point range {lo:04X}-{hi:04X}")
                if lo <= prev_hi:
                    raise ValueError("script ranges must be ordered and non-overlapping")
                prev_hi = hi
            object.__setattr__(self, "allowed_script_ranges", ranges)
        if not (self.forbid_ascii_letters or (ranges and self.require_allowed_char)):
            raise ValueError("prune policy has no active criterion")

    @classmethod
    def preset(cls, script: str, forbid_ascii_letters: bool = True) -> "PrunePolicy":
        script = LANGUAGE_PRESETS.get(script, script)
        if script not in SCRIPT_PRESETS:
            raise ConfigError(f"unknown script preset {script!r}")
        return cls(forbid_ascii_letters, SCRIPT_PRESETS[script], True, name=script)

    @property
    def id(self) -> str:
        if self.name:
            return self.name
        parts = []
        if self.forbid_ascii_letters:
            parts.append("noascii")
        if self.allowed_script_ranges and self.require_allowed_char:
            parts.append("+".join(f"{a:04X}-{b:04X}" for a, b in self.allowed_script_ranges))
        return ",".join(parts)


def _is_ascii_letter(ch: str) -> bool:
    return ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def classify_token(policy: PrunePolicy, token: str) -> Decision:
    if policy.forbid_ascii_letters and any(_is_ascii_letter(c) for c in token):
        return Decision.DROP
    ranges = policy.allowed_script_ranges
    if ranges and policy.require_allowed_char:
        if not any(lo <= ord(c) <= hi for c in token for lo, hi in ranges):
            return Decision.DROP
    return Decision.KEEP


def prune_space(policy: PrunePolicy, space: EmbeddingSpace) -> tuple[EmbeddingSpace, int]:
    keep = [i for i, w in enumerate(space.words) if classify_token(policy, w) is Decision.KEEP]
    if not keep:
        raise BliError("pruning removed every token of the vocabulary")
    pruned = subset(space, np.asarray(keep))
    return pruned, len(space) - len(pruned)


def _parse_bool(value: str, key: str, path) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{path}: {key} must be true or false, got {value!r}")


def parse_ranges(text: str) -> tuple[tuple[int, int], ...]:
    """Parse ``"0D80-0DFF, 0B80-0BFF"`` into integer code point pairs."""
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        lo, sep, hi = chunk.partition("-")
        try:
            out.append((int(lo, 16), int(hi if sep else lo, 16)))
        except ValueError:
            raise ConfigError(f"bad code point range {chunk!r}") from None
    return tuple(sorted(out))


def load_policy(path: str | PathLike) -> PrunePolicy:
    """Read a ``key = value`` policy file (keys: forbid_ascii_letters, ranges, require_allowed_char)."""
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    key, _, value = line.partition(":")
                key = key.strip()
                if key not in ("forbid_ascii_letters", "ranges", "require_allowed_char", "preset"):
                    raise ConfigError(f"{path}:{lineno}: unknown policy key {key!r}")
                values[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read prune policy {path}: {exc}") from exc

    ranges = None
    if "preset" in values:
        script = LANGUAGE_PRESETS.get(values["preset"], values["preset"])
        if script not in SCRIPT_PRESETS:
            raise ConfigError(f"{path}: unknown preset {values['preset']!r}")
        ranges = SCRIPT_PRESETS[script]
    if values.get("ranges"):
        ranges = parse_ranges(values["ranges"])
    forbid = _parse_bool(values.get("forbid_ascii_letters", "false"), "forbid_ascii_letters", path)
    require = _parse_bool(
        values.get("require_allowed_char", "true" if ranges else "false"), "require_allowed_char", path
    )
    name = str(path).rsplit("/", 1)[-1]
    try:
        return PrunePolicy(forbid, ranges, require, name=name)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
