"""Table assembly for evaluation rows.

Each evaluation run emits CSV rows ``pair,method,criterion,mode,pruned,P@k...``
with precision in percent. Merging sorts rows, checks that every input uses
the same ks, and attaches relative-improvement columns for variant rows:

* a stem-mode row is compared with the exact-mode row of the same setting;
* a pruned exact row is compared with the unpruned exact row.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from os import PathLike

from .errors import ConfigError, EvaluationError
from .evaluation import PrecisionReport, relative_gain

KEY_COLUMNS = ("pair", "method", "criterion", "mode", "pruned")


def precision_columns(ks) -> list[str]:
    return [f"P@{k}" for k in ks]


@dataclass(frozen=True)
class Row:
    pair: str
    method: str
    criterion: str
    mode: str
    pruned: bool
    values: tuple[tuple[int, float], ...]

    @property
    def ks(self) -> list[int]:
        return [k for k, _ in self.values]

    def value(self, k: int) -> float:
        return dict(self.values)[k]

    def sort_key(self):
        return (self.pair, self.method, self.criterion, self.mode, self.pruned)

    def label(self) -> str:
        tags = [self.method, self.criterion]
        if self.mode == "stem":
            tags.append("soft")
        if self.pruned:
            tags.append("pruned")
        return f"{self.pair} {'+'.join(tags)}"


def row_from_report(report: PrecisionReport, pair: str, method: str, criterion: str, pruned: bool) -> Row:
    return Row(pair, method, criterion, report.mode, pruned,
               tuple((k, report.percent(k)) for k in report.ks))


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def write_rows(rows, path: str | PathLike | None = None) -> str:
    rows = list(rows)
    if not rows:
        raise EvaluationError("no rows to write")
    ks = rows[0].ks
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(KEY_COLUMNS) + precision_columns(ks))
    for r in rows:
        if r.ks != ks:
            raise EvaluationError("rows have inconsistent ks")
        w.writerow([r.pair, r.method, r.criterion, r.mode, "yes" if r.pruned else "no"]
                   + [_fmt(v) for _, v in r.values])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_rows(path: str | PathLike) -> list[Row]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read report rows {path}: {exc}") from exc
    if header is None or tuple(header[:5]) != KEY_COLUMNS:
        raise EvaluationError(f"{path}: not a report CSV (header {header})")
    try:
        ks = [int(h.removeprefix("P@")) for h in header[5:]]
    except ValueError:
        raise EvaluationError(f"{path}: bad precision column in header {header}") from None
    out = []
    for line in rows:
        if not line:
            continue
        if len(line) != len(header):
            raise EvaluationError(f"{path}: row has {len(line)} fields, header has {len(header)}")
        out.append(Row(line[0], line[1], line[2], line[3], line[4] == "yes",
                       tuple((k, float(v)) for k, v in zip(ks, line[5:]))))
    return out


def base_of(row: Row, index: dict) -> Row | None:
    """The row this variant is measured against, if present."""
    if row.mode == "stem":
        key = (row.pair, row.method, row.criterion, "exact", row.pruned)
    elif row.pruned:
        key = (row.pair, row.method, row.criterion, row.mode, False)
    else:
        return None
    return index.get(key)


@dataclass
class MergedTable:
    ks: list[int]
    rows: list[Row]
    gains: list[dict | None]  # per row: k -> percent (None = undefined), or None without a base
    bases: list[Row | None]

    def has_gains(self) -> bool:
        return any(g is not None for g in self.gains)


def merge(rows) -> MergedTable:
    rows = list(rows)
    if not rows:
        raise EvaluationError("no rows to merge")
    ks = rows[0].ks
    for r in rows:
        if r.ks != ks:
            raise EvaluationError(f"inconsistent ks across rows: {ks} vs {r.ks}")
    rows.sort(key=Row.sort_key)
    index = {r.sort_key(): r for r in rows}
    gains, bases = [], []
    for r in rows:
        b = base_of(r, index)
        bases.append(b)
        gains.append(None if b is None else {k: relative_gain(b.value(k), r.value(k)) for k in ks})
    return MergedTable(ks, rows, gains, bases)


def _gain_text(g) -> str:
    return "n/a" if g is None else f"{g:+.1f}%"


def merged_csv(table: MergedTable, path: str | PathLike | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(KEY_COLUMNS) + precision_columns(table.ks)
    if table.has_gains():
        header += ["base"] + [f"gain@{k}" for k in table.ks]
    w.writerow(header)
    for r, g, b in zip(table.rows, table.gains, table.bases):
        line = [r.pair, r.method, r.criterion, r.mode, "yes" if r.pruned else "no"]
        line += [_fmt(v) for _, v in r.values]
        if table.has_gains():
            if g is None:
                line += [""] * (1 + len(table.ks))
            else:
                line += [f"{b.mode}/{'pruned' if b.pruned else 'unpruned'}"]
                line += ["n/a" if g[k] is None else _fmt(g[k]) for k in table.ks]
        w.writerow(line)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def render_text(table: MergedTable) -> str:
    """Aligned plain-text table, precision shown with one decimal."""
    header = ["pair", "method", "criterion", "mode", "pruned"] + precision_columns(table.ks)
    if table.has_gains():
        header += [f"gain@{k}" for k in table.ks]
    lines = [header]
    for r, g in zip(table.rows, table.gains):
        cells = [r.pair, r.method, r.criterion, r.mode, "yes" if r.pruned else "no"]
        cells += [f"{v:.1f}" for _, v in r.values]
        if table.has_gains():
            cells += ["" if g is None else _gain_text(g[k]) for k in table.ks]
        lines.append(cells)
    widths = [max(len(line[i]) for line in lines) for i in range(len(header))]
    numeric_from = 5
    out = []
    for j, line in enumerate(lines):
        cells = [c.ljust(w) if i < numeric_from else c.rjust(w) for i, (c, w) in enumerate(zip(line, widths))]
        out.append("  ".join(cells).rstrip())
        if j == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"
