"""Command-line entry point: ``bli-toolkit {align,eval,prune,report,synth}``.

Settings come from flags and, optionally, a ``key = value`` file given with
``--config``; flags win over the file. Exit codes: 0 success, 1 runtime or
numerical error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import (
    RcslsConfig,
    RcslsTrace,
    apply_map,
    build_train_matrices,
    center,
    fit_least_squares,
    fit_procrustes,
    fit_rcsls,
    load_map,
    save_map,
)
from .embeddings import load_text_embeddings, normalize, save_text_embeddings
from .errors import BliError, ConfigError
from .evaluation import evaluate_exact, evaluate_stem
from .lexicon import group_by_source, load_dictionary, reconcile
from .pruning import PrunePolicy, load_policy, prune_space
from .report import merge, merged_csv, read_rows, render_text, row_from_report, write_rows
from .retrieval import CslsParams, retrieve
from .stemming import StemRuleSet, load_rules
from .synth import make_rotated_fixture, write_fixture

logger = logging.getLogger("bli_toolkit")

METHODS = ("lstsq", "procrustes", "rcsls")
CRITERIA = ("nn", "csls")
PATH_FIELDS = ("src_emb", "tgt_emb", "train_dict", "test_dict", "map", "stem_rules", "prune_policy", "config")
OUTPUT_FIELDS = ("json_out", "csv_out", "out", "out_dir", "out_csv", "out_text", "figure", "gain_figure")


@dataclass
class RunConfig:
    src_emb: str | None = None
    tgt_emb: str | None = None
    train_dict: str | None = None
    test_dict: str | None = None
    map: str | None = None
    stem_rules: str | None = None
    prune_policy: str | None = None
    prune_preset: str | None = None
    method: str = "procrustes"
    method_label: str | None = None
    criterion: str = "csls"
    ks: tuple = (1, 5, 10)
    csls_k: int = 10
    rs_pool: int | None = 50000
    max_vocab: int | None = None
    stem: bool = False
    prune: bool = False
    per_pair: bool = False
    center: bool = False
    nfc: bool = False
    pair: str | None = None
    json_out: str | None = None
    csv_out: str | None = None
    seed: int = 0
    rcsls_k: int = 10
    rcsls_epochs: int = 10
    rcsls_step: float = 1.0
    rcsls_pool: int = 20000
    rcsls_orthogonal: bool = False
    # prune / synth / report
    emb: str | None = None
    out: str | None = None
    n: int = 1000
    d: int = 50
    noise: float = 0.0
    out_dir: str | None = None
    inputs: list = field(default_factory=list)
    out_csv: str | None = None
    out_text: str | None = None
    figure: str | None = None
    gain_figure: str | None = None

    def fingerprint(self) -> str:
        """Hash of every setting that can change results (output paths excluded)."""
        d = {k: v for k, v in dataclasses.asdict(self).items() if k not in OUTPUT_FIELDS}
        blob = json.dumps(d, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ks"] = list(self.ks)
        return d


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


def _to_ks(v) -> tuple:
    if isinstance(v, (list, tuple)):
        items = v
    else:
        items = [p for p in str(v).replace(",", " ").split() if p]
    try:
        ks = tuple(sorted({int(x) for x in items}))
    except ValueError:
        raise ConfigError(f"ks must be integers, got {v!r}") from None
    if not ks or ks[0] < 1:
        raise ConfigError("ks must be positive integers")
    return ks


def _opt_int(v):
    if v is None or str(v).strip().lower() in ("", "none", "all"):
        return None
    return int(v)


CONVERTERS = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _convert(name: str, value):
    kind = CONVERTERS[name]
    try:
        if kind == "bool":
            return _to_bool(value)
        if kind == "tuple":
            return _to_ks(value)
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "int | None":
            return _opt_int(value)
        if kind == "list":
            return list(value) if isinstance(value, (list, tuple)) else str(value).split()
        return None if value is None else str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {value!r} for {name.replace('_', '-')}") from None


def read_config_file(path) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                if not sep:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key = key.strip().replace("-", "_")
                if key not in CONVERTERS:
                    raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
                values[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def resolve_config(flag_values: dict) -> RunConfig:
    config_path = flag_values.get("config")
    flag_values = {k: v for k, v in flag_values.items() if k in CONVERTERS}
    merged = {}
    if config_path:
        if not Path(config_path).is_file():
            raise ConfigError(f"--config: file not found: {config_path}")
        merged.update(read_config_file(config_path))
    merged.update(flag_values)
    cfg = RunConfig(**{k: _convert(k, v) for k, v in merged.items()})
    if cfg.method not in METHODS:
        raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {cfg.method!r}")
    if cfg.criterion not in CRITERIA:
        raise ConfigError(f"criterion must be one of {', '.join(CRITERIA)}, got {cfg.criterion!r}")
    return cfg


def require_files(cfg: RunConfig, *names: str) -> None:
    for name in names:
        value = getattr(cfg, name)
        flag = "--" + name.replace("_", "-")
        if not value:
            raise ConfigError(f"{flag} is required")
        if not Path(value).is_file():
            raise ConfigError(f"{flag}: file not found: {value}")


def _optional_files(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name):
            require_files(cfg, name)


# --- shared loading ----------------------------------------------------------------


def _load_spaces(cfg: RunConfig):
    src, src_stats = load_text_embeddings(cfg.src_emb, cfg.max_vocab, language="src", nfc=cfg.nfc)
    tgt, tgt_stats = load_text_embeddings(cfg.tgt_emb, cfg.max_vocab, language="tgt", nfc=cfg.nfc)
    for name, st in (("source", src_stats), ("target", tgt_stats)):
        logger.info("%s vocabulary: %d words (%d duplicates, %d malformed skipped)",
                    name, st.retained, st.duplicates, st.malformed)
    src, tgt = normalize(src), normalize(tgt)
    if cfg.center:
        src, tgt = center(src), center(tgt)
    return src, tgt


def _prune_policy(cfg: RunConfig) -> PrunePolicy:
    if cfg.prune_policy:
        return load_policy(cfg.prune_policy)
    if cfg.prune_preset:
        return PrunePolicy.preset(cfg.prune_preset)
    return PrunePolicy(forbid_ascii_letters=True, name="noascii")


def _stem_rules(cfg: RunConfig) -> StemRuleSet:
    return load_rules(cfg.stem_rules) if cfg.stem_rules else StemRuleSet.identity()


# --- commands ----------------------------------------------------------------------


def cmd_align(cfg: RunConfig) -> int:
    require_files(cfg, "src_emb", "tgt_emb", "train_dict")
    if not cfg.map:
        raise ConfigError("--map (output path for the fitted map) is required")
    src, tgt = _load_spaces(cfg)
    train = load_dictionary(cfg.train_dict, nfc=cfg.nfc)
    tm = build_train_matrices(train, src, tgt)
    if cfg.method == "lstsq":
        lmap = fit_least_squares(tm)
    elif cfg.method == "procrustes":
        lmap = fit_procrustes(tm)
    else:
        rc = RcslsConfig(cfg.rcsls_k, cfg.rcsls_epochs, cfg.rcsls_step, cfg.rcsls_pool, cfg.rcsls_orthogonal)
        trace = RcslsTrace()
        lmap = fit_rcsls(tm, src, tgt, rc, init=fit_procrustes(tm), trace=trace)
        print("rcsls losses: " + " ".join(f"{v:.6f}" for v in trace.losses))
    save_map(lmap, cfg.map)
    print(f"method: {lmap.method}")
    print(f"pairs used: {tm.n} (dropped {tm.dropped})")
    print(f"residual: {lmap.residual(tm):.8f}")
    if lmap.d_src == lmap.d_tgt:
        print(f"orthogonality defect: {lmap.orthogonality_defect():.3e}")
    print(f"map written to {cfg.map}")
    return 0


def _precision_line(report) -> str:
    return f"{report.mode:5s} " + "  ".join(f"P@{k} = {report.percent(k):.1f}" for k in report.ks)


def cmd_eval(cfg: RunConfig) -> int:
    require_files(cfg, "src_emb", "tgt_emb", "test_dict", "map")
    _optional_files(cfg, "stem_rules", "prune_policy")
    src, tgt = _load_spaces(cfg)
    lmap = load_map(cfg.map)
    mapped = apply_map(lmap, src, renormalize=True)

    policy_id = None
    if cfg.prune:
        policy = _prune_policy(cfg)
        tgt, removed = prune_space(policy, tgt)
        policy_id = policy.id
        print(f"pruned target vocabulary: kept {len(tgt)}, removed {removed}")

    grouped = group_by_source(load_dictionary(cfg.test_dict, nfc=cfg.nfc))
    usable, dropped = reconcile(grouped, mapped)
    rows = [mapped.lookup(s) for s in usable.sources()]
    depth = max(cfg.ks)
    params = CslsParams(cfg.csls_k, cfg.rs_pool)
    result = retrieve(cfg.criterion, mapped.matrix[rows], mapped.matrix, tgt, depth, params)

    rules = _stem_rules(cfg) if cfg.stem else None
    config = {
        "fingerprint": cfg.fingerprint(),
        "criterion": cfg.criterion,
        "csls_k": cfg.csls_k if cfg.criterion == "csls" else None,
        "rs_pool": cfg.rs_pool if cfg.criterion == "csls" else None,
        "prune_policy": policy_id,
        "stemmer": rules.id if rules else None,
        "map_method": lmap.method,
    }
    reports = [evaluate_exact(result, usable, tgt, cfg.ks, cfg.per_pair, dropped, config, nfc=cfg.nfc)]
    if rules is not None:
        reports.append(evaluate_stem(result, usable, tgt, rules, cfg.ks, cfg.per_pair, dropped, config, nfc=cfg.nfc))

    print(f"evaluated {reports[0].evaluated_sources} "
          f"{'pairs' if cfg.per_pair else 'source words'} (dropped {dropped} OOV sources)")
    for rep in reports:
        print(_precision_line(rep))

    pair = cfg.pair or f"{Path(cfg.src_emb).stem}-{Path(cfg.tgt_emb).stem}"
    method = cfg.method_label or lmap.method
    if cfg.json_out:
        doc = {
            "version": __version__,
            "fingerprint": cfg.fingerprint(),
            "config": cfg.to_dict(),
            "reports": [r.to_dict() for r in reports],
        }
        with open(cfg.json_out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    if cfg.csv_out:
        write_rows([row_from_report(r, pair, method, cfg.criterion, cfg.prune) for r in reports], cfg.csv_out)
    return 0


def cmd_prune(cfg: RunConfig) -> int:
    require_files(cfg, "emb")
    _optional_files(cfg, "prune_policy")
    if not cfg.out:
        raise ConfigError("--out is required")
    policy = _prune_policy(cfg)
    space, _ = load_text_embeddings(cfg.emb, cfg.max_vocab, nfc=cfg.nfc)
    pruned, removed = prune_space(policy, space)
    save_text_embeddings(pruned, cfg.out)
    print(f"kept {len(pruned)}, removed {removed} (policy {policy.id})")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    if not cfg.inputs:
        raise ConfigError("at least one input CSV is required")
    for p in cfg.inputs:
        if not Path(p).is_file():
            raise ConfigError(f"input file not found: {p}")
    rows = [r for p in cfg.inputs for r in read_rows(p)]
    table = merge(rows)
    text = render_text(table)
    sys.stdout.write(text)
    if cfg.out_csv:
        merged_csv(table, cfg.out_csv)
    if cfg.out_text:
        Path(cfg.out_text).write_text(text, encoding="utf-8")
    if cfg.figure or cfg.gain_figure:
        from .plotting import gain_bars, precision_bars

        if cfg.figure:
            precision_bars(table, cfg.figure)
        if cfg.gain_figure and not gain_bars(table, cfg.gain_figure):
            logger.warning("no base/variant rows; gain figure not written")
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    if cfg.n < 1 or cfg.d < 1:
        raise ConfigError("--n and --d must be positive")
    if not cfg.out_dir:
        raise ConfigError("--out-dir is required")
    fx = make_rotated_fixture(cfg.seed, cfg.n, cfg.d, cfg.noise)
    paths = write_fixture(fx, cfg.out_dir)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return 0


COMMANDS = {"align": cmd_align, "eval": cmd_eval, "prune": cmd_prune, "report": cmd_report, "synth": cmd_synth}


# --- argument parsing ------------------------------------------------------------


def _add(p, *flags, **kw):
    kw.setdefault("default", argparse.SUPPRESS)
    p.add_argument(*flags, **kw)


def _switch(p, name, help_text):
    p.add_argument(f"--{name}", dest=name.replace("-", "_"), action="store_const", const=True,
                   default=argparse.SUPPRESS, help=help_text)
    p.add_argument(f"--no-{name}", dest=name.replace("-", "_"), action="store_const", const=False,
                   default=argparse.SUPPRESS, help=argparse.SUPPRESS)


def _common(p):
    _add(p, "--config", help="key = value settings file (flags take precedence)")
    _add(p, "--max-vocab", help="keep only the first N vectors of each embedding file")
    _switch(p, "nfc", "NFC-normalize tokens of embeddings and dictionaries")


def _spaces(p):
    _add(p, "--src-emb", help="source text vector file")
    _add(p, "--tgt-emb", help="target text vector file")
    _switch(p, "center", "mean-centre both spaces (then re-normalize) before use")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bli-toolkit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="fit a linear map from a training dictionary")
    _common(p)
    _spaces(p)
    _add(p, "--train-dict", help="training dictionary (source target per line)")
    _add(p, "--map", help="output JSON map file")
    _add(p, "--method", help="lstsq | procrustes | rcsls (default procrustes)")
    _add(p, "--rcsls-k", help="RCSLS neighbourhood size (default 10)")
    _add(p, "--rcsls-epochs", help="RCSLS epochs (default 10)")
    _add(p, "--rcsls-step", help="RCSLS initial step size (default 1.0)")
    _add(p, "--rcsls-pool", help="vocabulary prefix used for RCSLS neighbourhoods (default 20000)")
    _switch(p, "rcsls-orthogonal", "project onto orthogonal matrices after every RCSLS epoch")

    p = sub.add_parser("eval", help="BLI precision@k of a fitted map")
    _common(p)
    _spaces(p)
    _add(p, "--test-dict", help="test dictionary")
    _add(p, "--map", help="JSON map file from 'align'")
    _add(p, "--criterion", help="nn | csls (default csls)")
    _add(p, "--ks", help="comma-separated k values (default 1,5,10)")
    _add(p, "--csls-k", help="CSLS neighbourhood size K (default 10)")
    _add(p, "--rs-pool", help="source rows used for the target-side CSLS penalty (default 50000, 'all')")
    _switch(p, "stem", "also report stem-based (soft) matching; rules should be for the target language, "
            "most useful when it is richly inflected")
    _add(p, "--stem-rules", help="suffix rule file for --stem (identity stemmer if omitted)")
    _switch(p, "prune", "prune the target vocabulary before retrieval")
    _add(p, "--prune-policy", help="policy file for --prune")
    _add(p, "--prune-preset", help="script preset for --prune: ru, si, ta, zh, ja")
    _switch(p, "per-pair", "score each dictionary pair instead of each unique source word")
    _add(p, "--pair", help="language-pair label for CSV rows")
    _add(p, "--method-label", help="method label for CSV rows (default: map's method)")
    _add(p, "--json-out", help="write the JSON report here")
    _add(p, "--csv-out", help="write CSV rows here")

    p = sub.add_parser("prune", help="write a pruned copy of an embedding file")
    _common(p)
    _add(p, "--emb", help="input text vector file")
    _add(p, "--out", help="output text vector file")
    _add(p, "--prune-policy", help="policy file")
    _add(p, "--prune-preset", help="script preset: ru, si, ta, zh, ja")

    p = sub.add_parser("report", help="merge CSV rows into tables (and figures)")
    _add(p, "--config", help="key = value settings file")
    _add(p, "inputs", nargs="+", help="CSV files written by 'eval --csv-out'")
    _add(p, "--out-csv", help="merged CSV with improvement columns")
    _add(p, "--out-text", help="aligned plain-text table")
    _add(p, "--figure", help="bar chart of P@k per row (png, pdf or svg)")
    _add(p, "--gain-figure", help="bar chart of relative improvements")

    p = sub.add_parser("synth", help="generate rotated-space fixtures")
    _add(p, "--config", help="key = value settings file")
    _add(p, "--seed", help="random seed (default 0)")
    _add(p, "--n", help="vocabulary size (default 1000)")
    _add(p, "--d", help="dimension (default 50)")
    _add(p, "--noise", help="relative Gaussian noise on target rows (default 0)")
    _add(p, "--out-dir", help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    values = vars(args)
    command = values.pop("command")
    verbose = values.pop("verbose", 0)
    logging.basicConfig(
        level=logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(values)
        start = time.perf_counter()
        code = COMMANDS[command](cfg)
        logger.info("%s finished in %.2fs", command, time.perf_counter() - start)
        return code
    except ConfigError as exc:
        print(f"bli-toolkit {command}: error: {exc}", file=sys.stderr)
        return 2
    except (BliError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"bli-toolkit {command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
