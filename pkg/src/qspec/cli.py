"""``qspec`` command-line interface.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical-integrity abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bootstrap import NotPSDError
from .estimator import QuantileSpectralDensity, confidence_bands
from .gof import gof_test
from .indicators import default_levels, parse_levels
from .lag_window import parse_window
from .null_models import MCConfig, model_from_dict, null_tables, simulate
from .simulation import reproduce_table
from .two_sample import REVERSIBILITY_NOTE, reversibility_test, two_sample_test
from .validation import DataError, NumericalIntegrityError

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

logger = logging.getLogger("qspec")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- ingestion

def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def ingest_csv(path: str, column=None, transform: str = "none") -> np.ndarray:
    """Read one numeric column of a CSV file.

    ``column`` is a header name or 0-based index; it may be omitted for
    single-column files.  A first row that is not numeric is taken as a
    header.  ``transform="log-return"`` maps prices ``p_t`` to
    ``log p_t - log p_{t-1}``; the minimum length (8 returns, so 9 prices) is
    enforced when the series is used.  Errors name the offending line.
    """
    if transform not in ("none", "log-return"):
        raise UsageError(f"unknown transform {transform!r}")
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: file is empty")
    header = None
    first = [c.strip() for c in rows[0]]
    if first and not all(_is_number(c) for c in first if c):
        header = first
    if column is None:
        ncol = len(header) if header else len(rows[0])
        if ncol != 1:
            raise UsageError(f"{path} has {ncol} columns; choose one with --column")
        idx = 0
    elif header is not None and str(column) in header:
        idx = header.index(str(column))
    else:
        try:
            idx = int(column)
        except ValueError:
            raise UsageError(f"column {column!r} not found in {path}") from None
    values, lines = [], []
    start = 1 if header is not None else 0
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if idx >= len(row) or not row[idx].strip():
            raise DataError(f"{path}, line {lineno}: blank value")
        cell = row[idx].strip()
        try:
            v = float(cell)
        except ValueError:
            raise DataError(f"{path}, line {lineno}: malformed number {cell!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{path}, line {lineno}: non-finite value {cell!r}")
        values.append(v)
        lines.append(lineno)
    x = np.asarray(values)
    if transform == "log-return":
        bad = np.flatnonzero(x <= 0)
        if bad.size:
            raise DataError(f"{path}, line {lines[bad[0]]}: non-positive price {x[bad[0]]}")
        x = np.diff(np.log(x))
    return x


def write_series_csv(path: str, x: np.ndarray, name: str = "x") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"{name}\n")
        for v in x:
            fh.write(f"{float(v)!r}\n")


# ------------------------------------------------------------------ config

DEFAULTS = {
    "column": None,
    "transform": "none",
    "window": "bartlett",
    "levels": "0.05:0.95:0.05",
    "alpha": 0.05,
    "bootstrap": 0,
    "copula": False,
    "plugin": False,
    "mc_n": 1_000_000,
    "mc_seed": 20120512,
    "cache_dir": None,
    "threads": None,
    "reps": 200,
    "bootstrap_reps": 500,
}


def _parse_null(value):
    """Inline TOML table, path to a TOML file, or an already parsed dict."""
    if value is None or isinstance(value, dict):
        return value
    text = str(value).strip()
    try:
        if os.path.exists(text):
            with open(text, "rb") as fh:
                doc = tomllib.load(fh)
            return doc.get("null", doc)
        return tomllib.loads(f"null = {text}")["null"]
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"cannot parse null model {text!r}: {exc}") from None


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in doc.items()}


def resolve_config(args: argparse.Namespace, keys) -> dict:
    """Defaults, then the config file, then explicit flags."""
    file_cfg = _load_config(getattr(args, "config", None))
    cfg = {}
    for k in keys:
        v = DEFAULTS.get(k)
        if k in file_cfg:
            v = file_cfg[k]
        flag = getattr(args, k, None)
        if flag is not None:
            v = flag
        cfg[k] = v
    unknown = set(file_cfg) - set(keys)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _resolve_seed(cfg: dict) -> int:
    seed = cfg.get("seed")
    if seed is None and os.environ.get("QSPEC_SEED"):
        try:
            seed = int(os.environ["QSPEC_SEED"])
        except ValueError:
            raise UsageError("QSPEC_SEED must be an integer") from None
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    return int(seed)


def _levels(cfg):
    lv = cfg["levels"]
    if isinstance(lv, (list, tuple)):
        return np.asarray(lv, dtype=float)
    return parse_levels(str(lv)) if lv else default_levels()


def _window(cfg):
    if cfg.get("M") is None:
        raise UsageError("--M is required")
    try:
        return parse_window(str(cfg["window"]), int(cfg["M"]))
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None


def _mc(cfg):
    return MCConfig(N=int(cfg["mc_n"]), seed=int(cfg["mc_seed"]), cache_dir=cfg["cache_dir"])


# ----------------------------------------------------------------- output

def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _emit(cfg: dict, command: str, result: dict, out: str | None) -> dict:
    report = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "result": result,
        "meta": {"timestamp": datetime.now(timezone.utc).isoformat()},
    }
    if out:
        with open(out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    return report


def _verdict(report) -> str:
    return report.summary()


def _dump_samples(path, samples):
    with open(path, "w") as fh:
        fh.write("replicate,statistic\n")
        for i, v in enumerate(samples):
            fh.write(f"{i},{float(v)!r}\n")


def _ingest(args, cfg, key="input"):
    path = cfg.get(key)
    if path is None:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return ingest_csv(path, cfg["column"], cfg["transform"])


# --------------------------------------------------------------- commands

COMMON = ("config", "column", "transform", "window", "M", "levels", "out")


def cmd_estimate(args):
    cfg = resolve_config(args, COMMON + ("input", "copula", "alpha", "csv"))
    x = _ingest(args, cfg)
    window = _window(cfg)
    est = QuantileSpectralDensity(M=window.M, window=window, levels=_levels(cfg), copula=bool(cfg["copula"])).fit(x)
    e = est.estimate_
    bands = confidence_bands(e, float(cfg["alpha"]))
    csv_path = cfg["csv"] or (os.path.splitext(cfg["out"])[0] + ".csv" if cfg["out"] else None)
    if csv_path:
        cfg["csv"] = csv_path
        _write_estimate_csv(csv_path, e, bands)
    result = {
        "T": e.T,
        "grid": e.grid.to_dict(),
        "omega": e.omega,
        "re": e.values.real,
        "im": e.values.imag,
    }
    _emit(cfg, "estimate", result, cfg["out"])
    diag = np.real(np.einsum("iik->ik", e.values))
    peak = e.omega[int(np.argmax(diag.mean(axis=0)[: e.T // 2]))]
    print(f"estimate: T={e.T} q={e.q} M={window.M} window={window.kind} peak_omega={peak:.4f}")
    return EXIT_OK


def _write_estimate_csv(path, e, bands):
    q, T = e.q, e.T
    cols = ("x_i", "x_j", "level_i", "level_j", "k", "omega", "re", "im",
            "ci_lo_re", "ci_hi_re", "ci_lo_im", "ci_hi_im")
    th, lv, om = e.grid.thresholds, e.grid.levels, e.omega

    def fmt(v):
        return "" if not np.isfinite(v) else repr(float(v))

    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(q):
            for j in range(q):
                g = e.values[i, j]
                for k in range(T):
                    fh.write(",".join((
                        repr(float(th[i])), repr(float(th[j])), repr(float(lv[i])), repr(float(lv[j])),
                        str(k + 1), repr(float(om[k])), repr(float(g[k].real)), repr(float(g[k].imag)),
                        fmt(bands["re_lo"][i, j, k]), fmt(bands["re_hi"][i, j, k]),
                        fmt(bands["im_lo"][i, j, k]), fmt(bands["im_hi"][i, j, k]),
                    )) + "\n")


def cmd_gof(args):
    cfg = resolve_config(args, COMMON + ("input", "null", "bootstrap", "seed", "dump_bootstrap", "plugin",
                                         "mc_n", "mc_seed", "cache_dir", "threads"))
    null = _parse_null(cfg["null"])
    if null is None:
        raise UsageError("a null model is required (--null or `null = {...}` in --config)")
    cfg["null"] = null
    try:
        model = model_from_dict(null)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid null model: {exc}") from None
    x = _ingest(args, cfg)
    window = _window(cfg)
    reps = int(cfg["bootstrap"] or 0)
    if reps:
        cfg["seed"] = _resolve_seed(cfg)
    tables = null_tables(model, _levels(cfg), window.M, _mc(cfg))
    report, samples = gof_test(x, tables, window, bootstrap=reps, seed=cfg.get("seed"),
                               plugin=bool(cfg["plugin"]), return_samples=True)
    if samples is not None and cfg["dump_bootstrap"]:
        _dump_samples(cfg["dump_bootstrap"], samples)
    _emit(cfg, "gof", report.to_dict(), cfg["out"])
    print(_verdict(report))
    return EXIT_OK


def cmd_two_sample(args):
    cfg = resolve_config(args, COMMON + ("input_a", "input_b", "alpha"))
    xa = _ingest(args, cfg, "input_a")
    xb = _ingest(args, cfg, "input_b")
    window = _window(cfg)
    report = two_sample_test(xa, xb, window, levels=_levels(cfg))
    alpha = float(cfg["alpha"])
    result = report.to_dict()
    result["reject"] = report.reject(alpha)
    _emit(cfg, "two-sample", result, cfg["out"])
    print(f"{_verdict(report)} reject(|z| > z_(1-{alpha}))={result['reject']}")
    return EXIT_OK


def cmd_reversibility(args):
    cfg = resolve_config(args, COMMON + ("input", "bootstrap", "seed", "dump_bootstrap"))
    x = _ingest(args, cfg)
    window = _window(cfg)
    cfg["bootstrap"] = int(cfg["bootstrap"] or 500)
    cfg["seed"] = _resolve_seed(cfg)
    from .indicators import QuantileGrid

    grid = QuantileGrid.from_sample(x, _levels(cfg))
    report, samples = reversibility_test(x, grid, window, cfg["bootstrap"], cfg["seed"], return_samples=True)
    if cfg["dump_bootstrap"]:
        _dump_samples(cfg["dump_bootstrap"], samples)
    _emit(cfg, "reversibility", report.to_dict(), cfg["out"])
    print(f"{_verdict(report)} [{REVERSIBILITY_NOTE}]")
    return EXIT_OK


def cmd_reproduce(args):
    cfg = resolve_config(args, ("config", "table", "reps", "bootstrap_reps", "seed", "out", "mc_n", "mc_seed",
                                "cache_dir", "threads"))
    if cfg.get("table") is None:
        raise UsageError("--table is required")
    overrides = {"bootstrap_reps": int(cfg["bootstrap_reps"]), "mc_config": _mc(cfg)}
    if cfg.get("seed") is not None:
        overrides["master_seed"] = int(cfg["seed"])
    try:
        table = reproduce_table(int(cfg["table"]), int(cfg["reps"]), n_jobs=int(cfg["threads"] or 1), **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg["out"]:
        table.to_csv(cfg["out"])
    print(table.format())
    return EXIT_OK


def cmd_simulate(args):
    cfg = resolve_config(args, ("config", "null", "T", "seed", "out"))
    null = _parse_null(cfg["null"])
    if null is None or cfg.get("T") is None:
        raise UsageError("simulate needs --model and --T")
    cfg["null"] = null
    cfg["seed"] = _resolve_seed(cfg)
    try:
        model = model_from_dict(null)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid model: {exc}") from None
    x = simulate(model, int(cfg["T"]), cfg["seed"])
    if cfg["out"]:
        write_series_csv(cfg["out"], x)
    else:
        for v in x:
            print(repr(float(v)))
    logger.info("simulated %d points from %s (seed %d)", x.size, model.kind, cfg["seed"])
    return EXIT_OK


# ----------------------------------------------------------------- parser

def _add_common(p, estimation=True):
    p.add_argument("--config", help="TOML file with settings (flags override it)")
    p.add_argument("--out", help="output path")
    if estimation:
        p.add_argument("--column", help="CSV column name or 0-based index")
        p.add_argument("--transform", choices=("none", "log-return"))
        p.add_argument("--window", help="truncated | bartlett | tukey:<coefficient json>")
        p.add_argument("--M", type=int, help="lag-window bandwidth")
        p.add_argument("--levels", help="grid levels, e.g. 0.05:0.95:0.05 or 0.25,0.5,0.75")


def _add_mc(p):
    p.add_argument("--mc-n", dest="mc_n", type=int, help="Monte Carlo path length for null tables")
    p.add_argument("--mc-seed", dest="mc_seed", type=int, help="seed of the Monte Carlo tables")
    p.add_argument("--cache-dir", dest="cache_dir", help="directory caching Monte Carlo tables")
    p.add_argument("--threads", type=int, help="cap on parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qspec", description="Quantile spectral density estimation and tests.")
    parser.add_argument("--version", action="version", version=f"qspec {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the quantile spectral density")
    _add_common(p)
    p.add_argument("--input", help="CSV file")
    p.add_argument("--copula", action="store_true", default=None, help="rank-based copula estimate")
    p.add_argument("--alpha", type=float, help="confidence band level (default 0.05)")
    p.add_argument("--csv", help="tidy CSV output (default: --out with .csv)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("gof", help="goodness-of-fit test against a null model")
    _add_common(p)
    _add_mc(p)
    p.add_argument("--input", help="CSV file")
    p.add_argument("--null", help='inline TOML table, e.g. {kind="ar1",mu=0,a=0.5,sigma_eps=1}, or a TOML file')
    p.add_argument("--bootstrap", type=int, help="number of bootstrap replicates (0: none)")
    p.add_argument("--seed", type=int, help="bootstrap seed (fallback: QSPEC_SEED)")
    p.add_argument("--dump-bootstrap", dest="dump_bootstrap", help="CSV of bootstrap statistics")
    p.add_argument("--plugin", action="store_true", default=None, help="plug-in null moments")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("two-sample", help="test equal serial dependence of two series")
    _add_common(p)
    p.add_argument("--input-a", dest="input_a", help="first CSV file")
    p.add_argument("--input-b", dest="input_b", help="second CSV file")
    p.add_argument("--alpha", type=float, help="level of the |z| rule (default 0.05)")
    p.set_defaults(func=cmd_two_sample)

    p = sub.add_parser("reversibility", help="bootstrap test of time reversibility")
    _add_common(p)
    p.add_argument("--input", help="CSV file")
    p.add_argument("--bootstrap", type=int, help="bootstrap replicates (default 500)")
    p.add_argument("--seed", type=int, help="bootstrap seed (fallback: QSPEC_SEED)")
    p.add_argument("--dump-bootstrap", dest="dump_bootstrap", help="CSV of bootstrap statistics")
    p.set_defaults(func=cmd_reversibility)

    p = sub.add_parser("reproduce", help="re-run one of the published simulation tables")
    _add_common(p, estimation=False)
    _add_mc(p)
    p.add_argument("--table", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--reps", type=int, help="replications per cell (default 200)")
    p.add_argument("--bootstrap-reps", dest="bootstrap_reps", type=int, help="bootstrap replicates per cell")
    p.add_argument("--seed", type=int, help="master seed")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("simulate", help="simulate a model and write a CSV")
    _add_common(p, estimation=False)
    p.add_argument("--model", dest="null", help="inline TOML table or TOML file")
    p.add_argument("--T", type=int, help="series length")
    p.add_argument("--seed", type=int, help="seed (fallback: QSPEC_SEED)")
    p.set_defaults(func=cmd_simulate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "threads", None):
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=int(args.threads)):
                return args.func(args)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"qspec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalIntegrityError, NotPSDError) as exc:
        print(f"qspec: numerical integrity abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
