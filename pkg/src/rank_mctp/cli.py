"""Command-line front end: ``analyze``, ``ratio`` and ``simulate``.

stdout carries only the payload (JSON or TSV); diagnostics go to stderr.
Exit status is 0 on success, 2 for invalid input or configuration and 3 for
degenerate statistics.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .ats import ats_infer
from .bootstrap import BootstrapConfig, boot_ats, boot_mctp, bootstrap_distributions
from .contrasts import KINDS, ContrastFamily, factorial_contrast, projection, read_contrast_tsv
from .covariance import estimate_all
from .data import DEFAULT_COLUMNS, Dataset, ingest_long_csv
from .distributions import QuantileConfig, check_alpha
from .errors import BadConfig, DenominatorNearZero, RankMctpError
from .mctp import mctp_infer
from .ratio import fieller_scis, read_ratio_tsv
from .simulation import SIM_EFFECTS, TESTS, SimConfig, power_study, type1_study

SCHEMA_VERSION = "1.0"
EFFECT_NAMES = {"main_a": "main_A", "main_d": "main_D", "interaction": "interaction", "cells": "whole_cell"}
METHODS = {
    "asymptotic": ("mctp",),
    "bootstrap": ("bootmctp", "bootats"),
    "ats": ("ats",),
    "all": ("mctp", "bootmctp", "ats", "bootats"),
}

# option defaults; None in argparse means "not given", so config files can fill in
COMMON_DEFAULTS = {"alpha": 0.05, "seed": None, "format": "json", "threads": None, "timing": False}
ANALYZE_DEFAULTS = {
    **COMMON_DEFAULTS,
    "input": None, "subject": "subject", "factor_a": "group", "factor_d": "time", "value": "value",
    "group_order": None, "time_order": None, "contrast": "tukey", "effect": None, "method": "all",
    "bootstrap": 1000, "quantile_mc": 100_000,
}
RATIO_DEFAULTS = {k: v for k, v in ANALYZE_DEFAULTS.items() if k not in ("contrast", "effect", "method", "quantile_mc")}
RATIO_DEFAULTS.update({"ratios": None, "margin": 1.0, "strict": False})
SIMULATE_DEFAULTS = {
    **COMMON_DEFAULTS,
    "setting": "s1", "cov": "cs", "rho": 0.6, "n": "20", "runs": 1000, "bootstrap": 1000,
    "tests": "mctp,bootmctp,ats", "contrast": "centering", "effect": None, "delta": None,
    "power_effect": "A", "quantile_mc": 100_000,
}
# options that do not influence results and are left out of the manifest
NON_RESULT_KEYS = {"threads", "timing", "format", "config"}


def add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", help="family-wise level in (0, 1)")
    p.add_argument("--seed", help="master seed; drawn from system entropy when absent")
    p.add_argument("--format", choices=("json", "tsv"))
    p.add_argument("--threads", help="worker threads (default: RANK_MCTP_THREADS or CPU count)")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--timing", action="store_true", default=None, help="add wall-clock time to the manifest")


def add_data(p: argparse.ArgumentParser, quantile: bool = True) -> None:
    p.add_argument("--input", help="long-format CSV")
    p.add_argument("--subject", help="subject column")
    p.add_argument("--factor-a", dest="factor_a", help="whole-plot factor column")
    p.add_argument("--factor-d", dest="factor_d", help="repeated-measures factor column")
    p.add_argument("--value", help="response column")
    p.add_argument("--group-order", dest="group_order", help="comma-separated level order for factor A")
    p.add_argument("--time-order", dest="time_order", help="comma-separated level order for factor D")
    p.add_argument("--bootstrap", help="bootstrap replicates B")
    if quantile:
        p.add_argument("--quantile-mc", dest="quantile_mc", help="Monte-Carlo draws for normal quantiles")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rank-mctp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="multiple contrast tests and ATS for one dataset")
    add_data(an)
    an.add_argument("--contrast", help=f"one of {', '.join(KINDS)} or a TSV file of coefficients")
    an.add_argument("--effect", action="append", choices=tuple(EFFECT_NAMES),
                    help="effect to test (repeatable; default main_a, main_d, interaction)")
    an.add_argument("--method", choices=tuple(METHODS))
    add_common(an)

    ra = sub.add_parser("ratio", help="simultaneous Fieller intervals for ratios of effects")
    add_data(ra, quantile=False)
    ra.add_argument("--ratios", help="TSV with a numerator row then a denominator row per ratio")
    ra.add_argument("--margin", help="null value for the one-sided tests (default 1)")
    ra.add_argument("--strict", action="store_true", default=None, help="fail on unbounded intervals")
    add_common(ra)

    si = sub.add_parser("simulate", help="type-I error or power study")
    si.add_argument("--setting", type=str.lower, choices=("s1", "s2"))
    si.add_argument("--cov", type=str.lower, choices=("cs", "ar", "tpl"))
    si.add_argument("--rho", help="AR(1) correlation (default 0.6)")
    si.add_argument("--n", help="comma-separated per-group sample sizes")
    si.add_argument("--runs", help="simulation runs per cell")
    si.add_argument("--bootstrap", help="bootstrap replicates per run")
    si.add_argument("--tests", help=f"comma-separated subset of {','.join(TESTS)}")
    si.add_argument("--contrast", help="comma-separated contrast kinds")
    si.add_argument("--effect", help=f"comma-separated subset of {','.join(SIM_EFFECTS)} (type-I study)")
    si.add_argument("--delta", help="comma-separated shift grid; runs a power study when given")
    si.add_argument("--power-effect", dest="power_effect", choices=("A", "D"))
    si.add_argument("--quantile-mc", dest="quantile_mc", help="Monte-Carlo draws for normal quantiles")
    add_common(si)
    return parser


def read_config_file(path: str) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise BadConfig(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise BadConfig(f"config line {lineno}: expected key=value")
        key, val = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def merge_options(args: argparse.Namespace, defaults: dict) -> dict:
    given = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    from_file = read_config_file(args.config) if args.config else {}
    unknown = set(from_file) - set(defaults)
    if unknown:
        raise BadConfig(f"unknown config keys {sorted(unknown)}")
    opts = dict(defaults)
    opts.update(from_file)
    opts.update(given)
    return opts


def _int(opts: dict, key: str, lo: int | None = None) -> int:
    try:
        val = int(str(opts[key]))
    except ValueError:
        raise BadConfig(f"--{key.replace('_', '-')} must be an integer, got {opts[key]!r}") from None
    if lo is not None and val < lo:
        raise BadConfig(f"--{key.replace('_', '-')} must be at least {lo}, got {val}")
    return val


def _float(opts: dict, key: str) -> float:
    try:
        return float(str(opts[key]))
    except ValueError:
        raise BadConfig(f"--{key.replace('_', '-')} must be a number, got {opts[key]!r}") from None


def _floats(vals: list[str], key: str) -> list[float]:
    try:
        return [float(x) for x in vals]
    except ValueError:
        raise BadConfig(f"--{key} must be a comma-separated list of numbers") from None


def _bool(val) -> bool:
    if isinstance(val, bool):
        return val
    return str(val).strip().lower() in ("1", "true", "yes", "on")


def _list(val) -> list[str] | None:
    if val is None:
        return None
    if isinstance(val, (list, tuple)):
        return list(val)
    return [x.strip() for x in str(val).split(",") if x.strip()]


def resolve_threads(opts: dict) -> int:
    raw = opts.get("threads") or os.environ.get("RANK_MCTP_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        t = int(raw)
    except ValueError:
        raise BadConfig(f"threads must be an integer, got {raw!r}") from None
    if t < 1:
        raise BadConfig("threads must be at least 1")
    return t


def resolve_seed(opts: dict) -> tuple[int, str]:
    if opts.get("seed") is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
        return seed, "entropy"
    seed = _int(opts, "seed", 0)
    if seed >= 2**64:
        raise BadConfig("seed must be below 2**64")
    return seed, "user"


def digest(path: str | None) -> str | None:
    if not path:
        return None
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def manifest(command: str, opts: dict, seed: int, seed_source: str, files: dict, started: float | None) -> dict:
    config = {k: v for k, v in sorted(opts.items()) if k not in NON_RESULT_KEYS}
    config["seed"] = seed
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "seed_source": seed_source,
        "versions": {
            "rank_mctp": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "inputs": {k: {"path": v, "sha256": digest(v)} for k, v in files.items() if v},
    }
    if started is not None:
        out["wall_clock_s"] = time.perf_counter() - started
    return out


def load_data(opts: dict) -> tuple[Dataset, dict]:
    if not opts.get("input"):
        raise BadConfig("--input is required")
    columns = {"subject": opts["subject"], "group": opts["factor_a"], "time": opts["factor_d"],
               "value": opts["value"]}
    path = opts["input"]
    try:
        with open(path, newline="") as fh:
            data = ingest_long_csv(fh, columns, _list(opts.get("group_order")), _list(opts.get("time_order")))
    except OSError as exc:
        raise BadConfig(f"cannot read input {path}: {exc}") from None
    return data, columns


def contrast_for(effect: str, spec: str, data: Dataset) -> ContrastFamily:
    """Contrast family for one effect from a kind name or a coefficient file.

    A file gives factor-level rows for main effects (length a or d) and
    cell-level rows (length a*d) for ``cells`` and ``interaction``.
    """
    design = data.design
    if spec in KINDS:
        return factorial_contrast(effect, design, spec, group_names=data.group_names,
                                  time_names=data.time_names)
    path = Path(spec)
    if not path.is_file():
        raise BadConfig(f"--contrast must be one of {KINDS} or an existing file, got {spec!r}")
    text = path.read_text()
    if effect == "main_A":
        return factorial_contrast(effect, design, read_contrast_tsv(text, design.a))
    if effect == "main_D":
        return factorial_contrast(effect, design, read_contrast_tsv(text, design.d))
    return read_contrast_tsv(text, design.cells)


def effect_table(est, data: Dataset) -> list[dict]:
    return [
        {"group": g, "time": t, "cell": f"{g}:{t}", "p": float(est.p[i * data.design.d + j])}
        for i, g in enumerate(data.group_names)
        for j, t in enumerate(data.time_names)
    ]


def cmd_analyze(opts: dict, threads: int, started: float | None) -> tuple[dict, str]:
    alpha = check_alpha(_float(opts, "alpha"))
    seed, source = resolve_seed(opts)
    B = _int(opts, "bootstrap", 100)
    M = _int(opts, "quantile_mc", 1000)
    method = opts["method"]
    if method not in METHODS:
        raise BadConfig(f"--method must be one of {tuple(METHODS)}")
    effects = _list(opts.get("effect")) or ["main_a", "main_d", "interaction"]
    bad = [e for e in effects if e not in EFFECT_NAMES]
    if bad:
        raise BadConfig(f"unknown effects {bad}; choose from {tuple(EFFECT_NAMES)}")
    opts = {**opts, "effect": effects, "alpha": alpha, "bootstrap": B, "quantile_mc": M}
    data, _ = load_data(opts)
    est = estimate_all(data)
    families = [(e, contrast_for(EFFECT_NAMES[e], str(opts["contrast"]), data)) for e in effects]
    tests = METHODS[method]
    bcfg = BootstrapConfig(B=B, seed=seed, alpha=alpha, threads=threads)
    qcfg = QuantileConfig(mc_size=M, seed=seed, alpha=alpha, threads=threads)
    dist = None
    if "bootmctp" in tests or "bootats" in tests:
        dist = bootstrap_distributions(
            est, bcfg,
            linear=[C.C for _, C in families] if "bootmctp" in tests else (),
            projections=[projection(C) for _, C in families] if "bootats" in tests else (),
        )
    results = []
    for k, (name, C) in enumerate(families):
        entry = {"effect": name, "contrast": C.kind, "labels": list(C.labels), "tests": {}}
        if "mctp" in tests:
            entry["tests"]["mctp"] = mctp_infer(est, C, alpha, qcfg).to_dict()
        if "bootmctp" in tests:
            entry["tests"]["bootmctp"] = boot_mctp(est, C, bcfg, dist, k).to_dict()
        if "ats" in tests:
            entry["tests"]["ats"] = ats_infer(est, C).to_dict()
        if "bootats" in tests:
            entry["tests"]["bootats"] = boot_ats(est, C, bcfg, dist, k).to_dict()
        results.append(entry)
    payload = {
        "manifest": manifest("analyze", opts, seed, source,
                             {"input": opts["input"],
                              "contrast": opts["contrast"] if str(opts["contrast"]) not in KINDS else None},
                             started),
        "design": {"a": data.design.a, "d": data.design.d, "n": list(data.design.n),
                   "groups": list(data.group_names), "times": list(data.time_names)},
        "relative_effects": effect_table(est, data),
        "results": results,
    }
    return payload, analyze_tsv(payload)


def cmd_ratio(opts: dict, threads: int, started: float | None) -> tuple[dict, str]:
    alpha = check_alpha(_float(opts, "alpha"))
    seed, source = resolve_seed(opts)
    B = _int(opts, "bootstrap", 100)
    if not opts.get("ratios"):
        raise BadConfig("--ratios is required")
    data, _ = load_data(opts)
    try:
        text = Path(opts["ratios"]).read_text()
    except OSError as exc:
        raise BadConfig(f"cannot read ratios file: {exc}") from None
    spec = read_ratio_tsv(text, data.design.cells)
    margin = _float(opts, "margin")
    opts = {**opts, "alpha": alpha, "bootstrap": B, "margin": margin, "strict": _bool(opts.get("strict"))}
    spec = type(spec)(spec.numerators, spec.denominators, np.full(spec.q, margin), spec.labels)
    bcfg = BootstrapConfig(B=B, seed=seed, alpha=alpha, threads=threads)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DenominatorNearZero)
        rows = fieller_scis(data, spec, bcfg, strict=opts["strict"])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    est = estimate_all(data)
    payload = {
        "manifest": manifest("ratio", opts, seed, source, {"input": opts["input"], "ratios": opts["ratios"]},
                             started),
        "relative_effects": effect_table(est, data),
        "alpha": alpha,
        "intervals": [vars(r) | {"bounded": r.bounded} for r in rows],
    }
    return payload, ratio_tsv(payload)


def cmd_simulate(opts: dict, threads: int, started: float | None) -> tuple[dict, str]:
    alpha = check_alpha(_float(opts, "alpha"))
    seed, source = resolve_seed(opts)
    try:
        sizes = [int(x) for x in _list(opts["n"])]
    except ValueError:
        raise BadConfig(f"--n must be a comma-separated list of integers, got {opts['n']!r}") from None
    if not sizes:
        raise BadConfig("--n needs at least one size")
    tests = _list(opts["tests"])
    kinds = _list(opts["contrast"])
    cfg = SimConfig(
        setting=str(opts["setting"]).upper(), cov=str(opts["cov"]).upper(), rho=_float(opts, "rho"),
        n=sizes[0], runs=_int(opts, "runs", 1), B=_int(opts, "bootstrap", 100), seed=seed, alpha=alpha,
        quantile_mc=_int(opts, "quantile_mc", 1000),
    )
    deltas = _list(opts.get("delta"))
    opts = {**opts, "alpha": alpha, "n": sizes, "tests": tests, "contrast": kinds, "setting": cfg.setting,
            "cov": cfg.cov, "rho": cfg.rho, "runs": cfg.runs, "bootstrap": cfg.B, "quantile_mc": cfg.quantile_mc,
            "delta": _floats(deltas, "delta") if deltas else None,
            "effect": _list(opts.get("effect")) or list(SIM_EFFECTS)}
    if deltas:
        opts["effect"] = None
    else:
        opts.pop("power_effect")
    if deltas:
        if len(sizes) != 1 or len(kinds) != 1:
            raise BadConfig("a power study takes a single --n and a single --contrast")
        report = power_study(cfg, opts["delta"], opts["power_effect"], tests, kinds[0], threads)
    else:
        report = type1_study(cfg, tests, kinds, opts["effect"], sizes, threads)
    payload = {
        "manifest": manifest("simulate", opts, seed, source, {}, started),
        "report": report.to_dict(),
    }
    return payload, report.to_tsv()


def fmt(x, digits: int = 4) -> str:
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return "TRUE" if x else "FALSE"
    if isinstance(x, float):
        if math.isnan(x):
            return "NA"
        if math.isinf(x):
            return "Inf" if x > 0 else "-Inf"
        return f"{x:.{digits}f}"
    return str(x)


def fmt_p(p: float, resolution: float) -> str:
    if p < resolution:
        return f"< {resolution:.2g}"
    return fmt(p)


def _tsv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, delimiter="\t", lineterminator="\n").writerows(rows)
    return buf.getvalue()


def analyze_tsv(payload: dict) -> str:
    rows = [["effect", "test", "comparison", "estimate", "lower", "upper", "statistic", "p_value", "reject"]]
    for entry in payload["results"]:
        for test, res in entry["tests"].items():
            if "contrasts" in res:
                for c in res["contrasts"]:
                    rows.append([entry["effect"], test, c["label"], fmt(c["estimate"]), fmt(c["lower"]),
                                 fmt(c["upper"]), fmt(c["statistic"]), fmt_p(c["p_value"], res["resolution"]),
                                 fmt(c["reject"])])
                rows.append([entry["effect"], test, "(global max)", "", "", "", fmt(res["max_stat"]),
                             fmt_p(res["p_value"], res["resolution"]), fmt(res["reject"])])
            else:
                res_p = 1.0 / (res["B"] + 1) if "B" in res else 0.0
                rows.append([entry["effect"], test, "(ANOVA-type)", "", "", "", fmt(res["statistic"]),
                             fmt_p(res["p_value"], res_p), fmt(res.get("reject", ""))])
    return _tsv(rows)


def ratio_tsv(payload: dict) -> str:
    rows = [["ratio", "estimate", "lower", "upper", "status", "warning", "statistic", "p_value"]]
    for r in payload["intervals"]:
        rows.append([r["label"], fmt(r["estimate"]), fmt(r["lower"]), fmt(r["upper"]), r["status"],
                     r["warning"] or "", fmt(r["statistic"]), fmt(r["p_value"])])
    return _tsv(rows)


COMMANDS = {
    "analyze": (cmd_analyze, ANALYZE_DEFAULTS),
    "ratio": (cmd_ratio, RATIO_DEFAULTS),
    "simulate": (cmd_simulate, SIMULATE_DEFAULTS),
}


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("Infinity" if obj > 0 else "-Infinity")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fn, defaults = COMMANDS[args.command]
    fmt_choice = "json"
    try:
        opts = merge_options(args, defaults)
        fmt_choice = opts["format"]
        if fmt_choice not in ("json", "tsv"):
            raise BadConfig("--format must be json or tsv")
        threads = resolve_threads(opts)
        started = time.perf_counter() if _bool(opts.get("timing")) else None
        payload, table = fn(opts, threads, started)
    except RankMctpError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        err = {"schema_version": SCHEMA_VERSION, "error": exc.to_dict()}
        sys.stdout.write(dumps(err) if fmt_choice == "json" else f"error\t{exc.code}\t{exc}\n")
        return exc.exit_code
    if fmt_choice == "json":
        sys.stdout.write(dumps(payload))
    else:
        header = "".join(f"# {line}\n" for line in dumps(payload["manifest"]).splitlines())
        sys.stdout.write(header + table)
    return 0


if __name__ == "__main__":
    sys.exit(main())
