"""Monte-Carlo type-I error and power studies for split-plot designs.

Each subject's vector is ``X_ik = sigma_i V^{1/2} Z_ik + c_i B_ik 1_d + delta_i``
with ``Z_ik ~ N(0, I_d)`` and ``B_ik ~ N(0, 1)`` independent. Setting S1 has
a=3 groups and d=3 repeated measures, S2 has a=2 and d=4.

Every run draws its data, bootstrap signs and quantile sample from substreams
keyed by (seed, run), so a study is reproducible run by run and the report
does not depend on how runs are scheduled.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .ats import ats_statistic
from .bootstrap import BootstrapConfig, bootstrap_distributions
from .contrasts import KINDS, factorial_contrast, projection
from .covariance import estimate_all
from .data import Dataset, Design
from .distributions import (
    STREAM_DATA,
    QuantileConfig,
    check_alpha,
    chi_square_scaled_pvalue,
    max_abs_normal_sample,
    substream,
    sym_sqrt,
)
from .errors import BadConfig, DegenerateStatistic, NonPsdV
from .mctp import contrast_statistics

SETTINGS = {"S1": (3, 3), "S2": (2, 4)}
COVARIANCES = ("CS", "AR", "TPL")
TESTS = ("mctp", "bootmctp", "ats", "bootats")
SIM_EFFECTS = ("main_A", "main_D", "interaction")
REPORT_COLUMNS = ("test", "setting", "cov", "n", "delta", "rate", "mc_se", "effect", "contrast", "runs",
                  "rejections", "degenerate")


@dataclass(frozen=True)
class SimConfig:
    setting: str = "S1"
    cov: str = "CS"
    rho: float = 0.6
    n: int = 20
    runs: int = 1000
    B: int = 1000
    sigma: tuple[float, ...] | None = None
    c: tuple[float, ...] | None = None
    delta: tuple[float, ...] | None = None
    seed: int = 0
    alpha: float = 0.05
    quantile_mc: int = 100_000

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise BadConfig(f"setting must be one of {tuple(SETTINGS)}, got {self.setting!r}")
        if self.cov not in COVARIANCES:
            raise BadConfig(f"cov must be one of {COVARIANCES}, got {self.cov!r}")
        if not 0.0 < self.rho < 1.0:
            raise BadConfig(f"rho must lie in (0, 1), got {self.rho}")
        if self.n < 2:
            raise BadConfig(f"n must be at least 2, got {self.n}")
        if self.runs < 1:
            raise BadConfig("runs must be positive")
        check_alpha(self.alpha)
        a, d = self.shape
        for name, val, size in (("sigma", self.sigma, a), ("c", self.c, a), ("delta", self.delta, a * d)):
            if val is None:
                object.__setattr__(self, name, tuple(0.0 if name == "delta" else 1.0 for _ in range(size)))
            else:
                val = tuple(float(x) for x in val)
                if len(val) != size:
                    raise BadConfig(f"{name} needs {size} entries, got {len(val)}")
                object.__setattr__(self, name, val)

    @property
    def shape(self) -> tuple[int, int]:
        return SETTINGS[self.setting]

    @property
    def design(self) -> Design:
        a, d = self.shape
        return Design(a, d, (self.n,) * a)


def cov_matrix(kind: str, d: int, rho: float = 0.6) -> np.ndarray:
    """Built-in repeated-measures covariance V: CS = I, AR = rho^|l-m|, TPL = d - |l-m|."""
    lag = np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
    if kind == "CS":
        return np.eye(d)
    if kind == "AR":
        return rho ** lag.astype(float)
    if kind == "TPL":
        return (d - lag).astype(float)
    raise BadConfig(f"unknown covariance structure {kind!r}")


def check_psd(V: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or np.abs(V - V.T).max() > tol:
        raise NonPsdV("V must be a symmetric square matrix")
    lo = np.linalg.eigvalsh(V).min()
    if lo < -tol * max(1.0, np.abs(V).max()):
        raise NonPsdV(f"V has a negative eigenvalue ({lo:.3g})")
    return V


def delta_vector(setting: str, effect: str, delta: float) -> tuple[float, ...]:
    """Cell shifts for the power study: factor A moves the last group, factor D the last time point."""
    a, d = SETTINGS[setting]
    shift = np.zeros((a, d))
    if effect in ("A", "main_A"):
        shift[-1, :] = delta
    elif effect in ("D", "main_D"):
        shift[:, -1] = delta
    else:
        raise BadConfig(f"power effect must be A or D, got {effect!r}")
    return tuple(float(x) for x in shift.ravel())


def generate(cfg: SimConfig, rng: np.random.Generator, V: np.ndarray | None = None) -> Dataset:
    """One dataset from the simulation model (``V`` overrides the built-in structure)."""
    a, d = cfg.shape
    V = cov_matrix(cfg.cov, d, cfg.rho) if V is None else check_psd(V)
    root = sym_sqrt(V)
    delta = np.asarray(cfg.delta).reshape(a, d)
    groups = []
    for i in range(a):
        Z = rng.standard_normal((cfg.n, d))
        Bk = rng.standard_normal(cfg.n)
        groups.append(cfg.sigma[i] * Z @ root + cfg.c[i] * Bk[:, None] + delta[i])
    return Dataset.from_arrays(groups)


def _run_key(seed: int, run: int, purpose: int) -> int:
    ss = np.random.SeedSequence([int(seed), STREAM_DATA, int(run), int(purpose)])
    return int(ss.generate_state(1, np.uint64)[0])


def run_once(cfg: SimConfig, run: int, families: dict, tests: Sequence[str]) -> dict:
    """Decisions for one run: ``{(test, family_key): True | False | None}`` (None when degenerate)."""
    data = generate(cfg, substream(cfg.seed, STREAM_DATA, run))
    est = estimate_all(data)
    out = {}
    boot_lin, boot_proj, slots = [], [], {}
    stats = {}
    for key, C in families.items():
        try:
            T, R, v = contrast_statistics(est.p, est.V, C, est.N)
        except DegenerateStatistic:
            T = None
        M = projection(C)
        try:
            Q, f = ats_statistic(est.p, est.V, M, est.N)
        except DegenerateStatistic:
            Q = None
        stats[key] = (T, R if T is not None else None, Q, f if Q is not None else None)
        if "bootmctp" in tests and T is not None:
            slots[key, "T"] = len(boot_lin)
            boot_lin.append(C.C)
        if "bootats" in tests and Q is not None:
            slots[key, "Q"] = len(boot_proj)
            boot_proj.append(M)
    dist = None
    if boot_lin or boot_proj:
        bcfg = BootstrapConfig(B=cfg.B, seed=_run_key(cfg.seed, run, 1), alpha=cfg.alpha)
        dist = bootstrap_distributions(est, bcfg, linear=boot_lin, projections=boot_proj)
    for key in families:
        T, R, Q, f = stats[key]
        if "mctp" in tests:
            if T is None:
                out["mctp", key] = None
            else:
                qcfg = QuantileConfig(mc_size=cfg.quantile_mc, seed=_run_key(cfg.seed, run, 2), alpha=cfg.alpha)
                sample = max_abs_normal_sample(R, qcfg)
                out["mctp", key] = bool(sample.reject(np.abs(T).max(), cfg.alpha))
        if "ats" in tests:
            out["ats", key] = None if Q is None else chi_square_scaled_pvalue(Q, f) <= cfg.alpha
        if "bootmctp" in tests:
            if T is None:
                out["bootmctp", key] = None
            else:
                Tb = dist.T[slots[key, "T"]]
                if dist.dropped(Tb) > 0.01 * cfg.B:
                    out["bootmctp", key] = None
                else:
                    out["bootmctp", key] = bool(dist.max_abs(slots[key, "T"]).reject(np.abs(T).max(), cfg.alpha))
        if "bootats" in tests:
            if Q is None:
                out["bootats", key] = None
            else:
                Qb = dist.Q[slots[key, "Q"]]
                if dist.dropped(Qb) > 0.01 * cfg.B:
                    out["bootats", key] = None
                else:
                    out["bootats", key] = bool(dist.ats_sample(slots[key, "Q"]).reject(Q, cfg.alpha))
    return out


@dataclass(frozen=True)
class StudyRow:
    test: str
    setting: str
    cov: str
    n: int
    delta: float
    rate: float
    mc_se: float
    effect: str
    contrast: str
    runs: int
    rejections: int
    degenerate: int


@dataclass(frozen=True)
class StudyReport:
    rows: tuple[StudyRow, ...]
    config: dict = field(default_factory=dict)
    runtime_s: float | None = None

    def table(self, test: str | None = None, **match) -> list[StudyRow]:
        keep = []
        for r in self.rows:
            if test is not None and r.test != test:
                continue
            if all(getattr(r, k) == v for k, v in match.items()):
                keep.append(r)
        return keep

    def rate(self, test: str, **match) -> float:
        rows = self.table(test, **match)
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} rows match {test} {match}")
        return rows[0].rate

    def to_dict(self, timing: bool = False) -> dict:
        out = {"config": self.config, "rows": [asdict(r) for r in self.rows]}
        if timing:
            out["runtime_s"] = self.runtime_s
        return out

    def to_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in (getattr(r, c) for c in REPORT_COLUMNS)])
        return buf.getvalue()

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)


def mc_se(rate: float, runs: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / runs)


def simulate_cell(cfg: SimConfig, tests: Sequence[str], effects: Sequence[str], contrast: str = "centering",
                  threads: int = 1, delta_label: float = 0.0) -> list[StudyRow]:
    """Rejection rates for every (test, effect) at one configuration."""
    bad = set(tests) - set(TESTS)
    if bad:
        raise BadConfig(f"unknown tests {sorted(bad)}; choose from {TESTS}")
    if contrast not in KINDS:
        raise BadConfig(f"unknown contrast kind {contrast!r}")
    design = cfg.design
    families = {}
    for eff in effects:
        if eff not in SIM_EFFECTS:
            raise BadConfig(f"unknown effect {eff!r}; choose from {SIM_EFFECTS}")
        families[eff] = factorial_contrast(eff, design, contrast)

    def job(run):
        return run_once(cfg, run, families, tests)

    if threads > 1 and cfg.runs > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(job, range(cfg.runs)))
    else:
        results = [job(r) for r in range(cfg.runs)]
    rows = []
    for t in TESTS:
        if t not in tests:
            continue
        for eff in effects:
            decisions = [res[t, eff] for res in results]
            rej = sum(1 for x in decisions if x)
            deg = sum(1 for x in decisions if x is None)
            rate = rej / cfg.runs
            rows.append(StudyRow(t, cfg.setting, cfg.cov, cfg.n, float(delta_label), rate, mc_se(rate, cfg.runs),
                                 eff, contrast, cfg.runs, rej, deg))
    return rows


def _echo(cfg: SimConfig, **extra) -> dict:
    out = asdict(cfg)
    out.update(extra)
    return json.loads(json.dumps(out))


def type1_study(cfg: SimConfig, tests: Sequence[str] = ("mctp", "bootmctp", "ats"),
                contrasts: Sequence[str] = ("centering",), effects: Sequence[str] = SIM_EFFECTS,
                sizes: Sequence[int] | None = None, threads: int = 1) -> StudyReport:
    """Type-I error rates under the global null for each (size, contrast kind, effect, test)."""
    if any(x != 0.0 for x in cfg.delta):
        raise BadConfig("type-I error study needs delta = 0")
    t0 = time.perf_counter()
    rows = []
    for n in (sizes or (cfg.n,)):
        for kind in contrasts:
            rows += simulate_cell(replace(cfg, n=int(n)), tests, effects, kind, threads)
    echo = _echo(cfg, study="type1", tests=list(tests), contrasts=list(contrasts), effects=list(effects),
                 sizes=list(sizes or (cfg.n,)))
    return StudyReport(tuple(rows), echo, time.perf_counter() - t0)


def power_study(cfg: SimConfig, deltas: Sequence[float], effect: str = "A",
                tests: Sequence[str] = ("mctp", "bootmctp", "ats"), contrast: str = "centering",
                threads: int = 1) -> StudyReport:
    """Empirical power along a grid of shift sizes for a main effect of A or D.

    Every grid point reuses the same seed, so the underlying noise is common
    to all points and the curves are smoother than independent draws would give.
    """
    eff = {"A": "main_A", "D": "main_D"}.get(effect, effect)
    t0 = time.perf_counter()
    rows = []
    for delta in deltas:
        c = replace(cfg, delta=delta_vector(cfg.setting, eff, float(delta)))
        rows += simulate_cell(c, tests, (eff,), contrast, threads, delta_label=float(delta))
    echo = _echo(replace(cfg, delta=None), study="power", effect=eff, deltas=[float(x) for x in deltas],
                 tests=list(tests), contrast=contrast)
    echo.pop("delta", None)
    return StudyReport(tuple(rows), echo, time.perf_counter() - t0)
