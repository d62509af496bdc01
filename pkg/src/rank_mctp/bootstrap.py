"""Wild bootstrap with Rademacher multipliers shared across repeated measures.

One sign per subject multiplies that subject's residuals for every repeated
measure. Replicates are generated in fixed blocks, each block drawing from
its own substream of the seed, so results do not depend on the number of
worker threads.

Studentization uses a per-replicate covariance rebuilt from the multiplied
residuals after recentering them within each group (``covariance="recentered"``).
Multiplying by signs alone would leave every residual product, and hence the
covariance estimate, unchanged. ``covariance="fixed"`` reuses the original
estimate in every replicate instead.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ats import EPS_TRACE, AtsResult, ats_statistic
from .contrasts import ContrastFamily, projection
from .covariance import Estimates, estimate_all
from .data import Dataset, Design
from .distributions import STREAM_BOOTSTRAP, MaxSample, check_alpha, substream
from .errors import BadConfig, TooManyDegenerateReplicates
from .mctp import EPS_VAR, McTpResult, assemble, contrast_statistics

BLOCK = 250
COVARIANCE_MODES = ("recentered", "fixed")


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 1000
    seed: int = 0
    alpha: float = 0.05
    covariance: str = "recentered"
    threads: int = 1
    max_dropped: float = 0.01

    def __post_init__(self):
        if self.B < 100:
            raise BadConfig(f"need at least 100 bootstrap replicates, got {self.B}")
        check_alpha(self.alpha)
        if self.covariance not in COVARIANCE_MODES:
            raise BadConfig(f"covariance must be one of {COVARIANCE_MODES}")
        if not (0 <= int(self.seed) < 2**64):
            raise BadConfig("seed must be a 64-bit unsigned integer")


def rademacher(seed: int, block: int, size: int, N: int) -> np.ndarray:
    """Signs for one block of replicates; columns follow subjects in (group, subject) order."""
    rng = substream(seed, STREAM_BOOTSTRAP, block)
    return rng.integers(0, 2, size=(size, N)).astype(float) * 2.0 - 1.0


def _split(eps: np.ndarray, design: Design) -> list[np.ndarray]:
    bounds = np.cumsum((0,) + design.n)
    return [eps[..., bounds[g]:bounds[g + 1]] for g in range(design.a)]


def wild_pairwise(D: list[np.ndarray], design: Design, eps: np.ndarray) -> np.ndarray:
    """Bootstrap pairwise effects ``w_eps[pq, rs]`` for one sign vector (direct formula)."""
    d, m = design.d, design.cells
    e = _split(np.asarray(eps, dtype=float), design)
    # A[rs, pq] = mean_k eps_rk D_rsk(p,q)
    A = np.concatenate([np.einsum("k,ksp->sp", e[r], D[r]) / design.n[r] for r in range(design.a)])
    return A.T - A


def wild_replicate(D: list[np.ndarray], design: Design, rng: np.random.Generator | None = None,
                   eps: np.ndarray | None = None, covariance: str = "recentered",
                   V: np.ndarray | None = None):
    """One replicate: returns ``(p_eps, V_eps)``.

    ``p_eps`` estimates the fluctuation p-hat - p (scale sqrt(N) p_eps to
    compare with V). Pass ``eps`` to force the signs.
    """
    from .covariance import influence

    if eps is None:
        rng = rng or np.random.default_rng()
        eps = rng.integers(0, 2, size=design.N) * 2.0 - 1.0
    w_eps = wild_pairwise(D, design, eps)
    p_eps = w_eps.mean(axis=0)
    if covariance == "fixed":
        if V is None:
            raise BadConfig("fixed covariance mode needs the original V")
        return p_eps, V
    psi = influence(D, design)
    V_eps = np.zeros((design.cells, design.cells))
    for e, P in zip(_split(np.asarray(eps, dtype=float), design), psi):
        Y = e[:, None] * P
        Y = Y - Y.mean(axis=0)
        n = P.shape[0]
        V_eps += Y.T @ Y / (n * (n - 1))
    V_eps *= design.N
    return p_eps, (V_eps + V_eps.T) / 2


@dataclass(frozen=True, eq=False)
class BootstrapDistributions:
    """Per-replicate bootstrap quantities for each requested linear family and projection."""

    T: list                  # per family: (B, q) studentized statistics, NaN rows dropped
    Q: list                  # per projection: (B,) ATS values, NaN where dropped
    p_eps: np.ndarray | None  # (B, m) if requested
    B: int

    def valid(self, arr: np.ndarray) -> np.ndarray:
        ok = ~np.isnan(arr)
        return ok.all(axis=1) if arr.ndim == 2 else ok

    def max_abs(self, k: int = 0) -> MaxSample:
        T = self.T[k]
        vals = np.abs(T[self.valid(T)]).max(axis=1)
        return MaxSample(np.sort(vals), 1)

    def max_signed(self, k: int = 0) -> MaxSample:
        T = self.T[k]
        vals = T[self.valid(T)].max(axis=1)
        return MaxSample(np.sort(vals), 1)

    def ats_sample(self, k: int = 0) -> MaxSample:
        Q = self.Q[k]
        return MaxSample(np.sort(Q[self.valid(Q)]), 1)

    def dropped(self, arr: np.ndarray) -> int:
        return int(self.B - self.valid(arr).sum())

    def c_eps(self, alpha: float, k: int = 0) -> float:
        return self.max_abs(k).critical_value(alpha)

    def c_q_eps(self, alpha: float, k: int = 0) -> float:
        return self.ats_sample(k).critical_value(alpha)


def _block(est: Estimates, linear: list, projections: list, cfg: BootstrapConfig,
           block: int, size: int, keep_effects: bool):
    design = est.design
    N = design.N
    eps = _split(rademacher(cfg.seed, block, size, N), design)
    p_eps = sum(e @ P / P.shape[0] for e, P in zip(eps, est.psi))
    T_out = []
    for L, v_fixed in linear:
        num = np.sqrt(N) * (p_eps @ L.T)
        if cfg.covariance == "fixed":
            v = np.broadcast_to(v_fixed, num.shape)
        else:
            v = np.zeros_like(num)
            for e, P in zip(eps, est.psi):
                Y = e[:, :, None] * (P @ L.T)[None]
                Y -= Y.mean(axis=1, keepdims=True)
                n = P.shape[0]
                v += np.einsum("bkq,bkq->bq", Y, Y) / (n * (n - 1))
            v *= N
        with np.errstate(invalid="ignore", divide="ignore"):
            T = num / np.sqrt(v)
        T[(v <= EPS_VAR).any(axis=1)] = np.nan
        T_out.append(T)
    Q_out = []
    for M, tr_fixed in projections:
        quad = N * np.einsum("bi,ij,bj->b", p_eps, M, p_eps)
        if cfg.covariance == "fixed":
            tr = np.full(size, tr_fixed)
        else:
            tr = np.zeros(size)
            for e, P in zip(eps, est.psi):
                Y = e[:, :, None] * P[None]
                Y -= Y.mean(axis=1, keepdims=True)
                n = P.shape[0]
                tr += np.einsum("bki,ij,bkj->b", Y, M, Y) / (n * (n - 1))
            tr *= N
        with np.errstate(invalid="ignore", divide="ignore"):
            Q = quad / tr
        Q[tr <= EPS_TRACE] = np.nan
        Q_out.append(Q)
    return T_out, Q_out, (p_eps if keep_effects else None)


def bootstrap_distributions(est: Estimates, cfg: BootstrapConfig, linear=(), projections=(),
                            keep_effects: bool = False) -> BootstrapDistributions:
    """Run ``cfg.B`` replicates.

    ``linear`` holds coefficient matrices (rows studentized separately),
    ``projections`` holds ATS projection matrices.
    """
    lin = [(np.atleast_2d(L), np.einsum("qi,ij,qj->q", np.atleast_2d(L), est.V, np.atleast_2d(L)))
           for L in linear]
    proj = [(M, float(np.trace(M @ est.V))) for M in projections]
    sizes = [BLOCK] * (cfg.B // BLOCK) + ([cfg.B % BLOCK] if cfg.B % BLOCK else [])
    jobs = list(enumerate(sizes))

    def run(job):
        return _block(est, lin, proj, cfg, job[0], job[1], keep_effects)

    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    T = [np.concatenate([part[0][k] for part in parts]) for k in range(len(lin))]
    Q = [np.concatenate([part[1][k] for part in parts]) for k in range(len(proj))]
    p_eps = np.concatenate([part[2] for part in parts]) if keep_effects else None
    return BootstrapDistributions(T, Q, p_eps, cfg.B)


def _check_dropped(n_dropped: int, cfg: BootstrapConfig, what: str):
    if n_dropped > cfg.max_dropped * cfg.B:
        raise TooManyDegenerateReplicates(
            f"{n_dropped} of {cfg.B} {what} replicates had a degenerate covariance", dropped=n_dropped
        )


def _as_estimates(data) -> Estimates:
    return data if isinstance(data, Estimates) else estimate_all(data)


def boot_mctp(data: Dataset | Estimates, C: ContrastFamily, cfg: BootstrapConfig | None = None,
              dist: BootstrapDistributions | None = None, k: int = 0) -> McTpResult:
    """Wild-bootstrap MCTP; SCIs use the original variances with the bootstrap quantile."""
    cfg = cfg or BootstrapConfig()
    est = _as_estimates(data)
    T, R, v = contrast_statistics(est.p, est.V, C, est.N)
    if dist is None:
        dist = bootstrap_distributions(est, cfg, linear=[C.C])
        k = 0
    n_drop = dist.dropped(dist.T[k])
    _check_dropped(n_drop, cfg, "MCTP")
    info = {"B": cfg.B, "seed": int(cfg.seed), "dropped": n_drop, "covariance": cfg.covariance}
    return assemble(est, C, T, R, v, dist.max_abs(k), cfg.alpha, "bootstrap", info)


@dataclass(frozen=True)
class BootAtsResult(AtsResult):
    critical_value: float = float("nan")
    reject: bool = False


def boot_ats(data: Dataset | Estimates, C: ContrastFamily, cfg: BootstrapConfig | None = None,
             dist: BootstrapDistributions | None = None, k: int = 0) -> BootAtsResult:
    cfg = cfg or BootstrapConfig()
    est = _as_estimates(data)
    M = projection(C)
    Q, f = ats_statistic(est.p, est.V, M, est.N)
    if dist is None:
        dist = bootstrap_distributions(est, cfg, projections=[M])
        k = 0
    n_drop = dist.dropped(dist.Q[k])
    _check_dropped(n_drop, cfg, "ATS")
    sample = dist.ats_sample(k)
    return BootAtsResult(
        Q=Q,
        f=f,
        p_value=float(sample.pvalue(Q)),
        method="bootstrap",
        info={"B": cfg.B, "seed": int(cfg.seed), "dropped": n_drop, "covariance": cfg.covariance,
              "critical_value": sample.critical_value(cfg.alpha)},
        critical_value=sample.critical_value(cfg.alpha),
        reject=bool(sample.reject(Q, cfg.alpha)),
    )
