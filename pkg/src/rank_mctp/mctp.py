"""Asymptotic multiple contrast test with simultaneous confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contrasts import ContrastFamily
from .covariance import Estimates, estimate_all
from .data import Dataset
from .distributions import MaxSample, QuantileConfig, check_alpha, max_abs_normal_sample
from .errors import DegenerateVariance

EPS_VAR = 1e-12


@dataclass(frozen=True)
class ContrastRow:
    label: str
    estimate: float
    statistic: float
    lower: float
    upper: float
    p_value: float
    reject: bool


@dataclass(frozen=True, eq=False)
class McTpResult:
    rows: tuple[ContrastRow, ...]
    max_stat: float
    quantile: float
    reject: bool
    p_value: float
    R: np.ndarray
    method: str
    alpha: float
    # smallest attainable p-value: 1/M (Monte Carlo) or 1/(B + 1) (bootstrap)
    resolution: float
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "quantile": self.quantile,
            "max_stat": self.max_stat,
            "p_value": self.p_value,
            "reject": self.reject,
            "resolution": self.resolution,
            "contrasts": [vars(r) for r in self.rows],
            "correlation": self.R.tolist(),
            **self.info,
        }


def contrast_statistics(p, V, C: ContrastFamily, N: int, eps_var: float = EPS_VAR):
    """Studentized contrast statistics under the null c'p = 0 and their correlation.

    Returns ``(T, R, v)`` with ``v`` the contrast variances c' V c.
    """
    Cm = C.C
    CV = Cm @ V @ Cm.T
    CV = (CV + CV.T) / 2
    v = np.diag(CV).copy()
    bad = np.flatnonzero(v <= eps_var)
    if bad.size:
        names = [C.labels[i] for i in bad]
        raise DegenerateVariance(f"contrast variance is zero for {names}", contrasts=names)
    T = np.sqrt(N) * (Cm @ p) / np.sqrt(v)
    sd = np.sqrt(v)
    R = np.clip(CV / np.outer(sd, sd), -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return T, R, v


def _as_estimates(data) -> Estimates:
    return data if isinstance(data, Estimates) else estimate_all(data)


def assemble(
    est: Estimates,
    C: ContrastFamily,
    T: np.ndarray,
    R: np.ndarray,
    v: np.ndarray,
    sample: MaxSample,
    alpha: float,
    method: str,
    info: dict | None = None,
) -> McTpResult:
    N = est.N
    estimates = C.C @ est.p
    crit = sample.critical_value(alpha)
    half = crit * np.sqrt(v / N)
    absT = np.abs(T)
    pvals = np.atleast_1d(sample.pvalue(absT))
    rejects = np.atleast_1d(sample.reject(absT, alpha))
    rows = tuple(
        ContrastRow(
            label=C.labels[l],
            estimate=float(estimates[l]),
            statistic=float(T[l]),
            lower=float(estimates[l] - half[l]),
            upper=float(estimates[l] + half[l]),
            p_value=float(pvals[l]),
            reject=bool(rejects[l]),
        )
        for l in range(C.q)
    )
    max_stat = float(absT.max())
    return McTpResult(
        rows=rows,
        max_stat=max_stat,
        quantile=crit,
        reject=bool(sample.reject(max_stat, alpha)),
        p_value=float(sample.pvalue(max_stat)),
        R=R,
        method=method,
        alpha=alpha,
        resolution=1.0 / (sample.size + sample.offset),
        info=info or {},
    )


def mctp_infer(data: Dataset | Estimates, C: ContrastFamily, alpha: float = 0.05,
               qcfg: QuantileConfig | None = None) -> McTpResult:
    """Asymptotic MCTP: shared equicoordinate N(0, R) quantile for all contrasts.

    Adjusted p-values come from the same Monte-Carlo sample as the quantile,
    so interval exclusion of 0, p <= alpha and |T| > z always agree.
    """
    alpha = check_alpha(alpha)
    qcfg = qcfg or QuantileConfig(alpha=alpha)
    est = _as_estimates(data)
    T, R, v = contrast_statistics(est.p, est.V, C, est.N)
    sample = max_abs_normal_sample(R, qcfg)
    return assemble(est, C, T, R, v, sample, alpha, "asymptotic")
