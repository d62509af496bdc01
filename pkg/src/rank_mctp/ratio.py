"""Simultaneous Fieller intervals for ratios of linear forms in p.

For theta = c'p / d'p the interval is the set of theta solving
``A theta^2 + B theta + C <= 0`` with

    A = (sqrt(N) d'p)^2 - z^2 d'Vd
    B = -2 [N (c'p)(d'p) - z^2 c'Vd]
    C = (sqrt(N) c'p)^2 - z^2 c'Vc

and ``z`` the wild-bootstrap quantile of max_l |T_l|, where the linear forms
``theta_hat_l d_l - c_l`` are studentized in every replicate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_distributions
from .covariance import Estimates, estimate_all
from .data import Dataset
from .distributions import MaxSample
from .errors import (
    DegenerateVariance,
    DenominatorNearZero,
    DimensionMismatch,
    UnboundedInterval,
    ValidationError,
)
from .mctp import EPS_VAR

NEAR_ZERO_RATIO = 2.0


@dataclass(frozen=True, eq=False)
class RatioSpec:
    numerators: np.ndarray
    denominators: np.ndarray
    margins: np.ndarray | None = None
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.numerators, dtype=float))
        d = np.atleast_2d(np.asarray(self.denominators, dtype=float))
        if c.shape != d.shape or c.shape[0] < 1:
            raise DimensionMismatch("numerator and denominator rows must match in number and length")
        tau = np.ones(c.shape[0]) if self.margins is None else np.broadcast_to(
            np.asarray(self.margins, dtype=float), (c.shape[0],)).copy()
        labels = tuple(self.labels) or tuple(f"ratio {l + 1}" for l in range(c.shape[0]))
        if len(labels) != c.shape[0]:
            raise DimensionMismatch("one label per ratio")
        for name, val in (("numerators", c), ("denominators", d), ("margins", tau)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "labels", labels)

    @property
    def q(self) -> int:
        return self.numerators.shape[0]


def ratio_statistics(p, V, spec: RatioSpec, theta, N: int, eps_var: float = EPS_VAR) -> np.ndarray:
    """sqrt(N) (theta d - c)'p / sqrt((theta d - c)' V (theta d - c)) per ratio."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (spec.q,))
    L = theta[:, None] * spec.denominators - spec.numerators
    v = np.einsum("qi,ij,qj->q", L, V, L)
    bad = np.flatnonzero(v <= eps_var)
    if bad.size:
        names = [spec.labels[i] for i in bad]
        raise DegenerateVariance(f"linear form has zero variance for {names}", contrasts=names)
    return np.sqrt(N) * (L @ p) / np.sqrt(v)


@dataclass(frozen=True)
class RatioInterval:
    label: str
    estimate: float
    lower: float | None
    upper: float | None
    A: float
    B: float
    C: float
    quantile: float
    status: str            # "finite", "degenerate-point", "exclusive", "entire-axis", "half-line"
    warning: str | None = None
    statistic: float | None = None
    p_value: float | None = None

    @property
    def bounded(self) -> bool:
        return self.status in ("finite", "degenerate-point")


def fieller_coefficients(cp: float, dp: float, cVc: float, cVd: float, dVd: float, N: int, z: float):
    A = N * dp * dp - z * z * dVd
    B = -2.0 * (N * cp * dp - z * z * cVd)
    C = N * cp * cp - z * z * cVc
    return A, B, C


def solve_fieller(A: float, B: float, C: float):
    """Solution set of A t^2 + B t + C <= 0 as ``(status, lower, upper)``.

    Bounded only for A > 0; for A <= 0 the set is unbounded and the finite
    numbers returned (if any) are the roots delimiting it.
    """
    disc = B * B - 4.0 * A * C
    if A > 0:
        disc = max(disc, 0.0)
        root = math.sqrt(disc)
        lo, hi = (-B - root) / (2 * A), (-B + root) / (2 * A)
        return ("degenerate-point" if disc == 0.0 else "finite"), lo, hi
    if A == 0:
        return "half-line", None, None
    if disc > 0:
        root = math.sqrt(disc)
        # roots of a downward parabola: solution set is outside (r1, r2)
        r1, r2 = sorted(((-B - root) / (2 * A), (-B + root) / (2 * A)))
        return "exclusive", r1, r2
    return "entire-axis", None, None


def fieller_scis(data: Dataset | Estimates, spec: RatioSpec, cfg: BootstrapConfig | None = None,
                 strict: bool = False) -> list[RatioInterval]:
    """Wild-bootstrap simultaneous Fieller intervals, plus one-sided tests of theta_l = margin_l.

    Unbounded solution sets are returned flagged; with ``strict=True`` they
    raise ``UnboundedInterval``.
    """
    cfg = cfg or BootstrapConfig()
    est = data if isinstance(data, Estimates) else estimate_all(data)
    N, p, V = est.N, est.p, est.V
    c, d = spec.numerators, spec.denominators
    cp, dp = c @ p, d @ p
    zero = np.flatnonzero(dp == 0.0)
    if zero.size:
        raise ValidationError(f"denominator estimate is zero for {[spec.labels[i] for i in zero]}")
    theta = cp / dp
    L = theta[:, None] * d - c
    vL = np.einsum("qi,ij,qj->q", L, V, L)
    live = vL > EPS_VAR

    # one-sided test of theta = tau against theta < tau; orient so large values reject
    sign = np.sign(dp)
    Lt = spec.margins[:, None] * d - c
    vt = np.einsum("qi,ij,qj->q", Lt, V, Lt)
    test_live = vt > EPS_VAR

    linear = []
    if live.any():
        linear.append(L[live])
    if test_live.any():
        linear.append(sign[test_live, None] * Lt[test_live])
    dist = bootstrap_distributions(est, cfg, linear=linear) if linear else None
    if live.any():
        z = dist.c_eps(cfg.alpha, 0)
    else:
        z = float("nan")
    stat = np.full(spec.q, np.nan)
    pval = np.full(spec.q, np.nan)
    if test_live.any():
        k = len(linear) - 1
        sample: MaxSample = dist.max_signed(k)
        stat[test_live] = np.sqrt(N) * sign[test_live] * (Lt[test_live] @ p) / np.sqrt(vt[test_live])
        pval[test_live] = sample.pvalue(stat[test_live])

    out = []
    for l in range(spec.q):
        cVc, cVd, dVd = c[l] @ V @ c[l], c[l] @ V @ d[l], d[l] @ V @ d[l]
        warn = None
        sep = abs(math.sqrt(N) * dp[l]) / math.sqrt(dVd) if dVd > 0 else math.inf
        if sep < NEAR_ZERO_RATIO:
            warn = "denominator-near-zero"
            warnings.warn(f"{spec.labels[l]}: |sqrt(N) d'p| / sd = {sep:.3g} < {NEAR_ZERO_RATIO}",
                          DenominatorNearZero, stacklevel=2)
        A, B, C = (fieller_coefficients(cp[l], dp[l], cVc, cVd, dVd, N, z) if math.isfinite(z)
                   else (math.nan,) * 3)
        if not live[l]:
            # numerator proportional to denominator: A (t - theta)^2 <= 0; with no
            # bootstrap quantile (every ratio degenerate) the point is reported as is
            if math.isnan(A) or A > 0:
                status, lo, hi = "degenerate-point", float(theta[l]), float(theta[l])
            else:
                status, lo, hi = "entire-axis", None, None
        else:
            status, lo, hi = solve_fieller(A, B, C)
        if strict and status not in ("finite", "degenerate-point"):
            raise UnboundedInterval(f"{spec.labels[l]}: Fieller solution set is {status}", ratio=spec.labels[l],
                                    case=status)
        out.append(RatioInterval(
            label=spec.labels[l],
            estimate=float(theta[l]),
            lower=None if lo is None else float(lo),
            upper=None if hi is None else float(hi),
            A=float(A), B=float(B), C=float(C),
            quantile=float(z),
            status=status,
            warning=warn,
            statistic=None if np.isnan(stat[l]) else float(stat[l]),
            p_value=None if np.isnan(pval[l]) else float(pval[l]),
        ))
    return out


def read_ratio_tsv(text: str, m: int) -> RatioSpec:
    """Ratio file: pairs of tab-separated rows (numerator, then denominator), optional label column."""
    rows, labels = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        try:
            vals = [float(x) for x in fields]
            label = None
        except ValueError:
            label = fields[0]
            try:
                vals = [float(x) for x in fields[1:]]
            except ValueError:
                raise ValidationError(f"ratio file line {lineno}: non-numeric coefficient") from None
        if len(vals) != m:
            raise DimensionMismatch(f"ratio file line {lineno}: {len(vals)} coefficients, expected {m}")
        rows.append(vals)
        labels.append(label)
    if not rows or len(rows) % 2:
        raise ValidationError("ratio file needs an even, non-zero number of rows (numerator, denominator)")
    c, d = np.array(rows[0::2]), np.array(rows[1::2])
    names = tuple(labels[2 * l] or f"ratio {l + 1}" for l in range(len(c)))
    return RatioSpec(c, d, None, names)
