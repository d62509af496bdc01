"""ANOVA-type statistic with Box's scaled chi-square approximation.

The approximation is known not to hold the nominal level asymptotically, so
results are tagged ``approximate``; the wild-bootstrap version lives in
``bootstrap.boot_ats``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contrasts import ContrastFamily, projection
from .covariance import Estimates, estimate_all
from .data import Dataset
from .distributions import chi_square_scaled_pvalue
from .errors import DegenerateTrace

EPS_TRACE = 1e-12


@dataclass(frozen=True)
class AtsResult:
    Q: float
    f: float
    p_value: float
    method: str = "box-approximate"
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"method": self.method, "statistic": self.Q, "df": self.f, "p_value": self.p_value, **self.info}


def ats_statistic(p: np.ndarray, V: np.ndarray, M: np.ndarray, N: int) -> tuple[float, float]:
    """Return (Q, f): Q = N p'Mp / tr(MV), f = tr(MV)^2 / tr(MVMV)."""
    MV = M @ V
    tr = float(np.trace(MV))
    if tr <= EPS_TRACE:
        raise DegenerateTrace(f"tr(MV) = {tr:.3g} is not positive")
    Q = N * float(p @ M @ p) / tr
    f = tr * tr / float(np.trace(MV @ MV))
    return Q, f


def ats_infer(data: Dataset | Estimates, C: ContrastFamily) -> AtsResult:
    est = data if isinstance(data, Estimates) else estimate_all(data)
    Q, f = ats_statistic(est.p, est.V, projection(C), est.N)
    return AtsResult(Q, f, chi_square_scaled_pvalue(Q, f))
