"""Covariance of the pairwise effects and of the relative effect vector.

Residuals ``D_rsk(p,q) = F_pq(X_rsk) - w_pqrs`` are stored per group r as an
array ``D[r][k, s, pq]``. Products of residuals from the same subject give the
tau table; the covariance of the stacked pairwise vector is assembled from it
case by case, and ``V = E Sigma E'`` follows.

The stacked pairwise vector has entry ``w_pqrs`` at position ``rs * m + pq``
(target cell outer, source cell inner), ``m = a * d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .data import Dataset, Design
from .effects import PairwiseEffects, e_matrix, pairwise_effects, relative_effects
from .errors import DimensionMismatch, GroupTooSmall


def empirical_cdf_at(sample: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Normalized empirical distribution function of ``sample`` evaluated at ``x``."""
    s = np.sort(sample)
    lo = np.searchsorted(s, x, side="left")
    hi = np.searchsorted(s, x, side="right")
    return (lo + hi) / (2.0 * s.size)


def d_residuals(data: Dataset, w: PairwiseEffects) -> list[np.ndarray]:
    design = data.design
    a, d, m = design.a, design.d, design.cells
    cells = [data.cell_values(c) for c in range(m)]
    out = []
    for r in range(a):
        x = data.groups[r]
        D = np.empty((x.shape[0], d, m))
        for pq in range(m):
            D[:, :, pq] = empirical_cdf_at(cells[pq], x)
        # subtract w_pqrs for rs = (r, s)
        D -= w.w[:, r * d:(r + 1) * d].T[None, :, :]
        D.setflags(write=False)
        out.append(D)
    return out


@dataclass(frozen=True, eq=False)
class TauTable:
    """``G[r][s * m + pq, j * m + p'q'] = tau_r^(s,j)(p,q,p',q')``."""

    G: np.ndarray
    design: Design

    def tau(self, r: int, s: int, j: int, pq: int, pq2: int) -> float:
        m = self.design.cells
        return float(self.G[r, s * m + pq, j * m + pq2])


def tau_hat(D: list[np.ndarray], design: Design) -> TauTable:
    small = [r for r, nr in enumerate(design.n) if nr < 2]
    if small:
        raise GroupTooSmall(f"groups {small} have fewer than two subjects", groups=small)
    m, d = design.cells, design.d
    G = np.empty((design.a, d * m, d * m))
    for r, Dr in enumerate(D):
        nr = Dr.shape[0]
        flat = Dr.reshape(nr, d * m)
        # sequential accumulation over subjects keeps the sum order of the definition
        acc = np.zeros((d * m, d * m))
        for row in flat:
            acc += np.multiply.outer(row, row)
        G[r] = acc / (nr * (nr - 1))
    G.setflags(write=False)
    return TauTable(G, design)


# An entry Cov(Z_pqrs, Z_p'q'il) collects products of the subject-level terms
#   [g = r] D_rsk(p,q) - [g = p] D_pqk(r,s)   and   [g = i] D_ilk(p',q') - [g = p'] D_p'q'k(i,l)
# within each group g. Which products survive depends only on the four
# group coincidences below; each key is one branch of the case table.
TERMS = {
    "rr": "+tau_r^(s,l)(p,q,p',q')",   # r = i
    "rp": "-tau_r^(s,q')(p,q,i,l)",    # r = p'
    "pr": "-tau_p^(q,l)(r,s,p',q')",   # p = i
    "pp": "+tau_p^(q,q')(r,s,i,l)",    # p = p'
}
CASES = {
    key: tuple(t for t, on in zip(("rr", "rp", "pr", "pp"), key) if on)
    for key in product((False, True), repeat=4)
}


def sigma_case(r: int, p: int, i: int, p2: int) -> tuple[bool, bool, bool, bool]:
    """Branch key for the entry with target groups r, i and source groups p, p2."""
    return (r == i, r == p2, p == i, p == p2)


def sigma_hat(tau: TauTable, design: Design) -> np.ndarray:
    """Covariance matrix of sqrt(N) times the stacked pairwise effect vector."""
    a, d, m = design.a, design.d, design.cells
    if tau.G.shape != (a, d * m, d * m):
        raise DimensionMismatch("tau table does not match the design")
    G = tau.G
    c = np.arange(m)
    grp, tim = c // d, c % d
    # axes: (rs, pq, il, p'q')
    RS, PQ, IL, PQ2 = np.meshgrid(c, c, c, c, indexing="ij")
    r, s, p, q = grp[RS], tim[RS], grp[PQ], tim[PQ]
    i, l, p2, q2 = grp[IL], tim[IL], grp[PQ2], tim[PQ2]
    key = sigma_case(r, p, i, p2)
    out = np.zeros((m, m, m, m))
    terms = {
        "rr": (r, s * m + PQ, l * m + PQ2),
        "rp": (r, s * m + PQ, q2 * m + IL),
        "pr": (p, q * m + RS, l * m + PQ2),
        "pp": (p, q * m + RS, q2 * m + IL),
    }
    signs = {"rr": 1.0, "rp": -1.0, "pr": -1.0, "pp": 1.0}
    for name, mask in zip(("rr", "rp", "pr", "pp"), key):
        g, row, col = terms[name]
        out += np.where(mask, signs[name] * G[g, row, col], 0.0)
    return design.N * out.reshape(m * m, m * m)


def v_hat(sigma: np.ndarray, design: Design) -> np.ndarray:
    m = design.cells
    if sigma.shape != (m * m, m * m):
        raise DimensionMismatch(f"sigma has shape {sigma.shape}, expected {(m * m, m * m)}")
    E = e_matrix(m)
    V = E @ sigma @ E.T
    return (V + V.T) / 2


def influence(D: list[np.ndarray], design: Design) -> list[np.ndarray]:
    """Per-subject contributions to p-hat, one ``(n_g, m)`` array per group.

    ``psi[g][k, rs] = (1/m) ([r = g] sum_pq D_gsk(p,q) - sum_q D_gqk(r,s))``;
    the projection of sqrt(N)(p-hat - p) is ``sqrt(N) sum_g mean_k psi[g][k]``.
    """
    a, d, m = design.a, design.d, design.cells
    out = []
    for g, Dg in enumerate(D):
        psi = -Dg.sum(axis=1)
        psi[:, g * d:(g + 1) * d] += Dg.sum(axis=2)
        psi /= m
        out.append(psi)
    return out


def v_from_influence(psi: list[np.ndarray], N: int) -> np.ndarray:
    m = psi[0].shape[1]
    V = np.zeros((m, m))
    for P in psi:
        n = P.shape[0]
        V += P.T @ P / (n * (n - 1))
    V *= N
    return (V + V.T) / 2


def clip_psd(V: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((V + V.T) / 2)
    return (vecs * np.clip(vals, 0.0, None)) @ vecs.T


@dataclass(frozen=True, eq=False)
class Estimates:
    """Everything inference needs from one dataset."""

    data: Dataset
    w: PairwiseEffects
    p: np.ndarray
    D: list
    psi: list
    V: np.ndarray

    @property
    def N(self) -> int:
        return self.data.design.N

    @property
    def design(self) -> Design:
        return self.data.design


def estimate_all(data: Dataset) -> Estimates:
    w = pairwise_effects(data)
    p = relative_effects(w)
    D = d_residuals(data, w)
    psi = influence(D, data.design)
    V = v_from_influence(psi, data.design.N)
    return Estimates(data, w, p, D, psi, V)
