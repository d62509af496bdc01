"""Monte-Carlo equicoordinate normal quantiles and the scaled chi-square tail."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .errors import BadAlpha, BadConfig, InvalidDegrees, NotACorrelationMatrix, ValidationError

CHUNK = 25_000
# stream tags keep the quantile draws, bootstrap signs and simulated data apart
STREAM_QUANTILE = 1
STREAM_BOOTSTRAP = 2
STREAM_DATA = 3


def check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise BadAlpha(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


@dataclass(frozen=True)
class QuantileConfig:
    mc_size: int = 100_000
    seed: int = 0
    alpha: float = 0.05
    threads: int = 1

    def __post_init__(self):
        if self.mc_size < 1000:
            raise BadConfig(f"mc_size must be >= 1000, got {self.mc_size}")
        check_alpha(self.alpha)
        if not (0 <= int(self.seed) < 2**64):
            raise BadConfig("seed must be a 64-bit unsigned integer")


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


def sym_sqrt(A: np.ndarray) -> np.ndarray:
    """Symmetric square root with negative eigenvalues clipped at zero."""
    vals, vecs = np.linalg.eigh((A + A.T) / 2)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def check_correlation(R: np.ndarray) -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[0] != R.shape[1]:
        raise NotACorrelationMatrix("correlation matrix must be square")
    if np.abs(np.diag(R) - 1.0).max() > 1e-8:
        raise NotACorrelationMatrix("correlation matrix needs a unit diagonal")
    if np.abs(R - R.T).max() > 1e-8:
        raise NotACorrelationMatrix("correlation matrix must be symmetric")
    return (R + R.T) / 2


@dataclass(frozen=True, eq=False)
class MaxSample:
    """Sorted draws of a two-sided max statistic with the matching decision rules.

    ``offset`` is 0 for Monte-Carlo null samples and 1 for bootstrap samples,
    where p-values are ``(1 + #{max >= t}) / (B + 1)``. The critical value is
    the order statistic for which ``t > crit`` holds exactly when the p-value
    of ``t`` is at most alpha.
    """

    values: np.ndarray
    offset: int = 0

    @property
    def size(self) -> int:
        return self.values.size

    def _k(self, alpha: float) -> int:
        # largest exceedance count K with (offset + K) / (M + offset) <= alpha
        return math.floor(alpha * (self.size + self.offset) - self.offset + 1e-9)

    def critical_value(self, alpha: float) -> float:
        K = self._k(check_alpha(alpha))
        if K < 0:
            return math.inf
        return float(self.values[self.size - K - 1])

    def exceedances(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.size - np.searchsorted(self.values, t, side="left")

    def pvalue(self, t):
        p = (self.offset + self.exceedances(t)) / (self.size + self.offset)
        return float(p) if np.ndim(p) == 0 else p

    def reject(self, t, alpha: float):
        return self.exceedances(t) <= self._k(check_alpha(alpha))


def _chunk_max(root: np.ndarray, seed: int, chunk: int, size: int) -> np.ndarray:
    rng = substream(seed, STREAM_QUANTILE, chunk)
    z = rng.standard_normal((size, root.shape[0]))
    return np.abs(z @ root).max(axis=1)


def max_abs_normal_sample(R: np.ndarray, cfg: QuantileConfig) -> MaxSample:
    """Sorted draws of max_l |Y_l| for Y ~ N(0, R)."""
    R = check_correlation(R)
    root = sym_sqrt(R)
    sizes = [CHUNK] * (cfg.mc_size // CHUNK)
    if cfg.mc_size % CHUNK:
        sizes.append(cfg.mc_size % CHUNK)
    jobs = [(root, cfg.seed, c, s) for c, s in enumerate(sizes)]
    if cfg.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            parts = list(ex.map(lambda j: _chunk_max(*j), jobs))
    else:
        parts = [_chunk_max(*j) for j in jobs]
    values = np.sort(np.concatenate(parts))
    values.setflags(write=False)
    return MaxSample(values, 0)


def equicoordinate_quantile(R: np.ndarray, cfg: QuantileConfig) -> float:
    """z with P(-z <= Y_l <= z for all l) = 1 - alpha, Y ~ N(0, R), estimated by Monte Carlo."""
    return max_abs_normal_sample(R, cfg).critical_value(cfg.alpha)


def chi_square_scaled_pvalue(Q: float, f: float) -> float:
    """P(chi2_f / f > Q)."""
    if not f > 0 or not math.isfinite(f):
        raise InvalidDegrees(f"degrees of freedom must be positive, got {f}")
    if Q < 0:
        raise ValidationError(f"statistic must be non-negative, got {Q}")
    return float(chi2.sf(Q * f, f))
