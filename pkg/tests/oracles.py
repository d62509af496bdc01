"""Independent reference computations shared by the unit and acceptance tests.

None of these use the package's own formulas: pairwise effects are counted
pair by pair, Fieller endpoints are found by bisection on the defining
inequality, tail probabilities by quadrature of the density.
"""

import math
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.special import gammaln
from scipy.stats import norm


def counting_w(x, y) -> Fraction:
    """P(X < Y) + P(X = Y) / 2 over all pairs, in exact arithmetic."""
    total = Fraction(0)
    for u in x:
        for v in y:
            total += Fraction(1) if u < v else (Fraction(1, 2) if u == v else 0)
    return total / (len(x) * len(y))


def independent_quantile(q: int, alpha: float) -> float:
    return float(norm.ppf((1 + (1 - alpha) ** (1 / q)) / 2))


def quad_pvalue(Q: float, f: float) -> float:
    """P(chi2_f > Q f) by adaptive quadrature of the chi-square density."""
    k = f / 2.0
    logc = -k * math.log(2.0) - gammaln(k)
    dens = lambda x: math.exp(logc + (k - 1) * math.log(x) - x / 2) if x > 0 else 0.0
    x0 = Q * f
    if x0 <= 0:
        return 1.0
    lower, _ = integrate.quad(dens, 0, x0, epsabs=1e-12, epsrel=1e-11, limit=200)
    upper, _ = integrate.quad(dens, x0, x0 + 400.0, epsabs=1e-12, epsrel=1e-11, limit=200)
    return upper if upper < 0.5 else 1.0 - lower


def fieller_gap(theta, N, p, V, c, d, z):
    """Left minus right side of N (c'p - theta d'p)^2 <= z^2 (theta d - c)' V (theta d - c)."""
    L = theta * d - c
    return N * (c @ p - theta * (d @ p)) ** 2 - z * z * (L @ V @ L)


def bisect(f, inside, outside, tol=1e-12):
    for _ in range(200):
        mid = (inside + outside) / 2
        if f(mid) <= 0:
            inside = mid
        else:
            outside = mid
        if abs(outside - inside) < tol:
            break
    return (inside + outside) / 2


def fieller_endpoints(N, p, V, c, d, z, theta_hat):
    """Endpoints of the bounded Fieller set around ``theta_hat`` by bisection."""
    f = lambda t: fieller_gap(t, N, p, V, c, d, z)
    span = 1.0 + abs(theta_hat)
    hi_out = theta_hat + span
    while f(hi_out) <= 0:
        hi_out += span
    lo_out = theta_hat - span
    while f(lo_out) <= 0:
        lo_out -= span
    return bisect(f, theta_hat, lo_out), bisect(f, theta_hat, hi_out)


def random_ratio(rng, m):
    c, d = np.zeros(m), np.zeros(m)
    i, j = rng.choice(m, size=2, replace=False)
    c[i], d[j] = 1.0, 1.0
    if rng.random() < 0.5:
        c[rng.integers(m)] += 0.5
    return c, d
