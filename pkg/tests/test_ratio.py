import warnings

import numpy as np
import pytest

from rank_mctp.bootstrap import BootstrapConfig
from rank_mctp.covariance import estimate_all
from rank_mctp.data import Dataset
from rank_mctp.errors import DegenerateVariance, DenominatorNearZero, UnboundedInterval, ValidationError
from rank_mctp.ratio import RatioSpec, fieller_scis, ratio_statistics, read_ratio_tsv, solve_fieller

from conftest import random_dataset
from oracles import fieller_endpoints, fieller_gap, random_ratio

CFG = BootstrapConfig(B=400, seed=2)


def test_bisection_oracle():
    rng = np.random.default_rng(42)
    checked = 0
    for case in range(100):
        a, dd = rng.integers(1, 3), rng.integers(2, 4)
        data = random_dataset(rng, a, dd, rng.integers(6, 12, size=a).tolist())
        est = estimate_all(data)
        c, d = random_ratio(rng, est.design.cells)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DenominatorNearZero)
            (res,) = fieller_scis(est, RatioSpec(c, d), BootstrapConfig(B=200, seed=case))
        if res.status != "finite":
            continue
        assert fieller_gap(res.estimate, est.N, est.p, est.V, c, d, res.quantile) <= 0
        lo, hi = fieller_endpoints(est.N, est.p, est.V, c, d, res.quantile, res.estimate)
        assert lo == pytest.approx(res.lower, abs=1e-8)
        assert hi == pytest.approx(res.upper, abs=1e-8)
        checked += 1
    assert checked >= 80


def test_scale_equivariance(rng):
    data = random_dataset(rng, 2, 3, [10, 12])
    est = estimate_all(data)
    c, d = np.zeros(6), np.zeros(6)
    c[:3], d[3:] = 1 / 3, 1 / 3
    (base,) = fieller_scis(est, RatioSpec(c, d), CFG)
    (half,) = fieller_scis(est, RatioSpec(c, 2 * d), CFG)
    (double,) = fieller_scis(est, RatioSpec(4 * c, d), CFG)
    (both,) = fieller_scis(est, RatioSpec(8 * c, 8 * d), CFG)
    assert half.estimate == base.estimate / 2
    assert (half.lower, half.upper) == (base.lower / 2, base.upper / 2)
    assert (double.lower, double.upper) == (base.lower * 4, base.upper * 4)
    assert (both.estimate, both.lower, both.upper) == (base.estimate, base.lower, base.upper)


def test_equal_rows_give_point(rng):
    data = random_dataset(rng, 2, 2, [8, 8])
    c = np.array([1.0, 0.0, 0.0, 0.0])
    ratio = RatioSpec(np.vstack([c, [0, 1.0, 0, 0]]), np.vstack([c, [0, 0, 1.0, 0]]))
    first, _ = fieller_scis(data, ratio, CFG)
    assert first.status == "degenerate-point"
    assert first.lower == first.upper == 1.0
    assert first.B == pytest.approx(-2 * first.A) and first.C == pytest.approx(first.A)


def test_linear_form_statistics(rng):
    data = random_dataset(rng, 2, 2, [7, 9])
    est = estimate_all(data)
    c, d = np.array([1.0, 0, 0, 0]), np.array([0, 0, 1.0, 0])
    spec = RatioSpec(c, d)
    T0 = ratio_statistics(est.p, est.V, spec, 0.0, est.N)
    assert T0[0] == pytest.approx(-np.sqrt(est.N) * est.p[0] / np.sqrt(est.V[0, 0]), rel=1e-13)
    theta = 0.7
    L = theta * d - c
    dense = np.sqrt(est.N) * (L @ est.p) / np.sqrt(L @ est.V @ L)
    assert ratio_statistics(est.p, est.V, spec, theta, est.N)[0] == pytest.approx(dense, rel=1e-13)
    with pytest.raises(DegenerateVariance):
        ratio_statistics(est.p, est.V, RatioSpec(c, c), 1.0, est.N)


def test_near_zero_denominator_and_unbounded():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(6, 2))
    data = Dataset.from_arrays([x, rng.normal(size=(6, 2))])
    # denominator is a contrast between exchangeable cells, so d'p is near zero
    c = np.array([0.5, 0.0, 0.0, 0.0])
    d = np.array([0.01, 0.0, -0.01, 0.0])
    est = estimate_all(data)
    with pytest.warns(DenominatorNearZero):
        (res,) = fieller_scis(est, RatioSpec(c, d), CFG)
    assert res.warning == "denominator-near-zero"
    assert res.status in ("exclusive", "entire-axis")
    assert not res.bounded
    with pytest.warns(DenominatorNearZero), pytest.raises(UnboundedInterval):
        fieller_scis(est, RatioSpec(c, d), CFG, strict=True)


def test_zero_denominator_rejected(rng):
    data = Dataset.from_arrays([np.ones((3, 2)), np.ones((3, 2))])
    with pytest.raises(ValidationError):
        fieller_scis(data, RatioSpec([1.0, 0, 0, 0], [0, 1.0, -1.0, 0]), CFG)


def test_solve_branches():
    assert solve_fieller(1.0, -3.0, 2.0) == ("finite", 1.0, 2.0)
    assert solve_fieller(1.0, -2.0, 1.0) == ("degenerate-point", 1.0, 1.0)
    assert solve_fieller(-1.0, 3.0, -2.0) == ("exclusive", 1.0, 2.0)
    assert solve_fieller(-1.0, 0.0, 1.0) == ("exclusive", -1.0, 1.0)
    assert solve_fieller(-1.0, 0.0, -1.0)[0] == "entire-axis"
    assert solve_fieller(0.0, 1.0, 1.0)[0] == "half-line"


def test_one_sided_test_direction():
    rng = np.random.default_rng(3)
    lo = rng.normal(size=(15, 2))
    hi = rng.normal(size=(15, 2)) + 1.5
    data = Dataset.from_arrays([lo, hi])
    # theta = p(group 1) / p(group 2) well below 1
    c, d = np.array([0.5, 0.5, 0, 0]), np.array([0, 0, 0.5, 0.5])
    (res,) = fieller_scis(data, RatioSpec(c, d), BootstrapConfig(B=1000, seed=1))
    assert res.upper < 1.0
    assert res.statistic > 0 and res.p_value < 0.05
    (flip,) = fieller_scis(data, RatioSpec(d, c), BootstrapConfig(B=1000, seed=1))
    assert flip.lower > 1.0 and flip.p_value > 0.5


def test_read_ratio_file():
    text = "Y/N\t0.5\t0.5\t0\t0\n\t0\t0\t0.5\t0.5\n"
    spec = read_ratio_tsv(text, 4)
    assert spec.labels == ("Y/N",)
    np.testing.assert_array_equal(spec.denominators, [[0, 0, 0.5, 0.5]])
    with pytest.raises(ValidationError):
        read_ratio_tsv("0.5\t0.5\t0\t0\n", 4)
