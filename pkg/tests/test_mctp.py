import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rank_mctp.contrasts import KINDS, build_contrast, factorial_contrast
from rank_mctp.covariance import estimate_all
from rank_mctp.data import Dataset
from rank_mctp.distributions import QuantileConfig
from rank_mctp.errors import DegenerateVariance
from rank_mctp.mctp import contrast_statistics, mctp_infer

from conftest import random_dataset

QCFG = QuantileConfig(mc_size=20_000, seed=3)


def test_constant_data_is_degenerate():
    data = Dataset.from_arrays([np.ones((3, 2)), np.ones((3, 2))])
    with pytest.raises(DegenerateVariance) as info:
        mctp_infer(data, factorial_contrast("main_A", data.design, "tukey"), qcfg=QCFG)
    assert info.value.exit_code == 3


@pytest.mark.parametrize("kind", KINDS)
def test_cloned_groups(rng, kind):
    x = rng.normal(size=(8, 3))
    data = Dataset.from_arrays([x, x.copy()])
    fam = factorial_contrast("main_A", data.design, kind)
    res = mctp_infer(data, fam, qcfg=QCFG)
    for row in res.rows:
        assert row.estimate == pytest.approx(0.0, abs=1e-15)
        assert row.statistic == pytest.approx(0.0, abs=1e-12)
        assert row.lower == pytest.approx(-row.upper, abs=1e-15)
        assert not row.reject
    assert not res.reject


def test_statistics_by_hand(rng):
    data = random_dataset(rng, 2, 3, [6, 7])
    est = estimate_all(data)
    fam = factorial_contrast("main_D", data.design, "dunnett")
    T, R, v = contrast_statistics(est.p, est.V, fam, est.N)
    C = fam.C
    for l in range(fam.q):
        var = C[l] @ est.V @ C[l]
        assert v[l] == pytest.approx(var, rel=1e-14)
        assert T[l] == pytest.approx(np.sqrt(est.N) * (C[l] @ est.p) / np.sqrt(var), rel=1e-13)
    np.testing.assert_allclose(np.diag(R), 1.0)
    np.testing.assert_allclose(R, R.T)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(KINDS), st.sampled_from([0.01, 0.05, 0.2]))
def test_compatible_decisions(seed, kind, alpha):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, 3, 2, [6, 5, 7])
    shift = Dataset.from_arrays([g + 0.8 * i for i, g in enumerate(data.groups)])
    fam = factorial_contrast("main_A", data.design, kind)
    res = mctp_infer(shift, fam, alpha=alpha, qcfg=QuantileConfig(mc_size=5000, seed=seed, alpha=alpha))
    for row in res.rows:
        excludes = row.lower > 0 or row.upper < 0
        assert excludes == row.reject == (row.p_value <= alpha)
        assert abs(row.statistic) > res.quantile or not row.reject
    assert res.reject == any(r.reject for r in res.rows)
    assert res.p_value == min(r.p_value for r in res.rows)


def test_result_serializes(rng):
    data = random_dataset(rng, 2, 2, 5)
    res = mctp_infer(data, factorial_contrast("interaction", data.design, "centering"), qcfg=QCFG)
    out = res.to_dict()
    assert out["method"] == "asymptotic"
    assert len(out["contrasts"]) == 4
    assert out["resolution"] == pytest.approx(1 / QCFG.mc_size)


def test_level_under_exchangeable_null():
    rng = np.random.default_rng(11)
    rejections = 0
    runs = 200
    fam = build_contrast("tukey", 3)
    for _ in range(runs):
        data = random_dataset(rng, 3, 2, 30)
        lifted = factorial_contrast("main_A", data.design, fam)
        rejections += mctp_infer(data, lifted, qcfg=QuantileConfig(mc_size=5000)).reject
    # binomial 99.9% band around 0.05 for 200 runs
    assert rejections / runs < 0.05 + 3.3 * np.sqrt(0.05 * 0.95 / runs)
