import numpy as np
import pytest

from rank_mctp.distributions import sym_sqrt
from rank_mctp.errors import BadConfig, NonPsdV
from rank_mctp.simulation import (
    REPORT_COLUMNS,
    SimConfig,
    cov_matrix,
    delta_vector,
    generate,
    power_study,
    simulate_cell,
    type1_study,
)


def test_all_zero_model():
    cfg = SimConfig(sigma=(0, 0, 0), c=(0, 0, 0), n=4)
    data = generate(cfg, np.random.default_rng(0))
    for g in data.groups:
        np.testing.assert_array_equal(g, 0.0)


def test_toeplitz_three():
    V = cov_matrix("TPL", 3)
    np.testing.assert_array_equal(V, [[3, 2, 1], [2, 3, 2], [1, 2, 3]])
    assert np.linalg.eigvalsh(V).min() > 0


def test_ar_default_rho():
    assert SimConfig(cov="AR").rho == 0.6
    np.testing.assert_allclose(cov_matrix("AR", 3)[0], [1, 0.6, 0.36])


@pytest.mark.parametrize("kind", ["CS", "AR", "TPL"])
@pytest.mark.parametrize("d", range(1, 9))
def test_square_root(kind, d):
    V = cov_matrix(kind, d)
    S = sym_sqrt(V)
    np.testing.assert_allclose(S, S.T, atol=1e-12)
    assert np.abs(S @ S - V).max() <= 1e-10


def test_generated_covariance():
    cfg = SimConfig(setting="S2", cov="AR", n=10_000, sigma=(1.0, 2.0), c=(0.5, 1.5))
    data = generate(cfg, np.random.default_rng(7))
    V = cov_matrix("AR", 4)
    for i, x in enumerate(data.groups):
        target = cfg.sigma[i] ** 2 * V + cfg.c[i] ** 2 * np.ones((4, 4))
        xc = x - x.mean(axis=0)
        S = xc.T @ xc / (x.shape[0] - 1)
        prod = xc[:, :, None] * xc[:, None, :]
        se = prod.std(axis=0) / np.sqrt(x.shape[0])
        assert np.all(np.abs(S - target) <= 4 * se)


def test_delta_vectors():
    assert delta_vector("S1", "A", 1.0) == (0, 0, 0, 0, 0, 0, 1, 1, 1)
    assert delta_vector("S1", "D", 2.0) == (0, 0, 2, 0, 0, 2, 0, 0, 2)
    assert delta_vector("S2", "A", 1.0) == (0, 0, 0, 0, 1, 1, 1, 1)
    assert delta_vector("S2", "D", 1.0) == (0, 0, 0, 1, 0, 0, 0, 1)
    cfg = SimConfig(delta=delta_vector("S1", "A", 3.0), sigma=(0, 0, 0), c=(0, 0, 0), n=2)
    np.testing.assert_array_equal(generate(cfg, np.random.default_rng(0)).groups[2], 3.0)


def test_config_guards():
    for bad in (dict(setting="S3"), dict(cov="UN"), dict(rho=1.0), dict(n=1), dict(delta=(0.0,) * 4)):
        with pytest.raises(BadConfig):
            SimConfig(**bad)
    with pytest.raises(NonPsdV):
        generate(SimConfig(n=3), np.random.default_rng(0), V=np.array([[1, 2, 0], [2, 1, 0], [0, 0, 1.0]]))
    with pytest.raises(BadConfig):
        type1_study(SimConfig(delta=delta_vector("S1", "A", 1.0), runs=2))


def test_generator_determinism():
    cfg = SimConfig(setting="S2", cov="TPL", n=5)
    a = generate(cfg, np.random.default_rng(3))
    b = generate(cfg, np.random.default_rng(3))
    assert a.same_values(b)


def test_small_type1_study():
    cfg = SimConfig(setting="S1", n=8, runs=12, B=200, quantile_mc=5000, seed=1)
    report = type1_study(cfg, tests=("mctp", "bootmctp", "ats", "bootats"), contrasts=("centering", "tukey"))
    assert len(report.rows) == 4 * 2 * 3
    for row in report.rows:
        assert 0.0 <= row.rate <= 1.0 and not np.isnan(row.rate)
        assert row.mc_se == pytest.approx(np.sqrt(row.rate * (1 - row.rate) / row.runs))
    again = type1_study(cfg, tests=("mctp", "bootmctp", "ats", "bootats"), contrasts=("centering", "tukey"))
    assert again.to_json() == report.to_json()
    assert report.to_tsv().splitlines()[0].split("\t") == list(REPORT_COLUMNS)


def test_threads_do_not_change_rates():
    cfg = SimConfig(setting="S2", n=6, runs=8, B=200, quantile_mc=2000, seed=4)
    one = simulate_cell(cfg, ("mctp", "bootmctp"), ("main_A",), threads=1)
    four = simulate_cell(cfg, ("mctp", "bootmctp"), ("main_A",), threads=4)
    assert one == four


def test_power_grows_with_shift():
    cfg = SimConfig(setting="S1", n=10, runs=30, B=200, quantile_mc=5000, seed=2)
    report = power_study(cfg, [0.0, 1.5], "A")
    for test in ("mctp", "bootmctp", "ats"):
        assert report.rate(test, delta=1.5) > report.rate(test, delta=0.0)
    null = type1_study(cfg, effects=("main_A",))
    for test in ("mctp", "bootmctp", "ats"):
        assert report.rate(test, delta=0.0) == null.rate(test)
