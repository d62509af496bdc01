import numpy as np
import pytest

from rank_mctp.ats import ats_infer, ats_statistic
from rank_mctp.contrasts import factorial_contrast, projection
from rank_mctp.covariance import estimate_all
from rank_mctp.data import Dataset
from rank_mctp.errors import DegenerateTrace

from conftest import random_dataset


def test_equal_eigenvalues_give_rank():
    M = projection(np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]]))
    Q, f = ats_statistic(np.array([0.2, 0.4, 0.6, 0.8]), 3.0 * np.eye(4), M, 10)
    assert f == pytest.approx(2.0, rel=1e-14)
    # N p'Mp / tr(MV) by hand
    assert Q == pytest.approx(10 * (0.02 + 0.02) / 6.0, rel=1e-13)


def test_constant_data_is_degenerate():
    data = Dataset.from_arrays([np.zeros((4, 3)), np.zeros((4, 3))])
    with pytest.raises(DegenerateTrace):
        ats_infer(data, factorial_contrast("main_D", data.design, "centering"))


def test_contrast_choice_irrelevant(rng):
    # the projection depends only on the row space
    data = random_dataset(rng, 2, 4, [6, 6])
    a = ats_infer(data, factorial_contrast("main_D", data.design, "tukey"))
    b = ats_infer(data, factorial_contrast("main_D", data.design, "centering"))
    assert a.Q == pytest.approx(b.Q, rel=1e-12)
    assert a.f == pytest.approx(b.f, rel=1e-12)
    assert a.method == "box-approximate"


def test_values_in_range(rng):
    data = random_dataset(rng, 3, 3, [5, 6, 7], ties=True)
    est = estimate_all(data)
    res = ats_infer(est, factorial_contrast("interaction", data.design, "centering"))
    assert res.Q >= 0 and 0 < res.f <= 4 + 1e-12
    assert 0 <= res.p_value <= 1
