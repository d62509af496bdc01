import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rank_mctp.data import Dataset, Design, ingest_long_csv, midranks, to_long_csv
from rank_mctp.errors import (
    DuplicateCell,
    EmptyInput,
    FewerThanTwoSubjects,
    MissingCell,
    NonNumericValue,
    ValidationError,
)

from conftest import random_dataset

MINIMAL = """subject,group,time,value
s1,g,t1,1.0
s1,g,t2,2.0
s2,g,t1,3.0
s2,g,t2,4.0
"""


def test_minimal_csv():
    data = ingest_long_csv(MINIMAL)
    assert data.design == Design(1, 2, (2,))
    np.testing.assert_array_equal(data.groups[0], [[1, 2], [3, 4]])
    assert data.group_names == ("g",)
    assert data.time_names == ("t1", "t2")


def test_missing_cell():
    text = "\n".join(MINIMAL.splitlines()[:-1]) + "\n"
    with pytest.raises(MissingCell):
        ingest_long_csv(text)


def test_duplicate_cell():
    with pytest.raises(DuplicateCell):
        ingest_long_csv(MINIMAL + "s2,g,t2,5.0\n")


def test_non_numeric():
    with pytest.raises(NonNumericValue):
        ingest_long_csv(MINIMAL.replace("4.0", "four"))
    with pytest.raises(NonNumericValue):
        ingest_long_csv(MINIMAL.replace("4.0", "nan"))


def test_subject_in_two_groups():
    text = MINIMAL + "s3,h,t1,1\ns3,h,t2,1\ns4,h,t1,1\ns4,h,t2,2\ns1,h,t1,0\n"
    with pytest.raises(ValidationError):
        ingest_long_csv(text)


def test_single_subject_group():
    text = MINIMAL + "s3,h,t1,1\ns3,h,t2,1\n"
    with pytest.raises(FewerThanTwoSubjects):
        ingest_long_csv(text)


def test_empty_inputs():
    with pytest.raises(EmptyInput):
        ingest_long_csv("")
    with pytest.raises(EmptyInput):
        ingest_long_csv("subject,group,time,value\n")
    with pytest.raises(EmptyInput):
        midranks([])


def test_explicit_level_order():
    text = MINIMAL + "s3,h,t1,1\ns3,h,t2,1\ns4,h,t1,1\ns4,h,t2,2\n"
    data = ingest_long_csv(text, group_order=["h", "g"], time_order=["t2", "t1"])
    assert data.group_names == ("h", "g")
    np.testing.assert_array_equal(data.groups[1], [[2, 1], [4, 3]])
    with pytest.raises(ValidationError):
        ingest_long_csv(text, group_order=["h", "x"])


def test_custom_columns():
    text = MINIMAL.replace("subject,group,time,value", "id,arm,visit,y")
    data = ingest_long_csv(text, {"subject": "id", "group": "arm", "time": "visit", "value": "y"})
    assert data.design.n == (2,)


def test_immutable():
    data = ingest_long_csv(MINIMAL)
    with pytest.raises(ValueError):
        data.groups[0][0, 0] = 9.0


@pytest.mark.parametrize("values, expected", [
    ([10, 20, 30], [1, 2, 3]),
    ([1, 1, 2], [1.5, 1.5, 3]),
    ([5, 5], [1.5, 1.5]),
])
def test_midranks_examples(values, expected):
    np.testing.assert_array_equal(midranks(values), expected)


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=30))
def test_midranks_count_definition(values):
    x = np.array(values, dtype=float)
    expected = [(x < v).sum() + ((x == v).sum() + 1) / 2 for v in x]
    np.testing.assert_array_equal(midranks(x), expected)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3), st.booleans())
def test_csv_round_trip(seed, a, d, ties):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, a, d, rng.integers(2, 6, size=a).tolist(), ties=ties)
    back = ingest_long_csv(to_long_csv(data))
    assert back.same_values(data)
    assert back.group_names == data.group_names and back.time_names == data.time_names


def test_design_helpers():
    design = Design(2, 3, (4, 5))
    assert design.N == 9 and design.cells == 6
    assert design.cell(1, 2) == 5
    assert design.group_of_cell(4) == 1
