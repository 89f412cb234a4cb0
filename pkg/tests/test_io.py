import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coma.errors import DataError
from coma.intervals import EMPTY, FULL_LINE, normalize
from coma.io import format_interval_set, parse_interval_set, parse_matrix, parse_numbers


def test_header_optional():
    assert parse_interval_set("lo,hi\n0,1\n") == parse_interval_set("0,1\n")


def test_full_and_empty():
    assert parse_interval_set("-inf,inf\n") == FULL_LINE
    assert parse_interval_set("") == EMPTY
    assert format_interval_set(FULL_LINE) == "-inf,inf\n"
    assert format_interval_set(EMPTY) == ""


@pytest.mark.parametrize("text,where", [("0,x\n", ":1"), ("0,1\n2,1\n", ":2"), ("0,1,2\n", ":1"), ("0,inf\n", ":1")])
def test_errors_name_line(text, where):
    with pytest.raises(DataError, match=where):
        parse_interval_set(text, "f.csv")


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(0, 1e3)), max_size=6))
def test_round_trip(raw):
    s = normalize([(a, a + d) for a, d in raw])
    assert parse_interval_set(format_interval_set(s)) == s


def test_numbers_and_matrix():
    assert parse_numbers("0.2,0.3\n0.5\n") == [0.2, 0.3, 0.5]
    R = parse_matrix("1,1,0\n0,1,1\n")
    assert R.shape == (2, 3) and R[1, 2] == 1
    with pytest.raises(DataError, match=":2"):
        parse_matrix("1,1\n1\n", "R")
    with pytest.raises(DataError):
        parse_numbers("nan\n")
