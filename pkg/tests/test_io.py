import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfqkd import io as tio
from tfqkd.core import GainTable, UsageError


def test_fmt():
    assert tio.fmt(0.1) == "1.0000000000000001e-01"
    assert tio.fmt(3) == "3" and tio.fmt(True) == "1"
    assert tio.fmt(math.nan) == "nan" and tio.fmt(-math.inf) == "-inf"


@given(st.lists(st.lists(st.floats(allow_nan=False), min_size=3, max_size=3), max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    tio.write_csv(path, ["a", "b", "c"], rows, comments=["first", "two\nlines"])
    comments, header, back = tio.read_csv(path)
    assert comments == ["first", "two", "lines"]
    assert header == ["a", "b", "c"]
    assert [[float(v) for v in r] for r in back] == rows


def test_csv_rejects_ragged_rows(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n3\n")
    with pytest.raises(UsageError):
        tio.read_csv(p)
    p.write_text("# only a comment\n")
    with pytest.raises(UsageError):
        tio.read_csv(p)


def test_json_is_stable_and_handles_non_finite(tmp_path):
    doc = {"b": 1.5, "a": [math.nan, math.inf], "c": {(1, 0): 2}}
    assert tio.json_text(doc) == tio.json_text(dict(reversed(list(doc.items()))))
    assert '"nan"' in tio.json_text(doc) and '"1, 0"' not in tio.json_text(doc)


def test_gain_table_round_trip(tmp_path):
    tables = {(1, 0): GainTable((1, 0), ((0.1, 0.2), (0.3, 0.4))),
              (0, 1): GainTable((0, 1), ((0.5, 0.6), (0.7, 1.0)))}
    p = tmp_path / "g.csv"
    tio.write_gain_tables(p, tables)
    assert tio.read_gain_tables(p, 2) == tables


def test_gain_table_without_outcome_serves_both(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("k,l,Q\n0,0,0.1\n0,1,0.2\n1,0,0.3\n1,1,0.4\n")
    t = tio.read_gain_tables(p, 2)
    assert t[(1, 0)].q == t[(0, 1)].q == ((0.1, 0.2), (0.3, 0.4))


@pytest.mark.parametrize("text", [
    "k,l\n0,0\n",
    "k,l,Q,x\n0,0,0.1,1\n",
    "k,l,Q\n0,0,1.5\n",
    "k,l,Q\n0,2,0.1\n",
    "k,l,Q\n0,0,abc\n",
    "outcome,k,l,Q\n11,0,0,0.1\n",
])
def test_gain_table_errors(tmp_path, text):
    p = tmp_path / "g.csv"
    p.write_text(text)
    with pytest.raises(UsageError):
        tio.read_gain_tables(p, 2)


def test_outcome_labels():
    assert tio.outcome_label((0, 1)) == "01"
    assert tio.parse_outcome("(1, 0)") == (1, 0)
