import csv
import json
import math
import os

from spindist.results import (
    COLUMNS,
    ResultRow,
    all_passed,
    format_rows,
    params_digest,
    write_rows,
    write_summary,
)


def test_params_digest_is_stable():
    # pinned: changing the canonicalization would silently break reruns
    assert params_digest({"N": 8, "beta": 0.5, "tags": ["a", "b"]}) == "05172dd937c6"


def test_params_digest_ignores_insertion_order():
    assert params_digest({"a": 1, "b": 2.5}) == params_digest({"b": 2.5, "a": 1})
    assert params_digest({"a": 1}) != params_digest({"a": 2})
    assert len(params_digest({})) == 12


def _rows():
    return [
        ResultRow("exp", "alpha", "d" * 12, 1.5, se=0.1, passed=True, seed=3),
        ResultRow("exp", "beta", "e" * 12, -2.0, passed=None),
        ResultRow("exp", "gamma", "f" * 12, math.pi, passed=False),
    ]


def test_write_rows_roundtrip(tmp_path):
    path = tmp_path / "table.csv"
    write_rows(path, _rows())
    with open(path, newline="") as fh:
        records = list(csv.reader(fh))
    assert tuple(records[0]) == COLUMNS
    assert records[1][COLUMNS.index("value")] == repr(1.5)
    assert records[2][COLUMNS.index("passed")] == ""  # None renders empty
    assert records[3][COLUMNS.index("value")] == repr(math.pi)
    assert not [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]


def test_write_summary(tmp_path):
    path = tmp_path / "summary.json"
    write_summary(path, {"experiment": "exp", "rows": 3, "seed": 0})
    with open(path) as fh:
        payload = json.load(fh)
    assert payload["rows"] == 3


def test_all_passed_skips_unchecked_rows():
    rows = _rows()
    assert not all_passed(rows)
    assert all_passed(rows[:2])  # the None row does not count against
    assert all_passed([])


def test_format_rows_flags():
    text = format_rows(_rows())
    lines = text.splitlines()
    assert "PASS" in lines[0]
    assert "FAIL" not in lines[1]
    assert "FAIL" in lines[2]
