import json
import os

import numpy as np
import pytest

from hamfield.io import atomic_write_text, dumps_deterministic, write_csv, write_json


def test_sorted_keys_and_float_format():
    text = dumps_deterministic({"b": 0.1, "a": [np.float64(1 / 3), np.int64(2), True, None]})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text
    assert "0.33333333333333331" in text
    doc = json.loads(text)
    assert doc["b"] == 0.1 and doc["a"][1] == 2 and doc["a"][2] is True


def test_round_trip_exact():
    vals = [1e-300, -2.5e17, np.pi, 0.0]
    assert json.loads(dumps_deterministic(vals)) == vals


def test_non_finite_as_strings():
    doc = json.loads(dumps_deterministic({"x": float("nan"), "y": float("inf"), "z": -np.inf}))
    assert doc == {"x": "nan", "y": "inf", "z": "-inf"}


def test_identical_output_for_equal_input():
    a = {"k": np.arange(3.0), "m": {"z": 1, "y": 2}}
    b = {"m": {"y": 2, "z": 1}, "k": [0.0, 1.0, 2.0]}
    assert dumps_deterministic(a) == dumps_deterministic(b)


def test_rejects_unknown_types():
    with pytest.raises(TypeError):
        dumps_deterministic({"x": object()})


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "r.json"
    write_json(target, {"a": 1})
    write_json(target, {"a": 2})
    assert json.loads(target.read_text()) == {"a": 2}
    assert os.listdir(target.parent) == ["r.json"]


def test_atomic_write_failure_keeps_old_file(tmp_path, monkeypatch):
    target = tmp_path / "f.txt"
    atomic_write_text(target, "old")

    def boom(*args):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        atomic_write_text(target, "new")
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["f.txt"]


def test_csv_full_precision(tmp_path):
    path = write_csv(tmp_path / "t.csv", [{"t": 0.1, "n": 3}], ["t", "n"])
    assert path.read_text() == "t,n\n0.10000000000000001,3\n"
