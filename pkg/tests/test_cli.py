import csv
import json

import numpy as np
import pytest

from hamfield.cli import EXPERIMENTS, build_config, main, parse_override

FAST = {
    "linear-evolve": [],
    "complex-structure": [],
    "fock-ccr": [],
    "hs-scan": [],
    "phi4-evolve": ["t=1.0"],
    "moyal-covariance": [],
    "covariant-propagator": [],
    "metric-suite": ["samples=100"],
}


def read_report(path):
    return json.loads((path / "report.json").read_text())


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_every_experiment_passes_defaults(tmp_path, name):
    out = tmp_path / name
    args = [name, "--out", str(out)]
    for o in FAST[name]:
        args += ["--override", o]
    assert main(args) == 0
    rep = read_report(out)
    assert rep["experiment"] == name and rep["all_passed"] is True
    for f in rep["files"]:
        assert (out / f).exists()
    assert "wall_seconds" in json.loads((out / "timing.json").read_text())


def test_fock_ccr_single_mode(tmp_path):
    code = main(["fock-ccr", "--out", str(tmp_path), "--override", "d=1", "--override", "N_max=12"])
    assert code == 0
    rep = read_report(tmp_path)
    ccr = [v for k, v in rep["values"].items() if k.startswith("ccr")]
    assert ccr and max(ccr) <= 1e-10


def test_hs_scan_norms(tmp_path):
    assert main(["hs-scan", "--out", str(tmp_path), "--override", "sizes=[2,4,8,16]", "--override", "r=1"]) == 0
    with open(tmp_path / "hs_scan.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["size"]) for r in rows] == [2, 4, 8, 16]
    for r in rows:
        assert abs(float(r["squeezing_norm"]) - 2 * np.sqrt(2) * np.sinh(1.0) * np.sqrt(int(r["size"]))) <= 1e-10


def test_unknown_experiment_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["no-such-experiment"])
    assert info.value.code == 2


def test_schema_violation_exits_2(tmp_path, capsys):
    assert main(["linear-evolve", "--out", str(tmp_path), "--override", "dt=-1"]) == 2
    assert main(["linear-evolve", "--out", str(tmp_path), "--override", "bogus=1"]) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["hs-scan", "--config", str(tmp_path / "absent.json")]) == 2


def test_guard_trip_exits_3(tmp_path, capsys):
    assert main(["phi4-evolve", "--out", str(tmp_path), "--override", "dt=0.9"]) == 3
    assert "guard" in capsys.readouterr().err


def test_byte_identical_reports(tmp_path):
    out = tmp_path / "r"
    blobs = []
    for _ in range(2):
        assert main(["metric-suite", "--out", str(out), "--seed", "7", "--override", "samples=50"]) == 0
        blobs.append((out / "report.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_seed_changes_sampled_values(tmp_path):
    blobs = []
    for seed in (1, 1, 2):
        out = tmp_path / str(len(blobs))
        assert main(["linear-evolve", "--out", str(out), "--seed", str(seed)]) == 0
        blobs.append((out / "trajectory.csv").read_bytes())
    assert blobs[0] == blobs[1] != blobs[2]


def test_config_file_and_override_precedence(tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({"r": 0.5, "lattice": {"sites": 8}, "seed": 3}))
    cfg = build_config("hs-scan", cfg_path, ["r=0.25", "lattice.spacing=0.5"], seed=None, out=tmp_path)
    assert cfg.r == 0.25 and cfg.lattice.sites == 8 and cfg.lattice.spacing == 0.5 and cfg.seed == 3
    assert build_config("hs-scan", cfg_path, [], seed=9).seed == 9


def test_config_experiment_mismatch(tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({"experiment": "fock-ccr"}))
    assert main(["hs-scan", "--config", str(cfg_path), "--out", str(tmp_path)]) == 2


def test_parse_override():
    assert parse_override("a.b=[1, 2]") == ("a.b", [1, 2])
    assert parse_override("out=dir") == ("out", "dir")
    with pytest.raises(ValueError):
        parse_override("novalue")
