import json

import numpy as np
import pytest

from stochmhd.cli import _parse_forced, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_forced():
    assert _parse_forced("(1,0,0),(0,1,0)") == [(1, 0, 0), (0, 1, 0)]
    assert _parse_forced("( -1, 2, 0 )") == [(-1, 2, 0)]


def test_lattice_command(capsys):
    code, out, _ = run(capsys, "lattice", "--N", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["N"] == 2
    assert len(doc["representatives"]) == 62
    assert "config_hash" in doc and "seed" in doc


def test_lattice_rejects_bad_radius(capsys):
    code, _, err = run(capsys, "lattice", "--N", "0")
    assert code == 2
    assert "error" in err


def test_hormander_command(capsys):
    code, out, _ = run(
        capsys, "hormander", "--N", "1", "--forced", "(1,0,0),(0,1,0),(0,0,1)"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["hypoelliptic"] is True
    assert len(doc["A"]) == 13


def test_hormander_degenerate(capsys):
    code, out, _ = run(capsys, "hormander", "--N", "1", "--forced", "(1,0,0)")
    assert code == 0
    assert json.loads(out)["hypoelliptic"] is False


def test_simulate_zero_noise_csv(tmp_path, capsys):
    code, out, _ = run(
        capsys, "simulate", "--N", "1", "--sigma-sq", "0", "--dt", "0.01",
        "--t-end", "0.2", "--record-every", "4", "--out", str(tmp_path),
    )
    assert code == 0
    path = tmp_path / "trajectory.csv"
    assert path.exists()
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    energies = data[:, 1] + data[:, 2]
    assert np.all(np.diff(energies) <= 0)


def test_artifacts_are_reproducible(tmp_path, capsys):
    args = (
        "audit", "--N", "1", "--forced", "(1,0,0)", "--dt", "0.01",
        "--t-end", "0.1", "--trajectories", "8", "--seed", "21", "--threads", "1",
    )
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2


def test_config_file_with_cli_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"N": 2, "forced": "(1,0,0)"}))
    code, out, _ = run(capsys, "lattice", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["N"] == 2
    code, out, _ = run(capsys, "lattice", "--config", str(cfg), "--N", "1")
    assert code == 0
    assert json.loads(out)["N"] == 1


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "lattice", "--config", str(cfg))
    assert code == 2
    assert "bogus" in err


def test_hitting_requires_sane_threshold(capsys):
    code, _, err = run(
        capsys, "hitting", "--N", "1", "--forced", "(1,0,0)", "--sigma-sq", "8.0",
        "--c-sq", "4.0", "--dt", "0.01", "--t-end", "0.1", "--trajectories", "4",
    )
    assert code == 2
    assert "threshold" in err
