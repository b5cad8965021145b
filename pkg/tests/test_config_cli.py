import json
import pathlib

import numpy as np
import pytest

from saddlebandit import geometry as geo
from saddlebandit.cli import main
from saddlebandit.config import parse_config, parse_set_spec
from saddlebandit.errors import ConfigError

ROOT = pathlib.Path(__file__).resolve().parents[1]

GOOD = """[game]
set_x = { kind = "simplex", dim = 2 }
set_y = { kind = "simplex", dim = 2 }
matrix = [[1.0, -1.0], [-1.0, 1.0]]

[run]
delta = 0.1
max_phases = 2
seed = 0
"""


def test_parse_good_config():
    cfg = parse_config(GOOD).run
    assert cfg.delta == 0.1 and cfg.max_phases == 2
    assert cfg.batch_c == 1.0 and cfg.fallback_c == 1.0


def test_bad_delta_message():
    with pytest.raises(ConfigError, match=r"line 7: delta = 0.7 must lie in \(0, 1/2\]"):
        parse_config(GOOD.replace("delta = 0.1", "delta = 0.7"))


def test_unknown_key_is_line_anchored():
    with pytest.raises(ConfigError, match=r"line 10: unknown key 'speed'"):
        parse_config(GOOD + "speed = 3\n")
    with pytest.raises(ConfigError, match=r"line 11: unknown table \[extra\]"):
        parse_config(GOOD + "\n[extra]\n")


def test_shape_mismatch():
    with pytest.raises(ConfigError, match="shape"):
        parse_config(GOOD.replace("[[1.0, -1.0], [-1.0, 1.0]]", "[[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0]]"))


def test_shipped_configs_parse():
    for p in (ROOT / "configs").glob("*.toml"):
        cfg = parse_config(p.read_text(), str(p)).run
        assert cfg.max_phases == 25


def test_set_spec_shorthand():
    assert parse_set_spec("simplex:5").dim == 5
    b = parse_set_spec("box:3:u=2")
    assert np.array_equal(b.upper, [2, 2, 2])
    assert parse_set_spec("ball:2:r=2").radius == 2.0
    assert parse_set_spec('{"kind": "vpolytope", "vertices": [[0, 0], [1, 0], [0, 1]]}').kind == geo.VPOLYTOPE
    with pytest.raises(ConfigError):
        parse_set_spec("cube:3")


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(GOOD.replace("delta = 0.1", "delta = 0.7"))
    assert main(["run", "--config", str(bad)]) == 2
    assert "delta = 0.7 must lie in (0, 1/2]" in capsys.readouterr().err
    assert main(["spanner", "--set", "simplex:5"]) == 0
    assert main(["ellipsoid", "--set", "box:3"]) == 0
    assert main(["bogus"]) == 2
    capsys.readouterr()
    assert main(["norms", "--set", "box:2", "--vector", "3,-4", "--json"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out) == {"vector": [3.0, -4.0], "dual_norm": 7.0, "primal_norm": 4.0}
    assert main(["gap", "--set-x", "simplex:2", "--set-y", "simplex:2", "--matrix", "[[1,-1],[-1,1]]",
                 "--x", "1,0", "--y", "1,0", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["gap"] == pytest.approx(2.0)
    assert main(["gap", "--set-x", "simplex:2", "--set-y", "simplex:2", "--matrix", "[[1,-1],[-1,1]]",
                 "--x", "2,0", "--y", "1,0"]) == 2
    assert main(["rvu-check", "--trials", "3", "--T", "10"]) == 0


def test_cli_run_writes_artifacts(tmp_path, monkeypatch):
    cfg = tmp_path / "mp.toml"
    cfg.write_text(GOOD)
    monkeypatch.setenv("SADDLEBANDIT_OUT_DIR", str(tmp_path / "out"))
    assert main(["run", "--config", str(cfg), "--seeds", "0..1", "--workers", "2"]) == 0
    for seed in (0, 1):
        d = tmp_path / "out" / f"mp-seed{seed}"
        names = {p.name for p in d.iterdir()}
        assert names == {"config.toml", "phase_log.csv", "round_log.csv", "run_info.json", "summary.json",
                         "gap.svg"}
        assert (d / "gap.svg").read_text().lstrip().startswith("<svg")
        assert json.loads((d / "summary.json").read_text())["phases"] == 2
        assert (d / "config.toml").read_text() == GOOD
