import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from dpkirchhoff.cli import EXIT_CONFIG, EXIT_OK, EXIT_UNMET, main
from dpkirchhoff.config import ConfigError, ProblemConfig, build_problem, load_config
from dpkirchhoff.energy import AssumptionError


def write_cfg(tmp_path, d, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(d))
    return str(path)


def test_round_trip_identity():
    cfg = ProblemConfig()
    again = ProblemConfig.from_dict(json.loads(cfg.canonical_json()))
    assert again == cfg
    assert again.canonical_json() == cfg.canonical_json()
    assert again.config_hash() == cfg.config_hash()


@given(level=st.integers(1, 6), seed=st.integers(0, 2**31), delta=st.floats(1e-3, 1.0),
       lam=st.one_of(st.just("mid"), st.floats(1e-3, 1e3)))
@settings(max_examples=50, deadline=None)
def test_round_trip_property(level, seed, delta, lam):
    d = ProblemConfig().to_dict()
    d["domain"]["mesh_level"], d["solver"]["seed"], d["theorem"]["delta"] = level, seed, delta
    d["lam"] = lam
    cfg = ProblemConfig.from_dict(d)
    assert ProblemConfig.from_dict(json.loads(cfg.canonical_json())) == cfg


def test_default_file_matches_builtin():
    assert load_config(Path(__file__).parents[1] / "configs" / "default.json") == ProblemConfig()


def test_unknown_keys_rejected(tmp_path):
    d = ProblemConfig().to_dict()
    d["solver"]["tolerance"] = 1.0
    with pytest.raises(ConfigError, match="tolerance"):
        ProblemConfig.from_dict(d)
    with pytest.raises(ConfigError):
        ProblemConfig.from_dict({**ProblemConfig().to_dict(), "extra": 1})
    with pytest.raises(ConfigError):
        ProblemConfig.from_dict({**ProblemConfig().to_dict(), "schema": "other/2"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("key,spec,tag", [
    ("p", {"kind": "constant", "value": 0.9}, "(H1)"),
    ("q", {"kind": "constant", "value": 1.35}, "(H1)"),
    ("q", {"kind": "constant", "value": 2.1}, "(H1)"),
    ("mu", {"kind": "affine", "c0": -0.5, "cx": 1.0, "cy": 0.0}, "(H2)"),
])
def test_hypotheses_checked(key, spec, tag):
    d = ProblemConfig().to_dict()
    d[key] = spec
    with pytest.raises(AssumptionError) as e:
        build_problem(ProblemConfig.from_dict(d))
    assert e.value.assumption == tag


def test_with_overrides():
    cfg = ProblemConfig().with_overrides(mesh_level=3, seed=7, lam=12.5)
    assert (cfg.domain.mesh_level, cfg.solver.seed, cfg.lam) == (3, 7, 12.5)
    assert ProblemConfig().with_overrides() == ProblemConfig()
    assert cfg.config_hash() != ProblemConfig().config_hash()


def test_cli_bad_exponent_exit_2(tmp_path, capsys):
    d = ProblemConfig().to_dict()
    d["p"] = {"kind": "constant", "value": 0.9}
    assert main(["certify", "--config", write_cfg(tmp_path, d), "--out", str(tmp_path)]) \
        == EXIT_CONFIG
    assert "(H1)" in capsys.readouterr().err


def test_cli_missing_config_exit_2(tmp_path):
    assert main(["certify", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG


def test_cli_certify(tmp_path):
    assert main(["certify", "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "certificate.json").read_text())
    assert out["config_hash"] == ProblemConfig().config_hash()
    lo, hi = out["certificate"]["lambda_interval"]
    assert lo == pytest.approx(25.0098, rel=1e-4) and hi == pytest.approx(129.4165, rel=1e-4)


def test_cli_lab(tmp_path):
    assert main(["lab", "--cases", "1000", "--out", str(tmp_path)]) == EXIT_OK
    audit = json.loads((tmp_path / "lab.json").read_text())["audit"]
    assert audit["cases"] == 1000 and audit["failures_with_unit_X"] == 0


def test_cli_solve_small_lambda_unmet(tmp_path, capsys):
    # far below the certified interval only u = 0 survives
    args = ["solve", "--mesh-level", "3", "--lambda", "0.5", "--out", str(tmp_path)]
    assert main(args + ["--expect-three"]) == EXIT_UNMET
    assert "expectation unmet" in capsys.readouterr().err
    out = json.loads((tmp_path / "solve.json").read_text())
    assert out["outcome"]["distinct_count"] < 3
    assert (tmp_path / "traces.csv").exists() and (tmp_path / "traces.gp").exists()


def test_cli_sweep_no_solve(tmp_path):
    args = ["sweep", "--no-solve", "--mesh-level", "3", "--deltas", "0.1",
            "--r-params", "0.002,0.2", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3
    rows = json.loads((tmp_path / "sweep.json").read_text())["rows"]
    assert [r["f4"] for r in rows] == [True, False]


def test_cli_rejects_bad_lambda():
    with pytest.raises(SystemExit):
        main(["solve", "--lambda", "big"])
