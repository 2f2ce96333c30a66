import copy
import json

import numpy as np
import pytest

from nonlocal_lp.cli import main
from nonlocal_lp.config import config_digest, parse_config
from nonlocal_lp.errors import ConfigurationError
from nonlocal_lp.semigroup import char_exponent

CANONICAL = {
    "measure": {"alpha": 1.5, "atoms": [{"direction": [1], "weight": 1}, {"direction": [-1], "weight": 1}],
                "density": "constant"},
    "coefficient": {"type": "constant", "value": 1.0},
    "drift": {"type": "zero"},
    "grid": {"n": 64},
    "problem": {"T": 1.0, "p": 2.0, "initial": {"modes": [[1]], "coeffs": [[1.0, 0.0]]}},
    "solver": {"route": "duhamel", "n_steps": 16},
    "verify": {"ensemble_size": 10, "seed": 3, "n_paths": 1000, "alphas": [1.5], "ps": [2.0], "n": 32},
    "sampler": {"r_cut": 0.05, "n_paths": 100, "seed": 1},
}


def run(tmp_path, command, cfg, *extra, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    return main([command, "--config", str(path), "--out", str(out), *extra]), out


def edited(**sections):
    cfg = copy.deepcopy(CANONICAL)
    for key, value in sections.items():
        cfg[key] = value
    return cfg


def test_validate_canonical(tmp_path):
    code, out = run(tmp_path, "validate", CANONICAL)
    report = json.loads((out / "validate.json").read_text())
    assert code == 0 and report["passed"]
    assert all(c["margin"] > 0 for c in report["checks"])
    assert report["config_digest"] == config_digest(CANONICAL)


def test_validate_unpaired_alpha_one(tmp_path):
    cfg = edited(measure={"alpha": 1.0, "atoms": [{"direction": [1], "weight": 1}]})
    code, out = run(tmp_path, "validate", cfg)
    report = json.loads((out / "validate.json").read_text())
    assert code == 1 and "alpha1_measure_cancellation" in report["failed"]


@pytest.mark.parametrize("p", [3.0001, 2.9999])
def test_validate_p_exclusion(tmp_path, p):
    cfg = edited(problem={"T": 1.0, "p": p, "initial": CANONICAL["problem"]["initial"]})
    code, out = run(tmp_path, "validate", cfg)
    assert code == 1 and json.loads((out / "validate.json").read_text())["failed"] == ["p_exclusion"]


def test_parse_failure_is_usage_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["validate", "--config", str(path)]) == 2


def test_unknown_key_rejected():
    with pytest.raises(ConfigurationError):
        parse_config(json.dumps(edited(grid={"n": 64, "spacing": 1})))


def test_unknown_command(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(CANONICAL))
    assert main(["frobnicate", "--config", str(path)]) == 2


def test_verify_operator_reports_constants(tmp_path):
    code, out = run(tmp_path, "verify", CANONICAL, "--suite", "operator")
    summary = json.loads((out / "verify_operator.json").read_text())
    assert code == 0 and summary["passed"]
    assert summary["c_lower"] > 0 and np.isfinite(summary["C_upper"])


def test_verify_empty_ensemble(tmp_path):
    cfg = edited(verify={"ensemble_size": 0})
    assert run(tmp_path, "verify", cfg, "--suite", "norms")[0] == 2


def test_verify_unknown_suite(tmp_path):
    assert run(tmp_path, "verify", CANONICAL, "--suite", "nothing")[0] == 2


def test_verify_semigroup_deterministic(tmp_path):
    cfg = edited(verify={"ensemble_size": 4, "seed": 5, "n_paths": 1000, "alphas": [1.5], "ps": [2.0], "n": 32})
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    code_a, out_a = run(tmp_path / "a", "verify", cfg, "--suite", "semigroup")
    code_b, out_b = run(tmp_path / "b", "verify", cfg, "--suite", "semigroup")
    assert code_a == code_b
    files = sorted(p.name for p in out_a.glob("*.csv"))
    assert files
    for name in files:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_solve_plane_wave(tmp_path):
    code, out = run(tmp_path, "solve", CANONICAL)
    assert code == 0
    rows = np.loadtxt(out / "solution.csv", delimiter=",", skiprows=2)
    psi = char_exponent(parse_config(json.dumps(CANONICAL)).measure(), [1.0]).real
    assert np.max(np.abs(rows[:, 2] - np.exp(rows[:, 0] * psi) * np.cos(rows[:, 1]))) < 1e-8
    manifest = json.loads((out / "solution.json").read_text())
    assert manifest["route"] == "duhamel" and np.isfinite(manifest["apriori"]["ratio"])


def test_solve_nonlinear_energy_column(tmp_path):
    cfg = edited(solver={"route": "nonlinear", "n_steps": 50}, nonlinear={"potential": "wobble"},
                 measure=dict(CANONICAL["measure"], alpha=1.2))
    code, out = run(tmp_path, "solve", cfg)
    assert code == 0
    rows = np.loadtxt(out / "solution.csv", delimiter=",", skiprows=2)
    energy = rows[::64, 3]
    assert len(energy) == 51 and np.all(np.diff(energy) <= 0)


def test_solve_missing_initial(tmp_path):
    cfg = edited(problem={"T": 1.0, "p": 2.0})
    assert run(tmp_path, "solve", cfg)[0] == 2


def test_solve_wrong_route(tmp_path):
    cfg = edited(coefficient={"type": "separable", "base": 1.0, "x_amp": 0.25})
    assert run(tmp_path, "solve", cfg)[0] == 1


def test_sample_levy_is_reproducible(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    code_a, out_a = run(tmp_path / "a", "sample-levy", CANONICAL)
    code_b, out_b = run(tmp_path / "b", "sample-levy", CANONICAL)
    assert code_a == code_b == 0
    for name in ("levy_paths.csv", "levy_jumps.csv", "levy_summary.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_sample_levy_too_few_paths(tmp_path):
    cfg = edited(sampler={"r_cut": 0.05, "n_paths": 5})
    assert run(tmp_path, "sample-levy", cfg)[0] == 2
