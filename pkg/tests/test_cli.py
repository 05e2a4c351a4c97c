import json
from pathlib import Path

import pytest

from cli.__main__ import main
from cli.config import RunConfig, load_config, parse_config, validate
from cli.run import EXIT_CONFIG, EXIT_PASS, EXIT_SOLVER, EXIT_VERDICT, build_problem, run
from common.errors import ConstraintViolation, ParseError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

FLAT = {
    "mode": "verify",
    "profile": {
        "minus": {"family": "flat"},
        "arc": {"family": "flat"},
        "plus": {"family": "flat"},
        "allow_flat_corners": True,
    },
    "truncation": {"R": 6.0, "H": 6.0},
    "grid": {"nx": 49, "nz": 25, "grading": 1.5},
    "verify": {"seeds": 3, "n_random": 256},
}


def _with(base: dict, **sections) -> dict:
    out = json.loads(json.dumps(base))
    out.update(sections)
    return out


def _manifest(out: Path) -> dict:
    return json.loads((out / "manifest.json").read_text(encoding="utf-8"))


# ----------------------------
# 設定檔
# ----------------------------
@pytest.mark.parametrize("name", ["canonical.json", "flat.json", "sheared.json", "supersonic.json", "mms.json"])
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / name)
    assert isinstance(cfg, RunConfig)


def test_defaults_are_canonical():
    cfg = parse_config({})
    assert cfg.mode == "solve"
    assert cfg.gas.m0 == 0.1 and cfg.weights.alpha == 0.8
    assert cfg.grid.nx == 129 and cfg.grid.nz == 65
    assert cfg.solver_config().outer_tolerance(cfg.gas.m0) == pytest.approx(1e-10)


def test_all_violations_reported():
    with pytest.raises(ConstraintViolation) as err:
        parse_config({"gas": {"m0": 0.6}, "weights": {"beta": 0.9}})
    text = str(err.value)
    assert "m0" in text and "beta" in text
    assert len(err.value.violations) >= 2


def test_unknown_keys_rejected():
    with pytest.raises(ConstraintViolation) as err:
        parse_config({"grid": {"nx": 33, "ny": 17}, "colour": "blue"})
    assert any("'ny'" in v for v in err.value.violations)
    assert any("'colour'" in v for v in err.value.violations)


def test_type_errors_rejected():
    with pytest.raises(ConstraintViolation):
        parse_config({"grid": {"nx": 33.5}})
    with pytest.raises(ConstraintViolation):
        parse_config({"profile": {"allow_flat_corners": "yes"}})


def test_type_and_constraint_errors_reported_together():
    with pytest.raises(ConstraintViolation) as err:
        parse_config({"grid": {"nx": 33.5}, "gas": {"m0": 0.6}, "seed": "x"})
    violations = err.value.violations
    assert any("grid.nx" in v for v in violations)
    assert any("config.seed" in v for v in violations)
    assert any("m0" in v for v in violations)


def test_even_grid_and_truncation_rejected():
    with pytest.raises(ConstraintViolation) as err:
        parse_config({"grid": {"nx": 32}, "truncation": {"R": 2.5}})
    assert any("grid.nx" in v for v in err.value.violations)
    assert any("R = 2.5" in v for v in err.value.violations)


def test_study_radii_must_keep_spacing():
    with pytest.raises(ConstraintViolation):
        parse_config({"study": {"R_list": [8.0, 12.3]}, "grid": {"nx": 33}})
    parse_config({"study": {"R_list": [8.0, 12.0, 16.0]}, "grid": {"nx": 33}})


def test_bad_json_is_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"mode": "solve",', encoding="utf-8")
    with pytest.raises(ParseError):
        load_config(path)
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.json")


def test_overrides_are_validated():
    cfg = parse_config({}).with_overrides(mode="verify", seed=5, strict_paper=True, out="x")
    assert cfg.mode == "verify" and cfg.seed == 5 and cfg.farfield.strict_paper and cfg.out == "x"
    with pytest.raises(ConstraintViolation):
        validate(cfg.with_overrides(mode="explode"))


def test_build_problem_from_defaults():
    problem = build_problem(parse_config({"truncation": {"R": 6.0, "H": 6.0}}))
    assert problem.domain.R == 6.0
    assert problem.profile.corner_minus == (-1.0, 0.0)
    assert problem.stream.is_constant


# ----------------------------
# 執行
# ----------------------------
def test_flat_verify_passes(tmp_path):
    out = tmp_path / "flat"
    result = run(parse_config(FLAT), out)
    assert result == {"ok": True, "exit_code": EXIT_PASS, "mode": "verify", "error": None}
    manifest = _manifest(out)
    assert manifest["exit_code"] == 0
    names = {a["name"] for a in manifest["artifacts"]}
    assert {"report.txt", "diagnostics.json", "solve_report.json", "psi.csv", "mach.csv"} <= names
    for entry in manifest["artifacts"]:
        path = out / entry["name"]
        assert path.exists() and path.stat().st_size == entry["bytes"] > 0
    diag = json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))
    assert diag["passed"] is True
    assert diag["checks"]["barrier.corner.A-.max_Lv"]["value"] == "flat"
    assert diag["checks"]["barrier.global.max_Lv"]["verdict"] is True
    assert diag["checks"]["farfield.norm"]["verdict"] is True


def test_flat_refinement_rows_pass(tmp_path):
    data = _with(FLAT, verify={"seeds": 3, "n_random": 256, "refine": True})
    out = tmp_path / "refine"
    assert run(parse_config(data), out)["exit_code"] == EXIT_PASS
    checks = json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))["checks"]
    for key in (
        "refine.residual.mass.order",
        "refine.residual.energy.order",
        "refine.vorticity.ratio",
        "refine.streamline.entropy.ratio",
        "refine.streamline.bernoulli.ratio",
    ):
        assert checks[key]["verdict"] is True


def test_doubled_far_state_fails_norm_row(tmp_path):
    data = _with(FLAT, farfield={"m_inf": {"family": "constant", "value": 0.2}})
    out = tmp_path / "double"
    result = run(parse_config(data), out)
    assert result["exit_code"] == EXIT_VERDICT
    row = json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))["checks"]["farfield.norm"]
    assert row["verdict"] is False
    assert row["value"] == pytest.approx(0.1, rel=1e-12)


def test_residual_above_tol_pde_fails_solve(tmp_path):
    data = {
        "truncation": {"R": 6.0, "H": 6.0},
        "grid": {"nx": 25, "nz": 13},
        "solver": {"tol_pde": 1e-300},
    }
    out = tmp_path / "pde"
    assert run(parse_config(data), out)["exit_code"] == EXIT_VERDICT
    lines = (out / "report.txt").read_text(encoding="utf-8").splitlines()
    row = next(line for line in lines if line.startswith("solve.final_residual\t"))
    assert row.endswith("\tfail")


def test_reports_are_deterministic(tmp_path):
    cfg = parse_config(FLAT)
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    for name in ("report.txt", "diagnostics.json", "psi.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_supersonic_config_is_solver_failure(tmp_path):
    out = tmp_path / "sup"
    result = run(load_config(CONFIGS / "supersonic.json"), out)
    assert result["exit_code"] == EXIT_SOLVER
    err = json.loads((out / "error.json").read_text(encoding="utf-8"))
    assert err["kind"] == "SubsonicViolation"
    assert err["nodes"] > 0
    assert _manifest(out)["exit_code"] == EXIT_SOLVER


def test_iteration_budget_is_solver_failure(tmp_path):
    data = {"truncation": {"R": 6.0, "H": 6.0}, "grid": {"nx": 25, "nz": 13}, "solver": {"k_max": 1}}
    out = tmp_path / "kmax"
    result = run(parse_config(data), out)
    assert result["exit_code"] == EXIT_SOLVER
    err = json.loads((out / "error.json").read_text(encoding="utf-8"))
    assert err["kind"] == "MaxIterationsExceeded"
    assert err["iterations"] == 1


def test_bad_geometry_is_config_failure(tmp_path):
    # 平坦角點未開放
    data = _with(FLAT, profile={"minus": {"family": "flat"}, "arc": {"family": "flat"}, "plus": {"family": "flat"}})
    result = run(parse_config(data), tmp_path / "geo")
    assert result["exit_code"] == EXIT_CONFIG
    assert json.loads((tmp_path / "geo" / "error.json").read_text(encoding="utf-8"))["kind"] == "AngleViolation"


def test_truncation_study_mode(tmp_path):
    data = _with(
        FLAT,
        mode="truncation-study",
        truncation={"R": 4.0, "H": 4.0},
        grid={"nx": 9, "nz": 9, "grading": 1.5},
        study={"R_list": [4.0, 8.0]},
    )
    out = tmp_path / "trunc"
    assert run(parse_config(data), out)["exit_code"] == EXIT_PASS
    lines = (out / "report.txt").read_text(encoding="utf-8").splitlines()
    assert "truncation.decreasing\t1\t-\tpass" in lines
    assert (out / "truncation.csv").exists()


def test_mms_mode(tmp_path):
    data = {"mode": "mms", "mms": {"levels": [33, 65]}}
    out = tmp_path / "mms"
    assert run(parse_config(data), out)["exit_code"] == EXIT_PASS
    text = (out / "report.txt").read_text(encoding="utf-8")
    assert "mms.order.n65" in text
    assert "fail" not in text


def test_main_exit_codes(tmp_path, capsys):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps(FLAT), encoding="utf-8")
    assert main(["verify", "--config", str(path), "--out", str(tmp_path / "ok"), "--seed", "3"]) == EXIT_PASS

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gas": {"m0": 0.6}}), encoding="utf-8")
    assert main(["solve", "--config", str(bad), "--out", str(tmp_path / "bad")]) == EXIT_CONFIG
    err = capsys.readouterr().err.splitlines()
    assert any(line.startswith("error\tConstraintViolation") for line in err)


def _checks(out: Path) -> dict:
    return json.loads((out / "diagnostics.json").read_text(encoding="utf-8"))["checks"]


@pytest.mark.slow
def test_canonical_verify(tmp_path):
    out = tmp_path / "canonical"
    result = run(load_config(CONFIGS / "canonical.json"), out)
    assert result["exit_code"] == EXIT_PASS
    checks = _checks(out)
    assert checks["farfield.norm"]["verdict"] is True
    for name in ("mass", "momentum_x1", "momentum_x2", "energy"):
        row = checks[f"refine.residual.{name}.order"]
        assert row["verdict"] is True and row["value"] >= 1.0
    assert checks["refine.vorticity.ratio"]["verdict"] is True
    assert checks["refine.streamline.entropy.ratio"]["verdict"] is True
    assert checks["refine.streamline.bernoulli.ratio"]["verdict"] is True


@pytest.mark.slow
def test_sheared_verify_keeps_vorticity(tmp_path):
    out = tmp_path / "sheared"
    run(load_config(CONFIGS / "sheared.json"), out)
    checks = _checks(out)
    assert checks["farfield.norm"]["verdict"] is True
    row = checks["refine.vorticity.kept"]
    assert row["verdict"] is True and row["value"] >= 0.1
    assert "refine.vorticity.ratio" not in checks
