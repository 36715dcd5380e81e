import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from ratecalc import FiniteDirichletForm
from ratecalc.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def _write_ratefn(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh)
    return str(path)


class TestXi:
    def test_header_and_values(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "inverse_power", "a": 1.0, "p": 1.0})
        out = tmp_path / "out"
        res = runner.invoke(main, ["xi", "--kernel", "xi1", "--ratefn", rf, "--t-grid", "0.25,0.5,2", "--out", str(out)])
        assert res.exit_code == 0
        lines = (out / "xi.csv").read_text().splitlines()
        assert lines[0] == "t,xi"
        assert float(lines[1].split(",")[1]) == pytest.approx(1.0, rel=1e-4)
        assert float(lines[2].split(",")[1]) == pytest.approx(2.0, rel=1e-4)

    def test_undefined_row(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "constant", "B": 5.0})
        out = tmp_path / "out"
        res = runner.invoke(main, ["xi", "--kernel", "xi2", "--ratefn", rf, "--t-grid", "4,5,2", "--out", str(out)])
        assert res.exit_code == 0
        lines = (out / "xi.csv").read_text().splitlines()
        assert lines[1] == "4,undefined"
        assert lines[2] == "5,undefined"

    def test_manifest_written(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "constant", "B": 1.0})
        out = tmp_path / "out"
        res = runner.invoke(main, ["xi", "--kernel", "xi1", "--ratefn", rf, "--t-grid", "0.1,1,3", "--out", str(out)])
        assert res.exit_code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["pass"] is True
        for name in manifest["outputs"]:
            assert (out / name).exists()

    def test_bad_grid_is_config_error(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "constant", "B": 1.0})
        res = runner.invoke(main, ["xi", "--kernel", "xi1", "--ratefn", rf, "--t-grid", "nope", "--out", str(tmp_path / "o")])
        assert res.exit_code == 2

    def test_bad_t_is_math_domain_error(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "constant", "B": 1.0})
        res = runner.invoke(
            main, ["xi", "--kernel", "xi1", "--ratefn", rf, "--t-grid", "-1,1,3", "--out", str(tmp_path / "o")]
        )
        assert res.exit_code in (2, 3)


class TestTransform:
    def test_condition_failure_exits_4(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "exp_power", "C": 1.0, "theta": 1.0})
        res = runner.invoke(
            main,
            ["transform", "--direction", "sp2sl", "--ratefn", rf, "--s-grid", "0.2,1,8", "--out", str(tmp_path / "o")],
        )
        assert res.exit_code == 4
        verdict = json.loads((tmp_path / "o" / "verdict.json").read_text())
        assert verdict["status"] == "fails_empirically"

    def test_gate_passes_for_vanishing_family(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "exp_power", "C": 1.0, "theta": 0.6})
        out = tmp_path / "o"
        res = runner.invoke(
            main,
            ["transform", "--direction", "sp2sl", "--ratefn", rf, "--s-grid", "0.2,1,8", "--out", str(out)],
        )
        assert res.exit_code == 0
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["status"] == "holds_empirically"
        lines = (out / "transform.csv").read_text().splitlines()
        assert lines[0] == "s,beta"

    def test_ungated_direction_writes_placeholder_verdict(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "inverse_power", "a": 1.0, "p": 1.0})
        out = tmp_path / "o"
        res = runner.invoke(
            main,
            ["transform", "--direction", "sp2wl", "--ratefn", rf, "--s-grid", "0.2,1,6", "--out", str(out)],
        )
        assert res.exit_code == 0
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["status"] == "not_applicable"

    def test_cap_error_exits_5(self, runner, tmp_path):
        rf = _write_ratefn(tmp_path / "rf.json", {"family": "log_power", "C": 1.0, "q": 0.5})
        res = runner.invoke(
            main,
            ["transform", "--direction", "wl2sp", "--ratefn", rf, "--s-grid", "1e-4,1e-2,6", "--out", str(tmp_path / "o")],
        )
        assert res.exit_code == 5


class TestExample11:
    def test_sp2sl_half(self, runner, tmp_path):
        out = tmp_path / "o"
        res = runner.invoke(main, ["example11", "--theta", "0.5", "--branch", "sp2sl", "--out", str(out)])
        assert res.exit_code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["predicted_exponent"] == pytest.approx(1.0)
        assert abs(rep["fitted_exponent"] - 1.0) <= 0.15
        assert rep["pass"]

    def test_sp2wl_theta_two(self, runner, tmp_path):
        out = tmp_path / "o"
        res = runner.invoke(main, ["example11", "--theta", "2", "--branch", "sp2wl", "--out", str(out)])
        assert res.exit_code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["predicted_exponent"] == pytest.approx(0.5)
        assert rep["pass"]

    def test_sl2sp_half(self, runner, tmp_path):
        out = tmp_path / "o"
        res = runner.invoke(main, ["example11", "--theta", "0.5", "--branch", "sl2sp", "--out", str(out)])
        assert res.exit_code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["predicted_exponent"] == pytest.approx(0.5)
        assert rep["pass"]

    def test_wl2sp_theta_one(self, runner, tmp_path):
        out = tmp_path / "o"
        res = runner.invoke(main, ["example11", "--theta", "1", "--branch", "wl2sp", "--out", str(out)])
        assert res.exit_code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["predicted_exponent"] == pytest.approx(1.0)
        assert rep["pass"]

    @pytest.mark.parametrize(
        "theta,branch",
        [("0.7", "sp2wl"), ("2", "sp2sl"), ("1.5", "sl2sp"), ("0.8", "wl2sp"), ("0.3", "sp2sl")],
    )
    def test_inconsistent_theta_branch_exits_2(self, runner, tmp_path, theta, branch):
        res = runner.invoke(main, ["example11", "--theta", theta, "--branch", branch, "--out", str(tmp_path / "o")])
        assert res.exit_code == 2


class TestVerify:
    def test_two_point_passes_with_degenerate_wl(self, runner, tmp_path):
        form = FiniteDirichletForm(mu=np.array([0.5, 0.5]), weights=np.array([[0.0, 1.0], [1.0, 0.0]]))
        p = tmp_path / "form.json"
        form.save(p)
        out = tmp_path / "o"
        res = runner.invoke(main, ["verify", "--form", str(p), "--s-grid", "1e-3,1,8", "--seed", "7", "--out", str(out)])
        assert res.exit_code == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["pass"]
        assert rep["dominations"]["sl"]["passed"]
        assert rep["dominations"]["wl"]["passed"]
        assert rep["wl_transform_degenerate"]

    def test_small_birth_death_passes(self, runner, tmp_path):
        out = tmp_path / "o"
        res = runner.invoke(
            main,
            ["verify", "--birth-death", "4,1,2,11", "--s-grid", "1e-3,1,6", "--seed", "7", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        rep = json.loads((out / "report.json").read_text())
        assert rep["pass"]
        assert rep["dominations"]["sl"]["fitted_constant"] > 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7

    def test_disconnected_exits_3(self, runner, tmp_path):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0
        w[2, 3] = w[3, 2] = 1.0
        form = FiniteDirichletForm(mu=np.full(4, 0.25), weights=w)
        p = tmp_path / "form.json"
        form.save(p)
        res = runner.invoke(main, ["verify", "--form", str(p), "--s-grid", "1e-3,1,6", "--out", str(tmp_path / "o")])
        assert res.exit_code == 3

    def test_requires_exactly_one_form_source(self, runner, tmp_path):
        res = runner.invoke(main, ["verify", "--s-grid", "1e-3,1,6", "--out", str(tmp_path / "o")])
        assert res.exit_code == 2


class TestSpectrumAndOptimal:
    def test_spectrum_prints_gap(self, runner, tmp_path):
        form = FiniteDirichletForm(mu=np.array([0.5, 0.5]), weights=np.array([[0.0, 1.0], [1.0, 0.0]]))
        p = tmp_path / "form.json"
        form.save(p)
        res = runner.invoke(main, ["spectrum", "--form", str(p), "--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        assert float(res.output.split()[1]) == pytest.approx(4.0, abs=1e-10)

    def test_optimal_single_point(self, runner, tmp_path):
        form = FiniteDirichletForm(mu=np.array([0.5, 0.5]), weights=np.array([[0.0, 1.0], [1.0, 0.0]]))
        p = tmp_path / "form.json"
        form.save(p)
        out = tmp_path / "o"
        res = runner.invoke(main, ["optimal", "--kind", "WP", "--s", "1e-8", "--form", str(p), "--out", str(out)])
        assert res.exit_code == 0
        rep = json.loads((out / "optimal.json").read_text())
        assert rep["value"] == pytest.approx(0.25, rel=1e-4)
