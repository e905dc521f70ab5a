"""Command line entry point: specs, outputs, exit codes, figure bundles."""

import csv
import json
import math

import pytest

import levybandits.cli as cli
from levybandits.cli import (
    CliValidationError,
    ExperimentSpec,
    parse_profile,
    parse_strategy,
)
from levybandits.model import model_from_dict
from levybandits.montecarlo import BeliefOverflowError


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture()
def brownian_model_path(models_dir):
    return str(models_dir / "two_state_brownian.json")


def test_spec_round_trip():
    spec = ExperimentSpec(command="payoff", model={"family": "normal"}, output="x.json",
                          format="json", grid=10, paths=5, dt=0.1, horizon=1.0,
                          seed=3, threads=2, options={"profile": "equilibrium"})
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec
    bad = spec.to_dict()
    bad["surprise"] = 1
    with pytest.raises(CliValidationError):
        ExperimentSpec.from_dict(bad)


def test_equilibrium_csv_golden(tmp_path, capsys, brownian_model_path):
    out = tmp_path / "eq.csv"
    rc = cli.main(["equilibrium", "--model", brownian_model_path,
                   "--out", str(out), "--grid", "4"])
    assert rc == 0
    printed = capsys.readouterr().out.splitlines()
    assert str(out) in printed and str(out) + ".meta.json" in printed

    header, rows = _read_csv(out)
    assert header == ["pi_1", "mean_payoff", "full_info_payoff", "incentive", "kappa"]
    assert len(rows) == 5
    # rho=(0,1), s=0.5, k0=0.2, N=4 at pi=0.25: I=0.5, kappa=(0.5-0.2)/3
    row = [float(v) for v in rows[1]]
    assert row[0] == 0.25
    assert row[1] == pytest.approx(0.25)
    assert row[2] == pytest.approx(0.625)
    assert row[3] == pytest.approx(0.5)
    assert row[4] == pytest.approx(0.1)
    # at pi=0.5 the mean payoff hits s: infinite incentive, full experimentation
    assert math.isinf(float(rows[2][3]))
    assert float(rows[2][4]) == 1.0

    meta = json.loads((tmp_path / "eq.csv.meta.json").read_text())
    assert meta["schema_version"] == 1
    assert meta["spec"]["command"] == "equilibrium"
    assert meta["spec"]["grid"] == 4


def test_equilibrium_json_envelope(tmp_path, brownian_model_path, capsys):
    out = tmp_path / "eq.json"
    rc = cli.main(["equilibrium", "--model", brownian_model_path,
                   "--out", str(out), "--grid", "4", "--format", "json"])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    assert doc["columns"][0] == "pi_1"
    assert len(doc["rows"]) == 5
    assert doc["rows"][2][3] == "inf"  # non-finite floats survive the envelope
    assert ExperimentSpec.from_dict(doc["spec"]).command == "equilibrium"


def test_missing_model_is_validation_error(capsys):
    rc = cli.main(["equilibrium"])
    assert rc == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "validation"
    assert "--model is required" in err["message"]


def test_unreadable_model_file(tmp_path, capsys):
    rc = cli.main(["equilibrium", "--model", str(tmp_path / "nope.json")])
    assert rc == 1
    assert json.loads(capsys.readouterr().err)["error"] == "validation"


def test_override_revalidates_model(tmp_path, capsys, brownian_model_path):
    rc = cli.main(["equilibrium", "--model", brownian_model_path,
                   "--out", str(tmp_path / "eq.csv"), "--grid", "4",
                   "--safe-payoff", "99.0"])
    assert rc == 1
    assert "safe_payoff" in json.loads(capsys.readouterr().err)["message"]

    out = tmp_path / "eq2.csv"
    rc = cli.main(["equilibrium", "--model", brownian_model_path,
                   "--out", str(out), "--grid", "4", "--k0", "0.3"])
    assert rc == 0
    capsys.readouterr()
    meta = json.loads((tmp_path / "eq2.csv.meta.json").read_text())
    assert meta["spec"]["model"]["k0"] == 0.3


def test_numerical_failure_exits_2(tmp_path, capsys, monkeypatch, brownian_model_path):
    def blow_up(spec):
        raise BeliefOverflowError(seed=1, chunk_index=2, step=3, run_index=4, path_index=5)

    monkeypatch.setitem(cli._DISPATCH, "payoff", blow_up)
    rc = cli.main(["payoff", "--model", brownian_model_path,
                   "--out", str(tmp_path / "p.json")])
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "numerical"
    assert (err["seed"], err["chunk"], err["step"], err["run"], err["path"]) == (1, 2, 3, 4, 5)


def test_simulate_series_summary(tmp_path, capsys, brownian_model_path):
    out = tmp_path / "sim.json"
    rc = cli.main(["simulate", "--model", brownian_model_path, "--out", str(out),
                   "--paths", "64", "--horizon", "0.2", "--dt", "0.01",
                   "--record-every", "5", "--profile", "constant:0.5",
                   "--seed", "7"])
    assert rc == 0
    capsys.readouterr()
    doc = json.loads(out.read_text())
    assert doc["columns"] == ["time", "mean_pi_1", "mean_payoff", "full_info_payoff",
                              "integrand_1", "integrand_2", "integrand_3", "integrand_4"]
    assert len(doc["rows"]) == 5  # t = 0, .05, .10, .15, .20
    assert doc["rows"][0][1] == pytest.approx(0.5)
    summary = doc["summary"]
    assert len(summary["shortfall_mean"]) == 4
    assert summary["profile"] == [summary["profile"][0]] * 4
    assert "constant" in summary["profile"][0]
    assert summary["mean_op_time"][0] == pytest.approx(0.5 * 0.2)


def test_payoff_csv(tmp_path, capsys, brownian_model_path):
    out = tmp_path / "pay.csv"
    rc = cli.main(["payoff", "--model", brownian_model_path, "--out", str(out),
                   "--paths", "64", "--horizon", "0.5", "--dt", "0.01",
                   "--format", "csv"])
    assert rc == 0
    capsys.readouterr()
    header, rows = _read_csv(out)
    assert header == ["player", "value", "se", "horizon", "tail_rate", "tail_bound"]
    assert len(rows) == 1
    assert float(rows[0][3]) == 0.5


def test_strategy_parsing(brownian_model_path):
    with open(brownian_model_path, encoding="utf-8") as fh:
        model = model_from_dict(json.load(fh))
    assert parse_strategy("equilibrium", model).describe() == "equilibrium"
    assert "0.3" in parse_strategy("constant:0.3", model).describe()
    parse_strategy("offset:-0.1", model)
    parse_strategy("threshold:0.5", model)
    for bad in ("constant:1.5", "constant:x", "bogus:1", "equilibrium:{}"):
        with pytest.raises(CliValidationError):
            parse_strategy(bad, model)

    profile = parse_profile("constant:0.2", model)
    assert len(profile) == 4
    with pytest.raises(CliValidationError, match="expected 1 or 4"):
        parse_profile("equilibrium,equilibrium", model)


def test_init_belief_validation(tmp_path, capsys, brownian_model_path):
    rc = cli.main(["payoff", "--model", brownian_model_path,
                   "--out", str(tmp_path / "p.json"), "--paths", "8",
                   "--horizon", "0.1", "--init-belief", "0.4,0.4"])
    assert rc == 1
    assert "init-belief" in json.loads(capsys.readouterr().err)["message"]


def test_figure1_bundle(tmp_path, capsys):
    out = tmp_path / "fig1"
    rc = cli.main(["figure1", "--out", str(out), "--grid", "40"])
    assert rc == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["columns"] == ["pi1", "pi2", "incentive"]
    assert manifest["kappa_levels"] == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert manifest["max_incentive_deviation"] < 1e-6
    assert manifest["files"], "expected at least one level-curve csv"
    for name in manifest["files"]:
        assert (out / name).exists()
    png = (out / manifest["png"]).read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    header, rows = _read_csv(out / manifest["files"][0])
    assert header == ["pi1", "pi2", "incentive"] and rows


def test_figure_rejects_json_format(capsys):
    rc = cli.main(["figure1", "--format", "json"])
    assert rc == 1
    assert "manifest" in json.loads(capsys.readouterr().err)["message"]


def test_figure3_bundle(tmp_path, capsys):
    out = tmp_path / "fig3"
    rc = cli.main(["figure3", "--out", str(out), "--grid", "40",
                   "--players-list", "2,4"])
    assert rc == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["n_list"] == [2, 4]
    assert manifest["threshold"] == pytest.approx(4.0 / 19.0)
    assert set(manifest["files"]) == {"diagonal_N02.csv", "diagonal_N04.csv"}
    header, rows = _read_csv(out / "diagonal_N02.csv")
    assert header == ["p", "kappa"]
    assert len(rows) == 41
    assert (out / "figure3.png").exists()


@pytest.mark.parametrize("command,xname", [("figure4", "mean"), ("figure5", "mean")])
def test_conjugate_figure_bundles(tmp_path, capsys, command, xname):
    out = tmp_path / command
    rc = cli.main([command, "--out", str(out), "--grid", "40"])
    assert rc == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["columns"] == ["mean", "variance", "incentive"]
    assert manifest["max_incentive_deviation"] < 1e-6
    assert (out / f"{command}.png").exists()


def test_figure4_rejects_discrete_model(tmp_path, capsys, brownian_model_path):
    rc = cli.main(["figure4", "--model", brownian_model_path,
                   "--out", str(tmp_path / "f")])
    assert rc == 1
    assert "family" in json.loads(capsys.readouterr().err)["message"]


def test_diagnostics_discrete(tmp_path, capsys, models_dir):
    out = tmp_path / "diag.json"
    rc = cli.main(["diagnostics", "--model", str(models_dir / "jump_news.json"),
                   "--out", str(out), "--paths", "200", "--horizon", "0.6",
                   "--dt", "0.005", "--grid", "50"])
    assert rc == 0
    capsys.readouterr()
    report = json.loads(out.read_text())["report"]
    assert report["model_kind"] == "discrete"
    assert report["learning"]["eta1"] == pytest.approx(0.863497622707262, abs=1e-12)
    directions = [row["direction"] for row in report["jump_updates"]]
    assert directions == ["down", "up", "up", "down"]
    assert set(report["convergence"]) == {"0", "1"}
    assert report["reasonable"]["passes"] is True
    assert len(report["lipschitz"]["estimates"]) == 2


def test_diagnostics_family(tmp_path, capsys, models_dir):
    out = tmp_path / "diag_gamma.json"
    rc = cli.main(["diagnostics", "--model", str(models_dir / "gamma_family.json"),
                   "--out", str(out)])
    assert rc == 0
    capsys.readouterr()
    report = json.loads(out.read_text())["report"]
    assert report["model_kind"] == "gamma"
    assert report["lipschitz"]["kind"] == "gamma"
    assert float(report["incentive"]) >= 0.0


def test_unknown_command_is_validation_error(capsys):
    rc = cli.main(["transmogrify"])
    assert rc == 1
    assert json.loads(capsys.readouterr().err)["error"] == "validation"
