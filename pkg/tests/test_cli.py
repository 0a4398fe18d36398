import json
import math
import shutil
from pathlib import Path

import pytest

from qfe import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def _formula_doc(**overrides):
    doc = {
        "schema_version": 1,
        "name": "half",
        "kind": "formula",
        "algebra": "CAR",
        "seed": 0,
        "model": {"grid": {"n_nodes": 16}, "fourier": [{"k": 0, "matrix": [[0.5]]}]},
        "options": {},
    }
    doc.update(overrides)
    return doc


def test_formula_log2(tmp_path):
    out = tmp_path / "report.json"
    code = cli.main(["formula", "--config", str(CONFIGS / "formula_car.json"), "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    value = report["values"][0]
    assert value["name"] == "entropy"
    assert abs(value["value"] - math.log(2)) <= 1e-12
    assert value["unit"] == "nats/step"
    assert report["schema_version"] == 1
    assert report["status"] == "pass"


def test_rate_scenario(tmp_path):
    out = tmp_path / "rate.json"
    table = tmp_path / "rate.csv"
    code = cli.main(["rate", "--config", str(CONFIGS / "rate_car.json"), "--out", str(out), "--csv", str(table)])
    assert code == 0
    report = json.loads(out.read_text())
    values = {v["name"]: v["value"] for v in report["values"]}
    assert abs(values["extrapolated_rate"] - values["formula_value"]) <= 5e-3
    assert [row["n"] for row in report["tables"]["rate"]] == [32, 64, 128, 256]
    lines = table.read_text().splitlines()
    assert lines[0] == "n,entropy,rate,error"
    assert len(lines) == 5
    for v in report["values"]:
        assert {"tolerance", "provenance", "unit"} <= set(v)


def test_cor14_and_grid_override(tmp_path):
    out = tmp_path / "c.json"
    assert cli.main(["cor14", "--config", str(CONFIGS / "cor14_ccr.json"), "--out", str(out), "--grid", "8"]) == 0
    report = json.loads(out.read_text())
    assert report["values"][0]["value"] == pytest.approx(4 * math.log(4) - 3 * math.log(3), abs=1e-12)
    assert len(report["tables"]["samples"]) == 8


def test_verify_counts(tmp_path):
    out = tmp_path / "v.json"
    code = cli.main(["verify", "--config", str(CONFIGS / "verify.json"), "--out", str(out), "--cutoff", "24"])
    report = json.loads(out.read_text())
    values = {v["name"]: v["value"] for v in report["values"]}
    assert values["checks_passed"] == len(report["checks"])
    assert values["checks_failed"] == 0
    assert code == 0


def test_round_trip_bit_exact(tmp_path):
    out = tmp_path / "r.json"
    report, _ = cli.run(CONFIGS / "rate_ccr.json", "rate", out=out)
    assert cli.read_report(out) == report
    cli.write_report(cli.read_report(out), tmp_path / "r2.json")
    assert (tmp_path / "r2.json").read_bytes() == out.read_bytes()


def test_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.main(["verify", "--config", str(CONFIGS / "verify.json"), "--out", str(a)])
    cli.main(["verify", "--config", str(CONFIGS / "verify.json"), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_complex_entries(tmp_path):
    out = tmp_path / "o.json"
    shutil.copy(CONFIGS / "formula_ccr_block.json", tmp_path / "c.json")
    assert cli.main(["formula", "--config", str(tmp_path / "c.json"), "--out", str(out)]) == 0


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.update(algebra="XYZ"), "algebra"),
        (lambda d: d.update(kind="rate"), "kind"),
        (lambda d: d.update(schema_version=2), "schema_version"),
        (lambda d: d.update(seed=-1), "seed"),
        (lambda d: d["model"]["fourier"][0].update(matrix=[[0.5, 0.1]]), "model.fourier[0].matrix"),
        (lambda d: d["model"]["fourier"][0].update(matrix=[["x"]]), "model.fourier[0].matrix[0][0]"),
        (lambda d: d["model"].update(grid={"n_nodes": 0}), "model.grid.n_nodes"),
        (lambda d: d["model"]["fourier"][0].update(matrix=[[1.5]]), "model"),
        (lambda d: d.pop("model"), "error: model: missing field"),
    ],
)
def test_validation_errors(tmp_path, capsys, mutate, field):
    doc = _formula_doc()
    mutate(doc)
    code = cli.main(["formula", "--config", str(_write(tmp_path, doc))])
    assert code == 2
    err = capsys.readouterr().err
    assert field in err


def test_missing_config(tmp_path):
    assert cli.main(["formula", "--config", str(tmp_path / "nope.json")]) == 2


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["formula", "--config", str(path)]) == 2


def test_bad_override(tmp_path):
    assert cli.main(["formula", "--config", str(_write(tmp_path, _formula_doc())), "--grid", "0"]) == 2


def test_aliasing_is_validation_error(tmp_path):
    doc = {
        "schema_version": 1,
        "name": "coarse",
        "kind": "rate",
        "algebra": "CAR",
        "seed": 0,
        "model": {"fourier": [{"k": 0, "matrix": [[0.5]]}]},
        "options": {"sizes": [32, 64], "grid": 64},
    }
    assert cli.main(["rate", "--config", str(_write(tmp_path, doc))]) == 2


def test_resource_limit(tmp_path, monkeypatch):
    monkeypatch.setenv("QFE_MAX_DIM", "100")
    doc = {
        "schema_version": 1,
        "name": "big",
        "kind": "rate",
        "algebra": "CAR",
        "seed": 0,
        "model": {"fourier": [{"k": 0, "matrix": [[0.5]]}]},
        "options": {"sizes": [128], "grid": 512},
    }
    assert cli.main(["rate", "--config", str(_write(tmp_path, doc))]) == 4


def test_failed_check_exit_code(tmp_path):
    doc = {
        "schema_version": 1,
        "name": "strict",
        "kind": "rate",
        "algebra": "CAR",
        "seed": 0,
        "model": {"fourier": [{"k": 0, "matrix": [[0.5]]}, {"k": 1, "matrix": [[0.125]]}, {"k": -1, "matrix": [[0.125]]}]},
        "options": {"sizes": [8, 16, 32], "grid": 256, "rate_tolerance": 1e-9},
    }
    out = tmp_path / "o.json"
    assert cli.main(["rate", "--config", str(_write(tmp_path, doc)), "--out", str(out)]) == 3
    assert json.loads(out.read_text())["status"] == "fail"


def test_pi_strings(tmp_path):
    doc = {
        "schema_version": 1,
        "name": "pi",
        "kind": "cor14",
        "algebra": "CAR",
        "seed": 0,
        "model": {
            "intervals": [[0, "pi"], ["pi", "2pi"]],
            "omega_prime": {"poly": [1.0]},
            "rho": {"fourier": {"cos": [0.5, 0.25]}},
        },
        "options": {},
    }
    report, code = cli.run(_write(tmp_path, doc), "cor14")
    assert code == 0
    from oracles import ecar_integral

    assert report["values"][0]["value"] == pytest.approx(ecar_integral(lambda t: 0.5 + 0.25 * math.cos(t)), abs=1e-10)


def test_singular_only_formula(tmp_path):
    doc = _formula_doc(model={"grid": {"nodes": [], "weights": []}, "singular_rate": 1.0})
    report, code = cli.run(_write(tmp_path, doc), "formula")
    assert code == 0
    assert report["values"][0]["value"] == 0.0
