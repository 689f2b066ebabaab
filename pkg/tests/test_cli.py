import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from polpom.cli import main, parse_range, resolve_config, CliError
from polpom.ensembles import Ensemble, tetrad
from polpom.pom import min_error_pom


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_ratios_trine(capsys):
    code, out, _ = run(capsys, "ratios")
    assert code == 0
    rows = rows_of(out)
    assert [r["state"] for r in rows] == ["1", "2", "3"]
    assert rows[0] == {"state": "1", "PD1": "0.666667", "PD2": "0.166667", "PD3": "0.166667"}


def test_ratios_antitetrad_json(capsys):
    code, out, _ = run(capsys, "ratios", "--ensemble", "antitetrad", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["network"] == "tetrad"
    for k, row in enumerate(doc["rows"]):
        probs = [row[f"PD{j}"] for j in range(1, 5)]
        assert sum(probs) == pytest.approx(1, abs=1e-9)
        assert probs[k] == pytest.approx(0, abs=1e-12)


def test_ratios_custom_ensemble_through_pbs(capsys, tmp_path):
    p = tmp_path / "one.json"
    p.write_text(json.dumps({"states": [{"h": [0.6, 0], "v": [0, 0.8]}]}))
    code, out, _ = run(capsys, "ratios", "--ensemble", str(p), "--network", "pbs")
    assert code == 0
    assert rows_of(out) == [{"state": "1", "PD1": "0.36", "PD2": "0.64"}]
    code, _, err = run(capsys, "ratios", "--ensemble", str(p))
    assert code == 1 and "--network is required" in err


def test_mi_table_defaults(capsys):
    code, out, _ = run(capsys, "mi-table", "--format", "json")
    assert code == 0
    rows = {r["states"]: r for r in json.loads(out)["rows"]}
    assert rows["trine"]["ideal"] == pytest.approx(1 / 3, abs=1e-12)
    assert rows["antitetrad"]["ideal"] == pytest.approx(math.log2(4 / 3), abs=1e-12)
    assert rows["tetrad"]["gamma"] == 0.964
    assert rows["trine"]["von_neumann"] == pytest.approx(0.459, abs=1e-3)


def test_mi_table_gamma_one_is_ideal(capsys):
    code, out, _ = run(capsys, "mi-table", "--gamma", "1", "--format", "json", "--resolution", "91")
    assert code == 0
    for row in json.loads(out)["rows"]:
        assert row["noisy"] == pytest.approx(row["ideal"], abs=1e-12)


def test_sweep_wp5(capsys):
    code, out, _ = run(capsys, "sweep", "--sweep", "wp5", "--range", "-10:10:0.5")
    rows = rows_of(out)
    assert code == 0 and len(rows) == 41
    best = min(rows, key=lambda r: float(r["rms"]))
    assert best["offset_deg"] == "0" and best["rms"] == "0"
    assert best["half_angle_deg"] == "17.6322"


def test_sweep_gamma_endpoints(capsys):
    code, out, _ = run(capsys, "sweep", "--sweep", "gamma", "--samples", "2")
    rows = rows_of(out)
    assert code == 0
    assert rows[0] == {"gamma": "0", "mi_states": "0", "mi_antistates": "0"}
    assert rows[1] == {"gamma": "1", "mi_states": "0.333333", "mi_antistates": "0.584963"}


def test_sweep_unknown_kind_via_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sweep": "wp9"}))
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 1 and "unknown sweep kind" in err


def test_sweep_bad_range(capsys):
    code, _, err = run(capsys, "sweep", "--range", "1:0:1")
    assert code == 1 and err.startswith("error: ") and err.count("\n") == 1


def test_parse_range():
    assert np.allclose(parse_range("-1:1:0.5"), [-1, -0.5, 0, 0.5, 1])
    with pytest.raises(CliError):
        parse_range("1:2")


def write_antitrine(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("PD1,PD2,PD3\n0,0.5,0.5\n0.5,0,0.5\n0.5,0.5,0\n")
    return p


def test_montecarlo_deterministic(capsys, tmp_path):
    p = write_antitrine(tmp_path)
    args = ("montecarlo", "--measured", str(p), "--trials", "5000", "--seed", "11")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    doc = json.loads(first)
    assert set(doc) == {"point", "lower", "upper", "trials", "seed"}
    assert doc["lower"] < doc["point"]


def test_montecarlo_zero_width(capsys, tmp_path):
    p = write_antitrine(tmp_path)
    _, out, _ = run(capsys, "montecarlo", "--measured", str(p), "--trials", "1", "--half-width", "0")
    doc = json.loads(out)
    assert doc["point"] == pytest.approx(doc["lower"]) == pytest.approx(doc["upper"])


def test_montecarlo_malformed_csv(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("PD1,PD2\n0.5,0.5\n0.5,oops\n")
    code, out, err = run(capsys, "montecarlo", "--measured", str(p))
    assert code == 1 and out == ""
    assert "row 3, column 2" in err and err.count("\n") == 1


def test_montecarlo_requires_measured(capsys):
    code, _, err = run(capsys, "montecarlo")
    assert code == 1 and "--measured" in err


def test_validate_builtin(capsys):
    code, out, _ = run(capsys, "validate", "--ensemble", "tetrad")
    doc = json.loads(out)
    assert code == 0
    assert doc["overcomplete"] and doc["optimal"] and doc["pom_valid"]
    assert doc["error_probability"] == pytest.approx(0.5)


def test_validate_permuted_pom_fails(capsys, tmp_path):
    pom = min_error_pom(tetrad())
    data = pom.to_json()
    data["elements"] = data["elements"][1:] + data["elements"][:1]
    p = tmp_path / "pom.json"
    p.write_text(json.dumps(data))
    code, out, err = run(capsys, "validate", "--ensemble", "tetrad", "--pom", str(p))
    assert code == 1
    assert json.loads(out)["optimal"] is False
    assert "optimal" in err


def test_validate_incomplete_pom(capsys, tmp_path):
    p = tmp_path / "pom.json"
    p.write_text(json.dumps({"dim": 2, "elements": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]}))
    code, _, err = run(capsys, "validate", "--pom", str(p))
    assert code == 1 and "identity" in err


def test_prepare(capsys):
    code, out, _ = run(capsys, "prepare", "--ensemble", "tetrad")
    rows = rows_of(out)
    assert code == 0 and len(rows) == 4
    assert all(r["fidelity"] == "1" for r in rows)
    code, out, _ = run(capsys, "prepare", "--beta", "90")
    assert rows_of(out)[0]["fidelity"] == "1"
    code, _, err = run(capsys, "prepare")
    assert code == 1 and "--beta" in err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 10, "seed": 5, "half-width": 0.01}))
    resolved = resolve_config("montecarlo", {"seed": 9, "trials": None}, cfg)
    assert resolved["seed"] == 9
    assert resolved["trials"] == 10
    assert resolved["half_width"] == 0.01
    assert resolved["priors"] is None


def test_config_errors(tmp_path):
    with pytest.raises(CliError, match="not found"):
        resolve_config("ratios", {}, tmp_path / "none.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"speed": 1}))
    with pytest.raises(CliError, match="unknown option"):
        resolve_config("ratios", {}, bad)


def test_gamma_dict_in_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"gamma": {"trine": 1.0}, "resolution": 91, "format": "json"}))
    _, out, _ = run(capsys, "mi-table", "--config", str(cfg))
    rows = {r["states"]: r for r in json.loads(out)["rows"]}
    assert rows["trine"]["gamma"] == 1.0
    assert rows["tetrad"]["gamma"] == 0.964


def test_out_file(capsys, tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run(capsys, "ratios", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("state,PD1,PD2,PD3\n")


def test_probability_rows_sum_to_one(capsys):
    for ens in ("trine", "antitrine", "tetrad", "antitetrad"):
        _, out, _ = run(capsys, "ratios", "--ensemble", ens, "--format", "json")
        for row in json.loads(out)["rows"]:
            assert sum(v for k, v in row.items() if k != "state") == pytest.approx(1, abs=1e-9)


def test_bad_flag_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "polpom", "sweep", "--sweep", "nope"], capture_output=True, text=True
    )
    assert proc.returncode == 2
    assert proc.stderr.startswith("error:") and proc.stderr.count("\n") == 1


def test_module_entry_point_is_byte_identical():
    cmd = [sys.executable, "-m", "polpom", "sweep", "--sweep", "gamma", "--samples", "5", "--format", "json"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["rows"][-1]["gamma"] == 1.0
