import csv
import hashlib
import io
import json

import pytest

from bellman_lp import cli
from bellman_lp.foliation import LEAF_COLUMNS
from bellman_lp.martingale import BATCH_COLUMNS

SMALL_GRID = "--grid=0.01:100:12"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_p2_default_grid_passes(capsys):
    code, out, _ = run(capsys, "verify", "--p", "2", "--seed", "0")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and doc["exit_code"] == 0
    assert {r["condition"] for r in doc["reports"]} >= {"initial", "majorization", "concavity"}
    assert all(r["verdict"] == "pass" for r in doc["reports"])


def test_verify_small_grid_sub_and_super(capsys):
    code, out, _ = run(capsys, "verify", "--p", "1.5,3", SMALL_GRID, "--seed", "1")
    assert code == 0
    assert {r["p"] for r in json.loads(out)["reports"]} == {1.5, 3.0}


def test_verify_csv(capsys):
    code, out, _ = run(capsys, "verify", "--p", "3", SMALL_GRID, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 6
    assert rows[0]["condition"] == "initial"


@pytest.mark.parametrize("argv", [
    ["verify", "--grid=-1:10:8"],
    ["verify", "--grid", "1:10"],
    ["verify", "--p", "0.5"],
    ["verify", "--p", "x"],
    ["simulate", "--seed", "abc"],
    ["simulate", "--seed", "-3"],
    ["simulate", "--paths", "0"],
    ["all", "--format", "csv"],
    ["nonsense"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_unknown_config_field_exit_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p_list": [3], "colour": "blue"}))
    code, _, err = run(capsys, "verify", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_config_file_is_used(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p_list": [1.5], "x_range": [0.1, 10], "z_range": [0.1, 10],
                               "points_per_axis": 8, "jump_samples": 500, "hessian_samples": 200}))
    code, out, _ = run(capsys, "verify", "--config", str(cfg))
    doc = json.loads(out)
    assert code == 0 and doc["config"]["points_per_axis"] == 8
    assert doc["config"]["p_list"] == [1.5]


def test_failure_exit_1(monkeypatch, capsys):
    from bellman_lp import phi as phimod
    monkeypatch.setattr(phimod, "MAX_ITER", 0)
    code, out, _ = run(capsys, "verify", "--p", "3", SMALL_GRID)
    assert code == 1 and json.loads(out)["exit_code"] == 1


def test_semigroup_unresolved_exit_3(capsys):
    code, out, _ = run(capsys, "semigroup", "--semigroup-n", "64")
    assert code == 3 and "error" in json.loads(out)


def test_semigroup_bad_battery_exit_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"battery": [{"p": 2, "f": {"type": "sinc"}, "g": {"type": "gaussian"}}]}))
    code, _, _ = run(capsys, "semigroup", "--config", str(cfg))
    assert code == 2


def test_semigroup_custom_battery_csv(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"battery": [{"name": "g2", "p": 2, "f": {"type": "gaussian"},
                                            "g": {"type": "gaussian"}}]}))
    code, out, _ = run(capsys, "semigroup", "--config", str(cfg), "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and {r["case"] for r in rows} == {"g2"}


def test_simulate_tiny_batch_is_deterministic(capsys):
    argv = ["simulate", "--p", "3", "--seed", "0", "--paths", "300", "--steps", "8", "--format", "csv"]
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == 0
    assert hashlib.sha256(out1.encode()).digest() == hashlib.sha256(out2.encode()).digest()
    rows = list(csv.DictReader(io.StringIO(out1)))
    assert tuple(rows[0]) == BATCH_COLUMNS


def test_foliation_p3_csv(capsys):
    code, out, _ = run(capsys, "foliation", "--p", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and tuple(rows[0]) == LEAF_COLUMNS and len(rows) == 400


def test_foliation_p2_note(capsys):
    code, out, _ = run(capsys, "foliation", "--p", "2")
    doc = json.loads(out)
    assert code == 0 and "note" in doc["reports"][0]["details"]


def test_out_file_and_figures(tmp_path, capsys):
    out = tmp_path / "rep" / "fol.json"
    figs = tmp_path / "figs"
    code, stdout, _ = run(capsys, "foliation", "--p", "1.5", "--out", str(out), "--figures", str(figs))
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["command"] == "foliation"
    assert (figs / "foliation_p1.5.png").stat().st_size > 0


def test_verify_figures(tmp_path, capsys):
    code, _, _ = run(capsys, "verify", "--p", "3", SMALL_GRID, "--figures", str(tmp_path))
    assert code == 0 and (tmp_path / "majorization_p3.png").exists()


def test_version_flag(capsys):
    assert cli.main(["--version"]) == 0
