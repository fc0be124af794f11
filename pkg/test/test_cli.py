import json

import pytest

import main
import runtime


@pytest.fixture(autouse=True)
def settings_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(runtime, "SETTINGS_DIR", tmp_path / "settings")
    return tmp_path / "settings"


def invoke(capsys, *argv):
    code = main.run(list(argv))
    out, err = capsys.readouterr()
    return code, json.loads(out) if out.strip() else None, err


def test_bch(capsys):
    code, report, _ = invoke(capsys, "bch", "--p", "1,0,0", "--q", "0,1,0")
    assert code == 0
    assert report["product"] == "1,1,1/2"


def test_bch_arity_is_a_usage_error(capsys):
    code, report, err = invoke(capsys, "bch", "--p", "1,0", "--q", "0,1,0")
    assert code == 2
    assert report is None
    assert "ArityMismatch" in err


def test_unknown_command_and_group(capsys):
    assert invoke(capsys, "frobnicate")[0] == 2
    assert invoke(capsys, "group-info", "--group", "lie(7)")[0] == 2


def test_group_info(capsys):
    code, report, _ = invoke(capsys, "group-info", "--group", "engel")
    assert code == 0
    assert report["Q"] == 7
    assert report["coordinates"] == ["x1", "x2", "x3", "x4"]
    assert report["bracket_rank"] == 4


def test_approximate(capsys):
    code, report, _ = invoke(capsys, "approximate", "--f", "x", "--k", "3", "--show-system")
    assert code == 0
    assert report["P_text"] == "1/2*x*y"
    assert report["system"]["rows"] == ["1", "x", "y"]
    assert all(entry["value"] == "0" for entry in report["residuals"])


def test_approximate_with_free_coefficients(capsys, tmp_path):
    free = tmp_path / "free.json"
    free.write_text(json.dumps([{"monomial": [0, 0, 1], "value": "1"}]))
    code, report, _ = invoke(capsys, "approximate", "--f", "x", "--k", "3", "--free", str(free))
    assert code == 0
    assert report["P_text"] == "t"
    free.write_text(json.dumps([{"monomial": [0, 1, 0], "value": "1"}]))
    assert invoke(capsys, "approximate", "--f", "x", "--k", "3", "--free", str(free))[0] == 2


def test_characteristic_distance_is_a_computation_error(capsys):
    code, _, err = invoke(capsys, "approximate", "--f", "x", "--d=-y")
    assert code == 1
    assert "CharacteristicPoint" in err


def test_companions(capsys):
    code, report, _ = invoke(capsys, "companions", "--k", "2")
    assert code == 0
    assert report["dimension"] == report["nullity"] == 4


def test_apply(capsys):
    code, report, _ = invoke(capsys, "apply", "--f", "y*t")
    assert code == 0
    assert report["result"] == "x"
    assert invoke(capsys, "apply", "--f", "sin(x)")[0] == 2


def test_randomized_commands_need_a_seed(capsys):
    code, _, err = invoke(capsys, "char-scan")
    assert code == 2
    assert "--seed" in err


def test_default_seed_from_settings(capsys, settings_dir):
    settings_dir.mkdir(parents=True)
    (settings_dir / "settings.json").write_text(json.dumps({"default_seed": 5}))
    code, report, _ = invoke(capsys, "char-scan", "--samples", "50")
    assert code == 0
    assert report["min_grad"] == pytest.approx(1.0)


def test_reports_are_written_to_out(capsys, tmp_path):
    out = tmp_path / "scan.json"
    code, report, _ = invoke(capsys, "char-scan", "--seed", "1", "--samples", "50", "--out", str(out))
    assert code == 0
    assert json.loads(out.read_text()) == report
