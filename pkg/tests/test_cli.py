import json

import pytest

from heatframe.cli import EXIT_DEFECT, EXIT_OK, EXIT_USAGE, main, run
from heatframe.report import REPORT_SCHEMA

from builders import FIXTURES, fixture_text

WALL1D_PORTS = [22.0254237288, 19.5889830508, 9.8432203390, 0.0974576271]


def statement(tmp_path, name, text=None):
    p = tmp_path / f"{name}.txt"
    p.write_text(text if text is not None else fixture_text(name), encoding="utf-8")
    return p


def solve(tmp_path, name, *flags, text=None):
    src = statement(tmp_path, name, text)
    out = tmp_path / "out"
    code = main(["solve", str(src), "--out", str(out), *flags])
    return code, out / name


@pytest.mark.parametrize("name", FIXTURES)
def test_corpus_exit_zero_and_figures_exist(tmp_path, name):
    code, d = solve(tmp_path, name)
    assert code == EXIT_OK
    rep = json.loads((d / "report.json").read_text())
    assert rep["schema"] == REPORT_SCHEMA and rep["ok"]
    for f in rep["figures"] + rep["data_files"]:
        assert (d / f).is_file(), f
    assert (d / "timing.json").is_file()


def test_wall1d_report(tmp_path):
    code, d = solve(tmp_path, "wall-1d")
    rep = json.loads((d / "report.json").read_text())
    assert rep["class"]["tag"] == "Quasi1d"
    assert sorted(rep["figures"]) == ["field.svg", "geometry.svg", "graph.svg"]
    T = [p["T"] for p in rep["solution"]["ports"]]
    assert T == pytest.approx(WALL1D_PORTS, rel=1e-9)
    assert rep["solution"]["energy_imbalance"] <= 1e-9
    field = json.loads((d / "field.json").read_text())
    assert len(field["components"]) == 3


def test_spoon_biot_in_report(tmp_path):
    _, d = solve(tmp_path, "spoon")
    rep = json.loads((d / "report.json").read_text())
    assert rep["biot"]["value"] == pytest.approx(1.6667e-4, abs=1e-8)
    assert rep["biot"]["verdict"] == "small"


def test_wall3d_fe_panel(tmp_path):
    code, d = solve(tmp_path, "wall-3d", "--fe", "--tol", "1e-3")
    assert code == EXIT_OK
    rep = json.loads((d / "report.json").read_text())
    panel = rep["bound_panel"]
    assert panel["H_LB"] == pytest.approx(0.645161, abs=1e-6)
    assert panel["H_UB"] == pytest.approx(0.845070, abs=1e-6)
    assert panel["H_LB"] - panel["fe_error_estimate"] <= panel["H_FE"] <= panel["H_UB"] + panel["fe_error_estimate"]
    assert rep["ordering"]["ok"]
    assert "bounds.svg" in rep["figures"] and (d / "fe_field.json").is_file()


def test_defect_exit_one_with_json(tmp_path, capsys):
    text = fixture_text("wall-1d").replace("$k_p = 0.1$", "$k_p = -0.1$")
    code, d = solve(tmp_path, "bad", text=text)
    assert code == EXIT_DEFECT
    rep = json.loads(capsys.readouterr().out)
    assert not rep["ok"]
    assert [x["code"] for x in rep["defects"]] == ["NonPositiveConductivity"]
    assert json.loads((d / "report.json").read_text()) == rep


def test_parse_error_carries_sentence(tmp_path, capsys):
    text = fixture_text("wall-1d").replace("$h_out = 100$", "$h_out = hot$")
    code, _ = solve(tmp_path, "bad", text=text)
    assert code == EXIT_DEFECT
    d = json.loads(capsys.readouterr().out)["defects"][0]
    assert d["code"] == "NonNumericRHS" and d["sentence"] is not None


def test_budget_exceeded_exit_one(tmp_path):
    code, d = solve(tmp_path, "wall-3d", "--fe", "--tol", "1e-9", "--max-dofs", "40")
    assert code == EXIT_DEFECT
    rep = json.loads((d / "report.json").read_text())
    assert rep["defects"][0]["code"] == "BudgetExceeded"
    assert rep["fe"]["converged"] is False


def test_missing_file_is_a_defect(tmp_path):
    res = run(tmp_path / "nope.txt")
    assert res.exit_code == EXIT_DEFECT
    assert res.report["defects"][0]["code"] == "ReadError"


def test_usage_errors(tmp_path):
    src = statement(tmp_path, "wall-1d")
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == EXIT_USAGE
    assert main(["solve", str(src), "--commonsense", str(tmp_path / "none.db"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_out_env_and_json_only(tmp_path, monkeypatch, capsys):
    src = statement(tmp_path, "spoon")
    monkeypatch.setenv("HEATFRAME_OUT", str(tmp_path / "env"))
    assert main(["solve", str(src), "--json-only"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    d = tmp_path / "env" / "spoon"
    assert json.loads((d / "report.json").read_text()) == rep
    assert rep["figures"] == [] and not list(d.glob("*.svg"))


@pytest.mark.parametrize("name, flags", [("wall-1d", []), ("spoon", []), ("wall-3d", ["--fe"])])
def test_byte_identical_runs(tmp_path, name, flags):
    src = statement(tmp_path, name)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["solve", str(src), "--out", str(out), *flags]) == EXIT_OK
        outs.append(out / name)
    files = sorted(p.name for p in outs[0].iterdir() if p.name != "timing.json")
    assert files == sorted(p.name for p in outs[1].iterdir() if p.name != "timing.json")
    for f in files:
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes(), f
