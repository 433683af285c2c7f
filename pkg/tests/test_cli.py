import csv
import json
from pathlib import Path

import pytest

from gridmarket.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def test_validate_ok(capsys):
    assert main(["validate", str(SCENARIOS / "one_zone.json")]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_lists_problems(tmp_path, capsys):
    raw = json.loads((SCENARIOS / "one_zone.json").read_text())
    raw["chain"].append({"module": "ido", "t_ex": 99})
    raw["units"][0]["zone"] = "nowhere"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(raw))
    assert main(["validate", str(path)]) == 1
    out = capsys.readouterr().out.splitlines()
    assert any("unknown zone" in line for line in out)
    assert any("outside the day" in line for line in out)


def test_run_rejects_invalid_scenario(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "invalid scenario" in capsys.readouterr().err


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = main(["run", str(SCENARIOS / "one_zone.json"), "--out", str(out), "--seed", "11",
                 "--network", "fb", "--dump-lp", "--time-limit", "30"])
    assert code == 0
    return out


def test_run_options_reach_the_manifest(run_dir):
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["seed"] == 11
    assert manifest["network"] == "fb"
    assert manifest["errors"] == []
    assert len(manifest["config_sha256"]) == 64


def test_run_dumps_models(run_dir):
    lps = sorted(p.name for p in (run_dir / "lp").glob("*.lp"))
    assert "mc_DA_d0.lp" in lps and any(n.startswith("po_") for n in lps)


def test_report_tables_and_figures(run_dir, capsys):
    assert main(["report", str(run_dir)]) == 0
    rep = run_dir / "report"
    for name in ("prices_summary.csv", "welfare_summary.csv", "imbalances_summary.csv",
                 "prices.png", "imbalances.png"):
        assert (rep / name).stat().st_size > 0, name
    with open(rep / "prices_summary.csv", newline="") as fh:
        prices = {(r["market"], r["zone"]): r for r in csv.DictReader(fh)}
    assert float(prices[("DA", "A")]["mean"]) == pytest.approx(45.0)
    assert int(prices[("DA", "A")]["steps"]) == 24
    assert "welfare" in capsys.readouterr().out


def test_report_needs_run_dir(tmp_path, capsys):
    assert main(["report", str(tmp_path)]) == 2
    assert "not a run directory" in capsys.readouterr().err


def test_default_out_dir(tmp_path):
    raw = json.loads((SCENARIOS / "one_zone.json").read_text())
    raw["chain"] = raw["chain"][:4]
    raw["output"] = str(tmp_path / "runs")
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(raw))
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "runs" / "one_zone" / "manifest.json").exists()
