import json
import shutil
from pathlib import Path

import pytest

from cemkit.cli import main
from cemkit.sequencer import directory_hashes

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
NZ = str(CONFIGS / "scenarios" / "net_zero.json")
CP = str(CONFIGS / "scenarios" / "current_policies.json")
BASE = str(CONFIGS / "configurations" / "base.json")
ECON = str(CONFIGS / "configurations" / "economic_retirement.json")


@pytest.fixture(scope="module")
def runs(toy_dir, tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    codes = {
        "base": main(["plan", "--system", str(toy_dir), "--scenario", NZ, "--config", BASE, "--out", str(root / "base")]),
        "econ": main(["plan", "--system", str(toy_dir), "--scenario", NZ, "--config", ECON, "--out", str(root / "econ")]),
        "cp": main(["plan", "--system", str(toy_dir), "--scenario", CP, "--config", BASE, "--out", str(root / "cp")]),
    }
    return root, codes


def test_validate(toy_dir, tmp_path, capsys):
    assert main(["validate", "--system", str(toy_dir)]) == 0
    bad = tmp_path / "bad"
    shutil.copytree(toy_dir, bad)
    (bad / "fuels.csv").unlink()
    assert main(["validate", "--system", str(bad)]) == 1
    assert "fuels.csv" in capsys.readouterr().out


def test_plan_writes_results(runs):
    root, codes = runs
    assert codes == {"base": 0, "econ": 0, "cp": 0}
    costs = json.loads((root / "base" / "costs.json").read_text())
    assert list(costs["periods"]) == ["2027", "2030", "2035", "2040", "2045", "2050"]
    names = sorted(p.name for p in (root / "base").iterdir())
    assert names == ["costs.json", "dispatch_summary.csv", "emissions.csv", "manifest.json", "trajectory.csv"]


def test_plan_rerun_is_byte_identical(runs, toy_dir):
    root, _ = runs
    before = directory_hashes(root / "base")
    assert main(["plan", "--system", str(toy_dir), "--scenario", NZ, "--config", BASE, "--out",
                 str(root / "base")]) == 0
    assert directory_hashes(root / "base") == before


def test_foresight_needs_sampled_weeks(toy_dir, tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"name": "bad", "sequencing": "foresight"}))
    assert main(["plan", "--system", str(toy_dir), "--scenario", NZ, "--config", str(cfg),
                 "--out", str(tmp_path / "o")]) == 1
    assert "sampled" in capsys.readouterr().err


def test_simulate_selected_period(runs, toy_dir):
    root, _ = runs
    out = root / "sim"
    assert main(["simulate", "--system", str(toy_dir), "--scenario", NZ, "--plan", str(root / "base"),
                 "--periods", "2030", "--out", str(out)]) == 0
    assert list(json.loads((out / "costs.json").read_text())["periods"]) == ["2030"]


def test_simulate_missing_period(runs, toy_dir, capsys):
    root, _ = runs
    assert main(["simulate", "--system", str(toy_dir), "--scenario", NZ, "--plan", str(root / "base"),
                 "--periods", "2033", "--out", str(root / "x")]) == 1
    assert "2033" in capsys.readouterr().err


def test_simulate_scenario_mismatch(runs, toy_dir):
    root, _ = runs
    assert main(["simulate", "--system", str(toy_dir), "--scenario", CP, "--plan", str(root / "base"),
                 "--out", str(root / "y")]) == 2


def test_compare_exit_codes(runs, tmp_path, capsys):
    root, _ = runs
    assert main(["compare", str(root / "base"), str(root / "base"), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "report.md").exists() and (tmp_path / "r" / "plots" / "npv.csv").exists()
    assert main(["compare", str(root / "base"), str(root / "econ"), "--tolerance", "0"]) == 1
    assert main(["compare", str(root / "base"), str(root / "cp")]) == 2
    assert "different scenarios" in capsys.readouterr().err


def test_missing_system(tmp_path):
    assert main(["validate", "--system", str(tmp_path / "nope")]) == 1
