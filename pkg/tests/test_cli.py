import json
import subprocess
import sys

import pytest

from bubbletower.cli import RunReport, UsageError, emit, execute, main, parse_config, to_json


def run(tmp_path, *argv, name="out.json"):
    path = tmp_path / name
    code = main([*argv, "--output", str(path)])
    return code, path


# -- configuration ---------------------------------------------------------------

def test_parse_minimal():
    cfg = parse_config(["constants", "--dimension", "6"])
    assert cfg.command == "constants" and cfg.dimension == 6


def test_flag_overrides_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# sweep point\nepsilon = 1e-3\nmu = 2.5\n")
    cfg = parse_config(["radial", "--dimension", "6", "--epsilon", "1e-4"], str(f))
    assert cfg.epsilon == (1e-4,) and cfg.mu == 2.5
    cfg = parse_config(["radial", "--dimension", "6", "--config", str(f)])
    assert cfg.epsilon == (1e-3,)


@pytest.mark.parametrize("argv", [
    ["radial", "--dimension", "4", "--epsilon", "1e-3"],
    ["radial", "--dimension", "six", "--epsilon", "1e-3"],
    ["radial", "--dimension", "6"],
    ["explode", "--dimension", "6"],
])
def test_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_config(argv)
    assert main(argv) == 2


def test_unknown_file_key(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("dimension = 6\ncolour = blue\n")
    with pytest.raises(UsageError):
        parse_config(["constants"], str(f))
    assert main(["constants", "--config", str(f)]) == 2


# -- execution and exit codes -----------------------------------------------------

def test_constants_report(tmp_path):
    code, path = run(tmp_path, "constants", "--dimension", "6")
    assert code == 0
    data = json.loads(path.read_text())
    assert set(data["values"]["closed"]) == {f"C{k}" for k in range(1, 9)}
    assert data["values"]["closed"]["C4"] == pytest.approx(76.8, rel=1e-14)
    assert data["status"] == "ok" and "wall_time" not in data


def test_computation_error_exit(tmp_path):
    code, path = run(tmp_path, "reduce", "--dimension", "6", "--geometry", "exterior", "--mu", "1")
    assert code == 1
    assert json.loads(path.read_text())["status"] == "error"


def test_io_error_exit(tmp_path):
    assert main(["constants", "--dimension", "6", "--output", str(tmp_path / "missing" / "x.json")]) == 3


def test_reduce_then_tower(tmp_path):
    code, crit = run(tmp_path, "reduce", "--dimension", "6", "--mu", "30", name="crit.json")
    assert code == 0
    assert json.loads(crit.read_text())["values"]["count"] == 2
    code, path = run(tmp_path, "tower", "--from-critical", str(crit), "--epsilon", "1e-4")
    assert code == 0
    vals = json.loads(path.read_text())["values"]
    assert len(vals["masses"]) == 1 and vals["residual_norm"] > 0


def test_radial_oracle_key(tmp_path):
    code, path = run(tmp_path, "radial", "--dimension", "6", "--epsilon", "1e-3", "--ell", "2", "--oracle")
    assert code == 0
    vals = json.loads(path.read_text())["values"]
    assert vals["oracle"]["sup_relative_difference"] <= 1e-2
    assert vals["bump_count"] == 2


def test_sweep_order(tmp_path):
    code, path = run(tmp_path, "sweep", "--target", "heteroclinic", "--dimension", "6",
                     "--epsilon", "1e-2,1e-4,1e-3", "--jobs", "3")
    assert code == 0
    runs = json.loads(path.read_text())["values"]["runs"]
    assert [r["config"]["epsilon"] for r in runs] == [[1e-2], [1e-4], [1e-3]]


# -- emission --------------------------------------------------------------------

def test_empty_values_json():
    text = to_json(RunReport(config={}))
    assert json.loads(text)["values"] == {}


def test_json_round_trip():
    rep = execute(parse_config(["constants", "--dimension", "7"]))
    text = to_json(rep)
    again = json.loads(text)
    assert json.loads(json.dumps(again, sort_keys=True, indent=2) + "\n") == again
    assert json.dumps(again, sort_keys=True, indent=2) + "\n" == text


def test_trajectory_csv(tmp_path):
    path = tmp_path / "traj.csv"
    assert main(["heteroclinic", "--dimension", "6", "--epsilon", "1e-3", "--format", "csv",
                 "--output", str(path)]) == 0
    raw = path.read_bytes()
    assert raw.startswith(b"t,v,dv\n") and b"\r" not in raw
    assert (tmp_path / "traj.json").exists()


def test_byte_identical_reruns(tmp_path):
    outs = []
    path = tmp_path / "r.csv"
    for _ in range(2):
        assert main(["radial", "--dimension", "6", "--epsilon", "1e-3", "--format", "csv",
                     "--output", str(path)]) == 0
        outs.append((path.read_bytes(), (tmp_path / "r.json").read_bytes()))
    assert outs[0] == outs[1]


def test_timing_opt_in(tmp_path):
    code, path = run(tmp_path, "constants", "--dimension", "6", "--timing")
    assert code == 0 and json.loads(path.read_text())["wall_time"] >= 0


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "bubbletower.cli", "constants", "--dimension", "6"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["status"] == "ok"
