import json

import pytest

from robustcover.cli import main


def test_run_outputs_metrics(capsys, tmp_path):
    svg = tmp_path / "out.svg"
    assert main(["run", "--sensors", "8", "--union-samples", "1000", "--svg", str(svg), "--trace"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["total_coverage"] == pytest.approx(sum(out["per_sensor_area"]))
    assert out["config"]["m"] == 8 and out["config"]["theta_deg"] == pytest.approx(90)
    assert isinstance(out["trace"], list)
    assert svg.read_text().startswith("<?xml")


def test_config_file_with_flag_override(capsys, tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"m": 5, "theta_s": 180, "r_s": 80}))
    assert main(["run", "--config", str(conf), "--range", "60", "--union-samples", "0"]) == 0
    c = json.loads(capsys.readouterr().out)["config"]
    assert c["m"] == 5 and c["theta_deg"] == pytest.approx(180) and c["r_s"] == 60


def test_sweep_csv(capsys, tmp_path):
    args = ["sweep", "--sensors", "6", "--runs", "2", "--angles", "90", "360",
            "--strategies", "random", "proposed", "--cases", "I"]
    assert main(args) == 0
    text = capsys.readouterr().out
    lines = text.splitlines()
    assert lines[0] == "theta_deg,r_s,m,rho_min,rho_max,strategy,case,runs,mean_coverage,std_coverage"
    assert len(lines) == 5
    out = tmp_path / "s.csv"
    assert main(args + ["--out", str(out)]) == 0
    assert out.read_text() == text


def test_rrf_positions(capsys, tmp_path):
    pos = tmp_path / "p.json"
    pos.write_text("[[0, 0], [10, 0]]")
    assert main(["rrf", "--positions", str(pos), "--region", "10", "10", "--rho-min", "1", "--rho-max", "10"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["rho_raw"] == pytest.approx(5.0, abs=1e-3) and rows[0]["active_neighbor"] == 1


def test_oracle(capsys):
    assert main(["oracle", "--instances", "3", "--samples", "20000"]) == 0
    assert "3/3" in capsys.readouterr().out


def test_bad_input_exit_code(capsys):
    assert main(["run", "--angle", "0"]) == 2
    assert "error" in capsys.readouterr().err
