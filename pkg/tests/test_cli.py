import csv
import json

import numpy as np

from irs_crlb.cli import main


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and all(line.startswith("PASS") for line in lines)


def test_sweep_writes_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main([
        "sweep", "--preset", "paper-1irs", "--axis", "sigma2", "--grid", "0.01,0.1",
        "--scenarios", "0,1", "--restarts", "1", "--out", str(out), "--trace", str(tmp_path / "t.jsonl"),
    ])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert "wrote 4 rows" in capsys.readouterr().out
    assert (tmp_path / "t.jsonl").exists()


def test_design_writes_phases(tmp_path):
    out = tmp_path / "phases.csv"
    assert main(["design", "--preset", "paper-1irs", "--restarts", "1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 8
    phases = np.array([float(r["phase_rad"]) for r in rows])
    assert np.all((phases >= 0) & (phases < 2 * np.pi))


def test_config_file_and_bad_config(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"preset": "paper-1irs", "pulse_count": 16, "gamma": 0.5}))
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(good), "--axis", "gamma", "--grid", "0.5",
                 "--scenarios", "0", "--out", str(out)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gamma": -1}))
    assert main(["sweep", "--config", str(bad), "--axis", "gamma", "--grid", "0.5", "--out", str(out)]) == 2
    assert "gamma" in capsys.readouterr().err
