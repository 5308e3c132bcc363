import json
import subprocess
import sys

from bsphases.cli import main


def test_crossings(capsys):
    assert main(["crossings", "--family", "three_level_chain", "--mu", "0.1"]) == 0
    out = capsys.readouterr().out
    assert "(1, 2)" in out and "(0, 1)" in out and "gamma0=" in out


def test_predict_and_oracle_json(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["predict", "--h", "0.02", "--mu", "0.1", "--out", str(out)]) == 0
    pred = json.loads(out.read_text())
    assert main(["oracle", "--h", "0.02", "--mu", "0.1", "--out", str(out)]) == 0
    orc = json.loads(out.read_text())
    p = [[a * a + b * b for a, b in zip(ra, rb)] for ra, rb in zip(pred["s_pred_re"], pred["s_pred_im"])]
    q = [[a * a + b * b for a, b in zip(ra, rb)] for ra, rb in zip(orc["s_channel_re"], orc["s_channel_im"])]
    assert max(abs(x - y) for rp, rq in zip(p, q) for x, y in zip(rp, rq)) < 0.03
    assert "cycle 0" in capsys.readouterr().out


def test_sweep_and_validate(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("family: linear_lz\nh_values: [0.04, 0.02]\nmu_values: [0.1, 0.2]\ninterval: [-4, 4]\n")
    csv = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 5
    assert csv.with_suffix(".json").exists()
    rep = tmp_path / "r.json"
    assert main(["validate", "--config", str(cfg), "--out", str(rep)]) == 0
    assert len(json.loads(rep.read_text())["records"]) == 4


def test_exit_codes(tmp_path, capsys):
    assert main(["predict", "--h", "5"]) == 2
    assert main(["predict", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert main(["validate", "--h", "abc"]) == 2
    # crossing sitting exactly on an interval endpoint: numerical failure
    cfg = tmp_path / "c.yaml"
    cfg.write_text("family: linear_lz\nh_values: [0.05]\nmu_values: [0.0]\ninterval: [0, 3]\n")
    assert main(["predict", "--config", str(cfg)]) == 3
    err = capsys.readouterr().err
    assert "configuration error" in err and "numerical failure" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "bsphases", "crossings"], capture_output=True, text=True)
    assert r.returncode == 0 and "t_star" in r.stdout
