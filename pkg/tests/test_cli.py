import json
import subprocess
import sys

import numpy as np
import pytest

from amplab.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sample_goe_csv(capsys):
    code, out, _ = _run(capsys, "sample", "--kind", "goe", "--n", "4", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "c0,c1,c2,c3"
    A = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    assert A.shape == (4, 4) and np.array_equal(A, A.T)


def test_sample_rect_json(capsys):
    code, out, _ = _run(capsys, "sample", "--kind", "RectInvariant", "--m", "4", "--n", "8", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["shape"] == [4, 8]


def test_se_predict_is_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "se.json"
    cfg.write_text(json.dumps({"T": 3, "N": 20000}))
    _, a, _ = _run(capsys, "se-predict", "--config", str(cfg), "--seed", "5")
    _, b, _ = _run(capsys, "se-predict", "--config", str(cfg), "--seed", "5")
    _, c, _ = _run(capsys, "se-predict", "--config", str(cfg), "--seed", "6")
    assert a == b and a != c
    assert json.loads(a)["kind"] == "goe" and len(json.loads(a)["Sigma"]) == 3


def test_tn_limit_odd_edges(tmp_path, capsys):
    net = tmp_path / "net.json"
    net.write_text(json.dumps({"type": "diagonal", "k": 1, "edges": [[0, 1]],
                               "vertices": [{"label": [[[1], 1.0]]}, {"label": [[[0], 1.0]]}]}))
    code, out, _ = _run(capsys, "tn-limit", "--network", str(net))
    doc = json.loads(out)
    assert code == 0 and doc["value"] == 0 and "odd-edge parity" in doc["note"]


def test_tn_limit_and_eval_path(tmp_path, capsys):
    net = tmp_path / "net.json"
    net.write_text(json.dumps({"type": "diagonal", "k": 1, "edges": [[0, 1], [1, 2]],
                               "vertices": [{"label": [[[0], 1.0]]}] * 3}))
    _, out, _ = _run(capsys, "tn-limit", "--network", str(net), "--ensemble", "invariant")
    assert json.loads(out)["value"] == pytest.approx(1.0)
    code, out, _ = _run(capsys, "tn-eval", "--network", str(net), "--n", "500", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "value"


def test_amp_run_outputs(tmp_path, capsys):
    cfg = tmp_path / "amp.json"
    cfg.write_text(json.dumps({"n": 200, "T": 2}))
    code, out, _ = _run(capsys, "amp-run", "--config", str(cfg), "--format", "json")
    assert code == 0 and len(json.loads(out)["second_moments"]["z"]) == 2
    code = main(["amp-run", "--config", str(cfg), "--format", "csv", "--thin", "10", "--out", str(tmp_path / "o")])
    lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert code == 0 and lines[0] == "coordinate,column,value" and len(lines) == 1 + 3 * 20


def test_experiment_writes_artifacts(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"kind": "limval_audit", "params": {"max_edges": 2}}))
    code, out, _ = _run(capsys, "experiment", "--config", str(cfg), "--out", str(tmp_path / "run"))
    assert code == 0 and json.loads(out)["ok"] is True
    assert {"manifest.json", "summary.json", "timing.json", "limits.csv"} <= \
        {p.name for p in (tmp_path / "run").iterdir()}


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"kind": "se_check", "surprise": True}))
    code, _, err = _run(capsys, "experiment", "--config", str(cfg))
    assert code == 2 and "surprise" in err
    code, _, err = _run(capsys, "se-predict", "--config", str(tmp_path / "absent.json"))
    assert code == 2 and "absent.json" in err
    code, _, err = _run(capsys, "sample", "--kind", "wishart")
    assert code == 2 and "unknown ensemble kind" in err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sample", "--seed", "-1"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main([])


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "amplab.cli", "sample", "--n", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("c0,c1")
