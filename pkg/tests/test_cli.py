import csv
import json
import subprocess
import sys

import numpy as np

from a2scl.cli import main
from a2scl.harness import load_results


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_encode_then_decode(capsys, tmp_path):
    code, out, _ = run(capsys, "encode", "--K", "40", "--E", "100", "--seed", "3", "--json")
    assert code == 0
    d = json.loads(out)
    tx = np.array([int(b) for b in d["transmitted"]])
    assert tx.size == 100
    llr_file = tmp_path / "llr.json"
    llr_file.write_text(json.dumps((20.0 * (1 - 2 * tx)).tolist()))
    for dec in ("sc", "scl", "adaptive"):
        code, out, _ = run(capsys, "decode", str(llr_file), "--K", "40", "--E", "100",
                           "--decoder", dec)
        r = json.loads(out)
        assert code == 0 and r["payload"] == d["payload"]


def test_decode_trace_and_failure(capsys, tmp_path):
    # pure noise: no path is expected to pass the CRC
    f = tmp_path / "noise.txt"
    f.write_text(" ".join(map(str, np.random.default_rng(6).normal(0, 3, 64))))
    code, out, err = run(capsys, "decode", str(f), "--N", "64", "--K", "20", "--crc", "6",
                         "--decoder", "scl", "--list-size", "2", "--trace")
    assert code == 1 and json.loads(out)["status"] == "scl_best_effort"
    assert err.count("\n") >= 64


def test_bad_arguments_exit_nonzero(capsys):
    assert main(["encode", "--N", "64", "--K", "60", "--crc", "6"]) != 0
    assert main(["encode", "--K", "4", "--N", "8", "--crc", "0", "--payload", "101"]) != 0


def test_fer_self_test_and_outputs(capsys, tmp_path):
    out_csv = tmp_path / "r.csv"
    code, _, err = run(capsys, "fer", "--N", "128", "--K", "40", "--crc", "16", "--snr", "1",
                       "3", "--convention", "ebn0", "--max-frames", "400", "--min-frame-errors",
                       "10", "--batch-frames", "200", "--list-size", "4", "--out", str(out_csv),
                       "--self-test")
    assert code == 0 and "errors=" in err
    pts, echo = load_results(out_csv)
    assert [p.snr_db for p in pts] == [1.0, 3.0]
    assert echo["max_frames"] == 400
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps(echo))
    code, out, _ = run(capsys, "fer", "--config", str(cfg_file))
    assert code == 0
    assert [p["frame_errors"] for p in json.loads(out)["points"]] == [p.frame_errors for p in pts]


def test_sched(capsys, tmp_path):
    ev = tmp_path / "ev.csv"
    code, out, _ = run(capsys, "sched", "run", "--frames", "20000", "--sc-fer", "0.05",
                       "--events", str(ev), "--self-test")
    assert code == 0
    s = json.loads(out)
    assert s["frames"] == 20000
    assert next(csv.reader(open(ev))) == ["time", "kind", "frame_id"]
    code, out, _ = run(capsys, "sched", "sizing", "--fer-grid", "1e-3", "1e-2", "--t-ratio", "5")
    assert code == 0 and "| 0.001 " in out and "200" in out
    code, out, _ = run(capsys, "sched", "sizing", "--format", "csv")
    assert out.startswith("fer,")


def test_noise(capsys, tmp_path):
    raw, hist = tmp_path / "n.bin", tmp_path / "h.csv"
    code, out, _ = run(capsys, "noise", "--count", "5000", "--seed", "2", "--out", str(raw),
                       "--raw", "--histogram", str(hist))
    assert code == 0 and json.loads(out)["count"] == 5000
    codes = np.fromfile(raw, dtype=np.int16)
    rows = list(csv.DictReader(open(hist)))
    assert sum(int(r["count"]) for r in rows) == 5000
    assert {int(r["code"]) for r in rows} == set(codes.tolist())
    code, out, _ = run(capsys, "noise", "--table")
    assert json.loads(out)["segments"] == 64


def test_preset(capsys):
    code, out, _ = run(capsys, "preset", "--K", "64", "--al", "1")
    d = json.loads(out)
    assert d["code"]["transmit_length"] == 108 and d["decoder"]["list_size"] == 8
    assert main(["preset", "--K", "128", "--al", "1"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "a2scl", "preset", "--K", "96", "--al", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["label"] == "dci_K96_AL2"
