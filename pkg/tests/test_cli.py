import subprocess
import sys

import pytest

from superhost.cli import main, read_report
from superhost.config import format_config_text, seeded_config
from superhost.distributed import read_sketch
from superhost.trace import int_to_ip


@pytest.fixture
def trace_file(tmp_path):
    path = tmp_path / "trace.txt"
    rc = main(["synth", "--background", "3000", "--planted", "4:2000:5000", "--seed", "3",
               "--duration", "600", "--start-time", "0", "-o", str(path),
               "--truth", str(tmp_path / "truth.csv")])
    assert rc == 0
    return path


def test_synth_writes_truth(trace_file, tmp_path):
    rows = (tmp_path / "truth.csv").read_text().splitlines()
    assert rows[0] == "ip,cardinality"
    assert len(rows) == 1 + 3000 + 4
    assert all(int(r.split(",")[1]) >= 2000 for r in rows[1:5])


def test_update_merge_recover_evaluate(trace_file, tmp_path, capsys):
    cfg_path = tmp_path / "sketch.cfg"
    cfg_path.write_text(format_config_text(seeded_config(5)))
    a, b, m = tmp_path / "a.cba", tmp_path / "b.cba", tmp_path / "m.cba"
    assert main(["update", str(trace_file), "--config", str(cfg_path), "-o", str(a)]) == 0
    assert main(["update", str(trace_file), "--config", str(cfg_path), "--workers", "4",
                 "-o", str(b)]) == 0
    assert read_sketch(a) == read_sketch(b)
    assert read_sketch(a).config == seeded_config(5)
    assert main(["merge", str(a), str(b), "-o", str(m)]) == 0
    report = tmp_path / "report.csv"
    assert main(["recover", str(m), "--theta", "1024", "-o", str(report)]) == 0
    recs = read_report(report)
    assert len(recs) == 4
    truth = (tmp_path / "truth.csv").read_text().splitlines()[1:5]
    assert {int_to_ip(r.ip) for r in recs} == {row.split(",")[0] for row in truth}

    assert main(["evaluate", str(report), str(trace_file), "--theta", "1024"]) == 0
    out = capsys.readouterr().out
    assert "fnr=0.000000" in out and "fpr=0.000000" in out

    assert main(["recover", str(m), "--truth-trace", str(trace_file),
                 "--report-format", "text"]) == 0
    out = capsys.readouterr().out
    assert "4 super host(s)" in out and "ftr=0.000000" in out


def test_update_windows(trace_file, tmp_path):
    out = tmp_path / "win.cba"
    assert main(["update", str(trace_file), "--window-seconds", "300", "-o", str(out)]) == 0
    assert sorted(p.name for p in tmp_path.glob("win.w*.cba")) == ["win.w0.cba", "win.w1.cba"]


def test_oracle(trace_file, capsys):
    assert main(["oracle", str(trace_file), "--theta", "1024"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "ip,cardinality" and len(lines) == 5


@pytest.mark.parametrize("policy", ["hash-by-pair", "hash-by-inner", "round-robin"])
def test_pipeline(trace_file, tmp_path, capsys, policy):
    assert main(["pipeline", str(trace_file), "--routers", "3", "--policy", policy,
                 "--sketch-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "fnr=0.000000" in out and "fpr=0.000000" in out
    assert len(list(tmp_path.glob("router*.cba"))) == 3


def test_pipeline_windows_binary(tmp_path, capsys):
    path = tmp_path / "t.bin"
    assert main(["synth", "--planted", "2:1500:1500", "--background", "100", "--duration", "600",
                 "--format", "binary", "--record-size", "16", "-o", str(path)]) == 0
    assert main(["pipeline", str(path), "--format", "binary", "--record-size", "16",
                 "--window-seconds", "300", "--routers", "2"]) == 0
    out = capsys.readouterr().out
    assert "# window 0" in out and "# window 1" in out


def test_exit_codes(tmp_path, trace_file):
    with pytest.raises(SystemExit) as exc:
        main(["recover"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1
    assert main(["synth", "--planted", "x:1:2", "-o", str(tmp_path / "x")]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("1.2.3.4 nope\n")
    assert main(["oracle", str(bad)]) == 2
    assert main(["recover", str(tmp_path / "missing.cba")]) == 2
    junk = tmp_path / "junk.cba"
    junk.write_bytes(b"CBA1" + bytes(10))
    assert main(["recover", str(junk)]) == 2
    sk = tmp_path / "s.cba"
    assert main(["update", str(trace_file), "-o", str(sk)]) == 0
    assert main(["recover", str(sk), "--tuple-cap", "0"]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["update", str(trace_file), "--window-seconds", "300", "-o", str(sk), "--format", "pcap"])
    assert exc.value.code == 1
    other = tmp_path / "o.cba"
    assert main(["update", str(trace_file), "--seed", "1", "-o", str(other)]) == 0
    assert main(["merge", str(sk), str(other), "-o", str(tmp_path / "mm.cba")]) == 2


def test_untimestamped_windows_is_data_error(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("1.2.3.4 5.6.7.8\n")
    assert main(["update", str(path), "--window-seconds", "300", "-o", str(tmp_path / "x.cba")]) == 2


def test_module_entry_point(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("10.0.0.1 8.8.8.8\n8.8.4.4 10.0.0.1\n")
    out = subprocess.run([sys.executable, "-m", "superhost", "oracle", str(path), "--theta", "1",
                          "--inner-cidr", "10.0.0.0/8"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.splitlines() == ["ip,cardinality", "10.0.0.1,2"]
