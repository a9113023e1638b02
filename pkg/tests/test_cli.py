import csv
import subprocess
import sys
from pathlib import Path

import pytest

from ttagsim.cli import main
from ttagsim.config import OUT_ENV_VAR

GOLDEN = Path(__file__).parent / "golden" / "uniform_seed7.trace"
SMALL = ["--generator", "uniform", "--num-accesses", "20000", "--seed", "1",
         "--footprint-blocks", "65536"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_demo(tmp_path, capsys):
    assert main(["run", "--demo", "--scheme", "3rset", "--split-bits", "4",
                 "--with-baseline", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "metrics.csv")
    assert [r["scheme"] for r in rows] == ["baseline", "3rset"]
    assert rows[1]["split_bits"] == "4"
    assert (tmp_path / "tag_gaps.csv").read_text().startswith("gap_length,count\n")
    assert (tmp_path / "data_gaps.csv").exists()
    out = capsys.readouterr().out
    assert "vs baseline" in out and "partial matches" in out


def test_run_is_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert main(["run", *SMALL, "--scheme", "waypred", "--out", str(tmp_path / sub)]) == 0
    for name in ("metrics.csv", "tag_gaps.csv", "data_gaps.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_compare_outputs(tmp_path):
    assert main(["compare", *SMALL, "--schemes", "waypred,3rset:4,baseline",
                 "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert [r["scheme"] for r in rows] == ["baseline", "waypred", "3rset"]
    assert float(rows[0]["normalized_bits"]) == 1.0
    for r in rows:
        assert float(r["normalized_mttf"]) == pytest.approx(1 / float(r["normalized_bits"]))
    summary = read_csv(tmp_path / "compare_summary.csv")
    assert {r["scheme"] for r in summary} == {"baseline", "waypred", "3rset(4)"}


def test_compare_several_workloads(tmp_path):
    traces = []
    for seed in (1, 2):
        path = tmp_path / f"w{seed}.trace"
        assert main(["gen-trace", "--generator", "zipfian", "--num-accesses", "5000",
                     "--seed", str(seed), "--footprint-blocks", "3000", "-o", str(path)]) == 0
        traces += ["--trace", str(path)]
    assert main(["compare", *traces, "--schemes", "baseline,3rset", "--out",
                 str(tmp_path / "out")]) == 0
    rows = read_csv(tmp_path / "out" / "compare.csv")
    assert [r["workload"] for r in rows] == ["w1", "w1", "w2", "w2"]
    summary = {r["scheme"]: r for r in read_csv(tmp_path / "out" / "compare_summary.csv")}
    bits = [int(r["bits_read_total"]) for r in rows]
    assert float(summary["3rset(4)"]["bits_ratio_of_sums"]) == pytest.approx(
        (bits[1] + bits[3]) / (bits[0] + bits[2]))
    assert float(summary["3rset(4)"]["bits_mean_of_ratios"]) == pytest.approx(
        (bits[1] / bits[0] + bits[3] / bits[2]) / 2)


def test_sweep(tmp_path, capsys):
    assert main(["sweep", *SMALL, "--m-range", "2..6", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert [int(r["split_bits"]) for r in rows] == [2, 3, 4, 5, 6]
    assert "best split point:" in capsys.readouterr().out


def test_gen_trace_matches_golden(tmp_path):
    path = tmp_path / "t.trace"
    assert main(["gen-trace", "--generator", "uniform", "--num-accesses", "1000",
                 "--seed", "7", "-o", str(path)]) == 0
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 1000
    assert path.read_bytes() == GOLDEN.read_bytes()


def test_out_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV_VAR, str(tmp_path / "env"))
    assert main(["run", *SMALL]) == 0
    assert (tmp_path / "env" / "metrics.csv").exists()


def test_config_file(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[scheme]\nscheme = 3rset\nsplit_bits = 5\n"
        "[trace]\ngenerator = zipfian\nnum_accesses = 4000\nfootprint_blocks = 2000\n"
        "[run]\nout = results\nwarmup = 100\n"
    )
    assert main(["run", "--config", str(cfg)]) == 0
    row = read_csv(tmp_path / "results" / "metrics.csv")[0]
    assert row["split_bits"] == "5" and row["total_accesses"] == "3900"


@pytest.mark.parametrize("argv_tail, code", [
    (["--config", "missing.ini"], 3),
    (["--generator", "uniform", "--read-fraction", "2"], 3),
    (["--generator", "uniform", "--scheme", "3rset", "--split-bits", "31"], 3),
    (["--trace", "does-not-exist.trace"], 4),
])
def test_exit_codes(tmp_path, argv_tail, code):
    assert main(["run", "--out", str(tmp_path), *argv_tail]) == code


def test_malformed_trace_exit(tmp_path, capsys):
    bad = tmp_path / "bad.trace"
    bad.write_text("R 0x10\nQ 0x20\n")
    assert main(["run", "--trace", str(bad), "--out", str(tmp_path)]) == 4
    assert "line 2" in capsys.readouterr().err


def test_calibration_exit(tmp_path):
    cfg = tmp_path / "e.ini"
    cfg.write_text("[energy]\nanchors = 1:0.3\n")
    assert main(["run", "--config", str(cfg), *SMALL, "--out", str(tmp_path)]) == 5


def test_unwritable_output_exit(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", *SMALL, "--out", str(blocker / "sub")]) == 6


def test_usage_error_exit():
    proc = subprocess.run([sys.executable, "-m", "ttagsim", "run", "--bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ttagsim", "gen-trace", "--num-accesses", "10",
                           "-o", str(tmp_path / "x.trace")], capture_output=True, text=True)
    assert proc.returncode == 0 and "wrote 10 records" in proc.stdout
