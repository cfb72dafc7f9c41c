from pathlib import Path

from faultsim.cli import main
from faultsim.genbench import gen_bench
from faultsim.report import parse_report_csv

ROOT = Path(__file__).resolve().parent.parent
AND2_NL = ROOT / "benchmarks" / "and2.nl"
AND2_STIM = ROOT / "benchmarks" / "and2.stim"


def run_cli(*args):
    return main([str(a) for a in args])


def test_and2_coverage_half(tmp_path, capsys):
    """Hand enumeration with a=b=1: the three stuck-at-0 faults flip the
    output; the stuck-at-1 faults agree with the good values.  6 faults,
    3 detected, coverage 0.5."""

    report = tmp_path / "r.csv"
    code = run_cli(
        "run", "--netlist", AND2_NL, "--stimulus", AND2_STIM,
        "--gen-faults", "sa0,sa1", "--workers", "1", "--mode", "serial",
        "--report", report,
    )
    assert code == 0
    assert "coverage=0.5000" in capsys.readouterr().out
    rows = parse_report_csv(report.read_text())
    verdicts = {(r.location_name, r.kind): r.detected for r in rows}
    assert verdicts == {
        ("a", "sa0"): True, ("a", "sa1"): False,
        ("b", "sa0"): True, ("b", "sa1"): False,
        ("y", "sa0"): True, ("y", "sa1"): False,
    }
    assert all(r.detect_cycle == 0 and r.observing_output == "o"
               for r in rows if r.detected)


def test_oracle_check_passes(capsys):
    code = run_cli(
        "run", "--netlist", AND2_NL, "--stimulus", AND2_STIM,
        "--gen-faults", "sa0,sa1", "--workers", "4", "--mode", "full",
        "--oracle-check",
    )
    assert code == 0
    assert "oracle-check: ok" in capsys.readouterr().out


def test_missing_netlist_is_usage_error(capsys):
    assert run_cli("run", "--stimulus", AND2_STIM, "--gen-faults", "sa0") == 1
    assert "netlist" in capsys.readouterr().err


def test_unparseable_netlist_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.nl"
    bad.write_text("module m\nassign y 1 = FROB a\nend\n")
    code = run_cli("run", "--netlist", bad, "--stimulus", AND2_STIM,
                   "--gen-faults", "sa0")
    assert code == 2
    assert "unknown operator" in capsys.readouterr().err


def test_bad_stimulus_exits_2(tmp_path, capsys):
    stim = tmp_path / "bad.stim"
    stim.write_text("cycle a\n0 1\n")
    code = run_cli("run", "--netlist", AND2_NL, "--stimulus", stim,
                   "--gen-faults", "sa0")
    assert code == 2


def test_missing_file_exits_2(tmp_path):
    code = run_cli("run", "--netlist", tmp_path / "nope.nl",
                   "--stimulus", AND2_STIM, "--gen-faults", "sa0")
    assert code == 2


def test_fault_csv_flow(tmp_path):
    bench = gen_bench("uniform", 50, 6, cycles=5, fault_count=15)
    paths = bench.write(tmp_path, "u")
    report = tmp_path / "rep.csv"
    stats = tmp_path / "stats.txt"
    code = run_cli(
        "run", "--netlist", paths[0], "--stimulus", paths[1],
        "--faults", paths[2], "--workers", "2", "--report", report,
        "--stats", stats, "--oracle-check",
    )
    assert code == 0
    assert len(parse_report_csv(report.read_text())) == 15
    assert stats.read_text().startswith("config ")


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli("gen", "--profile", "skewed", "--size", "120",
                       "--seed", "9", "--out", out) == 0
    for name in ("skewed_120_9.nl", "skewed_120_9.stim", "skewed_120_9.flt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_gen_fault_sampling_with_limit(tmp_path, capsys):
    code = run_cli(
        "run", "--netlist", AND2_NL, "--stimulus", AND2_STIM,
        "--gen-faults", "sa0,sa1", "--fault-limit", "3", "--seed", "5",
    )
    assert code == 0
    assert "faults=3" in capsys.readouterr().out


def test_transient_gen_spec(tmp_path, capsys):
    code = run_cli(
        "run", "--netlist", AND2_NL, "--stimulus", AND2_STIM,
        "--gen-faults", "transient:0:0",
    )
    assert code == 0
    assert "faults=3" in capsys.readouterr().out


def test_ablate_smoke(tmp_path, capsys):
    bench = gen_bench("skewed", 150, 2, cycles=5)
    paths = bench.write(tmp_path, "s")
    out = tmp_path / "table.txt"
    code = run_cli(
        "ablate", "--netlist", paths[0], "--stimulus", paths[1],
        "--faults", paths[2], "--workers", "1,4", "--trials", "2",
        "--out", out,
    )
    assert code == 0
    text = out.read_text()
    assert text.splitlines()[1].startswith("serial")
    assert "verdicts consistent across cells: yes" in text
    assert "overhead fraction" in text


def test_ablate_bad_workers(capsys, tmp_path):
    bench = gen_bench("uniform", 40, 1, cycles=3)
    paths = bench.write(tmp_path, "u")
    code = run_cli("ablate", "--netlist", paths[0], "--stimulus", paths[1],
                   "--faults", paths[2], "--workers", "0,4")
    assert code == 1
