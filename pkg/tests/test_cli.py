"""Command-line interface: file formats, exit codes, determinism, trends."""

from pathlib import Path

import pytest

from checkersim.cli import main

DEFAULT_CFG = """\
# acceptance-scale configuration
timeout_instructions = 300
memory_footprint_bytes = 4096
n_littles = 4
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cli")
    (ws / "default.cfg").write_text(DEFAULT_CFG)
    rc = main(["gen-workload", "--suite", "div-heavy", "--body", "800",
               "--loop", "4", "--footprint", "4096", "--out-dir", str(ws)])
    assert rc == 0
    rc = main(["gen-workload", "--suite", "load-heavy", "--body", "800",
               "--loop", "4", "--footprint", "4096", "--out-dir", str(ws)])
    assert rc == 0
    return ws


def body_of(path: Path) -> str:
    """CSV text without the timestamp manifest line."""
    return "\n".join(l for l in path.read_text().splitlines()
                     if not l.startswith("# generated_at"))


def test_run_writes_result_and_stalls(workspace, tmp_path):
    rc = main(["run", "--config", str(workspace / "default.cfg"),
               "--program", str(workspace / "div-heavy.asm"),
               "--set", "n_littles=4", "--out-dir", str(tmp_path)])
    assert rc == 0
    body = (tmp_path / "result.csv").read_text()
    header = [l for l in body.splitlines() if not l.startswith("#")][0]
    assert header.startswith("workload,seed,n_littles,fabric,baseline_cycles")
    row = [l for l in body.splitlines() if not l.startswith("#")][1]
    assert row.split(",")[0] == "div-heavy"
    stalls = (tmp_path / "stalls.csv").read_text()
    assert "FabricBackpressure," in stalls
    assert "CheckerStarvation," in stalls
    assert "StatusExtraction," in stalls


def test_missing_program_exits_2(workspace, tmp_path, capsys):
    rc = main(["run", "--config", str(workspace / "default.cfg"),
               "--program", str(workspace / "nope.asm"),
               "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "nope.asm" in capsys.readouterr().err


def test_bad_config_key_exits_2(workspace, tmp_path):
    rc = main(["run", "--config", str(workspace / "default.cfg"),
               "--program", str(workspace / "div-heavy.asm"),
               "--set", "warp_factor=9", "--out-dir", str(tmp_path)])
    assert rc == 2


def test_run_determinism_byte_identical(workspace, tmp_path):
    for d in ("a", "b"):
        rc = main(["run", "--config", str(workspace / "default.cfg"),
                   "--program", str(workspace / "div-heavy.asm"),
                   "--out-dir", str(tmp_path / d)])
        assert rc == 0
    assert body_of(tmp_path / "a" / "result.csv") == \
        body_of(tmp_path / "b" / "result.csv")
    assert body_of(tmp_path / "a" / "stalls.csv") == \
        body_of(tmp_path / "b" / "stalls.csv")


def test_sweep_littles_monotone(workspace, tmp_path):
    rc = main(["sweep-littles", "--config", str(workspace / "default.cfg"),
               "--program", str(workspace / "div-heavy.asm"),
               "--counts", "2,4,6", "--out-dir", str(tmp_path)])
    assert rc == 0
    rows = [l for l in (tmp_path / "sweep.csv").read_text().splitlines()
            if l and not l.startswith("#")][1:]
    counts = [int(r.split(",")[0]) for r in rows]
    slowdowns = [float(r.split(",")[1]) for r in rows]
    assert counts == [2, 4, 6]
    assert slowdowns[0] > slowdowns[1] > slowdowns[2]


def test_compare_fabrics_dominance(workspace, tmp_path):
    rc = main(["compare-fabrics", "--config", str(workspace / "default.cfg"),
               "--program", str(workspace / "load-heavy.asm"),
               "--out-dir", str(tmp_path)])
    assert rc == 0
    rows = [l for l in (tmp_path / "fabrics.csv").read_text().splitlines()
            if l and not l.startswith("#")][1:]
    data = {r.split(",")[0]: r.split(",") for r in rows}
    assert float(data["baseline"][1]) >= float(data["hmnoc"][1])
    assert int(data["baseline"][2]) > int(data["hmnoc"][2])


def test_campaign_csv_and_summary(workspace, tmp_path):
    rc = main(["campaign", "--config", str(workspace / "default.cfg"),
               "--program", str(workspace / "load-heavy.asm"),
               "--n-faults", "50", "--seed", "4", "--out-dir", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "faults.csv").read_text().splitlines()
    header = [l for l in lines if not l.startswith("#")][0]
    assert header == ("fault_idx,target,seq,bit,detected,detector,"
                      "inject_cycle,detect_cycle,latency_ns")
    rows = [l for l in lines if not l.startswith("#")][1:]
    assert len(rows) == 50
    assert all(r.split(",")[4] == "1" for r in rows)
    summary = (tmp_path / "summary.txt").read_text()
    assert "detection_rate = 1.000000" in summary


def test_campaign_determinism(workspace, tmp_path):
    for d in ("a", "b"):
        rc = main(["campaign", "--config", str(workspace / "default.cfg"),
                   "--program", str(workspace / "load-heavy.asm"),
                   "--n-faults", "30", "--seed", "11",
                   "--out-dir", str(tmp_path / d)])
        assert rc == 0
    assert body_of(tmp_path / "a" / "faults.csv") == \
        body_of(tmp_path / "b" / "faults.csv")


def test_deadlock_suite_guard_matrix(workspace, tmp_path):
    scen = tmp_path / "scenarios"
    rc = main(["deadlock-suite", "--scenario-dir", str(scen),
               "--write-canned", "--out-dir", str(tmp_path / "on")])
    assert rc == 0
    rows = [l for l in (tmp_path / "on" / "deadlock.csv").read_text()
            .splitlines() if l and not l.startswith("#")][1:]
    verdicts = {r.split(",")[0]: r.split(",")[3] for r in rows}
    assert set(verdicts.values()) == {"Completed"}

    rc = main(["deadlock-suite", "--scenario-dir", str(scen),
               "--lag-guard", "0", "--io-sync-guard", "0",
               "--out-dir", str(tmp_path / "off")])
    assert rc == 0
    rows = [l for l in (tmp_path / "off" / "deadlock.csv").read_text()
            .splitlines() if l and not l.startswith("#")][1:]
    verdicts = {r.split(",")[0]: r.split(",")[3] for r in rows}
    assert verdicts["canonical"] == "DeadlockDetected"
    assert verdicts["benign"] == "Completed"


def test_deadlock_suite_malformed_scenario_exits_2(tmp_path):
    scen = tmp_path / "scen"
    scen.mkdir()
    (scen / "bad.scn").write_text("at soon take_lock 1\n")
    rc = main(["deadlock-suite", "--scenario-dir", str(scen),
               "--out-dir", str(tmp_path)])
    assert rc == 2


def test_gen_workload_histogram_and_reuse(workspace, tmp_path):
    rc = main(["gen-workload", "--mix", "div=0.3,int_alu=0.7",
               "--body", "2000", "--seed", "5", "--footprint", "4096",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    text = (tmp_path / "workload.asm").read_text()
    hist_line = next(l for l in text.splitlines()
                     if l.startswith("# histogram"))
    div_count = int(hist_line.split("div=")[1].split()[0])
    assert abs(div_count - 600) <= 40
    rc = main(["gen-workload", "--mix", "div=0.3,int_alu=0.7",
               "--body", "2000", "--seed", "5", "--footprint", "4096",
               "--out-dir", str(tmp_path / "again")])
    assert rc == 0
    assert (tmp_path / "again" / "workload.asm").read_text() == text


def test_gen_workload_suite_all(tmp_path):
    rc = main(["gen-workload", "--suite", "all", "--body", "200",
               "--out-dir", str(tmp_path)])
    assert rc == 0
    from checkersim.workload import SUITE_NAMES
    for name in SUITE_NAMES:
        assert (tmp_path / f"{name}.asm").exists()


def test_gen_workload_infeasible_exits_2(tmp_path):
    rc = main(["gen-workload", "--mix", "store=1.0", "--footprint", "0",
               "--out-dir", str(tmp_path)])
    assert rc == 2


def test_cycle_cap_exceeded_exits_3(workspace, tmp_path):
    rc = main(["run", "--config", str(workspace / "default.cfg"),
               "--program", str(workspace / "div-heavy.asm"),
               "--set", "cycle_cap=10", "--out-dir", str(tmp_path)])
    assert rc == 3
