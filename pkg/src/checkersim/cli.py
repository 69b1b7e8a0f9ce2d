"""Command-line entry point.

Commands: run, sweep-littles, compare-fabrics, campaign, deadlock-suite,
gen-workload. Configuration is a flat `key = value` file whose keys name
SimConfig fields one-to-one; `--set key=value` overrides file values.

Every output CSV starts with manifest comment lines (command, config
snapshot, seed, tool version, timestamp); bodies are byte-stable for
identical inputs, with ratios at six decimals and latencies as integer
nanoseconds. Exit codes: 0 success, 2 usage/config error, 3 simulation
assertion failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .engine import (
    ConfigError, SimAssertionError, SimConfig, SimResult, simulate,
)
from .fabric import OrderViolation
from .faults import run_campaign
from .isa import (
    InstrClass, IsaError, ParseError, parse_program, run_functional,
)
from .os_model import Verdict
from .scenarios import (
    ScenarioError, load_scenario, run_scenario, write_canned_scenarios,
)
from .workload import (
    InstrMix, MixError, SUITE_NAMES, class_histogram, gen_workload, suite_mix,
)

RESULT_COLUMNS = (
    "workload,seed,n_littles,fabric,baseline_cycles,checked_cycles,slowdown,"
    "stall_fabric,stall_starvation,stall_extraction,segments,"
    "mean_segment_len,packets_accepted,packets_delivered,packets_in_flight,"
    "perf_per_area")
STALL_COLUMNS = "reason,cycles"
SWEEP_COLUMNS = "n_littles,slowdown,stall_fabric,stall_starvation"
FABRIC_COLUMNS = ("fabric,slowdown,stall_fabric,stall_starvation,"
                  "stall_extraction")
FAULT_COLUMNS = ("fault_idx,target,seq,bit,detected,detector,inject_cycle,"
                 "detect_cycle,latency_ns")
DEADLOCK_COLUMNS = "scenario,lag_guard,io_sync_guard,verdict"


class CliError(Exception):
    """Usage or configuration problem: exit code 2."""


def parse_config_file(path: str | Path) -> SimConfig:
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}")
    overrides = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{p}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        overrides[key.strip()] = value.strip()
    return apply_overrides(SimConfig(), overrides)


def _coerce(key: str, value: str, current) -> object:
    if isinstance(current, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise CliError(f"{key}: expected boolean, got {value!r}")
    if isinstance(current, int):
        try:
            return int(value, 0)
        except ValueError:
            raise CliError(f"{key}: expected integer, got {value!r}") from None
    if isinstance(current, float):
        try:
            return float(value)
        except ValueError:
            raise CliError(f"{key}: expected number, got {value!r}") from None
    return value


def apply_overrides(config: SimConfig, overrides: dict) -> SimConfig:
    d = config.to_dict()
    for key, value in overrides.items():
        if key not in d:
            raise CliError(f"unknown config key {key!r}")
        d[key] = _coerce(key, str(value), d[key]) if isinstance(value, str) \
            else value
    cfg = SimConfig(**d)
    try:
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    return cfg


def _parse_sets(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise CliError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_config(args) -> SimConfig:
    cfg = parse_config_file(args.config) if args.config else SimConfig()
    return apply_overrides(cfg, _parse_sets(args.set))


def load_program(path: str | Path):
    p = Path(path)
    if not p.exists():
        raise CliError(f"program file not found: {p}")
    try:
        return parse_program(p.read_text())
    except ParseError as exc:
        raise CliError(f"{p}: {exc}") from exc


def manifest_lines(command: str, config: SimConfig | None, seed: int | None,
                   workload: str, stamp: bool = True) -> list[str]:
    lines = [
        f"# command: {command}",
        f"# tool_version: {__version__}",
        f"# workload: {workload}",
    ]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    if config is not None:
        snap = " ".join(f"{k}={v}" for k, v in sorted(config.to_dict().items()))
        lines.append(f"# config: {snap}")
    if stamp:
        lines.append(f"# generated_at: {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}")
    return lines


def write_csv(path: Path, manifest: list[str], header: str,
              rows: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(manifest + [header] + rows) + "\n"
    path.write_text(text)


def result_row(workload: str, seed: int, cfg: SimConfig,
               res: SimResult) -> str:
    return (f"{workload},{seed},{cfg.n_littles},{cfg.fabric},"
            f"{res.baseline_cycles},{res.checked_cycles},"
            f"{res.slowdown:.6f},{res.stall_fabric_backpressure},"
            f"{res.stall_checker_starvation},{res.stall_status_extraction},"
            f"{res.segments},{res.mean_segment_len:.6f},"
            f"{res.packets_accepted},{res.packets_delivered},"
            f"{res.packets_in_flight},{res.perf_per_area:.6f}")


# -- commands ----------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = load_config(args)
    program = load_program(args.program)
    res = simulate(cfg, program)
    out = Path(args.out_dir)
    workload = Path(args.program).stem
    man = manifest_lines("run", cfg, cfg.seed, workload)
    write_csv(out / "result.csv", man, RESULT_COLUMNS,
              [result_row(workload, cfg.seed, cfg, res)])
    write_csv(out / "stalls.csv", man, STALL_COLUMNS, [
        f"FabricBackpressure,{res.stall_fabric_backpressure}",
        f"CheckerStarvation,{res.stall_checker_starvation}",
        f"StatusExtraction,{res.stall_status_extraction}",
    ])
    print(res.to_text(), end="")
    return 0


def cmd_sweep_littles(args) -> int:
    cfg = load_config(args)
    program = load_program(args.program)
    counts = sorted({int(c) for c in args.counts.split(",") if c})
    if not counts or any(c < 1 for c in counts):
        raise CliError("--counts must list positive checker counts")
    memory = bytearray(cfg.memory_footprint_bytes)
    trace = run_functional(program, memory, cfg.max_dynamic_instrs)
    rows = []
    for n in counts:
        res = simulate(cfg.copy(n_littles=n), program, trace=trace)
        rows.append(f"{n},{res.slowdown:.6f},{res.stall_fabric_backpressure},"
                    f"{res.stall_checker_starvation}")
    workload = Path(args.program).stem
    man = manifest_lines("sweep-littles", cfg, cfg.seed, workload)
    write_csv(Path(args.out_dir) / "sweep.csv", man, SWEEP_COLUMNS, rows)
    print("\n".join(rows))
    return 0


def cmd_compare_fabrics(args) -> int:
    cfg = load_config(args)
    program = load_program(args.program)
    memory = bytearray(cfg.memory_footprint_bytes)
    trace = run_functional(program, memory, cfg.max_dynamic_instrs)
    rows = []
    for kind in ("baseline", "hmnoc"):
        res = simulate(cfg.copy(fabric=kind), program, trace=trace)
        rows.append(f"{kind},{res.slowdown:.6f},"
                    f"{res.stall_fabric_backpressure},"
                    f"{res.stall_checker_starvation},"
                    f"{res.stall_status_extraction}")
    workload = Path(args.program).stem
    man = manifest_lines("compare-fabrics", cfg, cfg.seed, workload)
    write_csv(Path(args.out_dir) / "fabrics.csv", man, FABRIC_COLUMNS, rows)
    print("\n".join(rows))
    return 0


def cmd_campaign(args) -> int:
    cfg = load_config(args)
    program = load_program(args.program)
    records, summary = run_campaign(cfg, program, args.n_faults, args.seed,
                                    include_consumed=args.include_consumed)
    rows = []
    for i, r in enumerate(records):
        lat = round(r.latency_ns) if r.detected else -1
        rows.append(f"{i},{r.spec.target},{r.spec.seq},{r.spec.bit},"
                    f"{int(r.detected)},{r.detector},{r.inject_cycle},"
                    f"{r.detect_cycle},{lat}")
    workload = Path(args.program).stem
    out = Path(args.out_dir)
    man = manifest_lines("campaign", cfg, args.seed, workload)
    write_csv(out / "faults.csv", man, FAULT_COLUMNS, rows)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(
        "\n".join(man) + "\n" + summary.to_text())
    print(summary.to_text(), end="")
    return 0


def cmd_deadlock_suite(args) -> int:
    cfg = load_config(args)
    scen_dir = Path(args.scenario_dir)
    if args.write_canned:
        write_canned_scenarios(scen_dir)
    if not scen_dir.is_dir():
        raise CliError(f"scenario directory not found: {scen_dir}")
    paths = sorted(scen_dir.glob("*.scn"))
    if not paths:
        raise CliError(f"no .scn files in {scen_dir}")
    lag = args.lag_guard
    io = args.io_sync_guard
    rows = []
    for p in paths:
        try:
            scn = load_scenario(p)
        except ScenarioError as exc:
            raise CliError(str(exc)) from exc
        outcome = run_scenario(scn, lag, io, cfg)
        verdict = ("Completed" if outcome.verdict == Verdict.COMPLETED
                   else "DeadlockDetected")
        rows.append(f"{scn.name},{int(lag)},{int(io)},{verdict}")
    man = manifest_lines("deadlock-suite", cfg, None, scen_dir.name)
    write_csv(Path(args.out_dir) / "deadlock.csv", man, DEADLOCK_COLUMNS, rows)
    print("\n".join(rows))
    return 0


def _mix_from_spec(spec: str, body: int, loop: int, footprint: int,
                   seed: int) -> InstrMix:
    fractions = {}
    for part in spec.split(","):
        if not part:
            continue
        name, _, frac = part.partition("=")
        try:
            klass = InstrClass[name.strip().upper()]
        except KeyError:
            raise CliError(f"unknown instruction class {name!r}") from None
        fractions[klass] = float(frac)
    return InstrMix(fractions, body_instructions=body, loop_count=loop,
                    memory_footprint_bytes=footprint, seed=seed)


def cmd_gen_workload(args) -> int:
    out_dir = Path(args.out_dir)
    names = []
    if args.suite == "all":
        names = list(SUITE_NAMES)
    elif args.suite:
        names = [args.suite]
    try:
        if names:
            for name in names:
                mix = suite_mix(name, body=args.body, loop=args.loop,
                                seed=args.seed)
                mix.memory_footprint_bytes = args.footprint
                _write_workload(out_dir / f"{name}.asm", name, mix)
        else:
            if not args.mix:
                raise CliError("provide --suite or --mix")
            mix = _mix_from_spec(args.mix, args.body, args.loop,
                                 args.footprint, args.seed)
            _write_workload(out_dir / "workload.asm", "custom", mix)
    except MixError as exc:
        raise CliError(str(exc)) from exc
    return 0


def _write_workload(path: Path, name: str, mix: InstrMix) -> None:
    program = gen_workload(mix)
    hist = class_histogram(program)
    # No timestamp: identical generator inputs must give identical bytes.
    man = manifest_lines("gen-workload", None, mix.seed, name, stamp=False)
    man.append("# mix: " + " ".join(
        f"{k.name.lower()}={v:.4f}" for k, v in sorted(mix.fractions.items())))
    man.append("# histogram: " + " ".join(
        f"{k.name.lower()}={v}" for k, v in sorted(hist.items())))
    man.append(f"# body_instructions: {mix.body_instructions}")
    man.append(f"# loop_count: {mix.loop_count}")
    man.append(f"# memory_footprint_bytes: {mix.memory_footprint_bytes}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(man) + "\n" + program.to_text())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="checkersim",
        description="Cycle-stepped simulator of checkpoint-and-replay "
                    "error detection on a heterogeneous multicore")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out-dir", default=".", help="output directory")

    p = sub.add_parser("run", help="single simulation")
    common(p)
    p.add_argument("--program", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-littles", help="slowdown vs checker count")
    common(p)
    p.add_argument("--program", required=True)
    p.add_argument("--counts", default="2,4,6")
    p.set_defaults(func=cmd_sweep_littles)

    p = sub.add_parser("compare-fabrics", help="baseline bus vs multicast NoC")
    common(p)
    p.add_argument("--program", required=True)
    p.set_defaults(func=cmd_compare_fabrics)

    p = sub.add_parser("campaign", help="randomized fault-injection campaign")
    common(p)
    p.add_argument("--program", required=True)
    p.add_argument("--n-faults", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-consumed", action="store_true",
                   help="also target consumed (uncompared) load data")
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("deadlock-suite", help="run scenario files")
    common(p)
    p.add_argument("--scenario-dir", required=True)
    p.add_argument("--lag-guard", type=int, choices=(0, 1), default=1)
    p.add_argument("--io-sync-guard", type=int, choices=(0, 1), default=1)
    p.add_argument("--write-canned", action="store_true",
                   help="populate the directory with the canned scenarios")
    p.set_defaults(func=cmd_deadlock_suite)

    p = sub.add_parser("gen-workload", help="emit synthetic programs")
    common(p)
    p.add_argument("--suite", help="named workload, or 'all'")
    p.add_argument("--mix", help="class=frac[,class=frac...]")
    p.add_argument("--body", type=int, default=10_000)
    p.add_argument("--loop", type=int, default=1)
    p.add_argument("--footprint", type=int, default=1 << 16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_workload)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MixError, ParseError, ScenarioError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimAssertionError, OrderViolation, IsaError) as exc:
        print(f"simulation failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
