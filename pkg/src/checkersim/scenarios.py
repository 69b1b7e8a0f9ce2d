"""Deadlock scenario DSL and runner.

Scenario files are line oriented:

    program <canned-program-name>
    pf_lock <lock id>
    set <config key> <value>          # per-scenario config overrides
    at <big cycle> <event> <args...>  # take_lock / release_lock / evict_page

The canonical hazard needs a stretch where the checker can outrun the big
core (a divide block: the big core's divider is configured slow there while
the checker's is unrolled flat) plus a scripted lock held by the main thread
and an eviction of a page still referenced by unverified execution. With
both guards enabled every scenario completes; dropping either guard lets the
checker instruction-fault while the fault handler's lock is held by the
stalled main thread, closing the wait-for cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .isa import InstrClass, Instruction, Program, OP_ADDI, OP_DIV
from .engine import DeadlockError, SimConfig, Simulator
from .os_model import PageLockModel, Verdict


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    name: str
    program: str = "overtake_mix"
    pf_lock: int = 1
    overrides: dict = field(default_factory=dict)
    events: list = field(default_factory=list)  # (cycle, event, (args,))


# Per-scenario timing defaults: one checker, short segments, a big-core
# divider slow enough that an unguarded checker overtakes inside the block.
SCENARIO_CONFIG = dict(
    n_littles=1,
    timeout_instructions=150,
    cost_div=6.0,
    div_unroll=64,
    memory_footprint_bytes=4096,
)


def build_scenario_program(name: str) -> Program:
    """Canned straight-line programs used by the deadlock suite."""
    ins: list[Instruction] = []

    def alu(n: int):
        for _ in range(n):
            ins.append(Instruction(OP_ADDI, InstrClass.INT_ALU, dest=5,
                                   src1=5, imm=1))

    if name == "overtake_mix":
        ins.append(Instruction(OP_ADDI, InstrClass.INT_ALU, dest=7, src1=0,
                               imm=3))
        alu(39)
        for _ in range(160):
            ins.append(Instruction(OP_DIV, InstrClass.DIV, dest=6, src1=5,
                                   src2=7))
        alu(200)
    elif name == "straightline":
        alu(300)
    else:
        raise ScenarioError(f"unknown scenario program {name!r}")
    return Program(ins)


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    scn = Scenario(name)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "program":
                scn.program = parts[1]
            elif parts[0] == "pf_lock":
                scn.pf_lock = int(parts[1])
            elif parts[0] == "set":
                scn.overrides[parts[1]] = parts[2]
            elif parts[0] == "at":
                cycle = int(parts[1])
                event = parts[2]
                if event not in ("take_lock", "release_lock", "evict_page"):
                    raise ScenarioError(
                        f"{name}:{lineno}: unknown event {event!r}")
                args = tuple(int(a) for a in parts[3:])
                scn.events.append((cycle, event, args))
            else:
                raise ScenarioError(
                    f"{name}:{lineno}: unknown directive {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{name}:{lineno}: malformed line "
                                f"{line!r}") from exc
    return scn


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    return parse_scenario(p.read_text(), p.stem)


@dataclass
class ScenarioOutcome:
    scenario: str
    lag_guard: bool
    io_sync_guard: bool
    verdict: Verdict
    cycle: int = -1
    description: str = ""


def run_scenario(scn: Scenario, lag_guard: bool, io_sync_guard: bool,
                 base_config: SimConfig | None = None) -> ScenarioOutcome:
    """Run one scenario under the given guard settings."""
    cfg = (base_config or SimConfig()).copy(**SCENARIO_CONFIG)
    if scn.overrides:
        from .cli import apply_overrides  # str coercion shared with the CLI
        cfg = apply_overrides(cfg, scn.overrides)
    cfg = cfg.copy(lag_guard=lag_guard, io_sync_guard=io_sync_guard)
    program = build_scenario_program(scn.program)
    page_lock = PageLockModel(pf_lock=scn.pf_lock)
    sim = Simulator(cfg, program, page_lock=page_lock,
                    scenario_events=scn.events)
    try:
        sim.run()
    except DeadlockError as dl:
        return ScenarioOutcome(scn.name, lag_guard, io_sync_guard,
                               Verdict.DEADLOCK_DETECTED, dl.cycle,
                               dl.description)
    return ScenarioOutcome(scn.name, lag_guard, io_sync_guard,
                           Verdict.COMPLETED)


CANNED_SCENARIOS = {
    "canonical": """\
# Main thread takes a mutex, a checker page gets written out while the main
# thread is stalled at a segment boundary, and the page fault handler needs
# that same mutex. Both guards must be on to complete: without the lag guard
# the checker overtakes into never-fetched pages during the divide block;
# without io-sync the eviction of a page behind the stalled main thread
# strands the checker.
program overtake_mix
pf_lock 1
at 100 take_lock 1
at 1080 evict_page 4
""",
    "evict_no_lock": """\
# Eviction without lock contention: the fault handler can always run, so the
# checker pages back in and the run completes under any guard setting.
program overtake_mix
pf_lock 1
at 1080 evict_page 4
""",
    "benign": """\
# Straight ALU program, no hazards at all.
program straightline
pf_lock 1
at 100 take_lock 1
""",
}


def write_canned_scenarios(directory: str | Path) -> list[Path]:
    out = []
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in CANNED_SCENARIOS.items():
        p = directory / f"{name}.scn"
        p.write_text(text)
        out.append(p)
    return out
