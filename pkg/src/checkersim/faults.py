"""Single-event-upset injection into forwarded data, and randomized campaigns.

Faults flip exactly one bit in a forwarded or logged copy (log entry fields,
the LSQ parity window, or status-packet words); the big core's own
architectural execution is never touched, so the functional trace is
identical with and without an armed fault. One fault per run.

Campaign sampling defaults to compared-field targets, whose detection is
structural: log addresses (and csr ids), store data, csr read values, the
parity-covered LSQ window, and status words of checkpoints that close a
segment. Load data is consumed rather than compared, so such faults can be
masked by dead registers; they are available behind `include_consumed` and
excluded from the 100%-detection contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .big_core import LogEntry, StatusPacket, status_packet_count
from .engine import SimConfig, Simulator
from .fabric import FABRIC_KINDS
from .isa import InstrClass, Program, TraceEntry, run_functional
from .little_core import LittleTiming

TARGETS = ("StatusReg", "LogAddr", "LogData", "CsrData", "LsqWindow")
INJECT_POINTS = ("OnCreate", "OnForward")


class FaultSpecError(ValueError):
    pass


@dataclass(slots=True)
class FaultSpec:
    target: str  # one of TARGETS
    seq: int  # committed seq of the log entry, or rcp id for StatusReg
    bit: int
    word: int = -1  # StatusReg: index into the checkpoint word vector
    inject_at: str = "OnForward"

    def __post_init__(self):
        if self.target not in TARGETS:
            raise FaultSpecError(f"unknown target {self.target!r}")
        if not 0 <= self.bit < 64:
            raise FaultSpecError("bit must be in 0..63")
        if self.inject_at not in INJECT_POINTS:
            raise FaultSpecError(f"inject_at must be one of {INJECT_POINTS}")


@dataclass(slots=True)
class FaultRecord:
    spec: FaultSpec
    detected: bool
    detector: str  # Parity | MemCompare | CsrCompare | RegCompare | Unreachable
    inject_cycle: int
    detect_cycle: int
    latency_ns: float


class Injector:
    """Armed single-bit fault, wired into the engine's forwarding hooks."""

    def __init__(self, spec: FaultSpec):
        self.spec = spec
        self.fired = False
        self.inject_cycle = -1

    def _fire(self, cycle: int) -> int:
        self.fired = True
        self.inject_cycle = cycle
        return 1 << self.spec.bit

    def on_create(self, seq: int, address: int, data: int,
                  cycle: int) -> tuple[int, int]:
        s = self.spec
        if (not self.fired and s.inject_at == "OnCreate" and s.seq == seq
                and s.target in ("LogAddr", "LogData", "CsrData")):
            mask = self._fire(cycle)
            if s.target == "LogAddr":
                return address ^ mask, data
            return address, data ^ mask
        return address, data

    def on_lsq_window(self, entry: LogEntry, cycle: int) -> None:
        s = self.spec
        if not self.fired and s.target == "LsqWindow" and s.seq == entry.seq:
            entry.data ^= self._fire(cycle)

    def on_forward(self, entry: LogEntry, cycle: int) -> None:
        s = self.spec
        if (not self.fired and s.inject_at == "OnForward" and s.seq == entry.seq
                and s.target in ("LogAddr", "LogData", "CsrData")):
            mask = self._fire(cycle)
            if s.target == "LogAddr":
                entry.address ^= mask
            else:
                entry.data ^= mask

    def on_status_packet(self, pkt: StatusPacket, cycle: int) -> None:
        s = self.spec
        if (not self.fired and s.target == "StatusReg" and s.seq == pkt.rcp_id
                and pkt.base <= s.word < pkt.base + len(pkt.words)):
            pkt.words[s.word - pkt.base] ^= self._fire(cycle)


def logged_seqs(trace: list[TraceEntry]) -> dict[str, list[int]]:
    """Sequence numbers with forwarded records, by record kind."""
    out = {"load": [], "store": [], "csr": []}
    for e in trace:
        if e.mem is not None:
            key = "load" if e.mem[0] == InstrClass.LOAD else "store"
            out[key].append(e.seq)
        elif e.csr is not None:
            out["csr"].append(e.seq)
    return out


def validate_spec(spec: FaultSpec, trace: list[TraceEntry],
                  n_checkpoints: int, n_status_words: int) -> bool:
    """True when the targeted datum will exist in this run."""
    if spec.target == "StatusReg":
        return 0 <= spec.seq < n_checkpoints and 0 <= spec.word < n_status_words
    seqs = logged_seqs(trace)
    if spec.target == "LogAddr":
        pool = seqs["load"] + seqs["store"] + seqs["csr"]
    elif spec.target == "LogData":
        pool = seqs["load"] + seqs["store"]
    elif spec.target == "CsrData":
        pool = seqs["csr"]
    else:
        pool = seqs["load"] + seqs["store"] + seqs["csr"]
    return spec.seq in pool


def inject(spec: FaultSpec, config: SimConfig, program: Program,
           trace: list[TraceEntry] | None = None) -> FaultRecord:
    """Run one simulation with `spec` armed and report the outcome."""
    if trace is None:
        trace = run_functional(program,
                               bytearray(config.memory_footprint_bytes),
                               config.max_dynamic_instrs)
    injector = Injector(spec)
    result = Simulator(config, program, trace, injector=injector).run()
    period = config.big_period_ns
    if not injector.fired:
        return FaultRecord(spec, False, "Unreachable", -1, -1, -1.0)
    if result.detections:
        first = result.detections[0]
        cycles = first.big_cycle - injector.inject_cycle
        return FaultRecord(spec, True, first.detector,
                           injector.inject_cycle, first.big_cycle,
                           cycles * period)
    return FaultRecord(spec, False, "None", injector.inject_cycle, -1, -1.0)


def latency_bound(config: SimConfig) -> int:
    """Upper bound on detection latency, in big-core cycles.

    Segment replay dominates: timeout instructions at the worst per
    instruction little-core cost (blocking divide or a full FPU dependency
    chain), scaled to big cycles, plus queueing terms for the forwarding
    buffers and checkpoint serialization.
    """
    timing = LittleTiming(config.div_unroll, config.fpu_latency)
    worst = max(timing.div_cycles, config.fpu_latency, 1)
    ratio = config.clock_ratio
    n_packets = status_packet_count(config.forwarded_csr_count,
                                    config.regs_per_packet)
    beats = FABRIC_KINDS[config.fabric].status_beats
    return (config.timeout_instructions * worst * ratio
            + config.dc_buffer_entries * ratio
            + n_packets * beats * ratio)


@dataclass
class CampaignSummary:
    n_faults: int
    detected: int
    detection_rate: float
    mean_ns: float
    p50_ns: float
    p99_ns: float
    p999_ns: float
    max_ns: float
    bound_ns: float

    def to_text(self) -> str:
        lines = [
            f"n_faults = {self.n_faults}",
            f"detected = {self.detected}",
            f"detection_rate = {self.detection_rate:.6f}",
            f"mean_latency_ns = {self.mean_ns:.6f}",
            f"p50_latency_ns = {self.p50_ns:.6f}",
            f"p99_latency_ns = {self.p99_ns:.6f}",
            f"p99_9_latency_ns = {self.p999_ns:.6f}",
            f"max_latency_ns = {self.max_ns:.6f}",
            f"latency_bound_ns = {self.bound_ns:.6f}",
        ]
        return "\n".join(lines) + "\n"


def run_campaign(config: SimConfig, program: Program, n_faults: int,
                 seed: int, include_consumed: bool = False,
                 trace: list[TraceEntry] | None = None,
                 ) -> tuple[list[FaultRecord], CampaignSummary]:
    """Randomized single-fault campaign: one independent run per fault.

    Target sampling is uniform over the available target kinds, then uniform
    over that kind's population and bit positions; deterministic in `seed`.
    A fault-free dry run provides the checkpoint census and doubles as the
    zero-false-positive check.
    """
    if n_faults < 1:
        raise FaultSpecError("n_faults must be >= 1")
    if trace is None:
        trace = run_functional(program,
                               bytearray(config.memory_footprint_bytes),
                               config.max_dynamic_instrs)
    dry = Simulator(config, program, trace).run()
    if dry.detections:
        raise FaultSpecError("fault-free run reported a detection; "
                             "simulator state is inconsistent")
    seqs = logged_seqs(trace)
    n_words = 65 + config.forwarded_csr_count
    pools: list[tuple[str, list, str]] = []
    logged_all = seqs["load"] + seqs["store"] + seqs["csr"]
    logged_all.sort()
    if logged_all:
        pools.append(("LsqWindow", logged_all, "OnCreate"))
        pools.append(("LogAddr", logged_all, ""))
    if seqs["store"]:
        pools.append(("LogData", sorted(seqs["store"]), ""))
    if include_consumed and seqs["load"]:
        pools.append(("LogData", sorted(seqs["load"]), ""))
    if seqs["csr"]:
        pools.append(("CsrData", sorted(seqs["csr"]), ""))
    if dry.checkpoints > 1:
        # Checkpoint 0 only ever starts a segment; every later checkpoint
        # closes one, so its words are register-compared in full.
        pools.append(("StatusReg", list(range(1, dry.checkpoints)), ""))
    if not pools:
        raise FaultSpecError("program exposes no fault targets")

    rng = np.random.default_rng(seed)
    records: list[FaultRecord] = []
    period = config.big_period_ns
    for _ in range(n_faults):
        kind, pool, forced_point = pools[int(rng.integers(len(pools)))]
        elem = pool[int(rng.integers(len(pool)))]
        bit = int(rng.integers(64))
        if forced_point:
            point = forced_point
        else:
            point = INJECT_POINTS[int(rng.integers(2))]
        word = int(rng.integers(n_words)) if kind == "StatusReg" else -1
        spec = FaultSpec(kind, elem, bit, word=word, inject_at=point)
        injector = Injector(spec)
        result = Simulator(config, program, trace, injector=injector).run()
        if not injector.fired:
            records.append(FaultRecord(spec, False, "Unreachable", -1, -1, -1.0))
        elif result.detections:
            first = result.detections[0]
            cycles = first.big_cycle - injector.inject_cycle
            records.append(FaultRecord(spec, True, first.detector,
                                       injector.inject_cycle, first.big_cycle,
                                       cycles * period))
        else:
            records.append(FaultRecord(spec, False, "None",
                                       injector.inject_cycle, -1, -1.0))

    detected = [r for r in records if r.detected]
    lats = np.array([r.latency_ns for r in detected]) if detected else np.array([0.0])
    summary = CampaignSummary(
        n_faults=len(records),
        detected=len(detected),
        detection_rate=len(detected) / len(records),
        mean_ns=float(lats.mean()),
        p50_ns=float(np.percentile(lats, 50)),
        p99_ns=float(np.percentile(lats, 99)),
        p999_ns=float(np.percentile(lats, 99.9)),
        max_ns=float(lats.max()),
        bound_ns=latency_bound(config) * period,
    )
    return records, summary
