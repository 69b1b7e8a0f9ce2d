"""Commit-granularity model of the out-of-order big core.

The core retires up to `commit_width` instructions per cycle against an
integer work budget (per-class costs in 1/64-cycle units), captures run-time
data (load/store/CSR log entries) between checkpoints and status data
(register snapshots) at checkpoints, and re-checks LSQ parity when entries
are forwarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .isa import ArchRegs, InstrClass, Instruction, TraceEntry

COST_SCALE = 64  # budget units per big-core cycle

# Wire sizes used for LSL byte accounting: a log entry is kind + address +
# data (parity rides out of band); a status packet is payload + header.
LOG_ENTRY_BYTES = 17
STATUS_HEADER_BYTES = 8

# Default per-class commit costs in big-core cycles. Cheap classes amortize
# across the 4-wide commit; Div stays at 1.0 because the big core's pipelined
# divider hides iteration latency that the little cores must pay in full.
DEFAULT_COMMIT_COSTS: dict[InstrClass, float] = {
    InstrClass.INT_ALU: 0.25,
    InstrClass.MUL: 1.0,
    InstrClass.DIV: 1.0,
    InstrClass.FP_ALU: 1.0,
    InstrClass.LOAD: 0.5,
    InstrClass.STORE: 0.5,
    InstrClass.BRANCH: 0.25,
    InstrClass.JUMP: 0.25,
    InstrClass.CSR_READ: 1.0,
    InstrClass.TRAP: 0.25,
    InstrClass.NOP: 0.25,
}


class Trigger(IntEnum):
    """Why a checkpoint was cut."""

    START = 0
    LOG_FULL = 1
    TIMEOUT = 2
    KERNEL_TRAP = 3
    PROGRAM_END = 4


class LogKind(IntEnum):
    LOAD = 0
    STORE = 1
    CSR = 2


@dataclass(slots=True)
class LogEntry:
    """One forwarded run-time record; address holds the csr id for CSR kind."""

    kind: LogKind
    address: int
    data: int
    parity: int
    seq: int


@dataclass(slots=True)
class StatusPacket:
    """One chunk of a serialized checkpoint (`words[base:base+len]`)."""

    rcp_id: int
    chunk: int
    n_chunks: int
    base: int
    words: list[int]


@dataclass
class Checkpoint:
    rcp_id: int
    regs: ArchRegs
    trigger: Trigger
    big_seq: int  # last committed seq covered by this checkpoint (-1 at start)


@dataclass
class DeuState:
    """Data extraction unit bookkeeping on the commit stage."""

    check_enabled: bool = True
    instrs_since_rcp: int = 0
    bytes_in_current_segment: int = 0
    status_extraction_remaining: int = 0


@dataclass(slots=True)
class CommitBundle:
    cycle: int
    retired: list  # [(seq, Instruction, TraceEntry), ...]
    log_entries: list  # [(path, LogEntry), ...]
    rcp: Checkpoint | None = None
    blocked_by_fabric: bool = False


def data_parity(data: int) -> int:
    """Even parity (XOR reduction) over the 64-bit data word."""
    return data.bit_count() & 1


def make_log_entry(mem_or_csr: tuple, seq: int) -> LogEntry:
    """Build the wire record for a traced load/store/csr effect."""
    kind, address, data = mem_or_csr
    if kind == InstrClass.LOAD:
        k = LogKind.LOAD
    elif kind == InstrClass.STORE:
        k = LogKind.STORE
    else:
        k = LogKind.CSR
    return LogEntry(k, address, data, data_parity(data), seq)


def lsq_forward(entry: LogEntry) -> bool:
    """Re-check parity as the entry leaves the LSQ window.

    Returns True when the entry is clean; False signals a ParityFault (an
    immediate detection, not a simulator error). The entry forwards either
    way, mirroring an error-reporting rather than error-dropping pipe.
    """
    return data_parity(entry.data) == entry.parity


def csr_id_window(forwarded_csr_count: int, base: int = 0xC00) -> list[int]:
    return [base + i for i in range(forwarded_csr_count)]


def checkpoint_words(regs: ArchRegs, forwarded_csr_ids: list[int]) -> list[int]:
    """Serialize a checkpoint into its forwarded word vector.

    Layout: int regs 0..31, fp regs 32..63, pc at 64, then one word per
    forwarded CSR id in window order.
    """
    words = list(regs.int_regs)
    words.extend(regs.fp_regs)
    words.append(regs.pc)
    for cid in forwarded_csr_ids:
        words.append(regs.csrs.get(cid, 0))
    return words


def regs_from_words(words: list[int], forwarded_csr_ids: list[int]) -> ArchRegs:
    """Inverse of checkpoint_words."""
    regs = ArchRegs()
    regs.int_regs = list(words[0:32])
    regs.fp_regs = list(words[32:64])
    regs.pc = words[64]
    regs.csrs = {cid: words[65 + i] for i, cid in enumerate(forwarded_csr_ids)}
    return regs


def status_word_count(forwarded_csr_count: int) -> int:
    return 65 + forwarded_csr_count


def status_packet_count(forwarded_csr_count: int, regs_per_packet: int) -> int:
    return math.ceil(status_word_count(forwarded_csr_count) / regs_per_packet)


def extract_status_packets(regs: ArchRegs, rcp_id: int,
                           forwarded_csr_ids: list[int],
                           regs_per_packet: int = 4) -> list[StatusPacket]:
    """Chunk a checkpoint into fixed-width status packets.

    The caller paces emission at `prf_read_ports` packets per cycle while
    commit is paused (the extraction preempts the register-file read port).
    """
    words = checkpoint_words(regs, forwarded_csr_ids)
    n_chunks = math.ceil(len(words) / regs_per_packet)
    packets = []
    for c in range(n_chunks):
        base = c * regs_per_packet
        packets.append(StatusPacket(rcp_id, c, n_chunks, base,
                                    words[base:base + regs_per_packet]))
    return packets


def status_packet_bytes(regs_per_packet: int = 4) -> int:
    return regs_per_packet * 8 + STATUS_HEADER_BYTES


def should_trigger_rcp(deu: DeuState, lsl_bytes_free: int, trap_pending: bool,
                       program_done: bool, timeout_instructions: int,
                       commit_width: int) -> Trigger | None:
    """Checkpoint trigger decision, evaluated after retirement accounting.

    Space uses a worst-case test (hardware cannot see the next bundle), and a
    trigger with an empty segment is suppressed so no zero-work checkpoint is
    ever dispatched.
    """
    if not deu.check_enabled or deu.instrs_since_rcp == 0:
        return None
    if trap_pending:
        return Trigger.KERNEL_TRAP
    if lsl_bytes_free < commit_width * LOG_ENTRY_BYTES:
        return Trigger.LOG_FULL
    if deu.instrs_since_rcp >= timeout_instructions:
        return Trigger.TIMEOUT
    if program_done:
        return Trigger.PROGRAM_END
    return None


def compile_costs(costs: dict[InstrClass, float]) -> list[int]:
    """Per-class costs in integer budget units, indexed by InstrClass."""
    units = [0] * len(InstrClass)
    for klass in InstrClass:
        units[klass] = max(1, round(costs[klass] * COST_SCALE))
    return units


class CommitWalker:
    """Budget-driven walk over a committed-instruction trace.

    Shared by the checked run and the uninstrumented baseline so both charge
    identical timing; the engine layers stalls on top for the checked run.
    """

    def __init__(self, trace: list[TraceEntry], cost_units: list[int],
                 commit_width: int):
        self.trace = trace
        self.cost_units = cost_units
        self.commit_width = commit_width
        self.cursor = 0
        self.budget = 0

    def done(self) -> bool:
        return self.cursor >= len(self.trace)

    def retire_cycle(self, max_instrs: int,
                     log_slot_free: list[bool] | None = None) -> tuple[list[TraceEntry], bool]:
        """Retire one cycle's worth of instructions.

        Stops at the commit width, the work budget, `max_instrs` (segment
        timeout boundary), a trap (the checkpoint must land right after it),
        or a log-producing instruction whose commit-path buffer is full.
        Returns (retired entries, blocked-by-fabric flag). The budget only
        accrues on invoked cycles, so stalled cycles never bank work.
        """
        trace = self.trace
        costs = self.cost_units
        self.budget += COST_SCALE
        retired: list[TraceEntry] = []
        blocked = False
        limit = min(self.commit_width, max_instrs)
        while len(retired) < limit and self.cursor < len(trace):
            entry = trace[self.cursor]
            cost = costs[entry.instr.klass]
            if cost > self.budget:
                break
            if log_slot_free is not None and (entry.mem is not None
                                              or entry.csr is not None):
                if not log_slot_free[len(retired)]:
                    blocked = not retired
                    break
            self.budget -= cost
            retired.append(entry)
            self.cursor += 1
            if entry.trap:
                break
        if not retired and self.budget > 0 and self.cursor < len(trace):
            # Cap banked budget at the head instruction's cost so a long
            # stall cannot be followed by a super-width burst.
            head_cost = costs[trace[self.cursor].instr.klass]
            if self.budget > head_cost:
                self.budget = head_cost
        return retired, blocked


def kernel_window_cycles(instructions: int, cost_units: int,
                         commit_width: int) -> int:
    """Cycles one kernel window takes: same budget walk as user commit."""
    cycles = 0
    budget = 0
    left = instructions
    while left > 0:
        budget += COST_SCALE
        n = min(commit_width, budget // cost_units, left)
        budget -= n * cost_units
        left -= n
        cycles += 1
    return cycles


def baseline_cycles(trace: list[TraceEntry], cost_units: list[int],
                    commit_width: int, kernel_windows: int = 0,
                    kernel_window_instructions: int = 0) -> int:
    """Cycle count of the uninstrumented run: pure budget walk, no checking.

    Kernel trap windows execute the same kernel work in both runs, so their
    cycles are charged here too.
    """
    walker = CommitWalker(trace, cost_units, commit_width)
    cycles = 0
    while not walker.done():
        walker.retire_cycle(commit_width)
        cycles += 1
    if kernel_windows:
        cycles += kernel_windows * kernel_window_cycles(
            kernel_window_instructions, cost_units[InstrClass.INT_ALU],
            commit_width)
    return cycles
