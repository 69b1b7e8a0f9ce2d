"""In-order scalar checker core: load-store log, mode switch unit, and the
check-mode replay loop (apply checkpoint, replay the segment against the log,
verify the closing checkpoint).

Replay executes instructions against the core's own registers; loads and CSR
reads pop the runtime log instead of touching memory. Compared fields are
load addresses, store addresses and data, and csr ids plus csr read values
(the csr counters travel in checkpoints, so the replayed bank reproduces
them). Any mismatch terminates the segment immediately with a detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

from .isa import (
    ArchRegs, InstrClass, Instruction, MASK64,
    OP_ADD, OP_ADDI, OP_SUB, OP_XOR, OP_XORI, OP_OR, OP_ORI, OP_AND, OP_ANDI,
    OP_MUL, OP_DIV, OP_FMIX, OP_LD, OP_SD, OP_BEQ, OP_BNE, OP_BLT, OP_JALR,
    OP_CSRR, OP_TRAP, OP_NOP, _mix64, _to_signed,
)
from .big_core import (
    LogEntry, LogKind, StatusPacket, LOG_ENTRY_BYTES, checkpoint_words,
    regs_from_words, status_packet_bytes,
)

VALID_DIV_UNROLL = (1, 2, 4, 8, 16, 32, 64)


class CoreState(IntEnum):
    FREE = 0
    WAIT_SRCP = 1
    REPLAY = 2
    VERIFY = 3


class Mode(IntEnum):
    APPLICATION = 0
    CHECK = 1


class Outcome(IntEnum):
    MATCH = 0
    REG_MISMATCH = 1
    MEM_MISMATCH = 2
    CSR_MISMATCH = 3


class Stall(IntEnum):
    NONE = 0
    LAG_GUARD = 1
    LSL_EMPTY = 2
    DIV_BUSY = 3
    FP_DEP = 4
    PAGE_FAULT = 5


@dataclass(slots=True)
class VerifyResult:
    outcome: Outcome
    detect_cycle: int = -1  # little-core cycle; engine rescales to big cycles
    word: int = -1  # first differing checkpoint word (register compare)
    log_seq: int = -1
    fld: str = ""
    expected: int = 0
    actual: int = 0

    @property
    def matched(self) -> bool:
        return self.outcome == Outcome.MATCH


@dataclass
class LittleTiming:
    div_unroll: int = 8
    fpu_latency: int = 3

    def __post_init__(self):
        if self.div_unroll not in VALID_DIV_UNROLL:
            raise ValueError(f"div_unroll must be one of {VALID_DIV_UNROLL}")
        if self.fpu_latency < 1:
            raise ValueError("fpu_latency must be >= 1")

    @property
    def div_cycles(self) -> int:
        return math.ceil(64 / self.div_unroll)


@dataclass
class LoadStoreLog:
    """Dual-FIFO buffer: status chunks keyed by checkpoint, runtime in order."""

    capacity_bytes: int = 4096
    reserved_for: int | None = None  # checker thread id holding the log
    runtime: list = field(default_factory=list)  # deque-free; popleft via idx
    runtime_head: int = 0
    status: dict[int, list[StatusPacket]] = field(default_factory=dict)
    occupied_bytes: int = 0
    freed_bytes: int = 0  # drained by the engine's credit accounting

    def push_runtime(self, entry: LogEntry) -> None:
        self.runtime.append(entry)
        self.occupied_bytes += LOG_ENTRY_BYTES

    def runtime_len(self) -> int:
        return len(self.runtime) - self.runtime_head

    def peek_runtime(self) -> LogEntry | None:
        if self.runtime_head < len(self.runtime):
            return self.runtime[self.runtime_head]
        return None

    def pop_runtime(self) -> LogEntry:
        entry = self.runtime[self.runtime_head]
        self.runtime_head += 1
        self.occupied_bytes -= LOG_ENTRY_BYTES
        self.freed_bytes += LOG_ENTRY_BYTES
        if self.runtime_head > 256:
            del self.runtime[:self.runtime_head]
            self.runtime_head = 0
        return entry

    def push_status(self, pkt: StatusPacket, packet_bytes: int) -> None:
        self.status.setdefault(pkt.rcp_id, []).append(pkt)
        self.occupied_bytes += packet_bytes

    def status_chunks(self, rcp_id: int) -> int:
        return len(self.status.get(rcp_id, ()))

    def pop_status(self, rcp_id: int, packet_bytes: int) -> list[StatusPacket]:
        chunks = self.status.pop(rcp_id, [])
        nbytes = packet_bytes * len(chunks)
        self.occupied_bytes -= nbytes
        self.freed_bytes += nbytes
        return chunks

    def purge(self, packet_bytes: int) -> None:
        self.runtime = []
        self.runtime_head = 0
        self.status = {}
        self.freed_bytes += self.occupied_bytes
        self.occupied_bytes = 0

    def take_freed(self) -> int:
        f = self.freed_bytes
        self.freed_bytes = 0
        return f


@dataclass
class Msu:
    """Mode switch unit: thread-id keyed mode control and register save."""

    mode: Mode = Mode.APPLICATION
    hooked_big: int | None = None
    checker_tid: int = -1
    recorded_regs: ArchRegs | None = None


class PrivilegeError(Exception):
    """User-mode issue of a kernel-only checker-control instruction."""


class LittleCore:
    """One checker core plus its log, stepped by the engine."""

    def __init__(self, core_id: int, timing: LittleTiming,
                 lsl_capacity: int = 4096, regs_per_packet: int = 4):
        self.core_id = core_id
        self.timing = timing
        self.lsl = LoadStoreLog(lsl_capacity)
        self.msu = Msu()
        self.regs = ArchRegs()
        self.state = CoreState.FREE
        self.packet_bytes = status_packet_bytes(regs_per_packet)
        # Segment binding
        self.epoch = -1
        self.srcp_id = -1
        self.ercp_id = -1  # known once the closing checkpoint is cut
        self.start_seq = 0
        self.end_seq: int | None = None
        self.next_seq = 0
        self.srcp_chunks_expected = 0
        self.csr_restored: tuple = ()
        # Timing state (little-core cycles)
        self.div_ready = -1
        self.fp_ready = [0] * 32
        # Stats
        self.busy_cycles = 0
        self.stall_counts = [0] * len(Stall)
        self.last_result: VerifyResult | None = None

    # -- segment lifecycle ---------------------------------------------------

    def begin_segment(self, epoch: int, srcp_id: int, start_seq: int,
                      n_chunks: int, tid: int) -> None:
        self.state = CoreState.WAIT_SRCP
        self.epoch = epoch
        self.srcp_id = srcp_id
        self.ercp_id = -1
        self.start_seq = start_seq
        self.end_seq = None
        self.next_seq = start_seq
        self.srcp_chunks_expected = n_chunks
        self.lsl.reserved_for = tid
        self.div_ready = -1
        self.fp_ready = [0] * 32

    def close_segment(self, ercp_id: int, end_seq: int) -> None:
        self.ercp_id = ercp_id
        self.end_seq = end_seq

    def release(self) -> None:
        self.state = CoreState.FREE
        self.epoch = -1
        self.srcp_id = -1
        self.ercp_id = -1
        self.end_seq = None
        self.lsl.reserved_for = None
        self.lsl.purge(self.packet_bytes)

    # -- checkpoint application and verification -----------------------------

    def srcp_ready(self) -> bool:
        return self.lsl.status_chunks(self.srcp_id) >= self.srcp_chunks_expected

    def apply_srcp(self, forwarded_csr_ids: list[int]) -> bool:
        """Install the start checkpoint from buffered chunks; False while
        incomplete (the checker keeps busy-waiting)."""
        if not self.srcp_ready():
            return False
        chunks = self.lsl.pop_status(self.srcp_id, self.packet_bytes)
        chunks.sort(key=lambda c: c.chunk)
        words: list[int] = []
        for c in chunks:
            words.extend(c.words)
        self.regs = regs_from_words(words, forwarded_csr_ids)
        self.csr_restored = tuple(forwarded_csr_ids)
        self.state = CoreState.REPLAY
        return True

    def verify_ercp(self, forwarded_csr_ids: list[int],
                    cycle: int) -> VerifyResult:
        """Compare own registers word-by-word against the closing checkpoint."""
        chunks = self.lsl.pop_status(self.ercp_id, self.packet_bytes)
        chunks.sort(key=lambda c: c.chunk)
        own = checkpoint_words(self.regs, forwarded_csr_ids)
        for c in chunks:
            for off, want in enumerate(c.words):
                idx = c.base + off
                if own[idx] != want:
                    return VerifyResult(Outcome.REG_MISMATCH, cycle, word=idx,
                                        expected=want, actual=own[idx])
        return VerifyResult(Outcome.MATCH, cycle)

    # -- replay --------------------------------------------------------------

    def replay_step(self, program: list[Instruction], cycle: int,
                    big_position: int, lag_guard: bool,
                    segment_drained: bool) -> tuple[int, VerifyResult | None]:
        """Attempt to retire one instruction in check mode.

        Returns (stall_reason, detection). Retirement is stall NONE with no
        detection; a detection ends the segment. `big_position` is the seq
        the big core will commit next; the lag guard holds the checker
        strictly behind it. `segment_drained` is true when every runtime
        entry of this segment has already been delivered and consumed, so an
        empty log on a memory op proves divergence instead of data-in-flight.
        """
        if self.end_seq is None or self.next_seq <= self.end_seq:
            if lag_guard and self.next_seq >= big_position:
                return Stall.LAG_GUARD, None
        if self.div_ready > cycle:
            return Stall.DIV_BUSY, None
        pc = self.regs.pc
        if not 0 <= pc < len(program):
            return Stall.NONE, VerifyResult(
                Outcome.MEM_MISMATCH, cycle, log_seq=self.next_seq,
                fld="fetch", actual=pc)
        ins = program[pc]
        op = ins.op
        r = self.regs.int_regs
        klass = ins.klass

        if klass == InstrClass.DIV and self.div_ready < 0 \
                and self.timing.div_cycles > 1:
            self.div_ready = cycle + self.timing.div_cycles - 1
            return Stall.DIV_BUSY, None
        if klass == InstrClass.FP_ALU:
            ready = max(self.fp_ready[ins.src1], self.fp_ready[ins.src2])
            if ready > cycle:
                return Stall.FP_DEP, None

        mem_entry = None
        if klass in (InstrClass.LOAD, InstrClass.STORE, InstrClass.CSR_READ):
            mem_entry = self.lsl.peek_runtime()
            if mem_entry is None:
                if segment_drained:
                    return Stall.NONE, VerifyResult(
                        Outcome.MEM_MISMATCH, cycle, log_seq=self.next_seq,
                        fld="missing")
                return Stall.LSL_EMPTY, None

        pc_next = pc + 1
        writes = ()
        detection = None

        if op == OP_ADD:
            writes = ((0, ins.dest, (r[ins.src1] + r[ins.src2]) & MASK64),)
        elif op == OP_ADDI:
            writes = ((0, ins.dest, (r[ins.src1] + ins.imm) & MASK64),)
        elif op == OP_SUB:
            writes = ((0, ins.dest, (r[ins.src1] - r[ins.src2]) & MASK64),)
        elif op == OP_XOR:
            writes = ((0, ins.dest, r[ins.src1] ^ r[ins.src2]),)
        elif op == OP_XORI:
            writes = ((0, ins.dest, (r[ins.src1] ^ ins.imm) & MASK64),)
        elif op == OP_OR:
            writes = ((0, ins.dest, r[ins.src1] | r[ins.src2]),)
        elif op == OP_ORI:
            writes = ((0, ins.dest, (r[ins.src1] | ins.imm) & MASK64),)
        elif op == OP_AND:
            writes = ((0, ins.dest, r[ins.src1] & r[ins.src2]),)
        elif op == OP_ANDI:
            writes = ((0, ins.dest, r[ins.src1] & ins.imm & MASK64),)
        elif op == OP_MUL:
            writes = ((0, ins.dest, (r[ins.src1] * r[ins.src2]) & MASK64),)
        elif op == OP_DIV:
            d = r[ins.src2]
            writes = ((0, ins.dest, MASK64 if d == 0 else r[ins.src1] // d),)
            self.div_ready = -1
        elif op == OP_FMIX:
            f = self.regs.fp_regs
            writes = ((1, ins.dest, _mix64(f[ins.src1], f[ins.src2])),)
            self.fp_ready[ins.dest] = cycle + self.timing.fpu_latency
        elif op == OP_LD:
            entry = self.lsl.pop_runtime()
            if entry.kind != LogKind.LOAD:
                detection = VerifyResult(Outcome.MEM_MISMATCH, cycle,
                                         log_seq=entry.seq, fld="kind",
                                         expected=int(entry.kind))
            else:
                addr = (r[ins.src1] + ins.imm) & MASK64
                if addr != entry.address:
                    detection = VerifyResult(
                        Outcome.MEM_MISMATCH, cycle, log_seq=entry.seq,
                        fld="addr", expected=entry.address, actual=addr)
                else:
                    writes = ((0, ins.dest, entry.data),)
        elif op == OP_SD:
            entry = self.lsl.pop_runtime()
            addr = (r[ins.src1] + ins.imm) & MASK64
            data = r[ins.src2]
            if entry.kind != LogKind.STORE:
                detection = VerifyResult(Outcome.MEM_MISMATCH, cycle,
                                         log_seq=entry.seq, fld="kind",
                                         expected=int(entry.kind))
            elif addr != entry.address:
                detection = VerifyResult(
                    Outcome.MEM_MISMATCH, cycle, log_seq=entry.seq,
                    fld="addr", expected=entry.address, actual=addr)
            elif data != entry.data:
                detection = VerifyResult(
                    Outcome.MEM_MISMATCH, cycle, log_seq=entry.seq,
                    fld="data", expected=entry.data, actual=data)
        elif op == OP_BEQ:
            if r[ins.src1] == r[ins.src2]:
                pc_next = pc + ins.imm
        elif op == OP_BNE:
            if r[ins.src1] != r[ins.src2]:
                pc_next = pc + ins.imm
        elif op == OP_BLT:
            if _to_signed(r[ins.src1]) < _to_signed(r[ins.src2]):
                pc_next = pc + ins.imm
        elif op == OP_JALR:
            writes = ((0, ins.dest, pc + 1),)
            pc_next = (r[ins.src1] + ins.imm) & MASK64
        elif op == OP_CSRR:
            entry = self.lsl.pop_runtime()
            if entry.kind != LogKind.CSR:
                detection = VerifyResult(Outcome.MEM_MISMATCH, cycle,
                                         log_seq=entry.seq, fld="kind",
                                         expected=int(entry.kind))
            elif entry.address != ins.csr_id:
                detection = VerifyResult(
                    Outcome.CSR_MISMATCH, cycle, log_seq=entry.seq, fld="id",
                    expected=ins.csr_id, actual=entry.address)
            else:
                if ins.csr_id in self.csr_restored:
                    own = self.regs.csrs.get(ins.csr_id, 0)
                    if own != entry.data:
                        detection = VerifyResult(
                            Outcome.CSR_MISMATCH, cycle, log_seq=entry.seq,
                            fld="data", expected=own, actual=entry.data)
                    value = own
                else:
                    value = entry.data  # unforwarded id: trusted input
                if detection is None:
                    writes = ((0, ins.dest, value),)
                    self.regs.csrs[ins.csr_id] = (value + 1) & MASK64
        # OP_TRAP / OP_NOP: no effects in check mode

        if detection is not None:
            return Stall.NONE, detection
        for bank, reg, val in writes:
            if bank == 0:
                if reg != 0:
                    r[reg] = val
            else:
                self.regs.fp_regs[reg] = val
        self.regs.pc = pc_next
        self.next_seq += 1
        return Stall.NONE, None

    def replay_finished(self) -> bool:
        return self.end_seq is not None and self.next_seq > self.end_seq

    def ercp_ready(self) -> bool:
        return (self.ercp_id >= 0 and
                self.lsl.status_chunks(self.ercp_id) >= self.srcp_chunks_expected)

    # -- checker-control instructions ---------------------------------------

    def msu_exec(self, op: str, arg: int = 0, kernel_mode: bool = False):
        """Execute one checker-control instruction (Tab-style contract).

        mode switches are privileged; record/apply/jal/rslt are user-mode.
        """
        if op == "mode":
            if not kernel_mode:
                raise PrivilegeError("mode switch requires kernel privilege")
            self.msu.mode = Mode(arg)
            return None
        if op == "record":
            self.msu.recorded_regs = self.regs.copy()
            return None
        if op == "apply":
            return self.apply_srcp(list(self.csr_restored) or [])
        if op == "jal":
            self.regs.pc = arg
            return None
        if op == "rslt":
            return self.last_result is not None and self.last_result.matched
        raise ValueError(f"unknown checker-control op {op!r}")
