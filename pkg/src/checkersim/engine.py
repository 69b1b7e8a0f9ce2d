"""The deterministic cycle loop.

Advances the big core every cycle and the fabric plus little cores every
`clock_ratio`-th cycle, in a fixed intra-cycle phase order: big commit and
DEU enqueue, then (on little ticks) fabric delivery, checker stepping, and
OS bookkeeping. Identical (config, program) inputs produce identical results
and event logs.

Stall accounting charges each stalled big cycle to exactly one reason:
StatusExtraction while checkpoint serialization preempts commit,
FabricBackpressure when a full buffer blocks commit or extraction, and
CheckerStarvation while a closed segment waits for a free checker.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields

from .isa import ArchRegs, InstrClass, Program, TraceEntry, run_functional
from .big_core import (
    COST_SCALE, LOG_ENTRY_BYTES, Checkpoint, CommitWalker, DeuState, LogEntry,
    Trigger, baseline_cycles, compile_costs, csr_id_window,
    extract_status_packets, lsq_forward, make_log_entry, should_trigger_rcp,
    status_packet_bytes, status_packet_count,
)
from .fabric import Channel, FABRIC_KINDS, Fabric, Packet
from .little_core import (
    CoreState, LittleCore, LittleTiming, Outcome, Stall, VerifyResult,
)
from .os_model import HookTable, PageLockModel, context_switch_big


class ConfigError(ValueError):
    pass


class SimAssertionError(AssertionError):
    """Internal invariant broke (order, conservation, cycle cap)."""


class DeadlockError(Exception):
    def __init__(self, cycle: int, description: str):
        super().__init__(f"deadlock at cycle {cycle}: {description}")
        self.cycle = cycle
        self.description = description


@dataclass
class SimConfig:
    commit_width: int = 4
    n_littles: int = 4
    lsl_capacity_bytes: int = 4096
    timeout_instructions: int = 5000
    fabric: str = "hmnoc"
    dc_buffer_entries: int = 16
    clock_ratio: int = 2
    big_clock_ghz: float = 3.2
    div_unroll: int = 8
    fpu_latency: int = 3
    cost_int_alu: float = 0.25
    cost_mul: float = 1.0
    cost_div: float = 1.0
    cost_fp_alu: float = 1.0
    cost_load: float = 0.5
    cost_store: float = 0.5
    cost_branch: float = 0.25
    cost_jump: float = 0.25
    cost_csr_read: float = 1.0
    cost_trap: float = 0.25
    cost_nop: float = 0.25
    regs_per_packet: int = 4
    prf_read_ports: int = 2
    forwarded_csr_count: int = 2
    seed: int = 0
    lag_guard: bool = True
    io_sync_guard: bool = True
    kernel_window_instructions: int = 64
    memory_footprint_bytes: int = 1 << 16
    max_dynamic_instrs: int = 2_000_000
    cycle_cap: int = 500_000_000
    count_drain: bool = True
    collect_events: bool = False
    page_instrs: int = 64
    little_core_area_mm2: float = 0.092
    little_wrapper_total_mm2: float = 0.059
    big_core_area_mm2: float = 2.811
    big_wrapper_area_mm2: float = 0.122

    def validate(self) -> None:
        if self.commit_width < 1:
            raise ConfigError("commit_width must be >= 1")
        if self.n_littles < 1:
            raise ConfigError("n_littles must be >= 1")
        if self.clock_ratio < 1 or int(self.clock_ratio) != self.clock_ratio:
            raise ConfigError("clock_ratio must be a positive integer")
        for name in ("lsl_capacity_bytes", "timeout_instructions",
                     "dc_buffer_entries", "regs_per_packet", "prf_read_ports",
                     "kernel_window_instructions", "cycle_cap"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.fabric not in FABRIC_KINDS:
            raise ConfigError(f"fabric must be one of {sorted(FABRIC_KINDS)}")
        if self.forwarded_csr_count < 0:
            raise ConfigError("forwarded_csr_count must be >= 0")
        n_pkts = status_packet_count(self.forwarded_csr_count,
                                     self.regs_per_packet)
        need = (n_pkts * status_packet_bytes(self.regs_per_packet)
                + self.commit_width * LOG_ENTRY_BYTES)
        if need > self.lsl_capacity_bytes:
            raise ConfigError(
                f"LSL too small: a checkpoint plus one worst-case bundle "
                f"needs {need} bytes")
        LittleTiming(self.div_unroll, self.fpu_latency)  # validates

    def commit_costs(self) -> dict[InstrClass, float]:
        return {
            InstrClass.INT_ALU: self.cost_int_alu,
            InstrClass.MUL: self.cost_mul,
            InstrClass.DIV: self.cost_div,
            InstrClass.FP_ALU: self.cost_fp_alu,
            InstrClass.LOAD: self.cost_load,
            InstrClass.STORE: self.cost_store,
            InstrClass.BRANCH: self.cost_branch,
            InstrClass.JUMP: self.cost_jump,
            InstrClass.CSR_READ: self.cost_csr_read,
            InstrClass.TRAP: self.cost_trap,
            InstrClass.NOP: self.cost_nop,
        }

    @property
    def big_period_ns(self) -> float:
        return 1.0 / self.big_clock_ghz

    def copy(self, **overrides) -> "SimConfig":
        d = self.to_dict()
        d.update(overrides)
        return SimConfig(**d)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}

    @classmethod
    def field_types(cls) -> dict[str, type]:
        return {f.name: f.type for f in dc_fields(cls)}


@dataclass
class Detection:
    big_cycle: int
    detector: str  # Parity | MemCompare | CsrCompare | RegCompare
    result: VerifyResult | None = None


@dataclass
class SegmentState:
    epoch: int
    srcp_id: int
    start_seq: int
    checker: int | None = None
    closed: bool = False
    ercp_id: int = -1
    end_seq: int = -1
    entries_created: int = 0
    entries_delivered: int = 0
    verified: bool = False
    aborted: bool = False

    def length(self) -> int:
        return self.end_seq - self.start_seq + 1 if self.closed else 0


@dataclass
class SimResult:
    baseline_cycles: int
    checked_cycles: int
    slowdown: float
    stall_fabric_backpressure: int
    stall_checker_starvation: int
    stall_status_extraction: int
    segments: int
    mean_segment_len: float
    packets_accepted: int
    packets_delivered: int
    packets_in_flight: int
    checker_utilization: tuple
    perf_per_area: float
    detections: list = field(default_factory=list)
    checkpoints: int = 0
    committed_instructions: int = 0
    events: list = field(default_factory=list)

    SCALAR_KEYS = (
        "baseline_cycles", "checked_cycles", "slowdown",
        "stall_fabric_backpressure", "stall_checker_starvation",
        "stall_status_extraction", "segments", "mean_segment_len",
        "packets_accepted", "packets_delivered", "packets_in_flight",
        "checkpoints", "committed_instructions", "perf_per_area",
    )

    def to_text(self) -> str:
        """Stable key-ordered text record."""
        lines = []
        for key in self.SCALAR_KEYS:
            val = getattr(self, key)
            if isinstance(val, float):
                lines.append(f"{key} = {val:.6f}")
            else:
                lines.append(f"{key} = {val}")
        util = ",".join(f"{u:.6f}" for u in self.checker_utilization)
        lines.append(f"checker_utilization = {util}")
        lines.append(f"detections = {len(self.detections)}")
        return "\n".join(lines) + "\n"


def perf_per_area(result: SimResult, config: SimConfig) -> float:
    """Normalized performance per checker-side area: higher is better.

    Performance is the inverse slowdown factor; area charges each little
    core plus its share of the per-little wrapper logic.
    """
    per_little = (config.little_core_area_mm2
                  + config.little_wrapper_total_mm2 / 4.0)
    total_area = config.n_littles * per_little
    return (1.0 / (1.0 + result.slowdown)) / total_area


class Simulator:
    """One deterministic simulation instance; never share across runs."""

    def __init__(self, config: SimConfig, program: Program,
                 trace: list[TraceEntry] | None = None,
                 injector=None, page_lock: PageLockModel | None = None,
                 scenario_events=None):
        config.validate()
        self.config = config
        self.program = program
        if trace is None:
            memory = bytearray(config.memory_footprint_bytes)
            trace = run_functional(program, memory, config.max_dynamic_instrs)
        self.trace = trace
        self.injector = injector
        self.page_lock = page_lock
        if page_lock is not None:
            page_lock.page_instrs = config.page_instrs
            page_lock.io_sync_guard = config.io_sync_guard
        self.scenario_events = sorted(scenario_events or [],
                                      key=lambda e: e[0])
        self._event_idx = 0

        self.cost_units = compile_costs(config.commit_costs())
        self.walker = CommitWalker(trace, self.cost_units, config.commit_width)
        self.csr_ids = csr_id_window(config.forwarded_csr_count)
        self.n_chunks = status_packet_count(config.forwarded_csr_count,
                                            config.regs_per_packet)
        self.status_bytes = status_packet_bytes(config.regs_per_packet)

        # Big-core architectural state, updated at retirement.
        self.big_int = [0] * 32
        self.big_fp = [0] * 32
        self.big_pc = program.entry
        self.big_csrs: dict[int, int] = {}
        self.committed_seq = -1
        self.deu = DeuState()
        self.trap_pending = False
        self.kernel_left = 0
        self.kernel_budget = 0
        self.kernel_windows = 0

        timing = LittleTiming(config.div_unroll, config.fpu_latency)
        self.littles = [LittleCore(i, timing, config.lsl_capacity_bytes,
                                   config.regs_per_packet)
                        for i in range(config.n_littles)]
        self.hooks = HookTable()
        self.events: list[str] = []
        self._log_event = self.events.append if config.collect_events else None

        self.fabric = Fabric(FABRIC_KINDS[config.fabric], config.commit_width,
                             config.dc_buffer_entries, self._can_accept,
                             self._deliver)
        self.outstanding = [0] * config.n_littles  # LSL credit bytes
        self.checkpoints: list[Checkpoint] = []
        self.segments: dict[int, SegmentState] = {}
        self.epoch = 0  # currently open segment epoch
        self.srcp_owner: dict[int, int] = {}  # rcp_id -> little id
        self.pending_dispatch: SegmentState | None = None
        self.tag_counter = 0

        # Extraction state: packets of the in-flight checkpoint.
        self.extract_packets: list = []
        self.extract_idx = 0
        self.extract_ercp_dest: int | None = None
        self.extract_needs_srcp = False
        self.extract_rcp = -1
        self.extract_epoch = 0  # tag epoch for the in-flight checkpoint

        self.stall_fabric = 0
        self.stall_starv = 0
        self.stall_extract = 0
        self.detections: list[Detection] = []
        self.big_cycle = 0
        self.big_done_cycle: int | None = None
        self.deadlock: DeadlockError | None = None

    # -- fabric callbacks ----------------------------------------------------

    def _can_accept(self, dest: int, nbytes: int) -> bool:
        lsl = self.littles[dest].lsl
        return lsl.occupied_bytes + nbytes <= lsl.capacity_bytes

    def _retag(self, old_tag: tuple) -> tuple:
        self.tag_counter += 1
        return (old_tag[0], self.tag_counter)

    def _deliver(self, dest: int, packet: Packet) -> None:
        # Runtime bytes are credited against the LSL at creation (the LogFull
        # test needs them early); status bytes only once they arrive.
        core = self.littles[dest]
        if packet.channel == Channel.RUNTIME:
            seg = self.segments.get(packet.order_tag[0])
            if core.epoch == packet.order_tag[0]:
                core.lsl.push_runtime(packet.payload)
                seg.entries_delivered += 1
            else:
                # Straggler of a terminated segment: drop, release credit.
                self.outstanding[dest] -= LOG_ENTRY_BYTES
                if seg is not None:
                    seg.entries_delivered += 1
        else:
            if packet.rcp_id in (core.srcp_id, core.ercp_id):
                # Space was reserved as a lump when this destination was
                # bound to the checkpoint; arrival just fills it.
                core.lsl.push_status(packet.payload, self.status_bytes)
            else:
                self.outstanding[dest] -= self.status_bytes

    # -- segment management ----------------------------------------------------

    def _open_segment(self, srcp: Checkpoint) -> None:
        self.epoch += 1
        seg = SegmentState(self.epoch, srcp.rcp_id, srcp.big_seq + 1)
        self.segments[self.epoch] = seg
        self._try_dispatch(seg)

    def _try_dispatch(self, seg: SegmentState) -> None:
        lid = self.hooks.dispatch(0)
        if lid is None:
            self.pending_dispatch = seg
            if self.page_lock is not None:
                self.page_lock.big_waits_for(self.hooks.busy_littles(0))
            return
        self.pending_dispatch = None
        seg.checker = lid
        core = self.littles[lid]
        core.begin_segment(seg.epoch, seg.srcp_id, seg.start_seq,
                           self.n_chunks, tid=lid)
        self.srcp_owner[seg.srcp_id] = lid
        # Reserve the whole start checkpoint against this LSL now, before
        # any of the segment's runtime entries can book the space.
        self.outstanding[lid] += self.n_chunks * self.status_bytes
        self.fabric.bind_srcp_dest(seg.srcp_id, lid, retag=self._retag)
        if self.page_lock is not None:
            self.page_lock.big_runs()
        if self._log_event:
            self._log_event(f"dispatch epoch={seg.epoch} -> little {lid}")

    def _cut_checkpoint(self, trigger: Trigger) -> None:
        rcp_id = len(self.checkpoints)
        snapshot = ArchRegs(
            list(self.big_int), list(self.big_fp), self.big_pc,
            {cid: self.big_csrs.get(cid, 0) for cid in self.csr_ids})
        ckpt = Checkpoint(rcp_id, snapshot, trigger, self.committed_seq)
        self.checkpoints.append(ckpt)
        closing = self.segments.get(self.epoch)
        ercp_dest = None
        if closing is not None and not closing.closed:
            closing.closed = True
            closing.ercp_id = rcp_id
            closing.end_seq = self.committed_seq
            core = self.littles[closing.checker]
            if core.epoch == closing.epoch:  # not aborted meanwhile
                core.close_segment(rcp_id, self.committed_seq)
                ercp_dest = closing.checker
                self.outstanding[ercp_dest] += self.n_chunks * self.status_bytes
        self.deu.instrs_since_rcp = 0
        self.deu.bytes_in_current_segment = 0

        self.extract_packets = extract_status_packets(
            snapshot, rcp_id, self.csr_ids, self.config.regs_per_packet)
        self.extract_idx = 0
        self.extract_rcp = rcp_id
        self.extract_epoch = self.epoch
        self.extract_ercp_dest = ercp_dest
        self.deu.status_extraction_remaining = len(self.extract_packets)

        more = not self.walker.done()
        self.extract_needs_srcp = more
        if more:
            self._open_segment(ckpt)
        if self._log_event:
            self._log_event(f"rcp {rcp_id} trigger={trigger.name} "
                            f"seq={self.committed_seq}")

    # -- big-core cycle --------------------------------------------------------

    def _emit_status(self) -> None:
        emitted = 0
        ports = self.config.prf_read_ports
        while (emitted < ports
               and self.extract_idx < len(self.extract_packets)
               and self.fabric.free_slots(0, Channel.STATUS) > 0):
            pkt = self.extract_packets[self.extract_idx]
            if self.injector is not None:
                self.injector.on_status_packet(pkt, self.big_cycle)
            dests = []
            if self.extract_ercp_dest is not None:
                dests.append(self.extract_ercp_dest)
            needs = False
            if self.extract_needs_srcp:
                owner = self.srcp_owner.get(self.extract_rcp)
                if owner is not None:
                    if owner not in dests:
                        dests.append(owner)
                else:
                    needs = True
            if dests or needs:
                self.tag_counter += 1
                self.fabric.enqueue(0, Packet(
                    Channel.STATUS, pkt, tuple(sorted(dests)),
                    (self.extract_epoch, self.tag_counter), self.status_bytes,
                    rcp_id=self.extract_rcp, needs_srcp_dest=needs))
            self.extract_idx += 1
            emitted += 1
        self.deu.status_extraction_remaining = (len(self.extract_packets)
                                                - self.extract_idx)
        if emitted:
            self.stall_extract += 1
        else:
            self.stall_fabric += 1

    def _step_kernel(self) -> None:
        cfg = self.config
        self.kernel_budget += COST_SCALE
        cost = self.cost_units[InstrClass.INT_ALU]
        n = min(cfg.commit_width, self.kernel_budget // cost, self.kernel_left)
        self.kernel_budget -= n * cost
        self.kernel_left -= n
        if self.kernel_left == 0:
            self.kernel_budget = 0
            self.deu.check_enabled = True
            if self._log_event:
                self._log_event("b.check(0, enable)")

    def _step_big(self) -> None:
        if self.deu.status_extraction_remaining > 0:
            self._emit_status()
            return
        if self.kernel_left > 0:
            self._step_kernel()
            return
        if self.pending_dispatch is not None:
            self.stall_starv += 1
            return
        if self.walker.done():
            if self.big_done_cycle is None:
                self.big_done_cycle = self.big_cycle
            return

        cfg = self.config
        seg = self.segments.get(self.epoch)
        target = seg.checker if seg is not None else None
        if (self.deu.check_enabled and target is not None
                and self.deu.instrs_since_rcp == 0
                and cfg.lsl_capacity_bytes - self.outstanding[target]
                < cfg.commit_width * LOG_ENTRY_BYTES):
            # Fresh segment whose LSL has not drained yet: wait on the checker.
            self.stall_starv += 1
            return

        fabric = self.fabric
        runtime_free = [fabric.free_slots(p, Channel.RUNTIME) > 0
                        for p in range(cfg.commit_width)]
        if self.deu.check_enabled:
            max_instrs = cfg.timeout_instructions - self.deu.instrs_since_rcp
        else:
            max_instrs = cfg.commit_width
        retired, blocked = self.walker.retire_cycle(max_instrs, runtime_free)
        if not retired and blocked:
            self.stall_fabric += 1
            return

        enabled = self.deu.check_enabled
        page_lock = self.page_lock
        big_int = self.big_int
        big_fp = self.big_fp
        injector = self.injector
        for pos, entry in enumerate(retired):
            for bank, reg, val in entry.writes:
                if bank == 0:
                    big_int[reg] = val
                else:
                    big_fp[reg] = val
            if entry.csr is not None:
                cid, val = entry.csr
                self.big_csrs[cid] = val + 1
            self.big_pc = entry.pc_next
            self.committed_seq = entry.seq
            if page_lock is not None:
                page_lock.big_fetch(entry.idx, entry.seq)
            if entry.trap:
                self.trap_pending = True
            if not enabled:
                continue
            if entry.instr.klass != InstrClass.TRAP:
                # Traps do not open segments of their own: a trap retiring
                # right after a checkpoint must not re-trigger an empty cut.
                self.deu.instrs_since_rcp += 1
            if entry.mem is not None:
                effect = entry.mem
            elif entry.csr is not None:
                effect = (InstrClass.CSR_READ, entry.csr[0], entry.csr[1])
            else:
                continue
            log = self._make_entry(effect, entry.seq)
            self.tag_counter += 1
            ok = fabric.enqueue(pos, Packet(
                Channel.RUNTIME, log, (target,),
                (self.epoch, self.tag_counter), LOG_ENTRY_BYTES))
            if not ok:
                raise SimAssertionError("runtime enqueue failed after precheck")
            self.outstanding[target] += LOG_ENTRY_BYTES
            self.deu.bytes_in_current_segment += LOG_ENTRY_BYTES
            seg.entries_created += 1

        if enabled:
            free_bytes = (cfg.lsl_capacity_bytes - self.outstanding[target]
                          if target is not None else cfg.lsl_capacity_bytes)
            trig = should_trigger_rcp(
                self.deu, free_bytes, self.trap_pending, self.walker.done(),
                cfg.timeout_instructions, cfg.commit_width)
            if trig is not None:
                self._cut_checkpoint(trig)
        if self.trap_pending:
            # Kernel entry; checking stays off across the switch.
            self.trap_pending = False
            self.kernel_left = cfg.kernel_window_instructions
            self.kernel_windows += 1
            self.deu.check_enabled = False
            if self._log_event:
                self._log_event("b.check(0, disable)")

    def _make_entry(self, effect: tuple, seq: int) -> LogEntry:
        kind, address, data = effect
        if self.injector is not None:
            address, data = self.injector.on_create(seq, address, data,
                                                    self.big_cycle)
            entry = make_log_entry((kind, address, data), seq)
            self.injector.on_lsq_window(entry, self.big_cycle)
            if not lsq_forward(entry):
                self.detections.append(
                    Detection(self.big_cycle, "Parity", None))
            self.injector.on_forward(entry, self.big_cycle)
            return entry
        return make_log_entry((kind, address, data), seq)

    # -- little-core cycle -------------------------------------------------------

    def _detector_name(self, vr: VerifyResult) -> str:
        if vr.outcome == Outcome.REG_MISMATCH:
            return "RegCompare"
        if vr.outcome == Outcome.CSR_MISMATCH:
            return "CsrCompare"
        return "MemCompare"

    def _record_detection(self, core: LittleCore, vr: VerifyResult) -> None:
        self.detections.append(Detection(self.big_cycle,
                                         self._detector_name(vr), vr))
        core.last_result = vr
        seg = self.segments.get(core.epoch)
        if seg is not None:
            seg.aborted = True
            seg.verified = True
        self.hooks.free(core.core_id)
        core.release()
        if self._log_event:
            self._log_event(f"detection {self._detector_name(vr)} "
                            f"cycle={self.big_cycle}")

    def _step_little(self, core: LittleCore, lcycle: int) -> None:
        state = core.state
        if state == CoreState.FREE:
            return
        core.busy_cycles += 1
        if state == CoreState.WAIT_SRCP:
            core.apply_srcp(self.csr_ids)
            return
        if state == CoreState.REPLAY:
            if core.replay_finished():
                core.state = CoreState.VERIFY
                return
            if (self.config.lag_guard
                    and (core.end_seq is None or core.next_seq <= core.end_seq)
                    and core.next_seq > self.committed_seq):
                # Holding the checker also suppresses its instruction fetch;
                # that is the point of the guard.
                core.stall_counts[Stall.LAG_GUARD] += 1
                return
            if self.page_lock is not None:
                pc = core.regs.pc
                if (0 <= pc < len(self.program.instructions)
                        and not self.page_lock.checker_fetch_ok(core.core_id,
                                                                pc)):
                    core.stall_counts[Stall.PAGE_FAULT] += 1
                    return
            seg = self.segments[core.epoch]
            drained = (seg.closed
                       and seg.entries_delivered == seg.entries_created)
            stall, detection = core.replay_step(
                self.program.instructions, lcycle, self.committed_seq + 1,
                self.config.lag_guard, drained)
            if detection is not None:
                self._record_detection(core, detection)
            elif stall != Stall.NONE:
                core.stall_counts[stall] += 1
            elif self.config.lag_guard and core.next_seq - 1 > self.committed_seq:
                raise SimAssertionError(
                    "checker replayed past the big core's commit position")
            return
        # VERIFY
        seg = self.segments[core.epoch]
        if core.lsl.runtime_len() > 0:
            self._record_detection(core, VerifyResult(
                Outcome.MEM_MISMATCH, lcycle, log_seq=core.next_seq,
                fld="leftover"))
            return
        if seg.entries_delivered < seg.entries_created:
            return  # stragglers still in flight
        if not core.ercp_ready():
            return
        result = core.verify_ercp(self.csr_ids, lcycle)
        core.last_result = result
        if result.matched:
            seg.verified = True
            self.hooks.free(core.core_id)
            core.release()
            if self._log_event:
                self._log_event(f"verify epoch={seg.epoch} match")
        else:
            self._record_detection(core, result)

    # -- main loop -----------------------------------------------------------------

    def _apply_events(self) -> None:
        events = self.scenario_events
        while (self._event_idx < len(events)
               and events[self._event_idx][0] <= self.big_cycle):
            _, name, args = events[self._event_idx]
            self._event_idx += 1
            pl = self.page_lock
            if pl is None:
                continue
            if name == "take_lock":
                pl.take_lock(args[0], "big")
            elif name == "release_lock":
                pl.release_lock(args[0])
            elif name == "evict_page":
                verified = max((s.end_seq for s in self.segments.values()
                                if s.verified), default=-1)
                pl.evict_page(args[0], verified)
            else:
                raise ConfigError(f"unknown scenario event {name!r}")

    def _check_deadlock(self) -> None:
        cyc = self.page_lock.find_cycle()
        if cyc is not None:
            self.deadlock = DeadlockError(
                self.big_cycle, " -> ".join(cyc))
            raise self.deadlock

    def _finished(self) -> bool:
        if not self.walker.done() or self.kernel_left > 0:
            return False
        if self.deu.status_extraction_remaining > 0:
            return False
        if self.pending_dispatch is not None:
            return False
        if any(c.state != CoreState.FREE for c in self.littles):
            return False
        return self.fabric.idle()

    def run(self) -> SimResult:
        cfg = self.config
        ratio = cfg.clock_ratio
        if self.walker.done():  # empty program
            return self._result(0)
        # Program launch: the scheduler hooks the checkers and enables checking.
        effects = context_switch_big(self.hooks, 0, list(range(cfg.n_littles)))
        if self._log_event:
            for e in effects:
                self._log_event(e)
        self._cut_checkpoint(Trigger.START)

        while not self._finished():
            if self.big_cycle > cfg.cycle_cap:
                raise SimAssertionError(
                    f"cycle cap {cfg.cycle_cap} exceeded")
            self._step_big()
            if self.big_cycle % ratio == 0:
                lcycle = self.big_cycle // ratio
                self.fabric.step(lcycle)
                outstanding = self.outstanding
                for core in self.littles:
                    self._step_little(core, lcycle)
                    freed = core.lsl.freed_bytes
                    if freed:
                        core.lsl.freed_bytes = 0
                        outstanding[core.core_id] -= freed
                self._apply_events()
                if self.pending_dispatch is not None:
                    self._try_dispatch(self.pending_dispatch)
                if self.page_lock is not None:
                    self._check_deadlock()
            self.big_cycle += 1
        return self._result(self.big_cycle)

    def _result(self, total_cycles: int) -> SimResult:
        cfg = self.config
        base = baseline_cycles(self.trace, self.cost_units, cfg.commit_width,
                               self.kernel_windows,
                               cfg.kernel_window_instructions)
        checked = total_cycles
        if not cfg.count_drain and self.big_done_cycle is not None:
            checked = self.big_done_cycle
        if checked < base and checked > 0:
            raise SimAssertionError(
                f"checked {checked} < baseline {base}")
        slowdown = (checked / base - 1.0) if base else 0.0
        segs = [s for s in self.segments.values()]
        committed = self.committed_seq + 1
        # Little ticks land on big cycles 0, ratio, 2*ratio, ...
        total_little = max(1, -(-total_cycles // cfg.clock_ratio))
        util = tuple(c.busy_cycles / total_little for c in self.littles)
        in_flight = self.fabric.in_flight()
        if total_cycles and in_flight != 0:
            raise SimAssertionError(
                f"{in_flight} packet deliveries outstanding at drain")
        result = SimResult(
            baseline_cycles=base,
            checked_cycles=checked,
            slowdown=slowdown,
            stall_fabric_backpressure=self.stall_fabric,
            stall_checker_starvation=self.stall_starv,
            stall_status_extraction=self.stall_extract,
            segments=len(segs),
            mean_segment_len=(committed / len(segs)) if segs else 0.0,
            packets_accepted=self.fabric.accepted,
            packets_delivered=self.fabric.delivered,
            packets_in_flight=in_flight,
            checker_utilization=util,
            perf_per_area=0.0,
            detections=list(self.detections),
            checkpoints=len(self.checkpoints),
            committed_instructions=committed,
            events=list(self.events),
        )
        result.perf_per_area = perf_per_area(result, cfg)
        return result


def simulate(config: SimConfig, program: Program,
             trace: list[TraceEntry] | None = None, injector=None,
             page_lock: PageLockModel | None = None,
             scenario_events=None) -> SimResult:
    """Run one checked simulation to completion (including drain)."""
    return Simulator(config, program, trace, injector, page_lock,
                     scenario_events).run()


def baseline_run(config: SimConfig, program: Program,
                 trace: list[TraceEntry] | None = None) -> int:
    """Big-core cycles with checking disabled: the slowdown denominator."""
    config.validate()
    if trace is None:
        memory = bytearray(config.memory_footprint_bytes)
        trace = run_functional(program, memory, config.max_dynamic_instrs)
    kernel_windows = sum(1 for e in trace if e.trap)
    return baseline_cycles(trace, compile_costs(config.commit_costs()),
                           config.commit_width, kernel_windows,
                           config.kernel_window_instructions)
