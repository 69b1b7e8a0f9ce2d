"""checkersim: a deterministic, cycle-stepped simulator of heterogeneous
parallel error detection.

A superscalar big-core model's committed stream is segmented by register
checkpoints and re-executed on sets of little checker cores over a
contention-modeled forwarding fabric, with fault-injection campaigns that
measure detection latency, slowdown, and backpressure.
"""

__version__ = "0.1.0"

from .isa import (
    ArchRegs, ExecEffect, Instruction, InstrClass, Program, TraceEntry,
    exec_instr, parse_program, run_functional,
)
from .workload import InstrMix, SUITE_NAMES, gen_workload, suite_mix
from .big_core import (
    Checkpoint, DeuState, LogEntry, LogKind, StatusPacket, Trigger,
    lsq_forward, should_trigger_rcp, extract_status_packets,
)
from .fabric import BASELINE, Channel, Fabric, FabricKind, HM_NOC, Packet
from .little_core import (
    CoreState, LittleCore, LittleTiming, LoadStoreLog, Msu, Outcome,
    VerifyResult,
)
from .os_model import HookTable, PageLockModel, Verdict, lag_guard_check
from .engine import (
    SimConfig, SimResult, Simulator, baseline_run, perf_per_area, simulate,
)
from .faults import (
    FaultRecord, FaultSpec, Injector, inject, latency_bound, run_campaign,
)
