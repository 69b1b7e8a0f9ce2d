"""Commit walker, checkpoint triggers, status serialization, LSQ parity."""

import pytest

from checkersim.isa import ArchRegs, InstrClass, parse_program, run_functional
from checkersim.big_core import (
    COST_SCALE, DEFAULT_COMMIT_COSTS, CommitWalker, DeuState, LOG_ENTRY_BYTES,
    Trigger, baseline_cycles, compile_costs, csr_id_window,
    extract_status_packets, lsq_forward, make_log_entry, regs_from_words,
    should_trigger_rcp, status_packet_count, checkpoint_words,
)

COSTS = compile_costs(DEFAULT_COMMIT_COSTS)


def trace_of(text, mem_bytes=256):
    return run_functional(parse_program(text), bytearray(mem_bytes))


def test_four_alu_per_cycle_at_width_four():
    trace = trace_of("\n".join(["add x1, x1, x1"] * 8))
    walker = CommitWalker(trace, COSTS, 4)
    retired, blocked = walker.retire_cycle(100)
    assert len(retired) == 4 and not blocked
    retired, _ = walker.retire_cycle(100)
    assert len(retired) == 4
    assert walker.done()


def test_two_loads_per_cycle():
    trace = trace_of("\n".join(["ld x1, 0(x0)"] * 4))
    walker = CommitWalker(trace, COSTS, 4)
    retired, _ = walker.retire_cycle(100)
    assert len(retired) == 2


def test_bundle_stops_at_trap():
    trace = trace_of("add x1, x1, x1\ntrap\nadd x2, x2, x2")
    walker = CommitWalker(trace, COSTS, 4)
    retired, _ = walker.retire_cycle(100)
    assert [e.instr.klass for e in retired] == [InstrClass.INT_ALU,
                                                InstrClass.TRAP]


def test_bundle_respects_segment_cap():
    trace = trace_of("\n".join(["nop"] * 8))
    walker = CommitWalker(trace, COSTS, 4)
    retired, _ = walker.retire_cycle(2)
    assert len(retired) == 2


def test_blocked_log_slot_stalls_head():
    trace = trace_of("ld x1, 0(x0)\nnop")
    walker = CommitWalker(trace, COSTS, 4)
    retired, blocked = walker.retire_cycle(100, [False, True, True, True])
    assert retired == [] and blocked


def test_blocked_log_slot_midbundle_keeps_prefix():
    trace = trace_of("nop\nld x1, 0(x0)\nnop")
    walker = CommitWalker(trace, COSTS, 4)
    retired, blocked = walker.retire_cycle(100, [True, False, True, True])
    assert len(retired) == 1 and not blocked


def test_expensive_instruction_accumulates_budget():
    costs = dict(DEFAULT_COMMIT_COSTS)
    costs[InstrClass.DIV] = 6.0
    units = compile_costs(costs)
    trace = trace_of("div x1, x2, x3")
    walker = CommitWalker(trace, units, 4)
    cycles = 0
    while not walker.done():
        walker.retire_cycle(100)
        cycles += 1
    assert cycles == 6


def test_baseline_cycles_pure_walk():
    trace = trace_of("\n".join(["add x1, x1, x1"] * 16))
    assert baseline_cycles(trace, COSTS, 4) == 4


def test_log_entries_match_oracle_mem_ops():
    text = "\n".join([
        "addi x1, x0, 8",
        "sd x1, 0(x0)",
        "ld x2, 0(x0)",
        "sd x2, 8(x0)",
    ])
    trace = trace_of(text)
    entries = [make_log_entry(e.mem, e.seq) for e in trace if e.mem]
    assert [e.seq for e in entries] == [1, 2, 3]
    assert entries[0].address == 0 and entries[0].data == 8
    assert entries[1].address == 0 and entries[1].data == 8


def test_parity_detects_single_flip_not_double():
    entry = make_log_entry((InstrClass.STORE, 64, 0xDEADBEEF), seq=0)
    assert lsq_forward(entry)
    entry.data ^= 1 << 7
    assert not lsq_forward(entry)  # single flip caught
    entry.data ^= 1 << 13
    assert lsq_forward(entry)  # double flip escapes parity


def test_status_packet_counts():
    # 65 words with no forwarded CSRs, 67 with the default two: 17 chunks.
    assert status_packet_count(0, 4) == 17
    assert status_packet_count(1, 4) == 17  # 66 words
    assert status_packet_count(2, 4) == 17
    assert status_packet_count(3, 4) == 17
    assert status_packet_count(4, 4) == 18


def test_status_packets_roundtrip_registers():
    regs = ArchRegs()
    regs.int_regs = list(range(32))
    regs.fp_regs = [v * 3 for v in range(32)]
    regs.pc = 1234
    regs.csrs = {0xC00: 7, 0xC01: 9}
    ids = csr_id_window(2)
    packets = extract_status_packets(regs, rcp_id=5, forwarded_csr_ids=ids)
    assert len(packets) == 17
    assert all(p.rcp_id == 5 for p in packets)
    words = []
    for p in sorted(packets, key=lambda p: p.chunk):
        words.extend(p.words)
    rebuilt = regs_from_words(words, ids)
    assert rebuilt == regs


def test_checkpoint_words_layout():
    regs = ArchRegs()
    regs.int_regs[1] = 11
    regs.fp_regs[0] = 22
    regs.pc = 33
    words = checkpoint_words(regs, csr_id_window(1))
    assert words[1] == 11 and words[32] == 22 and words[64] == 33
    assert len(words) == 66


def deu(instrs=0, enabled=True):
    d = DeuState(check_enabled=enabled)
    d.instrs_since_rcp = instrs
    return d


def test_trigger_timeout_at_limit():
    trig = should_trigger_rcp(deu(5000), 4096, False, False, 5000, 4)
    assert trig == Trigger.TIMEOUT


def test_trigger_suppressed_on_empty_segment():
    assert should_trigger_rcp(deu(0), 0, True, True, 5000, 4) is None


def test_trigger_log_full_worst_case_space():
    trig = should_trigger_rcp(deu(10), 3 * LOG_ENTRY_BYTES, False, False,
                              5000, 4)
    assert trig == Trigger.LOG_FULL
    assert should_trigger_rcp(deu(10), 4 * LOG_ENTRY_BYTES, False, False,
                              5000, 4) is None


def test_trigger_priority_order():
    assert should_trigger_rcp(deu(5000), 0, True, True, 5000, 4) \
        == Trigger.KERNEL_TRAP
    assert should_trigger_rcp(deu(5000), 0, False, True, 5000, 4) \
        == Trigger.LOG_FULL
    assert should_trigger_rcp(deu(5000), 4096, False, True, 5000, 4) \
        == Trigger.TIMEOUT
    assert should_trigger_rcp(deu(10), 4096, False, True, 5000, 4) \
        == Trigger.PROGRAM_END


def test_trigger_disabled_deu_never_fires():
    assert should_trigger_rcp(deu(5000, enabled=False), 0, True, True,
                              5000, 4) is None
