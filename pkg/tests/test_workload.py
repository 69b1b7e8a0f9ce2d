"""Workload generator contracts: determinism, quotas, footprint safety."""

import pytest

from checkersim.isa import InstrClass, run_functional
from checkersim.workload import (
    InstrMix, MixError, SUITE_NAMES, class_histogram, gen_workload, suite_mix,
)


def mix_of(**fracs):
    return InstrMix({InstrClass[k.upper()]: v for k, v in fracs.items()})


def test_div_quota_within_two_percent():
    mix = mix_of(div=0.3, int_alu=0.7)
    mix.body_instructions = 10_000
    mix.seed = 1
    hist = class_histogram(gen_workload(mix))
    assert 2800 <= hist[InstrClass.DIV] <= 3200


def test_same_seed_identical_program():
    mix = mix_of(load=0.2, store=0.2, int_alu=0.6)
    a = gen_workload(mix)
    b = gen_workload(mix)
    assert a.to_text() == b.to_text()


def test_different_seed_differs():
    mix = mix_of(load=0.2, store=0.2, int_alu=0.6)
    a = gen_workload(mix).to_text()
    mix.seed = 99
    assert gen_workload(mix).to_text() != a


def test_all_addresses_within_footprint():
    mix = mix_of(load=0.25, store=0.25, int_alu=0.5)
    mix.body_instructions = 2000
    mix.memory_footprint_bytes = 4096
    program = gen_workload(mix)
    trace = run_functional(program, bytearray(mix.memory_footprint_bytes))
    for entry in trace:
        if entry.mem is not None:
            assert 0 <= entry.mem[1] <= mix.memory_footprint_bytes - 8


def test_loop_count_bounds_dynamic_length():
    mix = mix_of(int_alu=0.9, branch=0.1)
    mix.body_instructions = 100
    mix.loop_count = 5
    program = gen_workload(mix)
    trace = run_functional(program, bytearray(64))
    # Forward branch skips can only shorten iterations.
    assert len(trace) <= 5 * 103 + 1


def test_infeasible_mixes_rejected():
    with pytest.raises(MixError, match="sum"):
        gen_workload(mix_of(int_alu=0.5))
    with pytest.raises(MixError, match="negative"):
        gen_workload(mix_of(int_alu=1.5, load=-0.5))
    bad = mix_of(store=1.0)
    bad.memory_footprint_bytes = 0
    with pytest.raises(MixError, match="footprint"):
        gen_workload(bad)


def test_fractions_must_cover_every_requested_class():
    mix = mix_of(int_alu=0.5, jump=0.25, csr_read=0.15, trap=0.05, nop=0.05)
    mix.body_instructions = 400
    program = gen_workload(mix)
    hist = class_histogram(program)
    assert hist[InstrClass.JUMP] == 100
    assert hist[InstrClass.CSR_READ] == 60
    trace = run_functional(program, bytearray(64), max_instrs=100_000)
    assert any(e.trap for e in trace)


def test_suite_names_all_generate_and_terminate():
    for name in SUITE_NAMES:
        mix = suite_mix(name, body=500, loop=2, seed=3)
        program = gen_workload(mix)
        trace = run_functional(program, bytearray(mix.memory_footprint_bytes),
                               max_instrs=200_000)
        assert len(trace) > 500, name


def test_unknown_suite_rejected():
    with pytest.raises(MixError):
        suite_mix("nonesuch")
