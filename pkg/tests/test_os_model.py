"""Hook table, dispatch policy, context switches, guards, deadlock model."""

import pytest

from checkersim.little_core import LittleCore, LittleTiming, Mode
from checkersim.os_model import (
    HookTable, OsError, PageLockModel, context_switch_big,
    context_switch_little, lag_guard_check,
)
from checkersim.scenarios import (
    CANNED_SCENARIOS, load_scenario, parse_scenario, run_scenario,
    ScenarioError,
)
from checkersim.os_model import Verdict


def test_hook_four_checkers():
    hooks = HookTable()
    hooks.hook(0, [1, 2, 3, 4])
    assert hooks.hooks[0] == [1, 2, 3, 4]


def test_double_hook_rejected():
    hooks = HookTable()
    hooks.hook(0, [1])
    with pytest.raises(OsError):
        hooks.hook(0, [1])


def test_round_robin_five_dispatches_wrap():
    hooks = HookTable()
    hooks.hook(0, [1, 2, 3, 4])
    order = []
    for _ in range(5):
        lid = hooks.dispatch(0)
        if len(order) == 4:
            hooks.free(order[0])
            lid = hooks.dispatch(0) if lid is None else lid
        order.append(lid)
    assert order == [1, 2, 3, 4, 1]


def test_dispatch_none_when_all_busy():
    hooks = HookTable()
    hooks.hook(0, [1, 2])
    assert hooks.dispatch(0) == 1
    assert hooks.dispatch(0) == 2
    assert hooks.dispatch(0) is None
    hooks.free(2)
    assert hooks.dispatch(0) == 2


def test_round_robin_fairness_counts():
    hooks = HookTable()
    hooks.hook(0, [0, 1, 2, 3])
    for _ in range(101):
        lid = hooks.dispatch(0)
        hooks.free(lid)
    counts = [hooks.assignments[i] for i in range(4)]
    assert max(counts) - min(counts) <= 1


def test_context_switch_big_no_release():
    hooks = HookTable()
    effects = context_switch_big(hooks, 0, None)
    assert effects == ["b.check(0, disable)", "b.check(0, enable)"]


def test_context_switch_big_new_release_hooks_all():
    hooks = HookTable()
    effects = context_switch_big(hooks, 0, [1, 2, 3, 4])
    assert effects[0] == "b.check(0, disable)"
    assert effects[-1] == "b.check(0, enable)"
    assert len([e for e in effects if e.startswith("b.hook")]) == 4


def test_context_switch_little_modes():
    core = LittleCore(3, LittleTiming())
    context_switch_little(core, next_is_checker=True)
    assert core.msu.mode == Mode.CHECK
    core.lsl.reserved_for = 7
    context_switch_little(core, next_is_checker=False)
    assert core.msu.mode == Mode.APPLICATION
    assert core.lsl.reserved_for == 7  # reservation survives the switch


def test_lag_guard_boundary_values():
    # Big core about to commit seq 100: checker next 99 runs, 100 holds.
    assert not lag_guard_check(100, 99)
    assert lag_guard_check(100, 100)
    assert lag_guard_check(100, 101)


def test_page_lock_wait_cycle_detection():
    pl = PageLockModel(pf_lock=1, io_sync_guard=False)
    pl.take_lock(1, "big")
    assert not pl.checker_fetch_ok(0, 130)  # page 2 never resident
    pl.big_waits_for([0])
    cyc = pl.find_cycle()
    assert cyc is not None and "big" in cyc and "little:0" in cyc


def test_page_fault_with_free_lock_pages_in():
    pl = PageLockModel(pf_lock=1, io_sync_guard=False)
    assert pl.checker_fetch_ok(0, 130)
    assert pl.page_of(130) in pl.resident


def test_io_sync_guard_defers_unverified_eviction():
    pl = PageLockModel(io_sync_guard=True)
    pl.big_fetch(10, seq=10)
    assert not pl.evict_page(0, verified_seq=-1)
    assert 0 in pl.resident and pl.deferred_evictions == [0]
    assert pl.evict_page(0, verified_seq=50)  # everything verified: allowed
    assert 0 not in pl.resident


def test_scenario_parser_and_errors():
    scn = parse_scenario(CANNED_SCENARIOS["canonical"], "canonical")
    assert scn.program == "overtake_mix"
    assert scn.pf_lock == 1
    assert (100, "take_lock", (1,)) in scn.events
    with pytest.raises(ScenarioError):
        parse_scenario("at ten take_lock 1")
    with pytest.raises(ScenarioError):
        parse_scenario("at 10 explode 1")


@pytest.mark.parametrize("lag,io,expect", [
    (True, True, Verdict.COMPLETED),
    (False, True, Verdict.DEADLOCK_DETECTED),
    (True, False, Verdict.DEADLOCK_DETECTED),
    (False, False, Verdict.DEADLOCK_DETECTED),
])
def test_canonical_scenario_guard_matrix(lag, io, expect):
    scn = parse_scenario(CANNED_SCENARIOS["canonical"], "canonical")
    outcome = run_scenario(scn, lag, io)
    assert outcome.verdict == expect, outcome


def test_benign_scenario_completes_under_all_guards():
    scn = parse_scenario(CANNED_SCENARIOS["benign"], "benign")
    for lag in (True, False):
        for io in (True, False):
            assert run_scenario(scn, lag, io).verdict == Verdict.COMPLETED


def test_evict_without_lock_contention_completes():
    scn = parse_scenario(CANNED_SCENARIOS["evict_no_lock"], "evict_no_lock")
    outcome = run_scenario(scn, True, False)
    assert outcome.verdict == Verdict.COMPLETED
