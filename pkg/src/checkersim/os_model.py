"""Kernel-visible behavior: hooking checkers to the big core, round-robin
segment dispatch with LSL reservation, context-switch instruction sequences,
the checker-lag and I/O-synchronization guards, and the event-scripted
page/lock layer that can produce (or avoid) the checker/main-thread deadlock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum


class OsError(Exception):
    pass


class HookTable:
    """big core id -> ordered hooked little cores, with free/busy dispatch."""

    def __init__(self):
        self.hooks: dict[int, list[int]] = {}
        self.owner: dict[int, int] = {}  # little id -> big id
        self.busy: dict[int, bool] = {}
        self.rr_next: dict[int, int] = {}
        self.assignments: dict[int, int] = {}

    def hook(self, big_id: int, little_ids: list[int]) -> None:
        """Associate checkers with a big core; a little hooks at most once."""
        for lid in little_ids:
            if lid in self.owner:
                raise OsError(f"little core {lid} already hooked "
                              f"to big core {self.owner[lid]}")
        self.hooks.setdefault(big_id, []).extend(little_ids)
        for lid in little_ids:
            self.owner[lid] = big_id
            self.busy[lid] = False
            self.assignments.setdefault(lid, 0)
        self.rr_next.setdefault(big_id, 0)

    def unhook_all(self, big_id: int) -> None:
        for lid in self.hooks.pop(big_id, []):
            del self.owner[lid]
            del self.busy[lid]
        self.rr_next.pop(big_id, None)

    def dispatch(self, big_id: int) -> int | None:
        """Next free hooked checker, round-robin; None when all are busy."""
        littles = self.hooks.get(big_id, [])
        if not littles:
            return None
        start = self.rr_next[big_id]
        for i in range(len(littles)):
            lid = littles[(start + i) % len(littles)]
            if not self.busy[lid]:
                self.busy[lid] = True
                self.rr_next[big_id] = (start + i + 1) % len(littles)
                self.assignments[lid] += 1
                return lid
        return None

    def free(self, little_id: int) -> None:
        self.busy[little_id] = False

    def busy_littles(self, big_id: int) -> list[int]:
        return [lid for lid in self.hooks.get(big_id, []) if self.busy[lid]]


def context_switch_big(hooks: HookTable, big_id: int,
                       next_checkers: list[int] | None) -> list[str]:
    """Scheduler path on the big core: disable checking, switch, hook any
    newly released task's checkers, re-enable checking.

    Returns the ordered configuration effects for the event log.
    """
    effects = [f"b.check({big_id}, disable)"]
    if next_checkers:
        for lid in next_checkers:
            hooks.hook(big_id, [lid])
            effects.append(f"b.hook({big_id}, {lid})")
    effects.append(f"b.check({big_id}, enable)")
    return effects


def context_switch_little(core, next_is_checker: bool) -> list[str]:
    """Scheduler path on a little core: application mode on entry, check mode
    iff the incoming thread is the checker thread. The LSL reservation is
    left untouched so a pinned segment survives unrelated switches."""
    from .little_core import Mode
    core.msu.mode = Mode.APPLICATION
    effects = [f"l.mode({core.core_id}, application)"]
    if next_is_checker:
        core.msu.mode = Mode.CHECK
        effects.append(f"l.mode({core.core_id}, check)")
    return effects


def lag_guard_check(big_position: int, checker_next_seq: int) -> bool:
    """True = hold the checker this cycle.

    `big_position` is the sequence number the big core will commit next, so
    a checker about to replay it (or beyond) is no longer at least one
    instruction behind and must wait.
    """
    return checker_next_seq >= big_position


class Verdict(IntEnum):
    COMPLETED = 0
    DEADLOCK_DETECTED = 1


@dataclass
class DeadlockReport:
    cycle: int
    description: str


@dataclass
class PageLockModel:
    """Event-scripted page residency and lock ownership with a wait-for graph.

    Agents are "big" and "little:<id>". Pages become resident when the big
    core first commits an instruction on them; scripted evictions drop
    residency unless the io-sync guard pins pages still referenced by
    unverified execution. A checker fetching a non-resident page faults and
    needs `pf_lock`; if that lock is held by the stalled main thread the
    wait-for graph closes a cycle.
    """

    page_instrs: int = 64
    pf_lock: int = 1
    io_sync_guard: bool = True
    locks: dict[int, str] = field(default_factory=dict)  # lock -> holder
    resident: set = field(default_factory=set)
    last_fetch_seq: dict[int, int] = field(default_factory=dict)
    deferred_evictions: list[int] = field(default_factory=list)
    waits: dict[str, str] = field(default_factory=dict)  # waiter -> holder
    blocked_in_handler: set = field(default_factory=set)  # little ids

    def page_of(self, instr_idx: int) -> int:
        return instr_idx // self.page_instrs

    # -- scripted events -----------------------------------------------------

    def take_lock(self, lock: int, holder: str = "big") -> None:
        self.locks[lock] = holder

    def release_lock(self, lock: int) -> None:
        self.locks.pop(lock, None)

    def evict_page(self, page: int, verified_seq: int) -> bool:
        """Apply a scripted eviction; deferred (pinned) under the io-sync
        guard when the page is referenced by not-yet-verified execution."""
        if self.io_sync_guard:
            last = self.last_fetch_seq.get(page)
            if last is None or last > verified_seq:
                self.deferred_evictions.append(page)
                return False
        self.resident.discard(page)
        return True

    # -- engine hooks ----------------------------------------------------------

    def big_fetch(self, instr_idx: int, seq: int) -> None:
        page = self.page_of(instr_idx)
        self.resident.add(page)
        self.last_fetch_seq[page] = seq

    def checker_fetch_ok(self, little_id: int, instr_idx: int) -> bool:
        """False = instruction fault in progress.

        A fault enters the page-fault handler, which needs `pf_lock`; if a
        main thread holds it the checker blocks on the lock itself and stays
        blocked until the lock is released, even if the page reappears."""
        page = self.page_of(instr_idx)
        agent = f"little:{little_id}"
        holder = self.locks.get(self.pf_lock)
        if little_id in self.blocked_in_handler:
            if holder is not None and holder != agent:
                return False
            self.blocked_in_handler.discard(little_id)
            self.resident.add(page)
            self.waits.pop(agent, None)
            return True
        if page in self.resident:
            self.waits.pop(agent, None)
            return True
        if holder is not None and holder != agent:
            self.waits[agent] = holder
            self.blocked_in_handler.add(little_id)
            return False
        self.resident.add(page)  # fault handled; page brought back in
        self.waits.pop(agent, None)
        return True

    def big_waits_for(self, little_ids: list[int]) -> None:
        # The big core stalls at a segment boundary until one checker frees;
        # a single edge to each busy checker captures the wait.
        for lid in little_ids:
            self.waits[f"big:{lid}"] = f"little:{lid}"

    def big_runs(self) -> None:
        stale = [k for k in self.waits if k.startswith("big:")]
        for k in stale:
            del self.waits[k]

    def find_cycle(self) -> list[str] | None:
        """Cycle in the wait-for graph, collapsing big:<id> nodes onto big."""
        edges: dict[str, list[str]] = {}
        for waiter, holder in self.waits.items():
            a = "big" if waiter.startswith("big") else waiter
            edges.setdefault(a, []).append(holder)
        seen: dict[str, int] = {}

        def dfs(node: str, path: list[str]) -> list[str] | None:
            state = seen.get(node, 0)
            if state == 1:
                return path[path.index(node):] + [node]
            if state == 2:
                return None
            seen[node] = 1
            for nxt in edges.get(node, ()):
                found = dfs(nxt, path + [node])
                if found:
                    return found
            seen[node] = 2
            return None

        for start in list(edges):
            seen = {}
            cyc = dfs(start, [])
            if cyc:
                return cyc
        return None
