"""Forwarding fabric between the big core's commit paths and the checker LSLs.

Per commit path there is a dual-channel buffer (independent status and
runtime FIFOs), drained by either the wide multicast NoC (two packets per
little-core cycle, any packet in one beat) or the narrow baseline bus (one
packet per cycle; a status packet is wider than the 128-bit path and holds
the bus for three beats).

Arbitration is oldest order_tag first with ties broken by lowest path id.
Head-of-line blocking is per channel, so a held status packet never blocks
runtime traffic. A status packet whose next-segment consumer is not
dispatched yet delivers to its known destination and parks a copy in the
fabric until the owner exists, so a starved dispatch cannot deadlock
checkpoint delivery; grid traversal is a fixed two-cycle pipeline.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

NOC_PIPE_DELAY = 2  # little-core cycles of grid traversal per packet


class Channel(IntEnum):
    STATUS = 0
    RUNTIME = 1


@dataclass(frozen=True)
class FabricKind:
    name: str
    packets_per_cycle: int
    payload_bits: int
    status_beats: int  # bus beats a (wider) status packet occupies


HM_NOC = FabricKind("hmnoc", packets_per_cycle=2, payload_bits=256,
                    status_beats=1)
BASELINE = FabricKind("baseline", packets_per_cycle=1, payload_bits=128,
                      status_beats=3)

FABRIC_KINDS = {"hmnoc": HM_NOC, "baseline": BASELINE}


class OrderViolation(Exception):
    """Per-destination delivery order broke; simulator bug, aborts the run."""


@dataclass(slots=True)
class Packet:
    channel: Channel
    payload: object  # LogEntry or StatusPacket
    dests: tuple  # little-core ids, sorted
    order_tag: tuple  # (rcp_epoch, within-epoch sequence)
    wire_bytes: int
    rcp_id: int = -1  # status packets: which checkpoint this chunk belongs to
    needs_srcp_dest: bool = False


@dataclass
class DcBuffer:
    """Independent bounded FIFOs for status and runtime data on one path."""

    capacity: int
    status: deque = field(default_factory=deque)
    runtime: deque = field(default_factory=deque)

    def fifo(self, channel: Channel) -> deque:
        return self.status if channel == Channel.STATUS else self.runtime

    def free(self, channel: Channel) -> int:
        return self.capacity - len(self.fifo(channel))


def check_delivery_order(history) -> bool:
    """True when order_tags are non-decreasing (one destination, one channel)."""
    last = None
    for tag in history:
        if last is not None and tag < last:
            return False
        last = tag
    return True


class Fabric:
    """DC-buffers plus the shared interconnect, stepped at little-core rate.

    The engine supplies callbacks:
      can_accept(dest, nbytes) -> bool   destination LSL admission check
      deliver(dest, packet)              arrival at the destination LSL

    Conservation is tracked in (packet, destination) pairs: a pair is
    accepted when it becomes known (enqueue, late binding, or parked
    release) and delivered on arrival.
    """

    def __init__(self, kind: FabricKind, n_paths: int, dc_entries: int,
                 can_accept, deliver):
        self.kind = kind
        self.paths = [DcBuffer(dc_entries) for _ in range(n_paths)]
        self.can_accept = can_accept
        self.deliver = deliver
        self.pipe: deque = deque()  # (due_cycle, dest, packet) in due order
        self.parked: dict[int, list[Packet]] = {}  # rcp_id -> held copies
        self.replay_queue: deque = deque()  # released parked packets
        self.bus_busy = 0
        self.accepted = 0
        self.delivered = 0
        self.queued = 0  # packets sitting in DC buffers
        self.pending_bytes: dict[int, int] = {}  # dest -> admitted, unarrived
        self._last_tag: dict[tuple, tuple] = {}  # (dest, channel) -> tag

    # -- big-core side -----------------------------------------------------

    def enqueue(self, path: int, packet: Packet) -> bool:
        """Append to the matching channel FIFO; False means backpressure."""
        buf = self.paths[path]
        fifo = buf.fifo(packet.channel)
        if len(fifo) >= buf.capacity:
            return False
        fifo.append(packet)
        self.accepted += len(packet.dests)
        self.queued += 1
        return True

    def free_slots(self, path: int, channel: Channel) -> int:
        return self.paths[path].free(channel)

    # -- little-core side --------------------------------------------------

    def bind_srcp_dest(self, rcp_id: int, dest: int, retag) -> None:
        """The segment this checkpoint starts got an owner.

        Parked copies (already delivered to the closing-side consumer) are
        re-queued for `dest`, and chunks still sitting in the buffers gain
        `dest` in place. Everything is re-tagged in queue order through
        `retag(old_tag) -> tag`, a monotone tag mint: the new owner must see
        non-decreasing tags even though earlier copies of this checkpoint
        already traveled with older ones.
        """
        for pkt in self.parked.pop(rcp_id, ()):
            self.accepted += 1
            self.replay_queue.append(Packet(
                pkt.channel, pkt.payload, (dest,), retag(pkt.order_tag),
                pkt.wire_bytes, pkt.rcp_id, False))
        for buf in self.paths:
            for pkt in buf.status:
                if pkt.rcp_id == rcp_id and pkt.needs_srcp_dest:
                    pkt.needs_srcp_dest = False
                    pkt.order_tag = retag(pkt.order_tag)
                    if dest not in pkt.dests:
                        pkt.dests = tuple(sorted(pkt.dests + (dest,)))
                        self.accepted += 1

    def in_flight(self) -> int:
        return self.accepted - self.delivered

    def idle(self) -> bool:
        return (self.in_flight() == 0 and not self.parked
                and not self.replay_queue and not self.pipe
                and self.bus_busy == 0)

    def _beats(self, packet: Packet) -> int:
        return self.kind.status_beats if packet.channel == Channel.STATUS else 1

    def _deliver(self, dest: int, packet: Packet) -> None:
        key = (dest, packet.channel)
        last = self._last_tag.get(key)
        if last is not None and packet.order_tag < last:
            raise OrderViolation(
                f"dest {dest} channel {packet.channel.name}: tag "
                f"{packet.order_tag} after {last}")
        self._last_tag[key] = packet.order_tag
        self.delivered += 1
        self.pending_bytes[dest] = (self.pending_bytes.get(dest, 0)
                                    - packet.wire_bytes)
        self.deliver(dest, packet)

    def step(self, cycle: int) -> None:
        """One little-core cycle: mature arrivals, then admit new packets."""
        while self.pipe and self.pipe[0][0] <= cycle:
            _, dest, pkt = self.pipe.popleft()
            self._deliver(dest, pkt)

        if self.bus_busy > 0:
            self.bus_busy -= 1
            return
        if self.queued == 0 and not self.replay_queue:
            return

        budget = self.kind.packets_per_cycle
        while budget > 0:
            candidates = []
            if self.replay_queue:
                head = self.replay_queue[0]
                candidates.append((head.order_tag, -1, Channel.STATUS, head))
            for p, buf in enumerate(self.paths):
                if buf.status:
                    candidates.append((buf.status[0].order_tag, p,
                                       Channel.STATUS, buf.status[0]))
                if buf.runtime:
                    candidates.append((buf.runtime[0].order_tag, p,
                                       Channel.RUNTIME, buf.runtime[0]))
            if not candidates:
                break
            candidates.sort(key=lambda c: (c[0], c[1]))
            admitted = False
            for _tag, p, chan, pkt in candidates:
                dests = pkt.dests
                park = pkt.needs_srcp_dest  # owner unknown: hold a copy
                ok = True
                for d in dests:
                    extra = pkt.wire_bytes + self.pending_bytes.get(d, 0)
                    if not self.can_accept(d, extra):
                        ok = False
                        break
                if not ok:
                    continue  # held; younger traffic on other channels may go
                if p == -1:
                    self.replay_queue.popleft()
                else:
                    self.paths[p].fifo(chan).popleft()
                    self.queued -= 1
                beats = self._beats(pkt)
                due = cycle + NOC_PIPE_DELAY + beats - 1
                for d in dests:
                    self.pending_bytes[d] = (self.pending_bytes.get(d, 0)
                                             + pkt.wire_bytes)
                    self.pipe.append((due, d,
                                      Packet(pkt.channel, pkt.payload, (d,),
                                             pkt.order_tag, pkt.wire_bytes,
                                             pkt.rcp_id, False)))
                if park:
                    self.parked.setdefault(pkt.rcp_id, []).append(pkt)
                if beats > 1:
                    self.bus_busy = beats - 1
                    budget = 0
                else:
                    budget -= 1
                admitted = True
                break
            if not admitted:
                break
