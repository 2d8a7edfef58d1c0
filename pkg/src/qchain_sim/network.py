"""Tick-based deterministic message network."""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional


class NetworkError(ValueError):
    pass


def payload_digest(payload: Any) -> str:
    data = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class Topology:
    node_count: int
    byzantine: frozenset = frozenset()
    latencies: Mapping[tuple[int, int], int] = field(default_factory=dict)
    default_latency: int = 1

    def __post_init__(self):
        if self.node_count < 1:
            raise NetworkError("node_count must be >= 1")
        object.__setattr__(self, "byzantine", frozenset(self.byzantine))
        bad = [b for b in self.byzantine if not 0 <= b < self.node_count]
        if bad:
            raise NetworkError(f"byzantine ids {sorted(bad)} outside 0..{self.node_count - 1}")
        if self.default_latency < 1:
            raise NetworkError("latencies must be >= 1 tick")
        for (src, dst), ticks in self.latencies.items():
            self._check_node(src)
            self._check_node(dst)
            if ticks < 1:
                raise NetworkError(f"latency {src}->{dst} must be >= 1 tick, got {ticks}")

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.node_count:
            raise NetworkError(f"unknown node id {node}")

    @property
    def honest(self) -> list[int]:
        return [i for i in range(self.node_count) if i not in self.byzantine]

    def latency(self, src: int, dst: int) -> int:
        self._check_node(src)
        self._check_node(dst)
        return self.latencies.get((src, dst), self.default_latency)


@dataclass(frozen=True, order=True)
class Message:
    deliver_tick: int
    sender: int
    receiver: int
    seq: int
    sent_tick: int = field(compare=False)
    payload: Any = field(compare=False)


class Network:
    """Messages posted at tick ``t`` arrive at ``t + latency(from, to)``.

    Delivery order is ``(tick, from, to, sequence)``; per directed pair this is
    FIFO because the sequence number only grows.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        self.tick = 0
        self._seq = 0
        self._pending: list[Message] = []
        self.events: list[dict] = []

    def post_message(self, src: int, dst: int, payload: Any, tick: Optional[int] = None) -> Message:
        sent = self.tick if tick is None else tick
        if sent < self.tick:
            raise NetworkError(f"cannot post at tick {sent}; clock is at {self.tick}")
        msg = Message(sent + self.topology.latency(src, dst), src, dst, self._seq, sent, payload)
        self._seq += 1
        heapq.heappush(self._pending, msg)
        return msg

    def broadcast(self, src: int, payload: Any, targets: Optional[Iterable[int]] = None) -> None:
        for dst in targets if targets is not None else range(self.topology.node_count):
            if dst != src:
                self.post_message(src, dst, payload)

    def advance(self, ticks: int = 1) -> list[Message]:
        if ticks < 0:
            raise NetworkError("cannot advance by a negative tick count")
        self.tick += ticks
        delivered = []
        while self._pending and self._pending[0].deliver_tick <= self.tick:
            msg = heapq.heappop(self._pending)
            delivered.append(msg)
            self.events.append(
                {
                    "tick": msg.deliver_tick,
                    "from": msg.sender,
                    "to": msg.receiver,
                    "digest": payload_digest(msg.payload),
                }
            )
        return delivered

    @property
    def pending(self) -> int:
        return len(self._pending)
