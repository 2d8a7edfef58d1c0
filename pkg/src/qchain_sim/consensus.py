"""GHZ shared-coin consensus and three-party detectable broadcast.

The GHZ round gives every node the same random bit no matter what Byzantine
nodes announce. Agreement on a chosen value goes through
:func:`detectable_broadcast`, one bit at a time, which either delivers the
sender's bit or lets honest receivers detect that the sender cheated.

Detectable broadcast runs over correlated lists from a trusted dealer: the
sender holds a random bit list ``s`` and each receiver sees every position of
``s`` with probability 1/2. Positions ``[0, L//2)`` back claims for bit 0 and
``[L//2, L)`` back claims for bit 1. A claim for ``b`` lists the positions of
that half where ``s`` equals ``1 - b``, so it discloses only that half of the
list. A receiver trying to pass off a claim for the other bit has to guess
``s`` on a half it was never told.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import qsim
from .network import Network, Topology

HIDDEN = -1
DEFAULT_LIST_LENGTH = 128
MIN_LIST_LENGTH = 8

SENDER_BEHAVIORS = ("honest", "equivocate")
RECEIVER_BEHAVIORS = ("honest", "forge")


class ConsensusError(ValueError):
    pass


@dataclass(frozen=True)
class Outcome:
    kind: str  # "agreed" | "detected-fault" | "disagreement"
    bit: Optional[int] = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "bit": self.bit}


# -- GHZ coin ----------------------------------------------------------------


@dataclass(frozen=True)
class ConsensusRound:
    round_id: int
    measured: tuple[int, ...]
    reported: tuple[int, ...]
    outputs: dict
    outcome: Outcome


def ghz_consensus_round(topology: Topology, rng: np.random.Generator, round_id: int = 0) -> ConsensusRound:
    """One GHZ coin round.

    A single computational-basis measurement of GHZ(N) is dealt bit by bit to
    the nodes; for a GHZ state this has the same distribution as each node
    measuring its own qubit. Honest nodes output their own bit. Byzantine nodes
    announce random bits, which no honest node reads when deciding.
    """
    n = topology.node_count
    measured = tuple(int(c) for c in qsim.measure_all(qsim.prepare_ghz(n), rng))
    lies = rng.integers(0, 2, n).tolist()
    reported = tuple(lies[i] if i in topology.byzantine else measured[i] for i in range(n))
    outputs = {i: measured[i] for i in topology.honest}
    values = set(outputs.values())
    if len(values) > 1:
        outcome = Outcome("disagreement")
    else:
        outcome = Outcome("agreed", values.pop() if values else None)
    return ConsensusRound(round_id, measured, reported, outputs, outcome)


# -- Correlated lists ----------------------------------------------------------


@dataclass(frozen=True)
class CorrelatedLists:
    sender: np.ndarray  # uint8 bits
    views: tuple[np.ndarray, np.ndarray]  # int8, HIDDEN where not revealed

    @property
    def length(self) -> int:
        return int(self.sender.size)


def deal_correlated_lists(L: int, rng: np.random.Generator) -> CorrelatedLists:
    if L < MIN_LIST_LENGTH:
        raise ConsensusError(f"list length must be >= {MIN_LIST_LENGTH}, got {L}")
    s = rng.integers(0, 2, L, dtype=np.uint8)
    views = []
    for _ in range(2):
        revealed = rng.random(L) < 0.5
        views.append(np.where(revealed, s.astype(np.int8), np.int8(HIDDEN)).astype(np.int8))
    return CorrelatedLists(s, (views[0], views[1]))


def claim_half(L: int, bit: int) -> range:
    return range(0, L // 2) if bit == 0 else range(L // 2, L)


@dataclass(frozen=True)
class Claim:
    bit: int
    positions: tuple[int, ...]  # positions in the bit's half where s != bit

    def to_json(self) -> dict:
        return {"bit": self.bit, "positions": list(self.positions)}

    @classmethod
    def from_json(cls, data: dict) -> "Claim":
        return cls(data["bit"], tuple(data["positions"]))


def make_claim(sender_list: np.ndarray, bit: int) -> Claim:
    half = claim_half(sender_list.size, bit)
    return Claim(bit, tuple(j for j in half if sender_list[j] == 1 - bit))


def claim_consistent(view: np.ndarray, claim: Optional[Claim]) -> bool:
    """Does the claim agree with every position of the view it covers?

    Malformed claims (bad bit, positions outside the bit's half, duplicates)
    are inconsistent.
    """
    if claim is None or claim.bit not in (0, 1):
        return False
    L = view.size
    half = claim_half(L, claim.bit)
    positions = claim.positions
    if len(set(positions)) != len(positions):
        return False
    if any(not isinstance(j, (int, np.integer)) or j not in half for j in positions):
        return False
    expected = np.full(L, claim.bit, dtype=np.int8)
    expected[list(positions)] = 1 - claim.bit
    covered = np.zeros(L, dtype=bool)
    covered[half.start : half.stop] = True
    seen = covered & (view != HIDDEN)
    return bool(np.array_equal(view[seen], expected[seen]))


def forge_claim(view: np.ndarray, bit: int, rng: np.random.Generator) -> Claim:
    """Best-effort claim for ``bit`` by a receiver that only has its own view."""
    half = claim_half(view.size, bit)
    guesses = rng.integers(0, 2, len(half)).tolist()
    positions = []
    for j, guess in zip(half, guesses):
        value = int(view[j]) if view[j] != HIDDEN else guess
        if value == 1 - bit:
            positions.append(j)
    return Claim(bit, tuple(positions))


def decide(direct: Optional[Claim], forwarded: Optional[Claim], view: np.ndarray) -> Optional[int]:
    """Receiver decision; ``None`` stands for the fault verdict."""
    direct_ok = claim_consistent(view, direct)
    forwarded_ok = claim_consistent(view, forwarded)
    if direct_ok and forwarded_ok:
        return direct.bit if direct.bit == forwarded.bit else None
    if direct_ok:
        return direct.bit
    if forwarded_ok:
        return forwarded.bit
    return None


@dataclass
class BroadcastResult:
    decisions: dict  # receiver node id -> 0 | 1 | None
    events: list = field(default_factory=list)


SENDER, RECEIVERS = 0, (1, 2)


def detectable_broadcast(
    lists: CorrelatedLists,
    bit: int,
    sender_behavior: str,
    receiver_behaviors: Sequence[str],
    rng: np.random.Generator,
) -> BroadcastResult:
    """Two-round broadcast from node 0 to nodes 1 and 2.

    Round 1: the sender sends ``(b, T)``; an equivocating sender sends ``b`` to
    node 1 and ``1 - b`` to node 2, each with a truthful position set.
    Round 2: receivers forward what they got; a forging receiver forwards a
    claim for the opposite bit instead. Decisions of Byzantine receivers are
    reported as ``None``.
    """
    if bit not in (0, 1):
        raise ConsensusError("bit must be 0 or 1")
    if sender_behavior not in SENDER_BEHAVIORS:
        raise ConsensusError(f"unknown sender behavior {sender_behavior!r}")
    if len(receiver_behaviors) != 2 or any(b not in RECEIVER_BEHAVIORS for b in receiver_behaviors):
        raise ConsensusError(f"receiver behaviors must be two of {RECEIVER_BEHAVIORS}")

    net = Network(Topology(3))
    bits = {1: bit, 2: bit if sender_behavior == "honest" else 1 - bit}
    for r in RECEIVERS:
        net.post_message(SENDER, r, {"round": 1, "claim": make_claim(lists.sender, bits[r]).to_json()})
    direct = {m.receiver: Claim.from_json(m.payload["claim"]) for m in net.advance(1)}

    for r, behavior in zip(RECEIVERS, receiver_behaviors):
        other = 3 - r
        view = lists.views[r - 1]
        if behavior == "forge":
            got = direct.get(r)
            target = 1 - (got.bit if got is not None else bit)
            claim = forge_claim(view, target, rng)
        else:
            claim = direct[r]
        net.post_message(r, other, {"round": 2, "claim": claim.to_json()})
    forwarded = {m.receiver: Claim.from_json(m.payload["claim"]) for m in net.advance(1)}

    decisions = {}
    for r, behavior in zip(RECEIVERS, receiver_behaviors):
        if behavior != "honest":
            decisions[r] = None
            continue
        decisions[r] = decide(direct.get(r), forwarded.get(r), lists.views[r - 1])
    return BroadcastResult(decisions, net.events)


@dataclass
class AgreementResult:
    decisions: dict  # honest node id -> bytes, or None for a detected fault
    sub_rounds: int
    outcome: Outcome
    events: list = field(default_factory=list)


def _behaviors(topology: Topology) -> tuple[str, list[str]]:
    if topology.node_count != 3:
        raise ConsensusError("detectable broadcast runs with exactly 3 nodes")
    sender = "equivocate" if SENDER in topology.byzantine else "honest"
    receivers = ["forge" if r in topology.byzantine else "honest" for r in RECEIVERS]
    return sender, receivers


def agree_on_value(
    topology: Topology,
    value: bytes,
    rng: np.random.Generator,
    list_length: int = DEFAULT_LIST_LENGTH,
) -> AgreementResult:
    """Broadcast ``value`` from node 0 bit by bit (MSB first) with fresh lists per bit."""
    sender_behavior, receiver_behaviors = _behaviors(topology)
    bits = np.unpackbits(np.frombuffer(value, dtype=np.uint8)).tolist() if value else []
    received = {r: [] for r in RECEIVERS}
    faulted = {r: False for r in RECEIVERS}
    events = []
    for i, b in enumerate(bits):
        lists = deal_correlated_lists(list_length, rng)
        res = detectable_broadcast(lists, b, sender_behavior, receiver_behaviors, rng)
        for e in res.events:
            events.append({**e, "sub_round": i})
        for r in RECEIVERS:
            d = res.decisions[r]
            if d is None:
                faulted[r] = True
            else:
                received[r].append(d)

    decisions = {}
    if SENDER not in topology.byzantine:
        decisions[SENDER] = bytes(value)
    for r in RECEIVERS:
        if r in topology.byzantine:
            continue
        decisions[r] = None if faulted[r] else np.packbits(np.array(received[r], dtype=np.uint8)).tobytes()

    values = set(decisions.values())
    if values == {None}:
        outcome = Outcome("detected-fault")
    elif len(values) == 1:
        outcome = Outcome("agreed")
    else:
        outcome = Outcome("disagreement")
    return AgreementResult(decisions, len(bits), outcome, events)


# -- Classical exhibit ---------------------------------------------------------


def classical_baseline_scenario(topology: Topology, rng: np.random.Generator) -> dict:
    """Plain two-round echo broadcast among three nodes, without correlated lists.

    A traitorous sender tells node 1 ``b`` and node 2 ``1 - b``; receivers echo
    what they heard and, with nothing to audit against, keep the direct value.
    The honest receivers end up split and neither can tell who lied.
    """
    if topology.node_count != 3:
        raise ConsensusError("the classical exhibit uses exactly 3 nodes")
    if len(topology.byzantine) > 1:
        raise ConsensusError("the classical exhibit allows at most one traitor")
    bit = int(rng.integers(0, 2))
    net = Network(topology)
    traitor_sender = SENDER in topology.byzantine
    for r in RECEIVERS:
        sent = (bit if r == 1 else 1 - bit) if traitor_sender else bit
        net.post_message(SENDER, r, {"round": 1, "bit": sent})
    direct = {m.receiver: m.payload["bit"] for m in net.advance(1)}
    for r in RECEIVERS:
        echoed = 1 - direct[r] if r in topology.byzantine else direct[r]
        net.post_message(r, 3 - r, {"round": 2, "echo": echoed})
    echoes = {m.receiver: m.payload["echo"] for m in net.advance(1)}

    decisions = {}
    if not traitor_sender:
        decisions[SENDER] = bit
    for r in RECEIVERS:
        if r not in topology.byzantine:
            decisions[r] = direct[r]
    honest_values = set(decisions.values())
    conflicting_views = {r: [direct[r], echoes[r]] for r in RECEIVERS if r not in topology.byzantine}
    return {
        "bit": bit,
        "byzantine": sorted(topology.byzantine),
        "events": net.events,
        "views": {str(r): v for r, v in conflicting_views.items()},
        "decisions": {str(k): v for k, v in sorted(decisions.items())},
        "outcome": "agreement" if len(honest_values) == 1 else "conflict",
    }


def round_transcript(rounds: Sequence[ConsensusRound]) -> dict:
    return {
        "rounds": [
            {
                "round": r.round_id,
                "measured": list(r.measured),
                "reported": list(r.reported),
                "outcome": r.outcome.to_json(),
            }
            for r in rounds
        ]
    }
