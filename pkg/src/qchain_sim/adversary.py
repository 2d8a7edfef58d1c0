"""Attacker models: Grover-boosted mining, fork races, and toy signature breaking."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Optional

import numpy as np
import sympy

from . import qsim
from .chain import BlockHeader, Hash256, ZERO_HASH, leading_zero_bits, merkle_root

MAX_NONCE_BITS = 24
MAX_TOY_MODULUS = 2**32
MAX_LEAD_CAP = 10_000  # keeps walk positions inside int16
SIG_HALF = 4  # bytes per signature component; enough for any modulus <= 2^32

# Resource estimate quoted for factoring RSA-2048 on a noisy quantum computer.
SHOR_DATAPOINT = {
    "target": "RSA-2048",
    "hours": 8,
    "noisy_qubits": 20_000_000,
}


class AdversaryError(ValueError):
    pass


class UnsolvablePuzzle(AdversaryError):
    pass


# -- PoW oracle --------------------------------------------------------------


@dataclass(frozen=True)
class MiningPuzzle:
    """A header template whose nonce ranges over ``2**nonce_bits`` values.

    A nonce is a solution when the SHA-256 of the encoded header has at least
    ``difficulty`` leading zero bits within its first ``truncate_bytes`` bytes.
    """

    template: BlockHeader
    nonce_bits: int
    difficulty: int
    truncate_bytes: int = 32

    def __post_init__(self):
        if not 1 <= self.nonce_bits <= MAX_NONCE_BITS:
            raise AdversaryError(f"nonce_bits must be in 1..{MAX_NONCE_BITS}, got {self.nonce_bits}")
        if not 1 <= self.truncate_bytes <= 32:
            raise AdversaryError("truncate_bytes must be in 1..32")
        if not 0 <= self.difficulty <= 8 * self.truncate_bytes:
            raise AdversaryError(
                f"difficulty must be in 0..{8 * self.truncate_bytes}, got {self.difficulty}"
            )

    @property
    def space(self) -> int:
        return 1 << self.nonce_bits

    def solves(self, nonce: int) -> bool:
        digest = hashlib.sha256(self.template.with_nonce(nonce).encode()).digest()
        return leading_zero_bits(digest[: self.truncate_bytes]) >= self.difficulty


@lru_cache(maxsize=64)
def solution_mask(puzzle: MiningPuzzle) -> np.ndarray:
    """Exhaustive scan of the nonce space. Cached; the returned array is read-only."""
    prefix = puzzle.template.encode()[:-8]
    t = puzzle.difficulty
    cut = puzzle.truncate_bytes
    mask = np.zeros(puzzle.space, dtype=bool)
    if t == 0:
        mask[:] = True
    else:
        for nonce in range(puzzle.space):
            digest = hashlib.sha256(prefix + nonce.to_bytes(8, "big")).digest()
            if leading_zero_bits(digest[:cut]) >= t:
                mask[nonce] = True
    mask.setflags(write=False)
    return mask


def pow_oracle(puzzle: MiningPuzzle):
    """Predicate over nonce indices: does this nonce solve the puzzle?"""
    return puzzle.solves


def count_solutions(puzzle: MiningPuzzle) -> int:
    return int(solution_mask(puzzle).sum())


def make_puzzle(
    nonce_bits: int,
    difficulty: int,
    timestamp: int = 0,
    prev_hash: Hash256 = ZERO_HASH,
    payload: bytes = b"puzzle",
) -> MiningPuzzle:
    template = BlockHeader(
        prev_hash=prev_hash,
        merkle_root=merkle_root([payload]),
        difficulty=difficulty,
        height=1,
        timestamp=timestamp,
    )
    return MiningPuzzle(template, nonce_bits, difficulty)


def find_puzzle_with_solutions(
    nonce_bits: int,
    difficulty: int,
    marked: int,
    start_timestamp: int = 0,
    max_tries: int = 10_000,
    prev_hash: Hash256 = ZERO_HASH,
) -> MiningPuzzle:
    """Scan template timestamps until a puzzle has exactly ``marked`` solutions."""
    for ts in range(start_timestamp, start_timestamp + max_tries):
        puzzle = make_puzzle(nonce_bits, difficulty, timestamp=ts, prev_hash=prev_hash)
        if count_solutions(puzzle) == marked:
            return puzzle
    raise AdversaryError(
        f"no puzzle with exactly {marked} solutions in {max_tries} templates"
    )


# -- Mining ------------------------------------------------------------------


@dataclass
class MiningResult:
    nonce: int
    queries: int
    samples: int = 1
    iterations: int = 0


@lru_cache(maxsize=64)
def _grover_plan(puzzle: MiningPuzzle) -> tuple[int, np.ndarray, float]:
    """Iteration count, output CDF and marked mass of the puzzle's Grover circuit.

    The circuit is fixed once the puzzle is, so every run of it yields the same
    output distribution; only the measurement draws differ.
    """
    mask = solution_mask(puzzle)
    M = int(mask.sum())
    if M == 0:
        raise UnsolvablePuzzle("puzzle has no solutions")
    k = qsim.optimal_iterations(puzzle.space, M)
    state, _ = qsim.grover_state(puzzle.nonce_bits, mask, k)
    probs = state.probabilities()
    cdf = np.cumsum(probs)
    cdf.setflags(write=False)
    return k, cdf, float(probs[mask].sum())


def grover_mine(puzzle: MiningPuzzle, rng: np.random.Generator, max_samples: int = 10_000) -> MiningResult:
    """Grover search over the nonce space with the optimal iteration count.

    Each attempt prepares a fresh superposition, applies ``k`` oracle+diffusion
    rounds (``k`` oracle queries) and measures. Failed samples are retried and
    their queries accumulate. The returned nonce always solves the puzzle.
    """
    mask = solution_mask(puzzle)
    k, cdf, _ = _grover_plan(puzzle)
    queries = 0
    for sample in range(1, max_samples + 1):
        u = rng.random() * cdf[-1]
        nonce = min(int(np.searchsorted(cdf, u, side="right")), puzzle.space - 1)
        queries += k
        # checking a measured candidate classically is not counted as an oracle query
        if mask[nonce]:
            return MiningResult(nonce, queries, sample, k)
    raise AdversaryError(f"grover_mine failed after {max_samples} samples")


def classical_mine(puzzle: MiningPuzzle, rng: np.random.Generator, batch: int = 1024) -> MiningResult:
    """Uniform sampling with replacement over the nonce space; one query per draw."""
    mask = solution_mask(puzzle)
    if not mask.any():
        raise UnsolvablePuzzle("puzzle has no solutions")
    attempts = 0
    while True:
        draws = rng.integers(0, puzzle.space, size=batch)
        hits = np.flatnonzero(mask[draws])
        if hits.size:
            first = int(hits[0])
            return MiningResult(int(draws[first]), attempts + first + 1, attempts + first + 1)
        attempts += batch


def expected_queries(kind: str, N: int, M: int) -> float:
    if M < 1 or N < 1:
        raise AdversaryError(f"need N >= 1 and M >= 1, got N={N}, M={M}")
    if kind == "classical":
        return N / M
    if kind == "grover":
        return math.pi / 4 * math.sqrt(N / M)
    raise AdversaryError(f"unknown miner kind {kind!r}")


# -- Fork race ---------------------------------------------------------------


def catchup_probability(q: float, z: int) -> float:
    if not 0 < q < 1:
        raise AdversaryError(f"q must be in (0, 1), got {q}")
    if z < 0:
        raise AdversaryError("z must be >= 0")
    if q >= 0.5:
        return 1.0
    return (q / (1 - q)) ** z


@dataclass(frozen=True)
class RaceConfig:
    """Fork race parameters.

    ``q`` is the attacker's share of the total oracle-query rate. For a Grover
    attacker the per-block work is ``expected_queries`` at search-space ratio
    ``2**difficulty`` for each side, which turns ``q`` into an effective
    block-finding share.
    """

    q: float
    z: int
    attacker_kind: str = "classical"
    trials: int = 10_000
    difficulty: int = 16
    lead_cap: int = 200

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise AdversaryError(f"q must be in (0, 1), got {self.q}")
        if self.z < 0:
            raise AdversaryError("z must be >= 0")
        if self.attacker_kind not in ("classical", "grover"):
            raise AdversaryError(f"attacker_kind must be classical or grover, got {self.attacker_kind!r}")
        if self.trials < 1:
            raise AdversaryError("trials must be >= 1")
        if not self.z < self.lead_cap <= MAX_LEAD_CAP:
            raise AdversaryError(f"lead_cap must be in (z, {MAX_LEAD_CAP}]")

    @property
    def p(self) -> float:
        return 1 - self.q


def effective_share(config: RaceConfig) -> float:
    """Probability that the next block is the attacker's."""
    if config.attacker_kind == "classical":
        return config.q
    space = 2**config.difficulty
    t_attacker = expected_queries("grover", space, 1)
    t_honest = expected_queries("classical", space, 1)
    rate_a = config.q / t_attacker
    rate_h = config.p / t_honest
    return rate_a / (rate_a + rate_h)


def simulate_race(config: RaceConfig, rng: np.random.Generator, chunk: int = 256) -> float:
    """Monte Carlo gambler's-ruin race; returns the empirical catch-up frequency.

    The attacker's deficit starts at ``z``; each block moves it by -1 (attacker)
    or +1 (honest). A walk ends at deficit 0 (caught up) or at ``lead_cap``.
    """
    q_eff = effective_share(config)
    if config.z == 0:
        return 1.0
    deficit = np.full(config.trials, config.z, dtype=np.int16)
    caught = 0
    while deficit.size:
        attacker = rng.random((deficit.size, chunk), dtype=np.float32) < q_eff
        steps = 1 - 2 * attacker.astype(np.int16)
        paths = deficit[:, None].astype(np.int16) + np.cumsum(steps, axis=1, dtype=np.int16)
        hit_zero = paths <= 0
        hit_cap = paths >= config.lead_cap
        first_zero = np.where(hit_zero.any(axis=1), hit_zero.argmax(axis=1), chunk)
        first_cap = np.where(hit_cap.any(axis=1), hit_cap.argmax(axis=1), chunk)
        caught += int(np.count_nonzero(first_zero < first_cap))
        alive = (first_zero == chunk) & (first_cap == chunk)
        deficit = paths[alive, -1]
    return caught / config.trials


# -- Toy discrete-log signatures -------------------------------------------


@dataclass(frozen=True)
class ToyGroup:
    """Multiplicative group mod a prime ``p`` with a primitive root ``g``."""

    p: int
    g: int

    def __post_init__(self):
        if not 5 <= self.p <= MAX_TOY_MODULUS or not sympy.isprime(self.p):
            raise AdversaryError(f"modulus must be a prime in 5..2^32, got {self.p}")
        if not 1 < self.g < self.p:
            raise AdversaryError("generator out of range")

    @property
    def order(self) -> int:
        return self.p - 1


@dataclass(frozen=True)
class ToyKeypair:
    group: ToyGroup
    private: int = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.private < self.group.order:
            raise AdversaryError("private key must be in 1..p-2")

    @property
    def public(self) -> int:
        return pow(self.group.g, self.private, self.group.p)


def toy_group(bits: int, rng: np.random.Generator) -> ToyGroup:
    """Random prime in ``[2**(bits-1), 2**bits)`` with its smallest primitive root."""
    if not 4 <= bits <= 32:
        raise AdversaryError(f"bits must be in 4..32, got {bits}")
    lo, hi = 1 << (bits - 1), 1 << bits
    while True:
        candidate = int(rng.integers(lo, hi)) | 1
        if candidate < hi and sympy.isprime(candidate):
            return ToyGroup(candidate, int(sympy.primitive_root(candidate)))


def toy_keygen(group: ToyGroup, rng: np.random.Generator) -> ToyKeypair:
    x = int(rng.integers(1, group.order))
    return ToyKeypair(group, x)


def _challenge(group: ToyGroup, r: int, public: int, message: bytes) -> int:
    data = r.to_bytes(8, "big") + public.to_bytes(8, "big") + message
    return int.from_bytes(hashlib.sha256(data).digest(), "big") % group.order


def toy_sign(keypair: ToyKeypair, message: bytes, rng: np.random.Generator) -> bytes:
    """Schnorr signature ``(e, s)`` with ``e = H(g^k || y || m)``, ``s = k + e*x``."""
    group = keypair.group
    while True:
        k = int(rng.integers(1, group.order))
        r = pow(group.g, k, group.p)
        e = _challenge(group, r, keypair.public, message)
        s = (k + e * keypair.private) % group.order
        if e and s:
            break
    return e.to_bytes(SIG_HALF, "big") + s.to_bytes(SIG_HALF, "big")


def toy_verify(group: ToyGroup, public: int, message: bytes, signature: bytes) -> bool:
    if len(signature) != 2 * SIG_HALF or not 1 <= public < group.p:
        return False
    e = int.from_bytes(signature[:SIG_HALF], "big")
    s = int.from_bytes(signature[SIG_HALF:], "big")
    if not (0 < e < group.order and 0 < s < group.order):
        return False
    # r = g^s * y^(-e)
    r = pow(group.g, s, group.p) * pow(public, group.order - e, group.p) % group.p
    return _challenge(group, r, public, message) == e


@dataclass
class BreakResult:
    private: int
    group_ops: int


def break_key(public: int, group: ToyGroup) -> BreakResult:
    """Baby-step giant-step discrete log: find ``x`` with ``g**x == public (mod p)``.

    ``group_ops`` counts the modular multiplications performed, a
    machine-independent cost measure.
    """
    p, g, n = group.p, group.g, group.order
    if not 1 <= public < p:
        raise AdversaryError("public key out of range")
    if public == 1:
        return BreakResult(0, 0)
    m = math.isqrt(n - 1) + 1
    table = {}
    e = 1
    for j in range(m):
        table.setdefault(e, j)
        e = e * g % p
    ops = m
    factor = pow(g, n - m, p)  # g^(-m)
    gamma = public
    for i in range(m):
        j = table.get(gamma)
        if j is not None:
            return BreakResult((i * m + j) % n, ops)
        gamma = gamma * factor % p
        ops += 1
    raise AdversaryError("discrete log not found; is g a generator?")


# -- Reporting ---------------------------------------------------------------


def threat_report(assumptions: Optional[Mapping[str, float]] = None) -> dict:
    """Quoted resource estimate for Shor plus any measured toy-scale figures."""
    report = {"shor_resource_estimate": dict(SHOR_DATAPOINT)}
    if assumptions:
        report["measured"] = {k: assumptions[k] for k in sorted(assumptions)}
    return report
