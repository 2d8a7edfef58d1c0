"""Exact statevector simulation for small qubit counts.

Basis index ``i`` of an n-qubit state corresponds to the bitstring
``format(i, f"0{n}b")``; qubit 0 is the most significant bit. Gates mutate
the state in place and return it, so calls can be chained.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, TextIO, Union

import numpy as np

MAX_QUBITS = 24

Predicate = Union[Callable[[int], bool], np.ndarray]


class QSimError(ValueError):
    pass


class StateVector:
    __slots__ = ("n", "amplitudes")

    def __init__(self, n: int, amplitudes: np.ndarray):
        self.n = n
        self.amplitudes = amplitudes

    @property
    def dim(self) -> int:
        return 1 << self.n

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sum(self.probabilities()))

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amplitudes.copy())

    def __repr__(self) -> str:
        return f"StateVector(n={self.n})"


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise QSimError(f"qubit count must be in 1..{MAX_QUBITS}, got {n}")


def new_zero_state(n: int) -> StateVector:
    _check_n(n)
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def apply_hadamard(state: StateVector, qubit: int) -> StateVector:
    if not 0 <= qubit < state.n:
        raise QSimError(f"qubit {qubit} out of range for n={state.n}")
    # view the vector as (high, 2, low) with the target bit in the middle axis
    low = 1 << (state.n - 1 - qubit)
    view = state.amplitudes.reshape(-1, 2, low)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = (a0 + a1) / math.sqrt(2)
    view[:, 1, :] = (a0 - a1) / math.sqrt(2)
    return state


def apply_hadamard_all(state: StateVector) -> StateVector:
    for q in range(state.n):
        apply_hadamard(state, q)
    return state


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    if control == target:
        raise QSimError("control and target must differ")
    idx = np.arange(state.dim)
    cbit = 1 << (state.n - 1 - control)
    tbit = 1 << (state.n - 1 - target)
    swap = (idx & cbit).astype(bool) & ~(idx & tbit).astype(bool)
    src = idx[swap]
    dst = src | tbit
    amps = state.amplitudes
    amps[src], amps[dst] = amps[dst].copy(), amps[src].copy()
    return state


def predicate_mask(n: int, pred: Predicate) -> np.ndarray:
    """Boolean array over all ``2**n`` basis indices."""
    dim = 1 << n
    if isinstance(pred, np.ndarray):
        mask = np.asarray(pred, dtype=bool)
        if mask.shape != (dim,):
            raise QSimError(f"predicate mask must have shape ({dim},), got {mask.shape}")
        return mask
    return np.fromiter((bool(pred(i)) for i in range(dim)), dtype=bool, count=dim)


def apply_predicate_phase_oracle(state: StateVector, pred: Predicate) -> StateVector:
    mask = predicate_mask(state.n, pred)
    state.amplitudes[mask] *= -1
    return state


def apply_diffusion(state: StateVector) -> StateVector:
    """Inversion about the mean, i.e. ``2|s><s| - I`` with ``|s>`` uniform."""
    amps = state.amplitudes
    mean = amps.mean()
    np.subtract(2 * mean, amps, out=amps)
    return state


# -- Grover ------------------------------------------------------------------


@dataclass(frozen=True)
class GroverPlan:
    n: int
    marked_count: int
    iterations: int

    def __post_init__(self):
        if not 1 <= self.marked_count <= (1 << self.n):
            raise QSimError(f"marked count must be in 1..2^{self.n}, got {self.marked_count}")
        if self.iterations < 0:
            raise QSimError("iterations must be >= 0")

    @property
    def theta(self) -> float:
        return grover_angle(1 << self.n, self.marked_count)

    @property
    def success_probability(self) -> float:
        return grover_success_probability(1 << self.n, self.marked_count, self.iterations)


def grover_angle(N: int, M: int) -> float:
    if not 1 <= M <= N:
        raise QSimError(f"need 1 <= M <= N, got N={N}, M={M}")
    return math.asin(math.sqrt(M / N))


def optimal_iterations(N: int, M: int) -> int:
    theta = grover_angle(N, M)
    return max(0, round(math.pi / (4 * theta) - 0.5))


def grover_success_probability(N: int, M: int, k: int) -> float:
    theta = grover_angle(N, M)
    return math.sin((2 * k + 1) * theta) ** 2


def grover_state(n: int, pred: Predicate, k: int) -> tuple[StateVector, np.ndarray]:
    """Final state after ``k`` Grover iterations, plus the marked mask."""
    if k < 0:
        raise QSimError("iterations must be >= 0")
    mask = predicate_mask(n, pred)
    if not mask.any():
        raise QSimError("predicate marks no basis index")
    state = apply_hadamard_all(new_zero_state(n))
    for _ in range(k):
        apply_predicate_phase_oracle(state, mask)
        apply_diffusion(state)
    return state, mask


def grover_search(n: int, pred: Predicate, k: int, rng: np.random.Generator) -> tuple[int, float]:
    """Run Grover for ``k`` iterations and measure.

    Returns ``(sampled basis index, exact marked mass)``.
    """
    state, mask = grover_state(n, pred, k)
    probs = state.probabilities()
    marked_mass = float(probs[mask].sum())
    return sample_index(probs, rng), marked_mass


# -- GHZ and measurement ---------------------------------------------------------


def prepare_ghz(n: int) -> StateVector:
    """H on qubit 0 followed by a CNOT ladder."""
    state = new_zero_state(n)
    apply_hadamard(state, 0)
    for q in range(1, n):
        apply_cnot(state, q - 1, q)
    return state


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    # guard against u landing exactly on the final boundary
    return min(idx, len(probs) - 1)


def measure_all(state: StateVector, rng: np.random.Generator) -> str:
    idx = sample_index(state.probabilities(), rng)
    return format(idx, f"0{state.n}b")


def dump_distribution_csv(state: StateVector, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["index", "probability"])
    for i, p in enumerate(state.probabilities().tolist()):
        writer.writerow([i, repr(p)])
