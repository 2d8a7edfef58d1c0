"""BB84 over a simulated channel, with an optional intercept-resend eavesdropper.

Single qubits are modeled by their exact measurement statistics: measuring in
the preparation basis returns the prepared bit, measuring in the other basis
returns a fair coin. No statevector is needed.

Bases are encoded as 0 (rectilinear, ``+``) and 1 (diagonal, ``x``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_ABORT_THRESHOLD = 0.11
DEFAULT_SAMPLE_FRACTION = 0.5
MIN_QUBITS = 16


class QKDError(ValueError):
    pass


class KeyTooShort(QKDError):
    pass


class InsufficientKey(QKDError):
    pass


class KeyReuse(QKDError):
    pass


@dataclass(frozen=True)
class QKDConfig:
    n_qubits: int
    eve_fraction: float = 0.0
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION
    abort_threshold: float = DEFAULT_ABORT_THRESHOLD

    def __post_init__(self):
        if self.n_qubits < MIN_QUBITS:
            raise QKDError(f"n_qubits must be >= {MIN_QUBITS}, got {self.n_qubits}")
        if not 0.0 <= self.eve_fraction <= 1.0:
            raise QKDError(f"eve_fraction must be in [0, 1], got {self.eve_fraction}")
        if not 0.0 < self.sample_fraction < 1.0:
            raise QKDError(f"sample_fraction must be in (0, 1), got {self.sample_fraction}")
        if not 0.0 <= self.abort_threshold <= 1.0:
            raise QKDError(f"abort_threshold must be in [0, 1], got {self.abort_threshold}")


def _bits_hex(bits: np.ndarray) -> str:
    return np.packbits(bits.astype(np.uint8)).tobytes().hex()


@dataclass
class QKDSession:
    config: QKDConfig
    alice_bits: np.ndarray
    alice_bases: np.ndarray
    bob_bases: np.ndarray
    bob_bits: np.ndarray
    intercepted: np.ndarray
    kept_positions: np.ndarray
    sifted_key_a: np.ndarray
    sifted_key_b: np.ndarray
    sample_positions: np.ndarray  # indices into the sifted keys
    qber_estimate: float
    aborted: bool
    final_key_a: np.ndarray = field(repr=False)
    final_key_b: np.ndarray = field(repr=False)

    @property
    def final_key(self) -> np.ndarray:
        return self.final_key_a

    def residual_keys(self) -> tuple[np.ndarray, np.ndarray]:
        """Sifted bits not sacrificed to the QBER sample, whether or not aborted."""
        keep = np.ones(self.sifted_key_a.size, dtype=bool)
        keep[self.sample_positions] = False
        return self.sifted_key_a[keep], self.sifted_key_b[keep]

    def residual_error_rate(self) -> float:
        a, b = self.residual_keys()
        return float(np.mean(a != b)) if a.size else 0.0

    def to_json(self) -> dict:
        return {
            "n_qubits": self.config.n_qubits,
            "eve_fraction": self.config.eve_fraction,
            "alice_bases": "".join("+x"[b] for b in self.alice_bases.tolist()),
            "bob_bases": "".join("+x"[b] for b in self.bob_bases.tolist()),
            "kept_positions": self.kept_positions.tolist(),
            "sample_positions": self.sample_positions.tolist(),
            "qber_estimate": self.qber_estimate,
            "aborted": self.aborted,
            "final_key_bits": int(self.final_key_a.size),
            "final_key_a": _bits_hex(self.final_key_a),
            "final_key_b": _bits_hex(self.final_key_b),
        }


def sift(bits_a, bases_a, bits_b, bases_b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    bits_a, bases_a = np.asarray(bits_a), np.asarray(bases_a)
    bits_b, bases_b = np.asarray(bits_b), np.asarray(bases_b)
    n = bits_a.size
    if not (bases_a.size == bits_b.size == bases_b.size == n):
        raise QKDError("sift inputs must have equal lengths")
    kept = np.flatnonzero(bases_a == bases_b)
    return bits_a[kept], bits_b[kept], kept


def _measure(bits: np.ndarray, prep_bases: np.ndarray, meas_bases: np.ndarray, coins: np.ndarray) -> np.ndarray:
    return np.where(prep_bases == meas_bases, bits, coins)


def bb84_run(config: QKDConfig, rng: np.random.Generator) -> QKDSession:
    n = config.n_qubits
    # draw order is fixed so that f only changes which qubits Eve touches
    alice_bits = rng.integers(0, 2, n, dtype=np.uint8)
    alice_bases = rng.integers(0, 2, n, dtype=np.uint8)
    intercepted = rng.random(n) < config.eve_fraction
    eve_bases = rng.integers(0, 2, n, dtype=np.uint8)
    eve_coins = rng.integers(0, 2, n, dtype=np.uint8)
    bob_bases = rng.integers(0, 2, n, dtype=np.uint8)
    bob_coins = rng.integers(0, 2, n, dtype=np.uint8)

    eve_bits = _measure(alice_bits, alice_bases, eve_bases, eve_coins)
    # Eve resends the state she measured, in her own basis
    sent_bits = np.where(intercepted, eve_bits, alice_bits)
    sent_bases = np.where(intercepted, eve_bases, alice_bases)
    bob_bits = _measure(sent_bits, sent_bases, bob_bases, bob_coins)

    key_a, key_b, kept = sift(alice_bits, alice_bases, bob_bits, bob_bases)
    n_sample = int(round(config.sample_fraction * key_a.size))
    if n_sample < 1 or n_sample >= key_a.size:
        raise KeyTooShort(
            f"{key_a.size} sifted bits cannot spare a {config.sample_fraction} sample; "
            "increase n_qubits"
        )
    sample = np.sort(rng.choice(key_a.size, size=n_sample, replace=False))
    qber = float(np.count_nonzero(key_a[sample] != key_b[sample]) / n_sample)
    aborted = qber > config.abort_threshold

    if aborted:
        final_a = final_b = np.zeros(0, dtype=np.uint8)
    else:
        keep = np.ones(key_a.size, dtype=bool)
        keep[sample] = False
        final_a, final_b = key_a[keep], key_b[keep]

    return QKDSession(
        config=config,
        alice_bits=alice_bits,
        alice_bases=alice_bases,
        bob_bases=bob_bases,
        bob_bits=bob_bits,
        intercepted=intercepted,
        kept_positions=kept,
        sifted_key_a=key_a,
        sifted_key_b=key_b,
        sample_positions=sample,
        qber_estimate=qber,
        aborted=aborted,
        final_key_a=final_a,
        final_key_b=final_b,
    )


# -- One-time pad --------------------------------------------------------------


class KeyPad:
    """Key material for one end of a link. Tracks which bits have been used.

    Not thread-safe; confine a pad to one thread at a time.
    """

    def __init__(self, bits):
        self.bits = np.asarray(bits, dtype=np.uint8).copy()
        if self.bits.ndim != 1 or np.any(self.bits > 1):
            raise QKDError("key must be a 1-D array of bits")
        self.spent = np.zeros(self.bits.size, dtype=bool)
        self._cursor = 0

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def remaining(self) -> int:
        return int(np.count_nonzero(~self.spent))

    def take(self, n_bits: int, offset: int | None = None) -> tuple[int, np.ndarray]:
        start = self._cursor if offset is None else offset
        if start < 0 or start + n_bits > self.bits.size:
            raise InsufficientKey(
                f"need {n_bits} key bits at offset {start}, pad holds {self.bits.size}"
            )
        window = slice(start, start + n_bits)
        if self.spent[window].any():
            raise KeyReuse(f"key bits {start}..{start + n_bits - 1} were already used")
        self.spent[window] = True
        self._cursor = max(self._cursor, start + n_bits)
        return start, self.bits[window]


@dataclass(frozen=True)
class Ciphertext:
    offset: int
    data: bytes


def _xor(data: bytes, key_bits: np.ndarray) -> bytes:
    key = np.packbits(key_bits)
    return (np.frombuffer(data, dtype=np.uint8) ^ key).tobytes()


def otp_protect(pad: KeyPad, message: bytes, offset: int | None = None) -> Ciphertext:
    start, key_bits = pad.take(8 * len(message), offset)
    return Ciphertext(start, _xor(message, key_bits))


def otp_open(pad: KeyPad, ciphertext: Ciphertext) -> bytes:
    _, key_bits = pad.take(8 * len(ciphertext.data), ciphertext.offset)
    return _xor(ciphertext.data, key_bits)
