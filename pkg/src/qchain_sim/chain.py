"""Blockchain core: hashing, Merkle trees, headers, proof of work, validation."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"

HEADER_SIZE = 8 + 8 + 32 + 32 + 1 + 8
_HEADER_STRUCT = struct.Struct(">QQ32s32sBQ")
U64_MAX = 2**64 - 1


class ChainError(ValueError):
    pass


class MiningExhausted(RuntimeError):
    """No qualifying nonce was found within the attempt budget."""

    def __init__(self, attempts: int):
        super().__init__(f"no valid nonce after {attempts} attempts")
        self.attempts = attempts


class Hash256(bytes):
    """A 32-byte SHA-256 digest."""

    def __new__(cls, value: bytes = bytes(32)):
        if len(value) != 32:
            raise ChainError(f"Hash256 needs exactly 32 bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def fromhex(cls, text: str) -> "Hash256":
        return cls(bytes.fromhex(text))

    def leading_zero_bits(self) -> int:
        return leading_zero_bits(self)

    def __repr__(self) -> str:
        return f"Hash256({self.hex()})"


ZERO_HASH = Hash256(bytes(32))


def sha256(data: bytes) -> Hash256:
    return Hash256(hashlib.sha256(data).digest())


def leading_zero_bits(digest: bytes) -> int:
    value = int.from_bytes(digest, "big")
    return 8 * len(digest) - value.bit_length()


# -- Merkle tree -------------------------------------------------------------


def _leaf_hash(leaf: bytes) -> bytes:
    return hashlib.sha256(LEAF_PREFIX + leaf).digest()


def _node_hash(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(NODE_PREFIX + left + right).digest()


def _levels(leaves: Sequence[bytes]) -> list[list[bytes]]:
    """All tree levels, leaf hashes first; odd levels are padded by duplication."""
    if not leaves:
        raise ChainError("merkle tree needs at least one leaf")
    level = [_leaf_hash(leaf) for leaf in leaves]
    levels = [level]
    while len(level) > 1:
        if len(level) % 2:
            level = level + [level[-1]]
            levels[-1] = level
        level = [_node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(level)
    return levels


def merkle_root(leaves: Sequence[bytes]) -> Hash256:
    return Hash256(_levels(leaves)[-1][0])


@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    # (sibling digest, side of the sibling relative to the running hash)
    siblings: tuple[tuple[Hash256, str], ...] = ()


def merkle_depth(leaf_count: int) -> int:
    return max(0, (leaf_count - 1).bit_length())


def merkle_prove(leaves: Sequence[bytes], index: int) -> MerkleProof:
    if not 0 <= index < len(leaves):
        raise IndexError(f"leaf index {index} out of range for {len(leaves)} leaves")
    siblings = []
    pos = index
    for level in _levels(leaves)[:-1]:
        if pos % 2:
            siblings.append((Hash256(level[pos - 1]), "left"))
        else:
            siblings.append((Hash256(level[pos + 1]), "right"))
        pos //= 2
    return MerkleProof(index, tuple(siblings))


def merkle_verify(root: bytes, leaf: bytes, proof: MerkleProof) -> bool:
    running = _leaf_hash(leaf)
    pos = proof.leaf_index
    for sibling, side in proof.siblings:
        # side must agree with the index path, otherwise a proof could be replayed
        # for a different position
        expected = "left" if pos % 2 else "right"
        if side != expected:
            return False
        running = _node_hash(sibling, running) if side == "left" else _node_hash(running, sibling)
        pos //= 2
    return pos == 0 and running == bytes(root)


# -- Headers and blocks ------------------------------------------------------


@dataclass(frozen=True)
class BlockHeader:
    prev_hash: Hash256
    merkle_root: Hash256
    nonce: int = 0
    difficulty: int = 0
    height: int = 0
    timestamp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "prev_hash", Hash256(self.prev_hash))
        object.__setattr__(self, "merkle_root", Hash256(self.merkle_root))
        if not 0 <= self.difficulty <= 255:
            raise ChainError(f"difficulty must be in 0..255, got {self.difficulty}")
        for name in ("nonce", "height", "timestamp"):
            value = getattr(self, name)
            if not 0 <= value <= U64_MAX:
                raise ChainError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def with_nonce(self, nonce: int) -> "BlockHeader":
        return replace(self, nonce=nonce)

    def encode(self) -> bytes:
        return _HEADER_STRUCT.pack(
            self.height,
            self.timestamp,
            self.prev_hash,
            self.merkle_root,
            self.difficulty,
            self.nonce,
        )

    @classmethod
    def decode(cls, data: bytes) -> "BlockHeader":
        if len(data) != HEADER_SIZE:
            raise ChainError(f"header encoding is {HEADER_SIZE} bytes, got {len(data)}")
        height, timestamp, prev, root, difficulty, nonce = _HEADER_STRUCT.unpack(data)
        return cls(Hash256(prev), Hash256(root), nonce, difficulty, height, timestamp)


def block_hash(header: BlockHeader) -> Hash256:
    return sha256(header.encode())


def meets_difficulty(digest: bytes, difficulty: int) -> bool:
    return leading_zero_bits(digest) >= difficulty


def pow_check(header: BlockHeader) -> bool:
    return meets_difficulty(block_hash(header), header.difficulty)


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[bytes, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "transactions", tuple(bytes(t) for t in self.transactions))

    @property
    def hash(self) -> Hash256:
        return block_hash(self.header)

    def encode(self) -> bytes:
        parts = [self.header.encode(), len(self.transactions).to_bytes(4, "big")]
        for tx in self.transactions:
            parts.append(len(tx).to_bytes(4, "big"))
            parts.append(tx)
        return b"".join(parts)

    @classmethod
    def decode(cls, data: bytes) -> "Block":
        if len(data) < HEADER_SIZE + 4:
            raise ChainError("truncated block encoding")
        header = BlockHeader.decode(data[:HEADER_SIZE])
        count = int.from_bytes(data[HEADER_SIZE : HEADER_SIZE + 4], "big")
        pos = HEADER_SIZE + 4
        txs = []
        for _ in range(count):
            if pos + 4 > len(data):
                raise ChainError("truncated transaction length")
            n = int.from_bytes(data[pos : pos + 4], "big")
            pos += 4
            if pos + n > len(data):
                raise ChainError("truncated transaction payload")
            txs.append(data[pos : pos + n])
            pos += n
        if pos != len(data):
            raise ChainError(f"{len(data) - pos} trailing bytes after block")
        return cls(header, tuple(txs))


@dataclass(frozen=True)
class Chain:
    blocks: tuple[Block, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def tip(self) -> Block:
        return self.blocks[-1]


# -- Mining ------------------------------------------------------------------


def mine_classical(
    template: BlockHeader,
    rng: np.random.Generator,
    max_attempts: int,
    nonce_bits: int = 64,
    batch: int = 4096,
) -> tuple[int, int]:
    """Draw nonces uniformly (with replacement) until the header passes ``pow_check``.

    Returns ``(nonce, attempts)``. Raises :class:`MiningExhausted` when the
    budget runs out.
    """
    if max_attempts < 1:
        raise ChainError("max_attempts must be >= 1")
    if not 1 <= nonce_bits <= 64:
        raise ChainError(f"nonce_bits must be in 1..64, got {nonce_bits}")
    # nonce is the last field of the encoding; hash prefix || nonce directly
    prefix = template.encode()[:-8]
    target = template.difficulty
    high = 2**nonce_bits - 1
    attempts = 0
    while attempts < max_attempts:
        size = min(batch, max_attempts - attempts)
        nonces = rng.integers(0, high, size=size, endpoint=True, dtype=np.uint64)
        for nonce in nonces.tolist():
            attempts += 1
            digest = hashlib.sha256(prefix + nonce.to_bytes(8, "big")).digest()
            if leading_zero_bits(digest) >= target:
                return nonce, attempts
    raise MiningExhausted(attempts)


def make_block(
    prev: Optional[Block],
    transactions: Iterable[bytes],
    difficulty: int,
    rng: np.random.Generator,
    timestamp: Optional[int] = None,
    max_attempts: int = 2**32,
) -> Block:
    txs = tuple(transactions)
    height = 0 if prev is None else prev.header.height + 1
    template = BlockHeader(
        prev_hash=ZERO_HASH if prev is None else prev.hash,
        merkle_root=merkle_root(txs),
        difficulty=difficulty,
        height=height,
        timestamp=height if timestamp is None else timestamp,
    )
    nonce, _ = mine_classical(template, rng, max_attempts)
    return Block(template.with_nonce(nonce), txs)


def build_chain(
    n_blocks: int,
    difficulty: int,
    rng: np.random.Generator,
    txs_per_block: int = 4,
    tx_size: int = 32,
) -> Chain:
    """Mine a fresh chain whose transactions are random opaque byte strings."""
    blocks: list[Block] = []
    for height in range(n_blocks):
        if height == 0:
            txs = [b"genesis"]
        else:
            txs = [rng.bytes(tx_size) for _ in range(txs_per_block)]
        blocks.append(make_block(blocks[-1] if blocks else None, txs, difficulty, rng))
    return Chain(tuple(blocks))


# -- Validation --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    index: int
    reason: str

    def __str__(self) -> str:
        return f"block {self.index}: {self.reason}"


def validate_chain(chain: Chain) -> Optional[Violation]:
    """Return the first violation found, walking from genesis, or ``None`` if valid.

    Reasons: ``empty-chain``, ``genesis-malformed``, ``height-mismatch``,
    ``link-mismatch``, ``difficulty-mismatch``, ``merkle-mismatch``, ``pow-failed``.
    The difficulty is fixed by the genesis block (no retargeting).
    """
    if not chain.blocks:
        return Violation(0, "empty-chain")
    genesis = chain.blocks[0].header
    if genesis.height != 0 or genesis.prev_hash != ZERO_HASH:
        return Violation(0, "genesis-malformed")
    prev_hash = None
    for i, block in enumerate(chain.blocks):
        header = block.header
        if header.height != i:
            return Violation(i, "height-mismatch")
        if i > 0 and header.prev_hash != prev_hash:
            return Violation(i, "link-mismatch")
        if header.difficulty != genesis.difficulty:
            return Violation(i, "difficulty-mismatch")
        if not block.transactions or header.merkle_root != merkle_root(block.transactions):
            return Violation(i, "merkle-mismatch")
        prev_hash = block_hash(header)
        if leading_zero_bits(prev_hash) < header.difficulty:
            return Violation(i, "pow-failed")
    return None
