"""Fixed-size transfer command descriptors.

A producer delegates one communication action per command.  The descriptor
packs into exactly 16 bytes so the emulated device side can hand it over
with a single wide store; the consumer proxy unpacks it on its side of the
channel.

Bit layout, LSB first (two little-endian 64-bit words):

  word0: kind[0:2] dst_rank[2:14] channel_id[14:20] src_offset[20:52] dst_offset_lo12[52:64]
  word1: dst_offset_hi20[0:20] length_or_value[20:52] flags[52:54] reserved[54:64]

Reserved bits must be zero; decoding rejects anything else.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolViolation

# command kinds
WRITE = 0
ATOMIC = 1
DRAIN = 2
BARRIER = 3

KIND_NAMES = {WRITE: "Write", ATOMIC: "Atomic", DRAIN: "Drain", BARRIER: "Barrier"}

# flag bits
FLAG_PIGGYBACK_ATOMIC = 1
FLAG_SAME_RAIL_BARRIER = 2

_MAX_RANK = (1 << 12) - 1
_MAX_CHANNEL = (1 << 6) - 1
_MAX_U32 = (1 << 32) - 1

CMD_BYTES = 16


@dataclass(frozen=True)
class TransferCmd:
    """One 16-byte command descriptor."""

    kind: int
    dst_rank: int = 0
    channel_id: int = 0
    src_offset: int = 0
    dst_offset: int = 0
    length_or_value: int = 0
    flags: int = 0

    def validate(self) -> None:
        if not 0 <= self.kind <= 3:
            raise ProtocolViolation(f"kind out of range: {self.kind}")
        if not 0 <= self.dst_rank <= _MAX_RANK:
            raise ProtocolViolation(f"dst_rank out of range: {self.dst_rank}")
        if not 0 <= self.channel_id <= _MAX_CHANNEL:
            raise ProtocolViolation(f"channel_id out of range: {self.channel_id}")
        for name in ("src_offset", "dst_offset", "length_or_value"):
            v = getattr(self, name)
            if not 0 <= v <= _MAX_U32:
                raise ProtocolViolation(f"{name} out of range: {v}")
        if not 0 <= self.flags <= 3:
            raise ProtocolViolation(f"flags out of range: {self.flags}")


def pack(cmd: TransferCmd) -> tuple[int, int]:
    """Pack a command into its two 64-bit words."""
    cmd.validate()
    lo = (
        cmd.kind
        | cmd.dst_rank << 2
        | cmd.channel_id << 14
        | cmd.src_offset << 20
        | (cmd.dst_offset & 0xFFF) << 52
    )
    hi = (cmd.dst_offset >> 12) | cmd.length_or_value << 20 | cmd.flags << 52
    return lo, hi


def unpack(lo: int, hi: int) -> TransferCmd:
    lo &= (1 << 64) - 1
    hi &= (1 << 64) - 1
    if hi >> 54:
        raise ProtocolViolation(f"reserved bits set in command word: {hi >> 54:#x}")
    return TransferCmd(
        kind=lo & 3,
        dst_rank=(lo >> 2) & 0xFFF,
        channel_id=(lo >> 14) & 0x3F,
        src_offset=(lo >> 20) & 0xFFFFFFFF,
        dst_offset=((lo >> 52) | (hi & 0xFFFFF) << 12) & 0xFFFFFFFF,
        length_or_value=(hi >> 20) & 0xFFFFFFFF,
        flags=(hi >> 52) & 3,
    )


def to_bytes(cmd: TransferCmd) -> bytes:
    """Byte-exact 16-byte little-endian serialization (trace/replay format)."""
    lo, hi = pack(cmd)
    return struct.pack("<QQ", lo, hi)


def from_bytes(raw: bytes) -> TransferCmd:
    if len(raw) != CMD_BYTES:
        raise ProtocolViolation(f"command record must be {CMD_BYTES} bytes, got {len(raw)}")
    lo, hi = struct.unpack("<QQ", raw)
    return unpack(lo, hi)


def pack_fields(
    kind: np.ndarray,
    dst_rank: np.ndarray,
    channel_id: np.ndarray,
    src_offset: np.ndarray,
    dst_offset: np.ndarray,
    length_or_value: np.ndarray,
    flags: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized pack of parallel field arrays into (lo, hi) uint64 arrays."""
    kind = np.asarray(kind, np.uint64)
    dst_rank = np.asarray(dst_rank, np.uint64)
    channel_id = np.asarray(channel_id, np.uint64)
    src_offset = np.asarray(src_offset, np.uint64)
    dst_offset = np.asarray(dst_offset, np.uint64)
    length_or_value = np.asarray(length_or_value, np.uint64)
    flags = np.asarray(flags, np.uint64)
    lo = (
        kind
        | dst_rank << np.uint64(2)
        | channel_id << np.uint64(14)
        | src_offset << np.uint64(20)
        | (dst_offset & np.uint64(0xFFF)) << np.uint64(52)
    )
    hi = dst_offset >> np.uint64(12) | length_or_value << np.uint64(20) | flags << np.uint64(52)
    return lo, hi


def unpack_fields(lo: np.ndarray, hi: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorized unpack; inverse of :func:`pack_fields`."""
    lo = np.asarray(lo, np.uint64)
    hi = np.asarray(hi, np.uint64)
    if np.any(hi >> np.uint64(54)):
        raise ProtocolViolation("reserved bits set in command batch")
    return {
        "kind": (lo & np.uint64(3)).astype(np.int64),
        "dst_rank": (lo >> np.uint64(2) & np.uint64(0xFFF)).astype(np.int64),
        "channel_id": (lo >> np.uint64(14) & np.uint64(0x3F)).astype(np.int64),
        "src_offset": (lo >> np.uint64(20) & np.uint64(0xFFFFFFFF)).astype(np.int64),
        "dst_offset": (
            (lo >> np.uint64(52) | (hi & np.uint64(0xFFFFF)) << np.uint64(12))
            & np.uint64(0xFFFFFFFF)
        ).astype(np.int64),
        "length_or_value": (hi >> np.uint64(20) & np.uint64(0xFFFFFFFF)).astype(np.int64),
        "flags": (hi >> np.uint64(52) & np.uint64(3)).astype(np.int64),
    }
