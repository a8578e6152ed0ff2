"""32-bit immediate-data words.

Every simulated write carries one immediate word out of band.  The receiver
proxy decodes it to drive delivery-semantics enforcement.  Two payload
layouts share the 2-bit kind prefix:

  low-latency mode:    kind[0:2] counter_index[2:12] operand[12:32]
  high-throughput mode: kind[0:2] channel_id[2:8] sequence[8:24] operand[24:32]

Barrier words reuse the low-latency layout (counter_index carries the rail
member ordinal, operand the epoch).  Sequence numbers wrap modulo 2**16 and
compare inside a 2**15 window.
"""
from __future__ import annotations

import numpy as np

from .errors import ProtocolViolation

DATA = 0
ATOMIC = 1
BARRIER_REQ = 2
BARRIER_ACK = 3

SEQ_MOD = 1 << 16
SEQ_WINDOW = 1 << 15

# high bit of the 8-bit HT operand selects which ring counter the atomic
# advances: 0 = inbound tail, 1 = outbound head (credit return)
HT_ROLE_HEAD = 0x80
HT_DELTA_MASK = 0x7F


def encode_ll(kind: int, counter_index: int, operand: int) -> int:
    if not 0 <= counter_index < (1 << 10):
        raise ProtocolViolation(f"counter_index out of range: {counter_index}")
    if not 0 <= operand < (1 << 20):
        raise ProtocolViolation(f"ll operand out of range: {operand}")
    return kind | counter_index << 2 | operand << 12


def decode_ll(imm: int) -> tuple[int, int, int]:
    """Return (kind, counter_index, operand)."""
    return imm & 3, (imm >> 2) & 0x3FF, (imm >> 12) & 0xFFFFF


def encode_ht(kind: int, channel_id: int, sequence: int, operand: int = 0) -> int:
    if not 0 <= channel_id < (1 << 6):
        raise ProtocolViolation(f"channel_id out of range: {channel_id}")
    if not 0 <= operand < (1 << 8):
        raise ProtocolViolation(f"ht operand out of range: {operand}")
    return kind | channel_id << 2 | (sequence % SEQ_MOD) << 8 | operand << 24


def decode_ht(imm: int) -> tuple[int, int, int, int]:
    """Return (kind, channel_id, sequence, operand)."""
    return imm & 3, (imm >> 2) & 0x3F, (imm >> 8) & 0xFFFF, (imm >> 24) & 0xFF


def seq_delta(seq: int, expected: int) -> int:
    """Forward distance from expected to seq inside the wrap window.

    Returns a value in [0, SEQ_MOD); deltas >= SEQ_WINDOW mean "behind the
    cursor" (stale or duplicate).
    """
    return (seq - expected) % SEQ_MOD


def ht_atomic_operand(advance_head: bool, delta: int) -> int:
    if not 1 <= delta <= HT_DELTA_MASK:
        raise ProtocolViolation(f"ring advance delta out of range: {delta}")
    return (HT_ROLE_HEAD if advance_head else 0) | delta


def encode_ll_batch(kind: np.ndarray, counter_index: np.ndarray, operand: np.ndarray) -> np.ndarray:
    kind = np.asarray(kind, np.uint32)
    counter_index = np.asarray(counter_index, np.uint32)
    operand = np.asarray(operand, np.uint32)
    return (kind | counter_index << np.uint32(2) | operand << np.uint32(12)).astype(np.int64)


def encode_ht_batch(
    kind: np.ndarray, channel_id: np.ndarray, sequence: np.ndarray, operand: np.ndarray
) -> np.ndarray:
    kind = np.asarray(kind, np.uint32)
    channel_id = np.asarray(channel_id, np.uint32)
    sequence = np.asarray(sequence, np.uint32) & np.uint32(0xFFFF)
    operand = np.asarray(operand, np.uint32)
    return (
        kind | channel_id << np.uint32(2) | sequence << np.uint32(8) | operand << np.uint32(24)
    ).astype(np.int64)
