"""Transmission schemes for a multi-lane coil array.

* ``BASIC``: every lane sends one bi-phase bit per slot.
* ``FOUR_PHASE``: round-robin time interleaving; lane ``slot % lanes`` sends
  one bi-phase bit, every other lane is silent.
* ``ONE_OF_FOUR``: ``log2(lanes)`` payload bits select the single lane that
  pulses (+1) in this slot. The value is read MSB first.

The scalar ``encode_frame``/``decode_frame`` pair is the reference; the
``*_block`` functions are the vectorised equivalents the Monte Carlo engine
runs on.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, UnderrunError
from .signaling import detect

# Decoded value of a Basic lane whose sample fell inside the dead zone.
ERASED = -1


class SchemeKind(str, enum.Enum):
    BASIC = "Basic"
    FOUR_PHASE = "FourPhaseTDM"
    ONE_OF_FOUR = "OneOfFour"


@dataclass(frozen=True)
class Scheme:
    kind: SchemeKind
    lanes: int = 4
    # Basic only: detection threshold as a fraction of v_signal. 0 selects
    # plain sign decisions (no dead zone).
    threshold_ratio: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.lanes < 1:
            raise InvalidArgument("lanes must be >= 1")
        if self.kind != SchemeKind.BASIC and self.lanes < 2:
            raise InvalidArgument(f"{self.kind.value} needs at least 2 lanes")
        if self.kind == SchemeKind.ONE_OF_FOUR and self.lanes & (self.lanes - 1):
            raise InvalidArgument("OneOfFour needs a power-of-two lane count")
        if not 0 <= self.threshold_ratio < 1:
            raise InvalidArgument("threshold_ratio must be in [0, 1)")

    @property
    def bits_per_slot(self) -> int:
        if self.kind == SchemeKind.BASIC:
            return self.lanes
        if self.kind == SchemeKind.FOUR_PHASE:
            return 1
        return int(math.log2(self.lanes))


def all_schemes(lanes: int = 4) -> list[Scheme]:
    return [Scheme(k, lanes) for k in SchemeKind]


def throughput(scheme: Scheme, per_lane_rate: float) -> float:
    if not per_lane_rate > 0:
        raise InvalidArgument("per_lane_rate must be > 0")
    return scheme.bits_per_slot * per_lane_rate


def encode_frame(scheme: Scheme, payload_bits: Sequence[int], slot: int) -> tuple[tuple[int, ...], int]:
    """Build one slot's lane symbols; returns ``(frame, bits_consumed)``."""
    need = scheme.bits_per_slot
    if len(payload_bits) < need:
        raise UnderrunError(
            f"{scheme.kind.value} needs {need} bits per slot, got {len(payload_bits)}"
        )
    bits = [int(b) for b in payload_bits[:need]]
    lanes = [0] * scheme.lanes
    if scheme.kind == SchemeKind.BASIC:
        lanes = [1 if b else -1 for b in bits]
    elif scheme.kind == SchemeKind.FOUR_PHASE:
        lanes[slot % scheme.lanes] = 1 if bits[0] else -1
    else:
        v = 0
        for b in bits:
            v = (v << 1) | b
        lanes[v] = 1
        assert sum(1 for s in lanes if s) == 1
    return tuple(lanes), need


def decode_frame(scheme: Scheme, received: Sequence[float], v_signal: float, slot: int) -> list[int]:
    if not v_signal > 0:
        raise InvalidArgument("v_signal must be > 0")
    if scheme.kind == SchemeKind.BASIC:
        if scheme.threshold_ratio == 0:
            return [1 if r > 0 else 0 for r in received]
        th = scheme.threshold_ratio * v_signal
        out = []
        for r in received:
            s = detect(r, th)
            out.append(ERASED if s == 0 else (1 if s > 0 else 0))
        return out
    if scheme.kind == SchemeKind.FOUR_PHASE:
        return [1 if received[slot % scheme.lanes] > 0 else 0]
    v = int(np.argmax(np.asarray(received, dtype=float)))  # first max wins ties
    width = scheme.bits_per_slot
    return [(v >> (width - 1 - i)) & 1 for i in range(width)]


def encode_stream(scheme: Scheme, bits: Sequence[int], first_slot: int = 0) -> list[tuple[int, ...]]:
    frames, pos, slot = [], 0, first_slot
    while pos < len(bits):
        frame, used = encode_frame(scheme, bits[pos:], slot)
        frames.append(frame)
        pos += used
        slot += 1
    return frames


def decode_stream(scheme: Scheme, received, v_signal: float, first_slot: int = 0) -> list[int]:
    out = []
    for k, r in enumerate(received):
        out.extend(decode_frame(scheme, r, v_signal, first_slot + k))
    return out


def encode_block(scheme: Scheme, payload: np.ndarray, slots: np.ndarray) -> np.ndarray:
    """Vectorised encode: ``payload`` is ``(frames, bits_per_slot)`` of 0/1."""
    frames = payload.shape[0]
    sym = np.zeros((frames, scheme.lanes))
    if scheme.kind == SchemeKind.BASIC:
        sym[:] = 2.0 * payload - 1.0
    elif scheme.kind == SchemeKind.FOUR_PHASE:
        sym[np.arange(frames), slots % scheme.lanes] = 2.0 * payload[:, 0] - 1.0
    else:
        weights = 1 << np.arange(scheme.bits_per_slot - 1, -1, -1)
        sym[np.arange(frames), payload @ weights] = 1.0
    return sym


def decode_block(scheme: Scheme, received: np.ndarray, v_signal: float, slots: np.ndarray) -> np.ndarray:
    """Vectorised decode; returns ``(frames, bits_per_slot)`` with ERASED marks."""
    if scheme.kind == SchemeKind.BASIC:
        if scheme.threshold_ratio == 0:
            return (received > 0).astype(np.int64)
        th = scheme.threshold_ratio * v_signal
        out = np.full(received.shape, ERASED, dtype=np.int64)
        out[received > th] = 1
        out[received < -th] = 0
        return out
    if scheme.kind == SchemeKind.FOUR_PHASE:
        lane = received[np.arange(received.shape[0]), slots % scheme.lanes]
        return (lane > 0).astype(np.int64)[:, None]
    v = np.argmax(received, axis=1)
    width = scheme.bits_per_slot
    shifts = np.arange(width - 1, -1, -1)
    return (v[:, None] >> shifts) & 1
