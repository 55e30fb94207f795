"""Pulse signalling: bit streams to transmit polarities and back.

Bi-phase sends a positive pulse for every 1 and a negative pulse for every 0.
NRZ only pulses on level changes: a rising edge gives +1, a falling edge -1,
and an unchanged level 0. The receiver compares one sample per slot against
a symmetric threshold.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument

ALPHABET = (-1, 0, 1)


@dataclass(frozen=True)
class SymbolStream:
    symbols: tuple[int, ...]
    slot_rate: float = 10e9

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if not self.slot_rate > 0:
            raise InvalidArgument(f"slot_rate must be > 0, got {self.slot_rate}")
        bad = [s for s in self.symbols if s not in ALPHABET]
        if bad:
            raise InvalidArgument(f"symbols outside {{+1, -1, 0}}: {bad[:3]}")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


def _check_bits(bits):
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise InvalidArgument("bits must be 0 or 1")
    return bits


def encode_biphase(bits: Sequence[int], slot_rate: float = 10e9) -> SymbolStream:
    return SymbolStream(tuple(1 if b else -1 for b in _check_bits(bits)), slot_rate)


def decode_biphase(symbols) -> list[int]:
    return [1 if s > 0 else 0 for s in symbols]


def encode_nrz(bits: Sequence[int], initial_level: int = 0, slot_rate: float = 10e9) -> SymbolStream:
    level = int(initial_level)
    out = []
    for b in _check_bits(bits):
        out.append(b - level)
        level = b
    return SymbolStream(tuple(out), slot_rate)


def decode_nrz(symbols, initial_level: int = 0) -> list[int]:
    """Integrate edges back into levels; a 0 symbol holds the previous level."""
    level = int(initial_level)
    bits = []
    for s in symbols:
        if s > 0:
            level = 1
        elif s < 0:
            level = 0
        bits.append(level)
    return bits


def detect(received: float, threshold: float) -> int:
    if not threshold > 0:
        raise InvalidArgument(f"threshold must be > 0, got {threshold}")
    if received > threshold:
        return 1
    if received < -threshold:
        return -1
    return 0


def pulse_waveform(
    streams: Sequence[SymbolStream],
    gain: np.ndarray,
    v_signal: float = 1.0,
    samples_per_slot: int = 32,
) -> list[tuple[float, int, float, float]]:
    """Continuous waveforms for plotting only; never used for detection.

    Each symbol drives a raised-cosine current pulse on its TX coil. The
    received voltage is the scaled derivative of the coupled currents, which
    gives the build-up/decay double pulse of an inductive link. Rows are
    ``(time_ns, coil_id, tx_current_au, rx_voltage_V)``.
    """
    if not streams:
        return []
    gain = np.asarray(gain, dtype=float)
    n_slots = max(len(s) for s in streams)
    rate = streams[0].slot_rate
    dt = 1.0 / (rate * samples_per_slot)
    t = np.arange(n_slots * samples_per_slot) * dt
    phase = (np.arange(samples_per_slot) + 0.5) / samples_per_slot
    shape = 0.5 * (1 - np.cos(2 * math.pi * phase))

    currents = np.zeros((len(streams), t.size))
    for c, s in enumerate(streams):
        sym = np.zeros(n_slots)
        sym[: len(s)] = s.symbols
        currents[c] = np.repeat(sym, samples_per_slot) * np.tile(shape, n_slots)
    di = np.gradient(currents, dt, axis=1)
    # peak |dI/dt| of the unit pulse maps to v_signal at unit gain
    norm = math.pi / (samples_per_slot * dt)
    rx = gain @ di * (v_signal / norm)

    rows = []
    for k in range(t.size):
        for c in range(len(streams)):
            rows.append((t[k] * 1e9, c, float(currents[c, k]), float(rx[c, k])))
    return rows


def waveform_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_ns", "coil_id", "tx_current_au", "rx_voltage_V"])
    for t, c, i, v in rows:
        w.writerow([f"{t:.6f}", c, f"{i:.6g}", f"{v:.6g}"])
    return buf.getvalue()
