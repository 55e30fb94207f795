"""Coupling matrices, voltage transfer, and interference-to-signal ratios.

A :class:`ChannelMatrix` holds, for every RX coil ``i`` and TX coil ``j``,
the mutual inductance and the voltage-transfer ratio (``gain``) between
them. The diagonal is the intended signal path. Same-die coupling between
neighbouring TX coils is kept in a separate pair of matrices because it
does not land on a receiver directly.

Gains are plain voltage ratios, the same way an ``S21`` value is read as
``V2 / V1``; no wave normalisation is applied.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, InvalidArgument
from .geometry import CoilArray, spiral_path
from .inductance import QuadratureConfig, mutual_inductance, self_inductance

# chosen so the default 250 um / 5-turn pair at 106 um has a signal gain of ~0.12
DEFAULT_PULSE_SLEW = 7.4e7


class PathClass(str, enum.Enum):
    SIGNAL = "signal"
    OFF_CHIP = "off_chip_interference"
    ON_CHIP = "on_chip_interference"


@dataclass(frozen=True)
class DriveModel:
    v_drive: float = 1.2
    pulse_slew: float = DEFAULT_PULSE_SLEW  # dI/dt per volt of drive, A/(s*V)

    def __post_init__(self):
        if not self.v_drive > 0:
            raise InvalidArgument(f"v_drive must be > 0, got {self.v_drive}")


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    gain: np.ndarray
    m: np.ndarray | None = None
    path_class: tuple[tuple[PathClass, ...], ...] | None = None
    # TX-to-TX coupling on the lower die; zero diagonal
    onchip_m: np.ndarray | None = None
    onchip_gain: np.ndarray | None = None
    # per-pair coil self inductance, used for coupling coefficients
    self_l: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.array(self.gain, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidArgument(f"gain must be square, got shape {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "gain", g)
        for name in ("m", "onchip_m", "onchip_gain", "self_l"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=float)
                v.setflags(write=False)
                object.__setattr__(self, name, v)
        if self.path_class is None:
            n = g.shape[0]
            cls = tuple(
                tuple(PathClass.SIGNAL if i == j else PathClass.OFF_CHIP for j in range(n))
                for i in range(n)
            )
            object.__setattr__(self, "path_class", cls)

    @property
    def pairs(self) -> int:
        return self.gain.shape[0]

    def signal_dominant(self) -> bool:
        """Each row's largest-magnitude entry is its diagonal."""
        a = np.abs(self.gain)
        return bool(np.all(np.argmax(a, axis=1) == np.arange(self.pairs)))

    def relative_gain(self) -> np.ndarray:
        """Gains divided by each row's own signal gain (unit diagonal)."""
        diag = np.diag(self.gain)
        if np.any(diag == 0):
            raise DomainError("a receiver has zero signal gain")
        return self.gain / diag[:, None]

    def offchip_coupling(self, rx: int, tx: int) -> float:
        """Coupling coefficient of the TX ``tx`` -> RX ``rx`` path."""
        if self.m is None or self.self_l is None:
            raise InvalidArgument("channel carries no inductance data")
        return self.m[rx, tx] / math.sqrt(self.self_l[rx] * self.self_l[tx])

    def onchip_coupling(self, a: int, b: int) -> float:
        if self.onchip_m is None or self.self_l is None:
            raise InvalidArgument("channel carries no on-chip coupling data")
        return self.onchip_m[a, b] / math.sqrt(self.self_l[a] * self.self_l[b])

    def to_csv(self) -> str:
        """One row per RX: gains from every TX plus the path classes."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rx"] + [f"tx{j}" for j in range(self.pairs)] + ["class"])
        for i in range(self.pairs):
            row = [f"{v:.9g}" for v in self.gain[i]]
            classes = ";".join(c.value for c in self.path_class[i])
            w.writerow([i] + row + [classes])
        return buf.getvalue()


def induced_voltage(M: float, di_dt: float) -> float:
    return M * di_dt


def voltage_from_gain(gain: float, v_in: float) -> float:
    if not v_in > 0:
        raise InvalidArgument(f"v_in must be > 0, got {v_in}")
    return gain * v_in


def isr(v_crosstalk: float, v_signal: float) -> float:
    if v_signal == 0:
        raise DomainError("ISR undefined for a zero signal voltage")
    return abs(v_crosstalk) / abs(v_signal)


def ratio_to_db(r: float) -> float:
    """Voltage ratio in decibels (20 log10)."""
    if not r > 0:
        raise DomainError(f"cannot express {r} in dB")
    return 20.0 * math.log10(r)


def db_to_ratio(db: float) -> float:
    return 10.0 ** (db / 20.0)


def build_channel(
    array: CoilArray,
    cfg: QuadratureConfig | None = None,
    drive: DriveModel | None = None,
) -> ChannelMatrix:
    cfg = cfg or QuadratureConfig()
    drive = drive or DriveModel()
    ids = array.pair_ids
    n = len(ids)
    tx_paths = [spiral_path(array.tx(p).coil) for p in ids]
    rx_paths = [spiral_path(array.rx(p).coil) for p in ids]

    m = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            m[i, j] = mutual_inductance(tx_paths[j], rx_paths[i], cfg)

    onchip = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            onchip[a, b] = onchip[b, a] = mutual_inductance(tx_paths[a], tx_paths[b], cfg)

    # identical template coils share one self inductance
    template = array.tx(ids[0]).coil
    L = self_inductance(spiral_path(template), template.trace_width, cfg)

    slope = drive.pulse_slew * drive.v_drive
    to_gain = np.vectorize(lambda mm: induced_voltage(mm, slope) / drive.v_drive)
    classes = tuple(
        tuple(PathClass.SIGNAL if i == j else PathClass.OFF_CHIP for j in range(n))
        for i in range(n)
    )
    return ChannelMatrix(
        gain=to_gain(m),
        m=m,
        path_class=classes,
        onchip_m=onchip,
        onchip_gain=to_gain(onchip),
        self_l=np.full(n, L),
        meta={"source": "internal"},
    )


def aggregate_isr(ch: ChannelMatrix, rx: int, active: Iterable[int]) -> float:
    """Worst-case ISR at ``rx``: interferer magnitudes summed in phase."""
    sig = abs(ch.gain[rx, rx])
    if sig == 0:
        raise DomainError(f"RX {rx} has zero signal gain")
    xt = math.fsum(abs(ch.gain[rx, j]) for j in set(active) if j != rx)
    return xt / sig


def uniform_channel(lanes: int, interferer_ratio: float, signal_gain: float = 1.0) -> ChannelMatrix:
    """Synthetic channel: unit-ratio diagonal, every off-diagonal equal."""
    if lanes < 1:
        raise InvalidArgument("lanes must be >= 1")
    g = np.full((lanes, lanes), interferer_ratio * signal_gain)
    np.fill_diagonal(g, signal_gain)
    return ChannelMatrix(gain=g, meta={"source": "uniform", "ratio": interferer_ratio})
