"""Touchstone v1 (.s1p - .s4p) reader and writer.

Grammar handled::

    ! comment                       (anywhere; also trailing after data)
    # <unit> S <RI|MA|DB> R <ohms>  (tokens in any order, all optional)
    <freq> <2*n*n reals>            (a record may wrap over several lines)

Two-port records are ordered S11 S21 S12 S22; every other port count is
row-major (S11 S12 ... S1n, S21 ...). Values are kept as complex RI
internally and frequencies in Hz.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import ChannelMatrix, PathClass
from .errors import InvalidArgument, ParseError
from .geometry import Die

FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
FORMATS = ("ri", "ma", "db")
_UNSUPPORTED_PARAMS = ("y", "z", "g", "h")
_CANONICAL_UNIT = {"hz": "Hz", "khz": "kHz", "mhz": "MHz", "ghz": "GHz"}


@dataclass(frozen=True, eq=False)
class TouchstoneData:
    n_ports: int
    freq: np.ndarray
    s: np.ndarray  # (n_freq, n_ports, n_ports) complex
    format_in: str = "ma"
    ref_impedance: float = 50.0
    freq_unit: str = "ghz"
    diagnostics: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n_ports not in (1, 2, 3, 4):
            raise InvalidArgument(f"unsupported port count {self.n_ports}")
        if self.s.shape != (len(self.freq), self.n_ports, self.n_ports):
            raise InvalidArgument("S array shape does not match freq and port count")
        if np.any(np.diff(self.freq) <= 0):
            raise InvalidArgument("frequencies must be strictly increasing")


def ports_from_filename(name: str | Path) -> int:
    m = re.search(r"\.s(\d)p$", str(name), re.IGNORECASE)
    if not m:
        raise ParseError(f"cannot infer port count from file name {str(name)!r}")
    return int(m.group(1))


def _parse_options(line: str, lineno: int, diagnostics: list[str]):
    toks = line[1:].split()
    unit = fmt = param = None
    ref = None
    i = 0
    while i < len(toks):
        tok = toks[i]
        low = tok.lower()
        if low in FREQ_UNITS:
            if unit is not None:
                raise ParseError(f"duplicate frequency unit {tok!r}", lineno)
            unit = low
        elif low in FORMATS:
            if fmt is not None:
                raise ParseError(f"duplicate data format {tok!r}", lineno)
            fmt = low
        elif low == "s":
            if param is not None:
                raise ParseError(f"duplicate parameter {tok!r}", lineno)
            param = low
        elif low in _UNSUPPORTED_PARAMS:
            raise ParseError(f"unsupported parameter type {tok!r} (only S)", lineno)
        elif low == "r":
            if ref is not None:
                raise ParseError(f"duplicate reference keyword {tok!r}", lineno)
            if i + 1 >= len(toks):
                raise ParseError(f"keyword {tok!r} needs an impedance value", lineno)
            try:
                ref = float(toks[i + 1])
            except ValueError:
                raise ParseError(f"bad reference impedance {toks[i + 1]!r}", lineno) from None
            if not ref > 0:
                raise ParseError(f"reference impedance {toks[i + 1]!r} must be > 0", lineno)
            i += 1
        else:
            raise ParseError(f"unknown option token {tok!r}", lineno)
        i += 1
    if unit is None:
        diagnostics.append(f"line {lineno}: no frequency unit, defaulting to GHz")
        unit = "ghz"
    if fmt is None:
        diagnostics.append(f"line {lineno}: no data format, defaulting to MA")
        fmt = "ma"
    if ref is None:
        ref = 50.0
    return unit, fmt, ref


def to_complex(a: float, b: float, fmt: str) -> complex:
    if fmt == "ri":
        return complex(a, b)
    mag = a if fmt == "ma" else 10.0 ** (a / 20.0)
    return cmath.rect(mag, math.radians(b))


def from_complex(z: complex, fmt: str) -> tuple[float, float]:
    if fmt == "ri":
        return z.real, z.imag
    mag, ang = abs(z), math.degrees(cmath.phase(z))
    if fmt == "ma":
        return mag, ang
    return (20.0 * math.log10(mag) if mag > 0 else -math.inf), ang


def _record_order(n: int) -> list[tuple[int, int]]:
    if n == 2:
        return [(0, 0), (1, 0), (0, 1), (1, 1)]
    return [(i, j) for i in range(n) for j in range(n)]


def parse_touchstone(text: str | bytes, n_ports_hint: int) -> TouchstoneData:
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    n = int(n_ports_hint)
    if n not in (1, 2, 3, 4):
        raise ParseError(f"unsupported port count {n}")
    per_record = 1 + 2 * n * n
    diagnostics: list[str] = []
    options = None
    tokens: list[tuple[float, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if options is None:
                options = _parse_options(line, lineno, diagnostics)
            else:
                diagnostics.append(f"line {lineno}: extra option line ignored")
            continue
        if line.startswith("["):
            raise ParseError(f"Touchstone v2 keyword {line.split()[0]!r} not supported", lineno)
        if options is None:
            raise ParseError("data before the '#' option line", lineno)
        for tok in line.split():
            try:
                tokens.append((float(tok), lineno))
            except ValueError:
                raise ParseError(f"not a number: {tok!r}", lineno) from None
    if options is None:
        raise ParseError("missing '#' option line")
    unit, fmt, ref = options
    if not tokens:
        raise ParseError("no data records")
    if len(tokens) % per_record:
        start = len(tokens) - len(tokens) % per_record
        raise ParseError(
            f"incomplete record: {len(tokens) - start} values, expected {per_record} "
            f"per frequency for {n} ports",
            tokens[start][1],
        )

    order = _record_order(n)
    n_freq = len(tokens) // per_record
    freq = np.empty(n_freq)
    s = np.empty((n_freq, n, n), dtype=complex)
    for k in range(n_freq):
        rec = tokens[k * per_record:(k + 1) * per_record]
        freq[k] = rec[0][0] * FREQ_UNITS[unit]
        if k and freq[k] <= freq[k - 1]:
            raise ParseError("frequencies must be strictly increasing", rec[0][1])
        vals = [v for v, _ in rec[1:]]
        for p, (i, j) in enumerate(order):
            s[k, i, j] = to_complex(vals[2 * p], vals[2 * p + 1], fmt)
    return TouchstoneData(n, freq, s, fmt, ref, unit, tuple(diagnostics))


def read_touchstone(path: str | Path) -> TouchstoneData:
    path = Path(path)
    return parse_touchstone(path.read_bytes(), ports_from_filename(path))


def serialize_touchstone(ts: TouchstoneData, fmt: str | None = None, comments: Sequence[str] = ()) -> str:
    """Write ``ts`` back in v1 grammar with 9 significant digits."""
    fmt = (fmt or ts.format_in).lower()
    if fmt not in FORMATS:
        raise InvalidArgument(f"unknown format {fmt!r}")
    scale = FREQ_UNITS[ts.freq_unit]
    lines = [f"! {c}" for c in comments]
    lines.append(f"# {_CANONICAL_UNIT[ts.freq_unit]} S {fmt.upper()} R {ts.ref_impedance:g}")
    order = _record_order(ts.n_ports)
    per_line = 4 if ts.n_ports == 2 else ts.n_ports  # pairs per output line
    for k, f in enumerate(ts.freq):
        pairs = []
        for i, j in order:
            a, b = from_complex(complex(ts.s[k, i, j]), fmt)
            pairs.append(f"{a:.9g} {b:.9g}")
        chunks = [pairs[p:p + per_line] for p in range(0, len(pairs), per_line)]
        lines.append(f"{f / scale:.9g} " + " ".join(chunks[0]))
        lines.extend(" " + " ".join(c) for c in chunks[1:])
    return "\n".join(lines) + "\n"


def gain_at(ts: TouchstoneData, i: int, j: int, f: float) -> complex:
    """S(i, j) at ``f`` Hz, ports 1-based; linear in real and imaginary parts."""
    if not (1 <= i <= ts.n_ports and 1 <= j <= ts.n_ports):
        raise InvalidArgument(f"port ({i}, {j}) outside a {ts.n_ports}-port network")
    lo, hi = ts.freq[0], ts.freq[-1]
    if not lo <= f <= hi:
        raise InvalidArgument(f"{f:g} Hz outside the data range [{lo:g}, {hi:g}] Hz")
    col = ts.s[:, i - 1, j - 1]
    k = int(np.searchsorted(ts.freq, f))
    if ts.freq[k] == f:
        return complex(col[k])
    f0, f1 = ts.freq[k - 1], ts.freq[k]
    t = (f - f0) / (f1 - f0)
    z0, z1 = col[k - 1], col[k]
    return complex(z0.real + t * (z1.real - z0.real), z0.imag + t * (z1.imag - z0.imag))


def gain_db_at(ts: TouchstoneData, i: int, j: int, f: float) -> float:
    return 20.0 * math.log10(abs(gain_at(ts, i, j, f)))


@dataclass(frozen=True)
class PortMap:
    """TX/RX port numbers (1-based) per coil pair, plus die placement."""

    pairs: tuple[tuple[int, int], ...]
    dies: dict[int, Die] | None = None

    def die(self, port: int, role: str) -> Die:
        if self.dies and port in self.dies:
            return Die(self.dies[port])
        return Die.LOWER if role == "tx" else Die.UPPER


def to_channel(ts: TouchstoneData, f: float, port_map: PortMap | Sequence[tuple[int, int]]) -> ChannelMatrix:
    if not isinstance(port_map, PortMap):
        port_map = PortMap(tuple(tuple(p) for p in port_map))
    if not port_map.pairs:
        raise InvalidArgument("port map is empty")
    used = [p for pair in port_map.pairs for p in pair]
    if len(set(used)) != len(used):
        raise InvalidArgument("a port is assigned twice in the port map")
    if any(not 1 <= p <= ts.n_ports for p in used):
        raise InvalidArgument(f"port map references ports outside 1..{ts.n_ports}")

    n = len(port_map.pairs)
    gain = np.zeros((n, n))
    classes = []
    for i, (_, rx) in enumerate(port_map.pairs):
        row = []
        for j, (tx, _) in enumerate(port_map.pairs):
            gain[i, j] = abs(gain_at(ts, rx, tx, f))
            if i == j:
                row.append(PathClass.SIGNAL)
            elif port_map.die(tx, "tx") != port_map.die(rx, "rx"):
                row.append(PathClass.OFF_CHIP)
            else:
                row.append(PathClass.ON_CHIP)
        classes.append(tuple(row))

    onchip = np.zeros((n, n))
    for a, (ta, _) in enumerate(port_map.pairs):
        for b, (tb, _) in enumerate(port_map.pairs):
            if a != b and port_map.die(ta, "tx") == port_map.die(tb, "tx"):
                onchip[a, b] = abs(gain_at(ts, ta, tb, f))
    return ChannelMatrix(
        gain=gain,
        path_class=tuple(classes),
        onchip_gain=onchip,
        meta={"source": "touchstone", "frequency_hz": f},
    )
