"""Square planar spiral coils, array layouts, and filament segmentation.

All lengths are in micrometres. A coil is represented by the centreline of
its trace as a connected polyline of straight :class:`Segment` objects.

Spiral construction: with ``a_k = outer_side/2 - k*pitch`` the path visits
``(-a_k, -a_k) -> (a_k, -a_k) -> (a_k, a_k) -> (-a_k, a_k) -> (-a_k, -a_{k+1})``
for turn ``k``, so every turn has four axis-aligned sides, the right and top
sides of turn ``k`` are exactly ``outer_side - 2*k*pitch`` long, and the
left side stops one pitch short to step into the next turn. A single turn is
a square left open by one pitch at its starting corner.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument, InvalidGeometry

Point = tuple[float, float, float]

DEFAULT_VERTICAL_GAP_UM = 106.0


class Winding(str, enum.Enum):
    CLOCKWISE = "clockwise"
    COUNTERCLOCKWISE = "counterclockwise"


class Role(str, enum.Enum):
    TX = "TX"
    RX = "RX"


class Die(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class Segment:
    start: Point
    end: Point

    def __post_init__(self):
        if self.length <= 0.0:
            raise InvalidGeometry(f"zero-length segment at {self.start}")

    @property
    def vector(self) -> np.ndarray:
        return np.subtract(self.end, self.start, dtype=float)

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)


@dataclass(frozen=True)
class Coil:
    outer_side: float
    turns: int
    trace_width: float
    trace_spacing: float
    center: Point = (0.0, 0.0, 0.0)
    winding: Winding = Winding.COUNTERCLOCKWISE

    def __post_init__(self):
        if not isinstance(self.turns, (int, np.integer)) or self.turns < 1:
            raise InvalidGeometry(f"turns must be a positive integer, got {self.turns!r}")
        if not self.trace_width > 0:
            raise InvalidGeometry(f"trace_width must be > 0, got {self.trace_width}")
        if not self.trace_spacing >= 0:
            raise InvalidGeometry(f"trace_spacing must be >= 0, got {self.trace_spacing}")
        if not self.outer_side > 2 * self.turns * self.pitch:
            raise InvalidGeometry(
                f"{self.turns} turns at pitch {self.pitch} um do not fit in a "
                f"{self.outer_side} um coil (innermost side would be <= 0)"
            )
        object.__setattr__(self, "winding", Winding(self.winding))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def pitch(self) -> float:
        """Centre-to-centre distance between adjacent turns."""
        return self.trace_width + self.trace_spacing

    def side(self, k: int) -> float:
        return self.outer_side - 2 * k * self.pitch

    def moved(self, center: Point) -> "Coil":
        return replace(self, center=center)


@dataclass(frozen=True)
class ArrayCoil:
    coil: Coil
    role: Role
    die: Die
    pair_id: int


@dataclass(frozen=True)
class CoilArray:
    coils: tuple[ArrayCoil, ...]
    rows: int = 1
    cols: int = 1

    def __post_init__(self):
        tx: dict[int, ArrayCoil] = {}
        rx: dict[int, ArrayCoil] = {}
        for entry in self.coils:
            table = tx if entry.role == Role.TX else rx
            if entry.pair_id in table:
                raise InvalidGeometry(f"pair {entry.pair_id} has two {entry.role.value} coils")
            table[entry.pair_id] = entry
        if set(tx) != set(rx):
            raise InvalidGeometry("every pair needs exactly one TX and one RX coil")
        for pid in tx:
            a, b = tx[pid], rx[pid]
            if a.coil.center[:2] != b.coil.center[:2]:
                raise InvalidGeometry(f"pair {pid}: TX and RX are not vertically aligned")
            if a.die == b.die:
                raise InvalidGeometry(f"pair {pid}: TX and RX sit on the same die")

    @property
    def pair_ids(self) -> list[int]:
        return sorted({c.pair_id for c in self.coils})

    def tx(self, pair_id: int) -> ArrayCoil:
        return next(c for c in self.coils if c.pair_id == pair_id and c.role == Role.TX)

    def rx(self, pair_id: int) -> ArrayCoil:
        return next(c for c in self.coils if c.pair_id == pair_id and c.role == Role.RX)


def spiral_path(coil: Coil) -> list[Segment]:
    """Centreline polyline of a square spiral, 4 segments per turn."""
    cx, cy, cz = coil.center
    mirror = -1.0 if coil.winding == Winding.CLOCKWISE else 1.0

    def pt(x: float, y: float) -> Point:
        return (cx + mirror * x, cy + y, cz)

    corners = [pt(-coil.outer_side / 2, -coil.outer_side / 2)]
    for k in range(coil.turns):
        a = coil.side(k) / 2.0
        a_next = a - coil.pitch
        corners += [pt(a, -a), pt(a, a), pt(-a, a), pt(-a, -a_next)]
    return [Segment(p, q) for p, q in zip(corners, corners[1:])]


def subdivide(segments: Iterable[Segment], max_len: float) -> list[Segment]:
    """Split every segment into ``ceil(length / max_len)`` equal parts."""
    if not max_len > 0:
        raise InvalidArgument(f"max_len must be > 0, got {max_len}")
    out = []
    for seg in segments:
        n = max(1, math.ceil(seg.length / max_len - 1e-12))
        if n == 1:
            out.append(seg)
            continue
        a = np.asarray(seg.start, dtype=float)
        d = seg.vector
        pts = [seg.start] + [tuple(a + d * (i / n)) for i in range(1, n)] + [seg.end]
        out.extend(Segment(p, q) for p, q in zip(pts, pts[1:]))
    return out


def path_arrays(segments: Sequence[Segment]) -> tuple[np.ndarray, np.ndarray]:
    """Return (midpoints, vectors) as ``(n, 3)`` float arrays."""
    starts = np.array([s.start for s in segments], dtype=float)
    ends = np.array([s.end for s in segments], dtype=float)
    return (starts + ends) / 2.0, ends - starts


def path_length(segments: Iterable[Segment]) -> float:
    return math.fsum(s.length for s in segments)


def place_array(
    template: Coil,
    rows: int,
    cols: int,
    pitch: float,
    vertical_gap: float = DEFAULT_VERTICAL_GAP_UM,
    allow_overlap: bool = False,
) -> CoilArray:
    """Lay out ``rows x cols`` aligned TX/RX pairs.

    TX coils sit on the lower die at the template's z, RX coils directly
    above them at ``z + vertical_gap``. ``pitch`` is centre-to-centre; pair
    ids run row-major starting at the template centre.
    """
    if rows <= 0 or cols <= 0:
        raise InvalidArgument(f"rows and cols must be positive, got {rows}x{cols}")
    if not pitch > 0:
        raise InvalidArgument(f"pitch must be > 0, got {pitch}")
    if not vertical_gap > 0:
        raise InvalidArgument(f"vertical_gap must be > 0, got {vertical_gap}")
    if pitch < template.outer_side and not allow_overlap and rows * cols > 1:
        raise InvalidArgument(
            f"pitch {pitch} um is smaller than the coil side {template.outer_side} um"
        )
    x0, y0, z0 = template.center
    coils = []
    for r in range(rows):
        for c in range(cols):
            pid = r * cols + c
            x, y = x0 + c * pitch, y0 + r * pitch
            coils.append(ArrayCoil(template.moved((x, y, z0)), Role.TX, Die.LOWER, pid))
            coils.append(
                ArrayCoil(template.moved((x, y, z0 + vertical_gap)), Role.RX, Die.UPPER, pid)
            )
    return CoilArray(tuple(coils), rows=rows, cols=cols)


def pitch_from_edge_gap(outer_side: float, edge_gap: float) -> float:
    """Convert an edge-to-edge separation to centre-to-centre pitch."""
    return outer_side + edge_gap


def segments_intersect(a: Segment, b: Segment, tol: float = 1e-9) -> bool:
    """True if two coplanar segments touch anywhere other than a shared endpoint."""
    p, r = np.asarray(a.start)[:2], a.vector[:2]
    q, s = np.asarray(b.start)[:2], b.vector[:2]
    shared = any(
        math.dist(u, v) < tol for u in (a.start, a.end) for v in (b.start, b.end)
    )
    rxs = r[0] * s[1] - r[1] * s[0]
    qp = q - p
    if abs(rxs) < tol:
        if abs(qp[0] * r[1] - qp[1] * r[0]) > tol:
            return False
        # collinear: overlap along r
        rr = float(r @ r)
        t0 = float(qp @ r) / rr
        t1 = t0 + float(s @ r) / rr
        lo, hi = max(min(t0, t1), 0.0), min(max(t0, t1), 1.0)
        if hi - lo > tol:
            return True
        return lo - hi <= tol and not shared
    t = (qp[0] * s[1] - qp[1] * s[0]) / rxs
    u = (qp[0] * r[1] - qp[1] * r[0]) / rxs
    if -tol <= t <= 1 + tol and -tol <= u <= 1 + tol:
        at_end = (t < tol or t > 1 - tol) and (u < tol or u > 1 - tol)
        return not (at_end and shared)
    return False
