"""Filament inductance engine.

Mutual inductance is the Neumann double line integral evaluated with the
midpoint rule over subdivided straight segments. Self inductance follows
the Greenhouse decomposition: a straight-conductor self term per segment
plus the mutual terms between every pair of distinct segments.

Inputs are micrometres, results are henries.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, SingularityError
from .geometry import Segment, path_arrays, subdivide

MU0 = 4e-7 * math.pi  # H/m
UM = 1e-6
GMD_FACTOR = 0.2235

# Row blocks are fixed so the partial sums, and therefore the result,
# do not depend on how many workers evaluate them.
_BLOCK_ROWS = 256


@dataclass(frozen=True)
class QuadratureConfig:
    max_segment_len: float = 5.0
    singular_distance_floor: float = 0.1
    workers: int = 1

    def __post_init__(self):
        if not (self.max_segment_len > 0 and self.singular_distance_floor > 0):
            raise InvalidArgument("quadrature lengths must be strictly positive")
        if self.workers < 1:
            raise InvalidArgument(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class InductanceResult:
    L1: float
    L2: float
    M: float
    k: float

    @property
    def k_out_of_range(self) -> bool:
        """Quadrature error pushed |k| past 1 (flagged, not rejected)."""
        return abs(self.k) > 1.0 + 1e-3


def _block_sum(mid_a, vec_a, mid_b, vec_b, floor, mask=None):
    d = np.linalg.norm(mid_a[:, None, :] - mid_b[None, :, :], axis=-1)
    dots = vec_a @ vec_b.T
    if mask is not None:
        d = np.where(mask, d, np.inf)
        dots = np.where(mask, dots, 0.0)
    closest = float(d.min()) if d.size else math.inf
    if closest < floor:
        raise SingularityError(
            f"filaments {closest:.3g} um apart, below the {floor} um floor"
        )
    return float(np.sum(dots / d))


def _double_sum(mid_a, vec_a, mid_b, vec_b, floor, workers, parent_a=None, parent_b=None):
    starts = range(0, len(mid_a), _BLOCK_ROWS)

    def job(i0):
        sl = slice(i0, i0 + _BLOCK_ROWS)
        mask = None
        if parent_a is not None:
            mask = parent_a[sl, None] != parent_b[None, :]
        return _block_sum(mid_a[sl], vec_a[sl], mid_b, vec_b, floor, mask)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(i0) for i0 in starts]
    # fsum is exactly rounded, so the block combination order is irrelevant
    return math.fsum(parts)


def _canonical_key(path: Sequence[Segment]) -> bytes:
    mid, vec = path_arrays(path)
    return np.concatenate([mid.ravel(), vec.ravel()]).tobytes()


def mutual_inductance(
    path_a: Sequence[Segment], path_b: Sequence[Segment], cfg: QuadratureConfig | None = None
) -> float:
    """Neumann mutual inductance between two distinct filament paths."""
    cfg = cfg or QuadratureConfig()
    if not path_a or not path_b:
        raise InvalidArgument("paths must be non-empty")
    # evaluate in a canonical argument order so M(a, b) == M(b, a) bit for bit
    if _canonical_key(path_b) < _canonical_key(path_a):
        path_a, path_b = path_b, path_a
    mid_a, vec_a = path_arrays(subdivide(path_a, cfg.max_segment_len))
    mid_b, vec_b = path_arrays(subdivide(path_b, cfg.max_segment_len))
    total = _double_sum(mid_a, vec_a, mid_b, vec_b, cfg.singular_distance_floor, cfg.workers)
    return MU0 / (4 * math.pi) * total * UM


def straight_self_inductance(length: float, trace_width: float) -> float:
    """Self inductance of one straight flat trace of zero thickness."""
    r_eff = GMD_FACTOR * trace_width
    return MU0 * length * UM / (2 * math.pi) * (math.log(2 * length / r_eff) - 1.0)


def self_inductance(
    path: Sequence[Segment], trace_width: float, cfg: QuadratureConfig | None = None
) -> float:
    cfg = cfg or QuadratureConfig()
    if not path or math.fsum(s.length for s in path) <= 0:
        raise InvalidArgument("degenerate path")
    if not trace_width > 0:
        raise InvalidArgument(f"trace_width must be > 0, got {trace_width}")
    own = math.fsum(straight_self_inductance(s.length, trace_width) for s in path)

    parts, parents = [], []
    for idx, seg in enumerate(path):
        pieces = subdivide([seg], cfg.max_segment_len)
        parts.extend(pieces)
        parents.extend([idx] * len(pieces))
    mid, vec = path_arrays(parts)
    parent = np.asarray(parents)
    cross = _double_sum(
        mid, vec, mid, vec, cfg.singular_distance_floor, cfg.workers, parent, parent
    )
    total = own + MU0 / (4 * math.pi) * cross * UM
    if not total > 0:
        raise InvalidArgument(f"non-positive self inductance {total:.3e} H")
    return total


def coupling_coefficient(M: float, L1: float, L2: float) -> float:
    if not (L1 > 0 and L2 > 0):
        raise InvalidArgument(f"inductances must be positive, got L1={L1}, L2={L2}")
    return M / math.sqrt(L1 * L2)


def coil_pair(path_a, width_a, path_b, width_b, cfg: QuadratureConfig | None = None):
    """L1, L2, M and k for two coils in one call."""
    cfg = cfg or QuadratureConfig()
    L1 = self_inductance(path_a, width_a, cfg)
    L2 = self_inductance(path_b, width_b, cfg)
    M = mutual_inductance(path_a, path_b, cfg)
    return InductanceResult(L1, L2, M, coupling_coefficient(M, L1, L2))


@dataclass(frozen=True)
class PowerLawFit:
    n: float
    c: float
    residual: float
    degenerate: bool = False


def fit_distance_exponent(samples: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Least-squares fit of ``|M| = c / d**n`` in log-log space.

    ``residual`` is the RMS of the log-domain residuals. With fewer than two
    distinct distances the exponent is undetermined; the fit then reports
    ``degenerate=True`` with ``n = nan``, unless fewer than two samples
    were given at all, which is an error.
    """
    if len(samples) < 2:
        raise InvalidArgument("need at least 2 samples")
    d = np.array([s[0] for s in samples], dtype=float)
    m = np.array([s[1] for s in samples], dtype=float)
    if np.any(d <= 0):
        raise InvalidArgument("distances must be positive")
    if np.any(m == 0) or not (np.all(m > 0) or np.all(m < 0)):
        raise InvalidArgument("samples must be nonzero and share one sign")
    sign = 1.0 if m[0] > 0 else -1.0
    x, y = np.log(d), np.log(np.abs(m))
    if np.ptp(x) == 0:
        return PowerLawFit(math.nan, math.nan, math.nan, degenerate=True)
    A = np.column_stack([np.ones_like(x), -x])
    (log_c, n), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([log_c, n])
    return PowerLawFit(float(n), sign * math.exp(log_c), float(np.sqrt(np.mean(resid**2))))
