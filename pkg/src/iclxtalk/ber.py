"""Bit-error-rate estimation: closed form and seeded Monte Carlo.

Monte Carlo model, one sample per RX lane per slot::

    v_rx[i] = v_signal * sum_j gain[i, j] * symbol[j] + N(0, noise_sigma**2)

Gains are referred to each lane's own signal gain first, so ``v_signal`` is
the received signal amplitude and the diagonal is 1.

Trials are frames (slots). Frames are grouped into fixed-size blocks and
block ``b`` draws from its own Philox stream keyed by ``(seed, b)``, so the
result is identical however many workers evaluate the blocks.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, ndtr

from .channel import ChannelMatrix, uniform_channel
from .codec import Scheme, SchemeKind, all_schemes, decode_block, encode_block, throughput
from .errors import InvalidArgument

BLOCK_FRAMES = 8192
DEFAULT_LANE_RATE = 10e9


@dataclass(frozen=True)
class NoisePoint:
    eb_n0: float
    isr: float = 0.0

    def __post_init__(self):
        if self.eb_n0 < 0 or self.isr < 0:
            raise InvalidArgument("eb_n0 and isr must be non-negative")


@dataclass(frozen=True)
class BerResult:
    errors: int
    trials: int  # payload bits evaluated
    ber: float
    ci95: tuple[float, float]
    throughput: float
    seed: int
    frames: int = 0


def q_function(x):
    """Gaussian tail probability P(Z > x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))[()]


def analytic_ber(p: NoisePoint) -> float:
    return float(q_function(math.sqrt(2.0 * p.eb_n0 / (1.0 + p.isr))))


def eb_n0_from_sigma(v_signal: float, noise_sigma: float) -> float:
    return v_signal**2 / (2.0 * noise_sigma**2)


def sigma_from_eb_n0(v_signal: float, eb_n0: float) -> float:
    if eb_n0 <= 0:
        raise InvalidArgument("eb_n0 must be > 0 to define a finite noise sigma")
    return v_signal / math.sqrt(2.0 * eb_n0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def wilson_interval(errors: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n <= 0:
        raise InvalidArgument("n must be positive")
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # clamp rounding so the interval always brackets the estimate
    return min(max(0.0, centre - half), p), max(min(1.0, centre + half), p)


def _block_errors(gain, scheme, noise_sigma, v_signal, seed, block, frames):
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.Philox(ss))
    payload = rng.integers(0, 2, size=(frames, scheme.bits_per_slot))
    noise = rng.standard_normal((frames, scheme.lanes))
    slots = block * BLOCK_FRAMES + np.arange(frames)
    sym = encode_block(scheme, payload, slots)
    rx = v_signal * (sym @ gain.T) + noise_sigma * noise
    decoded = decode_block(scheme, rx, v_signal, slots)
    return int(np.count_nonzero(decoded != payload))


def monte_carlo_ber(
    ch: ChannelMatrix,
    scheme: Scheme,
    noise_sigma: float,
    v_signal: float,
    trials: int,
    seed: int,
    workers: int = 1,
    lane_rate: float = DEFAULT_LANE_RATE,
) -> BerResult:
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    if noise_sigma < 0:
        raise InvalidArgument("noise_sigma must be >= 0")
    if not v_signal > 0:
        raise InvalidArgument("v_signal must be > 0")
    if ch.pairs != scheme.lanes:
        raise InvalidArgument(
            f"channel has {ch.pairs} pairs but the scheme uses {scheme.lanes} lanes"
        )
    gain = ch.relative_gain()
    n_blocks = -(-trials // BLOCK_FRAMES)

    def job(b):
        frames = min(BLOCK_FRAMES, trials - b * BLOCK_FRAMES)
        return _block_errors(gain, scheme, noise_sigma, v_signal, seed, b, frames)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(job, range(n_blocks)))
    else:
        errors = sum(job(b) for b in range(n_blocks))
    bits = trials * scheme.bits_per_slot
    return BerResult(
        errors=errors,
        trials=bits,
        ber=errors / bits,
        ci95=wilson_interval(errors, bits),
        throughput=throughput(scheme, lane_rate),
        seed=seed,
        frames=trials,
    )


def compare_schemes(
    ch: ChannelMatrix,
    noise_sigma: float,
    v_signal: float,
    trials: int,
    seed: int,
    workers: int = 1,
    schemes: list[Scheme] | None = None,
    lane_rate: float = DEFAULT_LANE_RATE,
) -> list[tuple[Scheme, BerResult]]:
    schemes = schemes or all_schemes(ch.pairs)
    return [
        (s, monte_carlo_ber(ch, s, noise_sigma, v_signal, trials, seed, workers, lane_rate))
        for s in schemes
    ]


def basic_ber_expected(
    ch: ChannelMatrix, noise_sigma: float, v_signal: float = 1.0, threshold_ratio: float = 0.5
) -> float:
    """Exact Basic-scheme BER by enumerating every transmit pattern.

    Each lane's error probability given the pattern is a Gaussian tail;
    with ``noise_sigma == 0`` it degenerates to the threshold rule.
    """
    g = ch.relative_gain()
    n = g.shape[0]
    th = threshold_ratio * v_signal
    total = 0.0
    for pattern in itertools.product((-1.0, 1.0), repeat=n):
        s = np.array(pattern)
        mean = v_signal * (g @ s) * s  # signed so a correct decision is positive
        if noise_sigma == 0:
            err = np.where(mean > th, 0.0, 1.0) if th > 0 else np.where(mean > 0, 0.0, 1.0)
        else:
            err = ndtr((th - mean) / noise_sigma)
        total += float(err.sum())
    return total / (n * 2**n)


@dataclass(frozen=True)
class OperatingPoint:
    noise_sigma: float
    interferer_ratio: float
    v_signal: float
    expected_basic_ber: float


def calibrate_uniform_crosstalk(
    target_basic_ber: float = 0.21,
    noise_sigma: float = 0.175,
    lanes: int = 4,
    v_signal: float = 1.0,
    threshold_ratio: float = 0.5,
) -> OperatingPoint:
    """Find the uniform interferer ratio that puts Basic BER on target.

    The noise level is held fixed; the ratio is solved on the exact
    enumerated Basic BER, which rises monotonically with crosstalk.
    """
    def f(r):
        ch = uniform_channel(lanes, r)
        return basic_ber_expected(ch, noise_sigma, v_signal, threshold_ratio) - target_basic_ber

    hi = 0.99  # keep the diagonal dominant
    if f(0.0) > 0 or f(hi) < 0:
        raise InvalidArgument(
            f"target BER {target_basic_ber} unreachable at noise_sigma={noise_sigma}"
        )
    r = brentq(f, 0.0, hi, xtol=1e-12)
    return OperatingPoint(noise_sigma, r, v_signal, f(r) + target_basic_ber)


def results_csv(rows: list[tuple[Scheme, BerResult]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "trials", "errors", "ber", "ci_lo", "ci_hi", "throughput_gbps", "seed"])
    for s, r in rows:
        w.writerow([
            s.kind.value, r.trials, r.errors, f"{r.ber:.4g}",
            f"{r.ci95[0]:.4g}", f"{r.ci95[1]:.4g}", f"{r.throughput / 1e9:g}", r.seed,
        ])
    return buf.getvalue()
