"""Sweep and comparison runners behind the CLI subcommands.

Each runner returns ``(header, rows)`` with every numeric field already
formatted (dB to 2 decimals, BER to 4 significant digits) so CSV output
is stable enough for golden-file comparison.
"""
from __future__ import annotations

from dataclasses import replace

from . import __version__
from .ber import (
    calibrate_uniform_crosstalk,
    compare_schemes,
    monte_carlo_ber,
)
from .channel import ChannelMatrix, build_channel, ratio_to_db, uniform_channel
from .codec import Scheme, SchemeKind
from .config import MANIFEST_PREFIX, ExperimentConfig
from .errors import ConfigError
from .geometry import pitch_from_edge_gap, place_array, spiral_path
from .inductance import coil_pair, fit_distance_exponent
from .sparams import PortMap, gain_db_at, read_touchstone, to_channel

Rows = list[list[str]]


def fmt_db(x: float) -> str:
    return f"{x:.2f}"


def fmt_ber(x: float) -> str:
    return f"{x:.4g}"


def _array(cfg: ExperimentConfig, coil=None, rows=None, cols=None, edge_gap=None):
    g = cfg.geometry
    coil = coil or g.coil()
    pitch = pitch_from_edge_gap(coil.outer_side, g.edge_gap if edge_gap is None else edge_gap)
    return place_array(coil, rows or g.rows, cols or g.cols, pitch, g.vertical_gap)


def run_separation_sweep(cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    s = cfg.sweep
    if s.axis != "edge_gap":
        raise ConfigError(f"sweep-separation needs [sweep] axis = edge_gap, got {s.axis!r}")
    if not s.values:
        raise ConfigError("[sweep] values is empty")
    coil = cfg.geometry.coil()
    results = []
    for gap in sorted(s.values):
        ch = build_channel(_array(cfg, coil, 1, 2, gap), cfg.quadrature, cfg.drive)
        onchip = abs(ch.onchip_coupling(0, 1))
        offchip = max(abs(ch.offchip_coupling(0, 1)), abs(ch.offchip_coupling(1, 0)))
        results.append((gap, coil.outer_side + gap, ch.onchip_m[0, 1], onchip, offchip))

    if len({r[1] for r in results}) >= 2:
        fit = fit_distance_exponent([(r[1], r[2]) for r in results])
        n_field = f"{fit.n:.3f}"
    else:
        n_field = "degenerate"
    header = ["edge_gap_um", "onchip_db", "offchip_db", "fitted_n"]
    rows = [
        [f"{gap:g}", fmt_db(ratio_to_db(on)), fmt_db(ratio_to_db(off)), n_field]
        for gap, _, _, on, off in results
    ]
    return header, rows


def _touchstone_path(cfg: ExperimentConfig, value: float) -> str:
    return cfg.channel.path.format(value=f"{value:g}")


def run_trace_sweep(cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    s = cfg.sweep
    if s.axis not in ("trace_width", "trace_spacing"):
        raise ConfigError(f"sweep-trace needs axis trace_width or trace_spacing, got {s.axis!r}")
    if not s.values:
        raise ConfigError("[sweep] values is empty")
    source = cfg.channel.source
    if s.frequencies_ghz and source != "touchstone":
        raise ConfigError(
            "per-frequency gain columns need a touchstone channel source; the internal "
            "filament model is quasi-static and has a single frequency-independent gain"
        )
    b = cfg.ber
    sigma = cfg.noise_sigma()
    rows = []
    if source == "touchstone":
        freqs = s.frequencies_ghz or ([cfg.channel.frequency_ghz] if cfg.channel.frequency_ghz else [])
        if not freqs:
            raise ConfigError("touchstone trace sweep needs frequencies_ghz or [channel] frequency_ghz")
        header = ["value_um"] + [f"gain_db_{f:g}ghz" for f in freqs] + ["ber"]
        pm = PortMap(tuple(cfg.channel.port_map))
        tx, rx = pm.pairs[0]
        f_ber = (cfg.channel.frequency_ghz or freqs[0]) * 1e9
        for v in s.values:
            ts = read_touchstone(_touchstone_path(cfg, v))
            gains = [fmt_db(gain_db_at(ts, rx, tx, f * 1e9)) for f in freqs]
            ch = to_channel(ts, f_ber, pm)
            res = monte_carlo_ber(ch, Scheme(SchemeKind.BASIC, ch.pairs, b.threshold_ratio),
                                  sigma, b.v_signal, b.trials, b.seed, b.workers, b.lane_rate)
            rows.append([f"{v:g}"] + gains + [fmt_ber(res.ber)])
        return header, rows

    if source != "internal":
        raise ConfigError(f"sweep-trace does not support channel source {source!r}")
    header = ["value_um", "gain_db", "ber"]
    for v in s.values:
        coil = cfg.geometry.coil(**{s.axis: v})
        ch = build_channel(_array(cfg, coil), cfg.quadrature, cfg.drive)
        k = ch.offchip_coupling(0, 0)
        res = monte_carlo_ber(ch, Scheme(SchemeKind.BASIC, ch.pairs, b.threshold_ratio),
                              sigma, b.v_signal, b.trials, b.seed, b.workers, b.lane_rate)
        rows.append([f"{v:g}", fmt_db(ratio_to_db(abs(k))), fmt_ber(res.ber)])
    return header, rows


def scheme_channel(cfg: ExperimentConfig) -> ChannelMatrix:
    c = cfg.channel
    lanes = cfg.geometry.rows * cfg.geometry.cols
    if c.source == "uniform":
        ratio = c.interferer_ratio
        if ratio is None:
            op = calibrate_uniform_crosstalk(
                c.target_basic_ber, cfg.noise_sigma(), lanes, cfg.ber.v_signal, cfg.ber.threshold_ratio
            )
            ratio = op.interferer_ratio
        return uniform_channel(lanes, ratio)
    if c.source == "touchstone":
        if c.frequency_ghz is None:
            raise ConfigError("[channel] frequency_ghz is required for a touchstone source")
        return to_channel(read_touchstone(c.path), c.frequency_ghz * 1e9, PortMap(tuple(c.port_map)))
    return build_channel(_array(cfg), cfg.quadrature, cfg.drive)


def run_scheme_comparison(cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    b = cfg.ber
    if len(b.eb_n0_db) > 1:
        raise ConfigError("compare-schemes takes a single noise level")
    ch = scheme_channel(cfg)
    schemes = b.scheme_list(ch.pairs)
    results = compare_schemes(ch, cfg.noise_sigma(), b.v_signal, b.trials, b.seed,
                              b.workers, schemes, b.lane_rate)
    header = ["scheme", "bits_per_slot", "throughput_gbps", "ber", "ci_lo", "ci_hi"]
    rows = [
        [s.kind.value, str(s.bits_per_slot), f"{r.throughput / 1e9:g}",
         fmt_ber(r.ber), fmt_ber(r.ci95[0]), fmt_ber(r.ci95[1])]
        for s, r in results
    ]
    return header, rows


def run_inductance(cfg: ExperimentConfig) -> tuple[list[str], Rows]:
    g = cfg.geometry
    tx = g.coil()
    rx = tx.moved((0.0, 0.0, g.vertical_gap))
    res = coil_pair(spiral_path(tx), tx.trace_width, spiral_path(rx), rx.trace_width, cfg.quadrature)
    header = ["L1_nH", "L2_nH", "M_nH", "k", "k_flagged"]
    return header, [[f"{res.L1 * 1e9:.6g}", f"{res.L2 * 1e9:.6g}", f"{res.M * 1e9:.6g}",
                     f"{res.k:.6g}", str(res.k_out_of_range).lower()]]


def manifest_lines(cfg: ExperimentConfig, command: str) -> list[str]:
    lines = [
        f"# iclxtalk {__version__}",
        f"# command: {command}",
        f"# config_sha256: {cfg.digest}",
        f"# seed: {cfg.ber.seed}",
    ]
    lines += [MANIFEST_PREFIX + ln for ln in cfg.text.splitlines()]
    return lines


def with_overrides(cfg: ExperimentConfig, seed: int | None = None, trials: int | None = None,
                   workers: int | None = None) -> ExperimentConfig:
    from .config import canonical_text

    ber = cfg.ber
    if seed is not None:
        if seed < 0:
            raise ConfigError("--seed must be non-negative")
        ber = replace(ber, seed=seed)
    if trials is not None:
        if trials < 1:
            raise ConfigError("--trials must be >= 1")
        ber = replace(ber, trials=trials)
    quad = cfg.quadrature
    if workers is not None:
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        ber = replace(ber, workers=workers)
        quad = replace(quad, workers=workers)
    out = replace(cfg, ber=ber, quadrature=quad)
    out.text = canonical_text(out)
    return out
