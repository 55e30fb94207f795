"""Experiment configuration files.

The format is INI: named ``[blocks]`` of ``key = value`` lines, ``#`` or
``;`` comments. Blocks and keys (all optional, defaults follow the 2x2,
250 um, 5-turn layout)::

    [geometry]   outer_side turns trace_width trace_spacing winding
                 rows cols edge_gap vertical_gap          (lengths in um)
    [quadrature] max_segment_len singular_distance_floor workers
    [drive]      v_drive pulse_slew
    [sweep]      axis = edge_gap | trace_width | trace_spacing
                 values = comma list; frequencies_ghz = comma list
    [ber]        schemes trials seed noise_sigma | eb_n0_db
                 v_signal lane_rate threshold_ratio workers
    [channel]    source = internal | touchstone | uniform
                 path port_map frequency_ghz            (touchstone)
                 interferer_ratio target_basic_ber      (uniform)

A CSV written by the CLI embeds its resolved configuration as
``# config:`` comment lines; passing such a CSV as the config file reruns
the same experiment.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .channel import DriveModel
from .codec import Scheme, SchemeKind
from .errors import ConfigError, IclError
from .geometry import Coil, Winding
from .inductance import QuadratureConfig

MANIFEST_PREFIX = "# config: "
SWEEP_AXES = ("edge_gap", "trace_width", "trace_spacing")

_KNOWN = {
    "geometry": {"outer_side", "turns", "trace_width", "trace_spacing", "winding",
                 "rows", "cols", "edge_gap", "vertical_gap"},
    "quadrature": {"max_segment_len", "singular_distance_floor", "workers"},
    "drive": {"v_drive", "pulse_slew"},
    "sweep": {"axis", "values", "frequencies_ghz"},
    "ber": {"schemes", "trials", "seed", "noise_sigma", "eb_n0_db", "v_signal",
            "lane_rate", "threshold_ratio", "workers"},
    "channel": {"source", "path", "port_map", "frequency_ghz", "interferer_ratio",
                "target_basic_ber"},
}


@dataclass
class GeometryBlock:
    outer_side: float = 250.0
    turns: int = 5
    trace_width: float = 9.0
    trace_spacing: float = 1.0
    winding: str = "counterclockwise"
    rows: int = 2
    cols: int = 2
    edge_gap: float = 10.0
    vertical_gap: float = 106.0

    def coil(self, **overrides) -> Coil:
        kw = dict(outer_side=self.outer_side, turns=self.turns, trace_width=self.trace_width,
                  trace_spacing=self.trace_spacing, winding=Winding(self.winding))
        kw.update(overrides)
        return Coil(**kw)


@dataclass
class SweepBlock:
    axis: str | None = None
    values: list[float] = field(default_factory=list)
    frequencies_ghz: list[float] = field(default_factory=list)


@dataclass
class BerBlock:
    schemes: list[str] = field(default_factory=lambda: [k.value for k in SchemeKind])
    trials: int = 100_000
    seed: int = 1
    noise_sigma: float | None = None
    eb_n0_db: list[float] = field(default_factory=list)
    v_signal: float = 1.0
    lane_rate: float = 10e9
    threshold_ratio: float = 0.5
    workers: int = 1

    def scheme_list(self, lanes: int) -> list[Scheme]:
        out = []
        for name in self.schemes:
            try:
                kind = SchemeKind(name)
            except ValueError:
                raise ConfigError(f"[ber] unknown scheme {name!r}") from None
            ratio = self.threshold_ratio if kind == SchemeKind.BASIC else 0.5
            out.append(Scheme(kind, lanes, ratio))
        return out


@dataclass
class ChannelBlock:
    source: str = "internal"
    path: str | None = None
    port_map: list[tuple[int, int]] = field(default_factory=lambda: [(1, 2)])
    frequency_ghz: float | None = None
    interferer_ratio: float | None = None  # None = calibrate
    target_basic_ber: float = 0.21


@dataclass
class ExperimentConfig:
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    drive: DriveModel = field(default_factory=DriveModel)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    ber: BerBlock = field(default_factory=BerBlock)
    channel: ChannelBlock = field(default_factory=ChannelBlock)
    text: str = ""  # canonical resolved form, used for the manifest

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]

    def noise_sigma(self) -> float:
        from .ber import db_to_linear, sigma_from_eb_n0

        if self.ber.noise_sigma is not None:
            return self.ber.noise_sigma
        if len(self.ber.eb_n0_db) == 1:
            return sigma_from_eb_n0(self.ber.v_signal, db_to_linear(self.ber.eb_n0_db[0]))
        return 0.175 * self.ber.v_signal


def _floats(raw: str, key: str) -> list[float]:
    try:
        return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {raw!r}") from None


def _num(sec, key, kind=float):
    raw = sec[key]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key}: cannot read {raw!r} as {kind.__name__}") from None


def _port_map(raw: str) -> list[tuple[int, int]]:
    pairs = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            tx, rx = item.split(":")
            pairs.append((int(tx), int(rx)))
        except ValueError:
            raise ConfigError(f"[channel] port_map entry {item!r} is not 'tx:rx'") from None
    return pairs


def strip_manifest(text: str) -> str:
    """Recover the embedded configuration from a CLI output CSV."""
    lines = [ln[len(MANIFEST_PREFIX):] for ln in text.splitlines() if ln.startswith(MANIFEST_PREFIX)]
    return "\n".join(lines) + "\n" if lines else text


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    text = strip_manifest(text)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for name in cp.sections():
        if name not in _KNOWN:
            raise ConfigError(f"unknown block [{name}]")
        extra = set(cp[name]) - _KNOWN[name]
        if extra:
            raise ConfigError(f"[{name}] unknown keys: {', '.join(sorted(extra))}")

    cfg = ExperimentConfig()
    try:
        _fill(cfg, cp, base_dir)
    except ConfigError:
        raise
    except (IclError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cfg.text = canonical_text(cfg)
    return cfg


def _fill(cfg: ExperimentConfig, cp, base_dir):
    if cp.has_section("geometry"):
        sec, g = cp["geometry"], cfg.geometry
        for key in ("outer_side", "trace_width", "trace_spacing", "edge_gap", "vertical_gap"):
            if key in sec:
                setattr(g, key, _num(sec, key))
        for key in ("turns", "rows", "cols"):
            if key in sec:
                setattr(g, key, _num(sec, key, int))
        if "winding" in sec:
            g.winding = Winding(sec["winding"].strip().lower()).value
    if cp.has_section("quadrature"):
        sec = cp["quadrature"]
        cfg.quadrature = QuadratureConfig(
            max_segment_len=_num(sec, "max_segment_len") if "max_segment_len" in sec else 5.0,
            singular_distance_floor=(
                _num(sec, "singular_distance_floor") if "singular_distance_floor" in sec else 0.1
            ),
            workers=_num(sec, "workers", int) if "workers" in sec else 1,
        )
    if cp.has_section("drive"):
        sec = cp["drive"]
        d = DriveModel()
        cfg.drive = DriveModel(
            v_drive=_num(sec, "v_drive") if "v_drive" in sec else d.v_drive,
            pulse_slew=_num(sec, "pulse_slew") if "pulse_slew" in sec else d.pulse_slew,
        )
    if cp.has_section("sweep"):
        sec, s = cp["sweep"], cfg.sweep
        if "axis" in sec:
            s.axis = sec["axis"].strip()
            if s.axis not in SWEEP_AXES:
                raise ConfigError(f"[sweep] axis must be one of {', '.join(SWEEP_AXES)}, got {s.axis!r}")
        if "values" in sec:
            s.values = _floats(sec["values"], "[sweep] values")
            if any(not v > 0 for v in s.values):
                raise ConfigError("[sweep] values must all be positive")
        if "frequencies_ghz" in sec:
            s.frequencies_ghz = _floats(sec["frequencies_ghz"], "[sweep] frequencies_ghz")
    if cp.has_section("ber"):
        sec, b = cp["ber"], cfg.ber
        if "schemes" in sec:
            b.schemes = [x.strip() for x in sec["schemes"].split(",") if x.strip()]
        for key in ("trials", "seed", "workers"):
            if key in sec:
                setattr(b, key, _num(sec, key, int))
        for key in ("noise_sigma", "v_signal", "lane_rate", "threshold_ratio"):
            if key in sec:
                setattr(b, key, _num(sec, key))
        if "eb_n0_db" in sec:
            b.eb_n0_db = _floats(sec["eb_n0_db"], "[ber] eb_n0_db")
        if b.trials < 1:
            raise ConfigError("[ber] trials must be >= 1")
        if b.seed < 0:
            raise ConfigError("[ber] seed must be non-negative")
        if b.noise_sigma is not None and b.noise_sigma < 0:
            raise ConfigError("[ber] noise_sigma must be >= 0")
        if b.noise_sigma is not None and b.eb_n0_db:
            raise ConfigError("[ber] give either noise_sigma or eb_n0_db, not both")
    if cp.has_section("channel"):
        sec, c = cp["channel"], cfg.channel
        if "source" in sec:
            c.source = sec["source"].strip().lower()
            if c.source not in ("internal", "touchstone", "uniform"):
                raise ConfigError(f"[channel] unknown source {c.source!r}")
        if "path" in sec:
            p = Path(sec["path"].strip())
            if not p.is_absolute() and base_dir is not None:
                p = (base_dir / p).resolve()
            c.path = str(p)
        if "port_map" in sec:
            c.port_map = _port_map(sec["port_map"])
        if "frequency_ghz" in sec:
            c.frequency_ghz = _num(sec, "frequency_ghz")
        if "interferer_ratio" in sec:
            raw = sec["interferer_ratio"].strip().lower()
            c.interferer_ratio = None if raw == "calibrate" else _num(sec, "interferer_ratio")
        if "target_basic_ber" in sec:
            c.target_basic_ber = _num(sec, "target_basic_ber")
        if c.source == "touchstone" and not c.path:
            raise ConfigError("[channel] touchstone source needs a path")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, list):
        if v and isinstance(v[0], tuple):
            return ", ".join(f"{a}:{b}" for a, b in v)
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def canonical_text(cfg: ExperimentConfig) -> str:
    """Fully resolved config with every key spelled out, in fixed order."""
    g, q, d, s, b, c = cfg.geometry, cfg.quadrature, cfg.drive, cfg.sweep, cfg.ber, cfg.channel
    blocks = {
        "geometry": [(k, getattr(g, k)) for k in ("outer_side", "turns", "trace_width",
                     "trace_spacing", "winding", "rows", "cols", "edge_gap", "vertical_gap")],
        # worker counts never change results, so they stay out of the manifest
        "quadrature": [("max_segment_len", q.max_segment_len),
                       ("singular_distance_floor", q.singular_distance_floor)],
        "drive": [("v_drive", d.v_drive), ("pulse_slew", d.pulse_slew)],
        "sweep": ([("axis", s.axis)] if s.axis else [])
        + ([("values", s.values)] if s.values else [])
        + ([("frequencies_ghz", s.frequencies_ghz)] if s.frequencies_ghz else []),
        "ber": [("schemes", b.schemes), ("trials", b.trials), ("seed", b.seed)]
        + ([("noise_sigma", b.noise_sigma)] if b.noise_sigma is not None else [])
        + ([("eb_n0_db", b.eb_n0_db)] if b.eb_n0_db else [])
        + [("v_signal", b.v_signal), ("lane_rate", b.lane_rate),
           ("threshold_ratio", b.threshold_ratio)],
        "channel": [("source", c.source)]
        + ([("path", c.path)] if c.path else [])
        + [("port_map", c.port_map)]
        + ([("frequency_ghz", c.frequency_ghz)] if c.frequency_ghz is not None else [])
        + [("interferer_ratio", "calibrate" if c.interferer_ratio is None else c.interferer_ratio),
           ("target_basic_ber", c.target_basic_ber)],
    }
    lines = []
    for name, items in blocks.items():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {_fmt(v)}" for k, v in items)
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent.resolve())
