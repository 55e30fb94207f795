"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 parse error, 4 numeric/domain error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import ConfigError, IclError, ParseError
from .experiments import (
    manifest_lines,
    run_inductance,
    run_scheme_comparison,
    run_separation_sweep,
    run_trace_sweep,
    with_overrides,
)
from .sparams import ports_from_filename, parse_touchstone

log = logging.getLogger("iclxtalk")

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_NUMERIC = 0, 2, 3, 4

RUNNERS = {
    "sweep-separation": run_separation_sweep,
    "sweep-trace": run_trace_sweep,
    "compare-schemes": run_scheme_comparison,
    "inductance": run_inductance,
}


def _csv_text(header, rows, manifest) -> str:
    lines = list(manifest) + [",".join(header)] + [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _run_experiment(args) -> int:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if not args.config:
        from .config import canonical_text

        cfg.text = canonical_text(cfg)
    cfg = with_overrides(cfg, args.seed, args.trials, args.workers)
    header, rows = RUNNERS[args.command](cfg)
    _emit(_csv_text(header, rows, manifest_lines(cfg, args.command)), args.out)
    return EXIT_OK


def _parse_touchstone_cmd(args) -> int:
    path = Path(args.file)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    n = args.ports or ports_from_filename(path)
    ts = parse_touchstone(data, n)
    lines = [
        "ports,n_freq,f_min_hz,f_max_hz,format,ref_ohm",
        f"{ts.n_ports},{len(ts.freq)},{ts.freq[0]:.9g},{ts.freq[-1]:.9g},"
        f"{ts.format_in.upper()},{ts.ref_impedance:g}",
    ]
    for d in ts.diagnostics:
        log.warning(d)
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iclxtalk", description="ICL crosstalk simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="config file, or a previous output CSV to rerun")
        sp.add_argument("--out", help="output CSV path (default stdout)")
        sp.add_argument("--seed", type=int, help="override [ber] seed")
        sp.add_argument("--trials", type=int, help="override [ber] trials")
        sp.add_argument("--workers", type=int, help="parallel workers (results do not depend on it)")
    tp = sub.add_parser("parse-touchstone")
    tp.add_argument("file")
    tp.add_argument("--ports", type=int, help="port count (default: from the extension)")
    tp.add_argument("--out")
    return p


def main(argv=None) -> int:
    logging.basicConfig(format="iclxtalk: %(message)s", level=logging.INFO)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "parse-touchstone":
            return _parse_touchstone_cmd(args)
        return _run_experiment(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except (IclError, ArithmeticError, ValueError) as exc:
        log.error("numeric error: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
