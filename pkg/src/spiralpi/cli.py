"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .config import RunConfig, Sweep, load_config
from .errors import ConfigError, SpiralError
from .extraction import extract_pi_model
from .fitting import FitProblem, fit
from .network import QLProfile, TwoPortData, convert, de_embed, extract_ql, pi_to_two_port, smith_points
from .optimizer import optimize
from .pi_model import ELEMENTS, PiModel, q_factor
from .touchstone import FORMATS, atomic_write_text, read_touchstone, write_touchstone

SWEEP_COLUMNS = ("frequency_hz", "q", "l_eff_h", "re_s11", "im_s11")
SMITH_COLUMNS = ("frequency_hz", "re_s11", "im_s11")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(v) -> str:
    return f"{v:.17g}"


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def sweep_table(data: TwoPortData) -> tuple[QLProfile, str]:
    profile = extract_ql(data)
    smith = smith_points(data)
    rows = [(f, q, l, re, im) for (f, re, im), q, l in zip(smith, profile.q, profile.l_eff)]
    return profile, _csv_text(SWEEP_COLUMNS, rows)


def _summary(profile: QLProfile, out) -> None:
    srf = "none in sweep" if profile.srf is None else f"{profile.srf / 1e9:.4f} GHz"
    print(f"Q_max = {profile.q_max:.4f} at {profile.f_q_max / 1e9:.4f} GHz", file=out)
    print(f"SRF = {srf}", file=out)
    print(f"L_eff({profile.freqs[0] / 1e9:g} GHz) = {profile.l_eff[0] * 1e9:.4f} nH", file=out)
    print(f"L_eff({profile.freqs[-1] / 1e9:g} GHz) = {profile.l_eff[-1] * 1e9:.4f} nH", file=out)


def _print_model(model: PiModel, out) -> None:
    units = {"L_s": (1e-9, "nH"), "R_s": (1.0, "ohm"), "C_s": (1e-15, "fF"),
             "C_ox": (1e-15, "fF"), "C_Si": (1e-15, "fF"), "R_Si": (1.0, "ohm")}
    for name in ELEMENTS:
        scale, unit = units[name]
        print(f"{name} = {getattr(model, name) / scale:.6g} {unit}", file=out)


def _model_json(model: PiModel) -> dict:
    return {name: getattr(model, name) for name in ELEMENTS}


def _write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _require(cfg: RunConfig, attr: str, section: str):
    value = getattr(cfg, attr)
    if value is None:
        raise ConfigError(f"config has no [{section}] section")
    return value


def cmd_analyze(args, out):
    cfg = load_config(args.config)
    geom = _require(cfg, "geometry", "geometry")
    model = extract_pi_model(geom, cfg.stack, cfg.ref_freq)
    data = pi_to_two_port(model, cfg.sweep.freqs())
    profile, table = sweep_table(data)
    if args.output:
        atomic_write_text(args.output, table)
    if args.touchstone:
        write_touchstone(convert(data, "S"), args.touchstone, args.format)
    print(f"geometry: d_in={geom.d_in * 1e6:g} um, w={geom.w * 1e6:g} um, s={geom.s * 1e6:g} um, "
          f"n={geom.n:g}, d_out={geom.d_out * 1e6:g} um, {cfg.stack.substrate_config}", file=out)
    _print_model(model, out)
    _summary(profile, out)


def cmd_sweep(args, out):
    cfg = load_config(args.config)
    model = _require(cfg, "model", "model")
    data = pi_to_two_port(model, cfg.sweep.freqs())
    profile, table = sweep_table(data)
    write_touchstone(convert(data, args.rep), args.output, args.format)
    if args.csv:
        atomic_write_text(args.csv, table)
    _summary(profile, out)


def cmd_deembed(args, out):
    measured = read_touchstone(args.measured)
    pad = read_touchstone(args.open_pad)
    dut = de_embed(measured, pad)
    write_touchstone(convert(dut, args.rep or measured.rep), args.output, args.format)
    print(f"de-embedded {len(dut)} points -> {args.output}", file=out)


def cmd_fit(args, out):
    cfg = load_config(args.config)
    settings = cfg.fit
    if args.data:
        data = read_touchstone(args.data)
        kwargs = dict(data=data)
    else:
        if settings is None or not settings.anchors:
            raise ConfigError("fit needs --data or anchors in the [fit] section")
        kwargs = dict(anchors=settings.anchors, sweep=(cfg.sweep.start, cfg.sweep.stop))
    if settings is not None:
        kwargs.update(bounds=settings.bounds, seed=settings.seed, starts=settings.starts,
                      prior_weight=settings.prior_weight)
    if cfg.model is not None:
        kwargs["init"] = cfg.model
    try:
        problem = FitProblem(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = fit(problem)
    payload = {
        "model": _model_json(report.model),
        "residual": report.residual,
        "iterations": report.iterations,
        "converged": report.converged,
        "start_index": report.start_index,
    }
    if problem.anchors:
        payload["anchors"] = [
            {"quantity": a.quantity, "freq_hz": a.freq, "target": a.target, "residual": r}
            for a, r in zip(problem.anchors, report.anchor_residuals)
        ]
    if args.output:
        _write_json(args.output, payload)
    _print_model(report.model, out)
    print(f"residual (rms) = {report.residual:.3e}, iterations = {report.iterations}, "
          f"converged = {report.converged}", file=out)
    for a, r in zip(problem.anchors, report.anchor_residuals):
        where = "" if a.freq is None else f" @ {a.freq / 1e9:g} GHz"
        print(f"anchor {a.quantity}{where}: residual {100 * r:+.4f} %", file=out)


def cmd_optimize(args, out):
    cfg = load_config(args.config)
    space = _require(cfg, "optimize", "optimize")
    result = optimize(space)
    geom = result.geometry
    model = extract_pi_model(geom, space.stack, space.ref_freq)
    data = pi_to_two_port(model, cfg.sweep.freqs())
    profile, table = sweep_table(data)
    record = {
        "d_in": geom.d_in, "w": geom.w, "s": geom.s, "n": geom.n, "d_out": geom.d_out,
        "target_freq": space.target_freq, "q": float(result.q.q),
        "model": _model_json(model),
    }
    if args.output:
        _write_json(args.output, record)
    if args.csv:
        atomic_write_text(args.csv, table)
    print(f"best: d_in={geom.d_in * 1e6:.4f} um, w={geom.w * 1e6:.4f} um, s={geom.s * 1e6:.4f} um, "
          f"n={geom.n:g}, d_out={geom.d_out * 1e6:.4f} um", file=out)
    print(f"Q({space.target_freq / 1e9:g} GHz) = {float(result.q.q):.4f}", file=out)
    _summary(profile, out)


def cmd_convert(args, out):
    data = read_touchstone(args.input)
    target = args.rep or data.rep
    write_touchstone(convert(data, target), args.output, args.format)
    print(f"{data.rep} -> {target} ({args.format}) -> {args.output}", file=out)


def cmd_smith(args, out):
    data = read_touchstone(args.input)
    atomic_write_text(args.output, _csv_text(SMITH_COLUMNS, smith_points(data)))
    print(f"{len(data)} Smith points -> {args.output}", file=out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spiralpi", description="Spiral inductor pi-model toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt_arg(p):
        p.add_argument("--format", choices=FORMATS, default="RI", type=str.upper)

    def rep_arg(p, default=None):
        p.add_argument("--rep", choices=("S", "Y", "Z"), default=default, type=str.upper)

    p = sub.add_parser("analyze", help="geometry -> pi model and Q/L sweep")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="sweep CSV")
    p.add_argument("--touchstone", help="also write the S-parameter sweep")
    fmt_arg(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="pi model -> Touchstone and CSV")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="Touchstone output")
    p.add_argument("--csv")
    fmt_arg(p)
    rep_arg(p, "S")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("deembed", help="open-pad de-embedding")
    p.add_argument("measured")
    p.add_argument("open_pad")
    p.add_argument("-o", "--output", required=True)
    fmt_arg(p)
    rep_arg(p)
    p.set_defaults(func=cmd_deembed)

    p = sub.add_parser("fit", help="fit pi model to data or anchors")
    p.add_argument("config")
    p.add_argument("--data", help="Touchstone data to fit")
    p.add_argument("-o", "--output", help="JSON report")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("optimize", help="maximize Q over a design space")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="JSON geometry record")
    p.add_argument("--csv", help="Q(f) sweep CSV of the optimum")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("convert", help="change representation and/or format")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    fmt_arg(p)
    rep_arg(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("smith", help="Smith chart points of S11")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_smith)
    return parser


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except SpiralError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return 2
    return 0


def main():
    sys.exit(run_cli())
