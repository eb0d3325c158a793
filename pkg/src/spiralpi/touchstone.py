"""Touchstone v1 two-port (.s2p) reading and writing."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError, NonAscendingFrequency, ParseError, WrongPortCount
from .network import REPS, TwoPortData

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
FORMATS = ("RI", "MA", "DB")
# magnitude floor when writing exact zeros in dB
_DB_FLOOR = -999.0


class IoError(DataError):
    pass


def atomic_write_text(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_option_line(tokens, lineno):
    unit, param, fmt, z0 = "GHZ", "S", "MA", 50.0
    it = iter(tokens)
    for tok in it:
        up = tok.upper()
        if up in FREQ_UNITS:
            unit = up
        elif up in REPS:
            param = up
        elif up in FORMATS:
            fmt = up
        elif up == "R":
            try:
                z0 = float(next(it))
            except (StopIteration, ValueError):
                raise ParseError("option line: R must be followed by a number", lineno) from None
        else:
            raise ParseError(f"option line: unsupported token {tok!r}", lineno)
    return FREQ_UNITS[unit], param, fmt, z0


def _decode(pairs: np.ndarray, fmt: str) -> np.ndarray:
    a, b = pairs[..., 0], pairs[..., 1]
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def _encode(values: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return np.stack([values.real, values.imag], axis=-1)
    mag = np.abs(values)
    ang = np.angle(values, deg=True)
    if fmt == "DB":
        with np.errstate(divide="ignore"):
            mag = np.where(mag > 0, 20.0 * np.log10(mag), _DB_FLOOR)
    return np.stack([mag, ang], axis=-1)


def read_touchstone(path) -> TwoPortData:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    option = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if option is not None or rows:
                raise ParseError("option line must appear exactly once, before the data", lineno)
            option = _parse_option_line(line[1:].split(), lineno)
            continue
        if option is None:
            raise ParseError("data before option line", lineno)
        tokens = line.split()
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"non-numeric value in {line!r}", lineno) from None
        if len(values) != 9:
            raise WrongPortCount(f"expected 9 values for a 2-port row, got {len(values)}", lineno)
        if rows and values[0] <= rows[-1][1][0]:
            raise NonAscendingFrequency(f"frequency {values[0]:g} does not increase", lineno)
        rows.append((lineno, values))

    if option is None:
        raise ParseError("missing option line")
    if not rows:
        raise ParseError("no data rows")
    scale, param, fmt, z0 = option
    table = np.array([v for _, v in rows])
    freqs = table[:, 0] * scale
    # column order 11, 21, 12, 22
    entries = _decode(table[:, 1:].reshape(-1, 4, 2), fmt)
    matrices = entries[:, [0, 2, 1, 3]].reshape(-1, 2, 2)
    return TwoPortData(freqs, matrices, param, z0)


def format_touchstone(data: TwoPortData, fmt: str = "RI", comments=()) -> str:
    fmt = fmt.upper()
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    lines = [f"! {c}" for c in comments]
    lines.append(f"# GHz {data.rep} {fmt} R {data.z0:.17g}")
    m = data.matrices.astype(complex)
    entries = np.stack([m[:, 0, 0], m[:, 1, 0], m[:, 0, 1], m[:, 1, 1]], axis=1)
    encoded = _encode(entries, fmt).reshape(len(data), 8)
    for f, row in zip(data.freqs, encoded):
        lines.append(" ".join(_num(v) for v in (f / 1e9, *row)))
    return "\n".join(lines) + "\n"


def _num(v: float) -> str:
    text = f"{v:.17g}"
    return "0" if text == "-0" else text


def write_touchstone(data: TwoPortData, path, fmt: str = "RI", comments=()):
    atomic_write_text(path, format_touchstone(data, fmt, comments))
