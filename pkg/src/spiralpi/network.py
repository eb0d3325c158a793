"""Two-port network algebra over a frequency sweep.

Synthesizes the pi network, converts between S, Y and Z with a real reference
impedance, removes open-pad parasitics, and reduces two-port data to the
one-port Q, effective inductance and self-resonance used for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InvalidTwoPort, SingularConversion, ZeroRealPart
from .pi_model import PiModel, angular

REPS = ("S", "Y", "Z")
CDTYPE = np.clongdouble
_SINGULAR_RTOL = 1e-15


@dataclass(frozen=True, eq=False)
class TwoPortData:
    """Frequency-indexed 2x2 complex parameters.

    ``matrices`` has shape (N, 2, 2) with the usual [[11, 12], [21, 22]] layout
    and is held in extended precision: Y and Z of a nearly series-only network
    are badly conditioned, and storing them in double would cost roughly
    cond(Y) * 1e-16 on every S/Y/Z roundtrip.
    """

    freqs: np.ndarray
    matrices: np.ndarray
    rep: str = "S"
    z0: float = 50.0

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=float).reshape(-1)
        matrices = np.array(self.matrices, dtype=CDTYPE)
        if matrices.ndim == 2 and matrices.shape == (2, 2) and freqs.size == 1:
            matrices = matrices[None]
        if matrices.shape != (freqs.size, 2, 2):
            raise InvalidTwoPort(f"matrices must have shape ({freqs.size}, 2, 2), got {matrices.shape}")
        if freqs.size == 0:
            raise InvalidTwoPort("at least one frequency is required")
        if np.any(freqs <= 0) or not np.all(np.isfinite(freqs)):
            raise InvalidTwoPort("frequencies must be finite and > 0")
        if np.any(np.diff(freqs) <= 0):
            raise InvalidTwoPort("frequencies must be strictly ascending")
        if not np.all(np.isfinite(matrices)):
            raise InvalidTwoPort("matrix entries must be finite")
        if self.rep not in REPS:
            raise InvalidTwoPort(f"rep must be one of {REPS}, got {self.rep!r}")
        if isinstance(self.z0, complex) or not np.isreal(self.z0):
            raise InvalidTwoPort("reference impedance must be real")
        z0 = float(self.z0)
        if not (z0 > 0 and np.isfinite(z0)):
            raise InvalidTwoPort(f"z0 must be > 0, got {self.z0}")
        freqs.flags.writeable = False
        matrices.flags.writeable = False
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "z0", z0)

    def __len__(self):
        return self.freqs.size

    def entry(self, i: int, j: int) -> np.ndarray:
        """Parameter (i, j) over the sweep, 1-based as in S21."""
        return self.matrices[:, i - 1, j - 1]


@dataclass(frozen=True, eq=False)
class QLProfile:
    freqs: np.ndarray
    q: np.ndarray
    l_eff: np.ndarray
    srf: float | None = None

    @property
    def q_max(self) -> float:
        return float(np.max(self.q))

    @property
    def f_q_max(self) -> float:
        return float(self.freqs[int(np.argmax(self.q))])


def shunt_admittance(model: PiModel, freqs) -> np.ndarray:
    """Admittance of one substrate branch: C_ox in series with (R_Si || C_Si)."""
    omega = angular(np.asarray(freqs, dtype=float))
    z_sub = model.R_Si / (1.0 + 1j * omega * model.R_Si * model.C_Si)
    y_ox = 1j * omega * model.C_ox
    return y_ox / (1.0 + y_ox * z_sub)


def series_admittance(model: PiModel, freqs) -> np.ndarray:
    omega = angular(np.asarray(freqs, dtype=float))
    return 1.0 / (model.R_s + 1j * omega * model.L_s) + 1j * omega * model.C_s


def pi_to_two_port(model: PiModel, freqs, z0: float = 50.0) -> TwoPortData:
    """Y parameters of the symmetric pi network at each frequency."""
    freqs = np.asarray(freqs, dtype=float).reshape(-1)
    y_se = series_admittance(model, freqs)
    y_sh = shunt_admittance(model, freqs)
    y = np.empty((freqs.size, 2, 2), dtype=CDTYPE)
    y[:, 0, 0] = y_se + y_sh
    y[:, 1, 1] = y_se + y_sh
    y[:, 0, 1] = -y_se
    y[:, 1, 0] = -y_se
    return TwoPortData(freqs, y, "Y", z0)


def _inverse(b: np.ndarray, what: str) -> np.ndarray:
    """Per-frequency 2x2 inverse, refusing (near-)singular matrices."""
    det = b[:, 0, 0] * b[:, 1, 1] - b[:, 0, 1] * b[:, 1, 0]
    scale = np.max(np.abs(b), axis=(1, 2))
    bad = np.nonzero(~(np.abs(det) > _SINGULAR_RTOL * scale**2))[0]
    if bad.size:
        raise SingularConversion(f"{what} is singular at frequency index {bad[0]}", index=int(bad[0]))
    inv = np.empty_like(b)
    inv[:, 0, 0] = b[:, 1, 1]
    inv[:, 1, 1] = b[:, 0, 0]
    inv[:, 0, 1] = -b[:, 0, 1]
    inv[:, 1, 0] = -b[:, 1, 0]
    return inv / det[:, None, None]


def convert(data: TwoPortData, target_rep: str) -> TwoPortData:
    """Convert between S, Y and Z using the data's reference impedance."""
    if target_rep not in REPS:
        raise ValueError(f"target_rep must be one of {REPS}, got {target_rep!r}")
    if target_rep == data.rep:
        return data
    m = data.matrices
    z0 = data.z0
    eye = np.broadcast_to(np.eye(2, dtype=CDTYPE), m.shape)
    pair = (data.rep, target_rep)
    # (I - A)(I + A)^-1 written as 2(I + A)^-1 - I: one inverse, no extra product
    if pair == ("Y", "S"):
        out = 2 * _inverse(eye + z0 * m, "I + z0*Y") - eye
    elif pair == ("S", "Y"):
        out = (2 * _inverse(eye + m, "I + S") - eye) / z0
    elif pair == ("Z", "S"):
        out = eye - 2 * z0 * _inverse(m + z0 * eye, "Z + z0*I")
    elif pair == ("S", "Z"):
        out = z0 * (2 * _inverse(eye - m, "I - S") - eye)
    elif pair == ("Y", "Z"):
        out = _inverse(m, "Y")
    else:  # Z -> Y
        out = _inverse(m, "Z")
    return TwoPortData(data.freqs, out, target_rep, z0)


def _check_grid(a: TwoPortData, b: TwoPortData, rtol: float = 1e-9):
    if len(a) != len(b) or np.any(np.abs(a.freqs - b.freqs) > rtol * np.abs(a.freqs)):
        raise GridMismatch("frequency grids differ")


def add_pad(dut: TwoPortData, pad: TwoPortData) -> TwoPortData:
    """Embed ``dut`` in parallel pad parasitics (Y addition)."""
    _check_grid(dut, pad)
    y = convert(dut, "Y").matrices + convert(pad, "Y").matrices
    return TwoPortData(dut.freqs, y, "Y", dut.z0)


def de_embed(measured: TwoPortData, open_pad: TwoPortData) -> TwoPortData:
    """Open de-embedding: Y_measured - Y_open at every frequency."""
    _check_grid(measured, open_pad)
    y = convert(measured, "Y").matrices - convert(open_pad, "Y").matrices
    return TwoPortData(measured.freqs, y, "Y", measured.z0)


def input_impedance(data: TwoPortData) -> np.ndarray:
    """Z_in = 1/Y11, port 2 grounded."""
    y11 = convert(data, "Y").entry(1, 1)
    zero = np.nonzero(y11 == 0)[0]
    if zero.size:
        raise SingularConversion(f"Y11 is zero at frequency index {zero[0]}", index=int(zero[0]))
    return (1.0 / y11).astype(complex)


def extract_ql(data: TwoPortData) -> QLProfile:
    """One-port Q and effective inductance with port 2 grounded.

    The self-resonance frequency is the first zero crossing of Im(Z_in),
    linearly interpolated between grid points; None when there is none.
    """
    z_in = input_impedance(data)
    re, im = z_in.real, z_in.imag
    zero = np.nonzero(re == 0)[0]
    if zero.size:
        raise ZeroRealPart(f"Re(Z_in) is exactly zero at frequency index {zero[0]}", index=int(zero[0]))
    q = im / re
    l_eff = im / angular(data.freqs)
    return QLProfile(data.freqs.copy(), q, l_eff, _first_crossing(data.freqs, im))


def _first_crossing(freqs: np.ndarray, values: np.ndarray) -> float | None:
    sign = np.sign(values)
    exact = np.nonzero(sign == 0)[0]
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    candidates = []
    if exact.size:
        candidates.append(float(freqs[exact[0]]))
    if flips.size:
        k = flips[0]
        f0, f1, v0, v1 = freqs[k], freqs[k + 1], values[k], values[k + 1]
        candidates.append(float(f0 - v0 * (f1 - f0) / (v1 - v0)))
    return min(candidates) if candidates else None


def pi_s_matrices(model: PiModel, freqs: np.ndarray, z0: float = 50.0) -> np.ndarray:
    """S matrices of the pi network in plain double precision.

    Fast path for inner loops; the pi network's S parameters are well
    conditioned, so no extended precision is needed here.
    """
    y_se = series_admittance(model, freqs)
    y_sh = shunt_admittance(model, freqs)
    # even/odd mode reflections of the symmetric network
    g_even = (1 - z0 * y_sh) / (1 + z0 * y_sh)
    y_odd = y_sh + 2 * y_se
    g_odd = (1 - z0 * y_odd) / (1 + z0 * y_odd)
    s = np.empty((len(freqs), 2, 2), dtype=complex)
    s[:, 0, 0] = s[:, 1, 1] = 0.5 * (g_even + g_odd)
    s[:, 0, 1] = s[:, 1, 0] = 0.5 * (g_even - g_odd)
    return s


def smith_points(data: TwoPortData) -> list[tuple[float, float, float]]:
    """(frequency, Re S11, Im S11) for each sweep point."""
    s11 = convert(data, "S").entry(1, 1).astype(complex)
    return [(float(f), float(s.real), float(s.imag)) for f, s in zip(data.freqs, s11)]
