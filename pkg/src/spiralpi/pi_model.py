"""Lumped pi model of a spiral inductor and its Q-factor decomposition.

Series branch: L_s and R_s in series, bridged by the feedthrough capacitance
C_s. Each node sees an identical shunt branch to ground: C_ox in series with
R_Si parallel C_Si. All values are strict SI; every public function takes
cyclical frequency in hertz and converts to angular frequency internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DivergentAtDC, InvalidModel, NoSignChange, OpenSubstrateBranch

ELEMENTS = ("L_s", "R_s", "C_s", "C_ox", "C_Si", "R_Si")


def angular(freq):
    """Angular frequency (rad/s) of a cyclical frequency in hertz."""
    if isinstance(freq, (float, int)):
        return 2.0 * math.pi * freq
    return 2.0 * np.pi * np.asarray(freq, dtype=float) if np.ndim(freq) else 2.0 * math.pi * float(freq)


@dataclass(frozen=True)
class PiModel:
    L_s: float
    R_s: float
    C_s: float = 0.0
    C_ox: float = 0.0
    C_Si: float = 0.0
    R_Si: float = 0.0
    allow_lossless: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ELEMENTS:
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise InvalidModel(f"{name} must be a number, got {value!r}") from None
            if not math.isfinite(value):
                raise InvalidModel(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.L_s <= 0:
            raise InvalidModel(f"L_s must be > 0, got {self.L_s}")
        if self.R_s < 0 or (self.R_s == 0 and not self.allow_lossless):
            raise InvalidModel(f"R_s must be > 0, got {self.R_s} (use PiModel.idealized for R_s = 0)")
        for name in ("C_s", "C_ox", "C_Si", "R_Si"):
            if getattr(self, name) < 0:
                raise InvalidModel(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def idealized(cls, L_s, R_s=0.0, C_s=0.0, C_ox=0.0, C_Si=0.0, R_Si=0.0) -> PiModel:
        """Construct a model that may have zero series loss."""
        return cls(L_s, R_s, C_s, C_ox, C_Si, R_Si, allow_lossless=True)

    @property
    def open_substrate(self) -> bool:
        """True when the shunt branch dissipates nothing."""
        return self.C_ox == 0.0 or self.R_Si == 0.0

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in ELEMENTS}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in ELEMENTS])

    @classmethod
    def from_array(cls, values) -> PiModel:
        return cls(*(float(v) for v in values))

    def replace(self, **changes) -> PiModel:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return type(self)(**values)


@dataclass(frozen=True)
class QDecomposition:
    ideal_q: float | np.ndarray
    substrate_loss_factor: float | np.ndarray
    self_resonance_factor: float | np.ndarray
    q: float | np.ndarray


def _all(cond) -> bool:
    return cond if isinstance(cond, bool) else bool(np.all(cond))


def _omega_positive(freq):
    omega = angular(freq)
    if not _all(omega > 0):
        raise DivergentAtDC("frequency must be > 0")
    return omega


def rp_of(model: PiModel, freq):
    """Equivalent parallel resistance of the shunt branch at ``freq`` (Hz).

    Raises OpenSubstrateBranch when the branch is lossless; callers then
    treat R_p as infinite.
    """
    if model.open_substrate:
        raise OpenSubstrateBranch("shunt branch is lossless (C_ox == 0 or R_Si == 0)")
    omega = _omega_positive(freq)
    c_ox, c_si, r_si = model.C_ox, model.C_Si, model.R_Si
    return 1.0 / (omega**2 * c_ox**2 * r_si) + r_si * ((c_ox + c_si) / c_ox) ** 2


def cp_of(model: PiModel, freq):
    """Equivalent parallel capacitance of the shunt branch at ``freq`` (Hz)."""
    omega = angular(freq)
    if not _all(omega >= 0):
        raise InvalidModel("frequency must be >= 0")
    c_ox, c_si, r_si = model.C_ox, model.C_Si, model.R_Si
    w2 = omega**2
    return c_ox * (1.0 + w2 * (c_ox + c_si) * c_si * r_si**2) / (1.0 + w2 * (c_ox + c_si) ** 2 * r_si**2)


def self_resonance_factor(model: PiModel, freq):
    omega = angular(freq)
    c_total = model.C_s + cp_of(model, freq)
    return 1.0 - model.R_s**2 * c_total / model.L_s - omega**2 * model.L_s * c_total


def q_factor(model: PiModel, freq) -> QDecomposition:
    """Q at ``freq`` (Hz) split into ideal Q, substrate loss and self-resonance factors.

    Works elementwise on arrays. Negative Q above self-resonance is returned as is.
    """
    omega = _omega_positive(freq)
    ideal_q = omega * model.L_s / model.R_s
    if model.open_substrate:
        slf = np.ones_like(ideal_q) if np.ndim(ideal_q) else 1.0
    else:
        rp = rp_of(model, freq)
        slf = rp / (rp + (ideal_q**2 + 1.0) * model.R_s)
    srf = self_resonance_factor(model, freq)
    return QDecomposition(ideal_q, slf, srf, ideal_q * slf * srf)


def self_resonance(model: PiModel, bracket=(1e8, 1e11), rtol=1e-9, scan_points=4097) -> float:
    """Lowest frequency (Hz) inside ``bracket`` where the self-resonance factor vanishes.

    A log-spaced scan locates the first sign change; bisection refines it.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0 < lo < hi):
        raise ValueError(f"invalid bracket {bracket!r}")
    grid = np.geomspace(lo, hi, scan_points)
    values = self_resonance_factor(model, grid)
    if values[0] == 0.0:
        return lo
    sign0 = np.sign(values[0])
    changed = np.nonzero(np.sign(values) != sign0)[0]
    if changed.size == 0:
        raise NoSignChange(f"self-resonance factor does not cross zero in [{lo:g}, {hi:g}] Hz")
    k = changed[0]
    a, b = float(grid[k - 1]), float(grid[k])
    if values[k] == 0.0:
        return b
    fa = float(values[k - 1])
    while b - a > rtol * b:
        mid = 0.5 * (a + b)
        fm = self_resonance_factor(model, float(mid))
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)
