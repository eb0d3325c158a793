"""Square spiral geometry and process stack to pi-model elements.

Inductance uses the square current-sheet expression; series resistance folds
in skin depth at a reference frequency; the substrate network is a
parallel-plate estimate split evenly between the two pi nodes. A suspended
inductor adds an air gap in series with the oxide, which scales every shunt
admittance by the same factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FillRatioOutOfRange, InvalidGeometry, MissingCavityDepth
from .pi_model import PiModel, angular

MU0 = 4e-7 * math.pi
EPS0 = 8.8541878128e-12
EPS_SI = 11.9

# square current-sheet constants
_C1, _C2, _C3, _C4 = 1.27, 2.07, 0.18, 0.13

SUBSTRATE_CONFIGS = ("on_substrate", "suspended")
DEFAULT_REF_FREQ = 11e9


@dataclass(frozen=True)
class SpiralGeometry:
    d_in: float
    w: float
    s: float
    n: float
    shape: str = "square"

    def __post_init__(self):
        for name in ("d_in", "w", "s", "n"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise InvalidGeometry(f"{name} must be a finite number, got {value!r}")
        if self.d_in <= 0 or self.w <= 0 or self.s <= 0:
            raise InvalidGeometry("d_in, w and s must be > 0")
        if self.n < 1 or (2 * self.n) != int(2 * self.n):
            raise InvalidGeometry(f"n must be >= 1 in steps of 0.5, got {self.n}")
        if self.shape != "square":
            raise InvalidGeometry(f"unsupported shape {self.shape!r}")

    @property
    def d_out(self) -> float:
        return self.d_in + 2 * (self.n * self.w + (self.n - 1) * self.s)

    @property
    def d_avg(self) -> float:
        return 0.5 * (self.d_out + self.d_in)

    @property
    def fill_ratio(self) -> float:
        return (self.d_out - self.d_in) / (self.d_out + self.d_in)

    @property
    def length(self) -> float:
        """Total conductor length, square approximation."""
        return 4 * self.n * self.d_avg

    @property
    def area(self) -> float:
        """Metal footprint seen by the substrate."""
        return self.length * self.w


@dataclass(frozen=True)
class ProcessStack:
    """Defaults describe a generic 0.35 um CMOS top-metal stack (assumed values)."""

    metal_resistivity: float = 2.65e-8
    metal_thickness: float = 2e-6
    oxide_thickness: float = 5e-6
    oxide_rel_permittivity: float = 4.0
    substrate_resistivity: float = 0.1
    substrate_config: str = "on_substrate"
    cavity_depth: float | None = None
    substrate_depth: float = 50e-6
    substrate_rel_permittivity: float = EPS_SI
    inter_metal_thickness: float = 1e-6

    def __post_init__(self):
        if self.substrate_config not in SUBSTRATE_CONFIGS:
            raise InvalidGeometry(f"substrate_config must be one of {SUBSTRATE_CONFIGS}")
        for name in ("metal_resistivity", "metal_thickness", "oxide_thickness", "substrate_resistivity",
                     "substrate_depth", "inter_metal_thickness"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidGeometry(f"{name} must be finite and > 0, got {value}")
        if self.oxide_rel_permittivity < 1 or self.substrate_rel_permittivity < 1:
            raise InvalidGeometry("relative permittivities must be >= 1")
        if self.cavity_depth is not None and not self.cavity_depth >= 0:
            raise InvalidGeometry(f"cavity_depth must be >= 0, got {self.cavity_depth}")


def inductance_of(geom: SpiralGeometry) -> float:
    """Current-sheet inductance of a square spiral (H)."""
    rho = geom.fill_ratio
    if not 0 < rho < 1:
        raise FillRatioOutOfRange(f"fill ratio {rho} outside (0, 1)")
    return _C1 * MU0 * geom.n**2 * geom.d_avg / 2 * (math.log(_C2 / rho) + _C3 * rho + _C4 * rho**2)


def skin_depth(resistivity: float, freq: float) -> float:
    denom = angular(freq) * MU0
    return math.inf if denom == 0 else math.sqrt(2 * resistivity / denom)


def series_resistance_of(geom: SpiralGeometry, stack: ProcessStack, freq: float) -> float:
    """Conductor resistance at ``freq`` (Hz) with an exponential skin-depth profile."""
    if freq < 0:
        raise ValueError("freq must be >= 0")
    t = stack.metal_thickness
    delta = skin_depth(stack.metal_resistivity, freq)
    t_eff = t if math.isinf(delta) else delta * -math.expm1(-t / delta)
    return stack.metal_resistivity * geom.length / (geom.w * t_eff)


def suspension_factor(stack: ProcessStack) -> float:
    """Scale applied to every shunt admittance by the air gap under a released spiral."""
    if stack.substrate_config == "on_substrate":
        return 1.0
    if stack.cavity_depth is None:
        raise MissingCavityDepth("suspended stack needs cavity_depth")
    oxide = stack.oxide_thickness / stack.oxide_rel_permittivity
    if math.isinf(stack.cavity_depth):
        return 0.0
    return oxide / (oxide + stack.cavity_depth)


def substrate_network_of(geom: SpiralGeometry, stack: ProcessStack) -> tuple[float, float, float]:
    """(C_ox, C_Si, R_Si) of one pi-node shunt branch."""
    area = geom.area
    c_ox = EPS0 * stack.oxide_rel_permittivity * area / (2 * stack.oxide_thickness)
    c_sub_per_area = EPS0 * stack.substrate_rel_permittivity / stack.substrate_depth
    g_sub_per_area = 1.0 / (stack.substrate_resistivity * stack.substrate_depth)
    c_si = area * c_sub_per_area / 2
    r_si = 2 / (area * g_sub_per_area)
    k = suspension_factor(stack)
    if k == 0.0:
        # substrate fully removed: open branch
        return 0.0, 0.0, 0.0
    return c_ox * k, c_si * k, r_si / k


def crossover_capacitance_of(geom: SpiralGeometry, stack: ProcessStack) -> float:
    """Heuristic underpass feedthrough: one w-by-w overlap per turn."""
    return geom.n * geom.w**2 * EPS0 * stack.oxide_rel_permittivity / stack.inter_metal_thickness


def extract_pi_model(geom: SpiralGeometry, stack: ProcessStack, ref_freq: float = DEFAULT_REF_FREQ) -> PiModel:
    c_ox, c_si, r_si = substrate_network_of(geom, stack)
    return PiModel(
        L_s=inductance_of(geom),
        R_s=series_resistance_of(geom, stack, ref_freq),
        C_s=crossover_capacitance_of(geom, stack),
        C_ox=c_ox,
        C_Si=c_si,
        R_Si=r_si,
    )


# Suspended reference device (136 um inner diameter, 3.5 turns).
REFERENCE_GEOMETRY = SpiralGeometry(d_in=136e-6, w=10e-6, s=2e-6, n=3.5)
