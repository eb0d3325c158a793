"""Run configuration: a flat ``key = value`` file with ``[section]`` headers.

Values carry their surface unit in the key name (``d_in_um``, ``start_ghz``,
``L_s_nH``) and are converted to SI once, here. Unknown sections and keys are
rejected with the offending line number. ``anchor`` and ``bound.*`` keys may
repeat inside ``[fit]``.

Example::

    [geometry]
    d_in_um = 136
    w_um = 10
    s_um = 2
    n = 3.5

    [stack]
    substrate_config = suspended
    cavity_depth_um = 30

    [fit]
    anchor = Q 11 15
    anchor = L_eff 0.1 1.2
    anchor = L_eff 25.5 4
    anchor = SRF - 27
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .errors import ConfigError, SpiralError
from .extraction import DEFAULT_REF_FREQ, ProcessStack, SpiralGeometry
from .fitting import DEFAULT_BOUNDS, Anchor
from .optimizer import DesignSpace
from .pi_model import PiModel
from .touchstone import IoError

UM, GHZ, NH, FF = 1e-6, 1e9, 1e-9, 1e-15

# key -> (attribute, scale)
GEOMETRY_KEYS = {"d_in_um": ("d_in", UM), "w_um": ("w", UM), "s_um": ("s", UM), "n": ("n", 1.0)}
STACK_KEYS = {
    "metal_resistivity_ohm_m": ("metal_resistivity", 1.0),
    "metal_thickness_um": ("metal_thickness", UM),
    "oxide_thickness_um": ("oxide_thickness", UM),
    "oxide_rel_permittivity": ("oxide_rel_permittivity", 1.0),
    "substrate_resistivity_ohm_m": ("substrate_resistivity", 1.0),
    "cavity_depth_um": ("cavity_depth", UM),
    "substrate_depth_um": ("substrate_depth", UM),
    "substrate_rel_permittivity": ("substrate_rel_permittivity", 1.0),
    "inter_metal_thickness_um": ("inter_metal_thickness", UM),
}
MODEL_KEYS = {
    "L_s_nH": ("L_s", NH),
    "R_s_ohm": ("R_s", 1.0),
    "C_s_fF": ("C_s", FF),
    "C_ox_fF": ("C_ox", FF),
    "C_Si_fF": ("C_Si", FF),
    "R_Si_ohm": ("R_Si", 1.0),
}
BOUND_KEYS = {f"bound.{key}": value for key, value in MODEL_KEYS.items()}
# anchor target scale by quantity
ANCHOR_SCALE = {"Q": 1.0, "L_eff": NH, "SRF": GHZ}

SECTIONS = ("geometry", "stack", "model", "sweep", "fit", "optimize")


@dataclass(frozen=True)
class Sweep:
    start: float = 0.1e9
    stop: float = 40e9
    points: int = 400
    spacing: str = "linear"

    def __post_init__(self):
        if not 0 < self.start < self.stop:
            raise ConfigError(f"sweep needs 0 < start < stop, got {self.start:g}, {self.stop:g}")
        if self.points < 2:
            raise ConfigError("sweep needs at least 2 points")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"sweep spacing must be linear or log, got {self.spacing!r}")

    def freqs(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class FitSettings:
    anchors: tuple[Anchor, ...] = ()
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    seed: int = 0
    starts: int = 16
    prior_weight: float | None = None


@dataclass(frozen=True)
class RunConfig:
    geometry: SpiralGeometry | None = None
    stack: ProcessStack = field(default_factory=ProcessStack)
    ref_freq: float = DEFAULT_REF_FREQ
    model: PiModel | None = None
    sweep: Sweep = field(default_factory=Sweep)
    fit: FitSettings | None = None
    optimize: DesignSpace | None = None


def _read_sections(text: str):
    sections: dict[str, list[tuple[int, str, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in SECTIONS:
                raise ConfigError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = []
            continue
        if current is None:
            raise ConfigError("key outside of a section", lineno)
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        sections[current].append((lineno, key, value))
    return sections


def _number(value: str, lineno: int, scale: float = 1.0) -> float:
    """Parse ``value`` and apply a unit scale with a single rounding."""
    try:
        number = Decimal(value.strip())
    except InvalidOperation:
        raise ConfigError(f"not a number: {value!r}", lineno) from None
    if not number.is_finite():
        if number.is_nan():
            raise ConfigError(f"not a number: {value!r}", lineno)
        return float(number)
    # exact decimal product, so "10" um is exactly float 1e-05
    return float(number * Decimal(repr(scale)))


def _numbers(value: str, lineno: int, count: int | None = None, scale: float = 1.0) -> list[float]:
    out = [_number(v, lineno, scale) for v in value.split()]
    if count is not None and len(out) != count:
        raise ConfigError(f"expected {count} numbers, got {len(out)}", lineno)
    return out


def _scalar_block(entries, keys, section, extra=()):
    values, raw, seen = {}, {}, set()
    for lineno, key, value in entries:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        seen.add(key)
        if key in keys:
            attr, scale = keys[key]
            values[attr] = _number(value, lineno, scale)
        elif key in extra:
            raw[key] = (lineno, value)
        else:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
    return values, raw


def _guard(section, build):
    try:
        return build()
    except ConfigError:
        raise
    except (SpiralError, ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def _parse_anchor(value: str, lineno: int) -> Anchor:
    parts = value.split()
    if len(parts) not in (3, 4):
        raise ConfigError("anchor = <Q|L_eff|SRF> <freq_ghz|-> <target> [weight]", lineno)
    quantity = parts[0]
    if quantity not in ANCHOR_SCALE:
        raise ConfigError(f"unknown anchor quantity {quantity!r}", lineno)
    freq = None if parts[1] == "-" else _number(parts[1], lineno, GHZ)
    target = _number(parts[2], lineno, ANCHOR_SCALE[quantity])
    weight = _number(parts[3], lineno) if len(parts) == 4 else 1.0
    try:
        return Anchor(quantity, target, freq, weight)
    except ValueError as exc:
        raise ConfigError(str(exc), lineno) from None


def parse_config(text: str) -> RunConfig:
    sections = _read_sections(text)
    kwargs = {}

    if "stack" in sections:
        values, raw = _scalar_block(sections["stack"], STACK_KEYS, "stack", ("substrate_config", "ref_freq_ghz"))
        if "substrate_config" in raw:
            values["substrate_config"] = raw["substrate_config"][1]
        if "ref_freq_ghz" in raw:
            lineno, value = raw["ref_freq_ghz"]
            kwargs["ref_freq"] = _number(value, lineno, GHZ)
        if values.get("substrate_config") == "suspended" and "cavity_depth" not in values:
            values["cavity_depth"] = 30e-6
        kwargs["stack"] = _guard("stack", lambda: ProcessStack(**values))
    stack = kwargs.get("stack", ProcessStack())

    if "geometry" in sections:
        values, _ = _scalar_block(sections["geometry"], GEOMETRY_KEYS, "geometry")
        missing = set(a for a, _ in GEOMETRY_KEYS.values()) - set(values)
        if missing:
            raise ConfigError(f"[geometry] missing {sorted(missing)}")
        kwargs["geometry"] = _guard("geometry", lambda: SpiralGeometry(**values))

    if "model" in sections:
        values, _ = _scalar_block(sections["model"], MODEL_KEYS, "model")
        if "L_s" not in values or "R_s" not in values:
            raise ConfigError("[model] needs at least L_s_nH and R_s_ohm")
        kwargs["model"] = _guard("model", lambda: PiModel(**values))

    if "sweep" in sections:
        values, raw = _scalar_block(sections["sweep"], {"start_ghz": ("start", GHZ), "stop_ghz": ("stop", GHZ)},
                                    "sweep", ("points", "spacing"))
        if "points" in raw:
            lineno, value = raw["points"]
            values["points"] = int(_number(value, lineno))
        if "spacing" in raw:
            values["spacing"] = raw["spacing"][1]
        kwargs["sweep"] = _guard("sweep", lambda: Sweep(**values))

    if "fit" in sections:
        anchors, bounds, scalars = [], dict(DEFAULT_BOUNDS), {}
        for lineno, key, value in sections["fit"]:
            if key == "anchor":
                anchors.append(_parse_anchor(value, lineno))
            elif key in BOUND_KEYS:
                attr, scale = BOUND_KEYS[key]
                bounds[attr] = tuple(_numbers(value, lineno, 2, scale))
            elif key in ("seed", "starts", "prior_weight"):
                if key in scalars:
                    raise ConfigError(f"duplicate key {key!r} in [fit]", lineno)
                number = _number(value, lineno)
                scalars[key] = number if key == "prior_weight" else int(number)
            else:
                raise ConfigError(f"unknown key {key!r} in [fit]", lineno)
        kwargs["fit"] = FitSettings(tuple(anchors), bounds, **scalars)

    if "optimize" in sections:
        ranges = {"d_in_um": "d_in", "w_um": "w", "s_um": "s"}
        scalars = {"target_ghz": ("target_freq", GHZ), "max_d_out_um": ("max_d_out", UM),
                   "min_srf_ghz": ("min_srf", GHZ), "grid_points": ("grid_points", 1.0)}
        values, seen = {}, set()
        for lineno, key, value in sections["optimize"]:
            if key in seen:
                raise ConfigError(f"duplicate key {key!r} in [optimize]", lineno)
            seen.add(key)
            if key in ranges:
                nums = _numbers(value, lineno, scale=UM)
                if len(nums) not in (1, 2):
                    raise ConfigError(f"{key} takes one value or a low high pair", lineno)
                values[ranges[key]] = (nums[0], nums[-1])
            elif key == "n":
                values["n_values"] = tuple(_numbers(value, lineno))
            elif key in scalars:
                attr, scale = scalars[key]
                values[attr] = _number(value, lineno, scale)
            else:
                raise ConfigError(f"unknown key {key!r} in [optimize]", lineno)
        missing = {"d_in", "w", "s", "n_values"} - set(values)
        if missing:
            raise ConfigError(f"[optimize] missing {sorted(missing)}")
        if "grid_points" in values:
            values["grid_points"] = int(values["grid_points"])
        ref_freq = kwargs.get("ref_freq", DEFAULT_REF_FREQ)
        kwargs["optimize"] = _guard("optimize", lambda: DesignSpace(stack=stack, ref_freq=ref_freq, **values))

    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)
