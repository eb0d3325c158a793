"""Geometry search for maximum Q at a target frequency.

A coarse grid over (d_in, w, s) for every allowed turn count picks a starting
point per turn count; a compass pattern search then refines the continuous
axes. Candidates that break the outer-diameter or self-resonance constraint
are never accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import InvalidGeometry, NoFeasiblePoint, NoSignChange
from .extraction import DEFAULT_REF_FREQ, ProcessStack, SpiralGeometry, extract_pi_model
from .pi_model import QDecomposition, q_factor, self_resonance, self_resonance_factor

SRF_WINDOW_TOP = 100e9
AXES = ("d_in", "w", "s")


@dataclass(frozen=True)
class DesignSpace:
    d_in: tuple[float, float]
    w: tuple[float, float]
    s: tuple[float, float]
    n_values: tuple[float, ...]
    stack: ProcessStack = field(default_factory=ProcessStack)
    target_freq: float = 11e9
    max_d_out: float = math.inf
    min_srf: float | None = None
    grid_points: int = 8
    step_tol: float = 1e-6
    ref_freq: float = DEFAULT_REF_FREQ

    def __post_init__(self):
        for name in AXES:
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise InvalidGeometry(f"{name} range must satisfy 0 < low <= high, got ({lo}, {hi})")
        object.__setattr__(self, "n_values", tuple(sorted(set(float(n) for n in self.n_values))))
        if not self.n_values:
            raise InvalidGeometry("n_values must not be empty")
        for n in self.n_values:
            if n < 1 or 2 * n != int(2 * n):
                raise InvalidGeometry(f"turn counts must be >= 1 in steps of 0.5, got {n}")
        if not self.target_freq > 0:
            raise InvalidGeometry("target_freq must be > 0")
        if self.grid_points < 2:
            raise InvalidGeometry("grid_points must be >= 2")
        smallest = SpiralGeometry(self.d_in[0], self.w[0], self.s[0], self.n_values[0]).d_out
        if self.max_d_out < smallest:
            raise InvalidGeometry(f"max_d_out {self.max_d_out:g} below smallest achievable {smallest:g}")

    def axis_range(self, name: str) -> tuple[float, float]:
        return getattr(self, name)


@dataclass(frozen=True)
class OptimizeResult:
    geometry: SpiralGeometry
    q: QDecomposition
    history: tuple[float, ...] = ()
    evaluations: int = 0

    def __iter__(self):
        return iter((self.geometry, self.q))


def srf_ok(model, space: DesignSpace) -> bool:
    if space.min_srf is None:
        return True
    if self_resonance_factor(model, space.target_freq) <= 0:
        # already resonated below the target
        return space.min_srf <= space.target_freq
    try:
        srf = self_resonance(model, (space.target_freq, SRF_WINDOW_TOP))
    except NoSignChange:
        return True
    return srf >= space.min_srf


class _Evaluator:
    def __init__(self, space: DesignSpace):
        self.space = space
        self.cache = {}

    def __call__(self, d_in, w, s, n):
        """(rank key, geometry, decomposition) or None when infeasible."""
        key = (d_in, w, s, n)
        if key in self.cache:
            return self.cache[key]
        space = self.space
        geom = SpiralGeometry(d_in, w, s, n)
        result = None
        if geom.d_out <= space.max_d_out:
            model = extract_pi_model(geom, space.stack, space.ref_freq)
            if srf_ok(model, space):
                dec = q_factor(model, space.target_freq)
                # larger Q first, then smaller d_out, then fewer turns
                result = ((float(dec.q), -geom.d_out, -n), geom, dec)
        self.cache[key] = result
        return result


def _axis_grid(lo, hi, points):
    return np.array([lo]) if lo == hi else np.linspace(lo, hi, points)


def _pattern_search(evaluate, space, start, n, history):
    """Compass search in unit-scaled coordinates over the non-degenerate axes."""
    ranges = [space.axis_range(a) for a in AXES]
    free = [i for i, (lo, hi) in enumerate(ranges) if hi > lo]

    def to_phys(u):
        return tuple(float(lo + (hi - lo) * ui) if hi > lo else float(lo) for ui, (lo, hi) in zip(u, ranges))

    u = [0.0 if hi == lo else (v - lo) / (hi - lo) for v, (lo, hi) in zip(start[1:], ranges)]
    best = evaluate(*to_phys(u), n)
    history.append(best[0][0])
    step = 0.5 / (space.grid_points - 1)
    while step >= space.step_tol and free:
        candidate = None
        for i in free:
            for sign in (1.0, -1.0):
                trial = list(u)
                trial[i] = min(1.0, max(0.0, trial[i] + sign * step))
                if trial[i] == u[i]:
                    continue
                res = evaluate(*to_phys(trial), n)
                if res is not None and res[0] > best[0] and (candidate is None or res[0] > candidate[1][0]):
                    candidate = (trial, res)
        if candidate is None:
            step *= 0.5
        else:
            u, best = candidate
            history.append(best[0][0])
    return best


def optimize(space: DesignSpace) -> OptimizeResult:
    """Feasible geometry with the highest Q at ``space.target_freq``."""
    evaluate = _Evaluator(space)
    grids = [_axis_grid(*space.axis_range(a), space.grid_points) for a in AXES]
    per_n = {}
    for n in space.n_values:
        for d_in, w, s in product(*grids):
            res = evaluate(float(d_in), float(w), float(s), n)
            if res is not None and (n not in per_n or res[0] > per_n[n][0][0]):
                per_n[n] = (res, (float(d_in), float(w), float(s)))
    if not per_n:
        raise NoFeasiblePoint("no grid candidate satisfies the outer-diameter and SRF constraints")

    best = None
    best_history = None
    for n, (res, point) in per_n.items():
        history = []
        refined = _pattern_search(evaluate, space, (n, *point), n, history)
        if best is None or refined[0] > best[0]:
            best, best_history = refined, history

    _, geom, dec = best
    model = extract_pi_model(geom, space.stack, space.ref_freq)
    if not (geom.d_out <= space.max_d_out and srf_ok(model, space)):
        raise NoFeasiblePoint(f"post-check failed for {geom}")
    return OptimizeResult(geom, dec, tuple(best_history), len(evaluate.cache))
