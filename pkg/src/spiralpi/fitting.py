"""Bounded fitting of pi-model elements to two-port data or to anchor targets.

Elements are searched in log space, so positivity holds by construction.
Each start runs a bounded Nelder-Mead simplex; the best start is polished by
restarting the simplex until it stops improving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import NonFiniteResidual, NoSignChange, SpiralError, Underdetermined
from .network import TwoPortData, convert, pi_s_matrices, series_admittance, shunt_admittance
from .pi_model import ELEMENTS, PiModel, angular, q_factor, self_resonance, self_resonance_factor

DEFAULT_BOUNDS = {
    "L_s": (0.1e-9, 20e-9),
    "R_s": (0.1, 100.0),
    "C_s": (0.1e-15, 100e-15),
    "C_ox": (1e-15, 1000e-15),
    "C_Si": (0.1e-15, 1000e-15),
    "R_Si": (10.0, 100e3),
}
DEFAULT_SWEEP = (0.1e9, 40e9)
QUANTITIES = ("Q", "L_eff", "SRF")
ANCHOR_PRIOR_WEIGHT = 1e-3
# rms residual treated as an exact fit
RESIDUAL_FLOOR = 1e-14


@dataclass(frozen=True)
class Anchor:
    quantity: str
    target: float
    freq: float | None = None
    weight: float = 1.0

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"anchor quantity must be one of {QUANTITIES}, got {self.quantity!r}")
        if self.quantity != "SRF" and self.freq is None:
            raise ValueError(f"{self.quantity} anchor needs a frequency")
        if not self.target > 0:
            raise ValueError("anchor target must be > 0")


# Measured reference device: Q, low- and high-frequency L_eff, and SRF.
REFERENCE_ANCHORS = (
    Anchor("Q", 15.0, 11e9),
    Anchor("L_eff", 1.2e-9, 0.1e9),
    Anchor("L_eff", 4e-9, 25.5e9),
    Anchor("SRF", 27e9),
)


@dataclass(frozen=True, eq=False)
class FitProblem:
    """Either ``data`` or ``anchors`` must be given, not both.

    ``weights`` scales data residuals per frequency. ``prior_weight`` adds a
    pull of each log-element toward the centre of its bounds; it defaults to
    off for data and to a weak pull for anchor sets, which otherwise leave
    some elements unconstrained.
    """

    data: TwoPortData | None = None
    anchors: tuple[Anchor, ...] = ()
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    init: PiModel | None = None
    weights: np.ndarray | None = None
    sweep: tuple[float, float] = DEFAULT_SWEEP
    prior_weight: float | None = None
    seed: int = 0
    starts: int = 16
    screen_evals: int = 1500
    polish_starts: int = 3
    max_evals: int = 4000
    max_restarts: int = 8

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple(self.anchors))
        if (self.data is None) == (not self.anchors):
            raise ValueError("give exactly one of data or anchors")
        missing = set(ELEMENTS) - set(self.bounds)
        if missing:
            raise ValueError(f"bounds missing for {sorted(missing)}")
        for name in ELEMENTS:
            low, high = self.bounds[name]
            if not (0 < low < high):
                raise ValueError(f"bounds for {name} must satisfy 0 < low < high, got ({low}, {high})")
        lo, hi = self.sweep
        if not 0 < lo < hi:
            raise ValueError(f"invalid sweep {self.sweep!r}")
        for anchor in self.anchors:
            if anchor.freq is not None and not lo <= anchor.freq <= hi:
                raise ValueError(f"anchor frequency {anchor.freq:g} Hz outside sweep [{lo:g}, {hi:g}]")
        if self.data is not None and self.weights is not None:
            if np.shape(self.weights) != (len(self.data),):
                raise ValueError("weights must have one entry per frequency")
        if self.starts < 1 or self.polish_starts < 1:
            raise ValueError("starts and polish_starts must be >= 1")

    @property
    def prior(self) -> float:
        if self.prior_weight is not None:
            return self.prior_weight
        return ANCHOR_PRIOR_WEIGHT if self.anchors else 0.0

    def log_bounds(self) -> np.ndarray:
        return np.log(np.array([self.bounds[name] for name in ELEMENTS], dtype=float))


@dataclass(frozen=True, eq=False)
class FitReport:
    model: PiModel
    residual: float
    iterations: int
    converged: bool
    anchor_residuals: tuple[float, ...] = ()
    history: tuple[float, ...] = ()
    start_index: int = 0


def _s_data(data: TwoPortData) -> np.ndarray:
    return convert(data, "S").matrices.astype(complex)


def _leff(model: PiModel, freq: float) -> float:
    # Y11 of the pi network, port 2 grounded
    y11 = series_admittance(model, freq) + shunt_admittance(model, freq)
    return (1.0 / y11).imag / angular(freq)


def _srf_for_fit(model: PiModel, sweep) -> float:
    # Outside the sweep the SRF is pinned to the nearer sweep edge.
    try:
        return self_resonance(model, sweep, scan_points=512)
    except NoSignChange:
        return sweep[1] if self_resonance_factor(model, sweep[1]) > 0 else sweep[0]


def _anchor_value(model: PiModel, anchor: Anchor, sweep) -> float:
    if anchor.quantity == "Q":
        return float(q_factor(model, anchor.freq).q)
    if anchor.quantity == "L_eff":
        return float(_leff(model, anchor.freq))
    return _srf_for_fit(model, sweep)


def _data_residuals(model: PiModel, problem: FitProblem, s_data: np.ndarray) -> np.ndarray:
    data = problem.data
    s_model = pi_s_matrices(model, data.freqs, data.z0)
    # Touchstone entry order 11, 21, 12, 22 within each frequency
    diff = np.swapaxes(s_model - s_data, 1, 2).reshape(len(data), 4)
    if problem.weights is not None:
        diff = diff * np.asarray(problem.weights, dtype=float)[:, None]
    out = np.empty((len(data), 8))
    out[:, 0::2] = diff.real
    out[:, 1::2] = diff.imag
    return out.reshape(-1)


def residuals(model: PiModel, problem: FitProblem, _s_cache=None) -> np.ndarray:
    """Weighted residual vector, frequency-major then entry (or anchor) order.

    Entries that cannot be evaluated are returned as NaN.
    """
    if problem.data is not None:
        s_data = _s_cache if _s_cache is not None else _s_data(problem.data)
        try:
            return _data_residuals(model, problem, s_data)
        except SpiralError:
            return np.full(8 * len(problem.data), np.nan)
    out = np.empty(len(problem.anchors))
    for k, anchor in enumerate(problem.anchors):
        try:
            value = _anchor_value(model, anchor, problem.sweep)
            out[k] = anchor.weight * (value - anchor.target) / anchor.target
        except SpiralError:
            out[k] = np.nan
    return out


class _DataObjective:
    """Sum of squared data residuals straight from log-elements.

    Same value as ``residuals`` squared and summed, without building a model
    per evaluation.
    """

    def __init__(self, problem: FitProblem, s_data: np.ndarray):
        data = problem.data
        self.jw = 1j * angular(data.freqs)
        self.z0 = data.z0
        w2 = np.ones(len(data)) if problem.weights is None else np.asarray(problem.weights, dtype=float) ** 2
        self.w2 = w2
        self.d = s_data

    def __call__(self, x: np.ndarray) -> float:
        l_s, r_s, c_s, c_ox, c_si, r_si = np.exp(x)
        jw, z0, d = self.jw, self.z0, self.d
        y_se = 1.0 / (r_s + jw * l_s) + jw * c_s
        y_ox = jw * c_ox
        y_sh = y_ox / (1.0 + y_ox * r_si / (1.0 + jw * r_si * c_si))
        g_even = (1 - z0 * y_sh) / (1 + z0 * y_sh)
        y_odd = y_sh + 2 * y_se
        g_odd = (1 - z0 * y_odd) / (1 + z0 * y_odd)
        s11 = 0.5 * (g_even + g_odd)
        s21 = 0.5 * (g_even - g_odd)
        err = (np.abs(s11 - d[:, 0, 0]) ** 2 + np.abs(s21 - d[:, 1, 0]) ** 2
               + np.abs(s21 - d[:, 0, 1]) ** 2 + np.abs(s11 - d[:, 1, 1]) ** 2)
        return float(np.dot(self.w2, err))


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r**2)))


def fit(problem: FitProblem) -> FitReport:
    """Multi-start bounded simplex fit; returns the best start."""
    prior = problem.prior
    n_terms = 8 * len(problem.data) if problem.data is not None else len(problem.anchors)
    if prior > 0:
        n_terms += len(ELEMENTS)
    if n_terms < len(ELEMENTS):
        raise Underdetermined(f"{n_terms} residual terms for {len(ELEMENTS)} free parameters")

    s_cache = _s_data(problem.data) if problem.data is not None else None
    log_b = problem.log_bounds()
    center = log_b.mean(axis=1)
    half = 0.5 * (log_b[:, 1] - log_b[:, 0])

    def terms(x):
        return residuals(PiModel.from_array(np.exp(x)), problem, s_cache)

    data_sq = _DataObjective(problem, s_cache) if s_cache is not None else None
    # Below this sum of squares a fit is at the double-precision floor.
    floor = (RESIDUAL_FLOOR**2) * n_terms

    def objective(x):
        if data_sq is not None:
            value = data_sq(x)
        else:
            r = terms(x)
            value = float(np.dot(r, r))
        if prior > 0:
            p = prior * (x - center) / half
            value += float(np.dot(p, p))
        return value if np.isfinite(value) else np.inf

    if problem.init is not None:
        x_init = np.clip(np.log(problem.init.as_array()), log_b[:, 0], log_b[:, 1])
        r0 = terms(x_init)
        if np.all(np.isfinite(r0)) and _rms(r0) < 1e-12 and prior == 0:
            unclipped = np.array_equal(x_init, np.log(problem.init.as_array()))
            start = problem.init if unclipped else PiModel.from_array(np.exp(x_init))
            return FitReport(start, _rms(r0), 0, True,
                             tuple(r0) if problem.anchors else (), (float(np.dot(r0, r0)),), 0)

    rng = np.random.default_rng(problem.seed)
    starts = []
    if problem.init is not None:
        starts.append(x_init)
    while len(starts) < problem.starts:
        starts.append(rng.uniform(log_b[:, 0], log_b[:, 1]))

    bounds = list(map(tuple, log_b))
    screen = dict(maxfev=problem.screen_evals, xatol=1e-8, fatol=1e-20, adaptive=True)
    polish = dict(maxfev=problem.max_evals, xatol=1e-11, fatol=1e-30, adaptive=True)

    def simplex(x0, options, history):
        def record(intermediate_result):
            history.append(float(intermediate_result.fun))

        return minimize(objective, x0, method="Nelder-Mead", bounds=bounds, options=options, callback=record)

    screened = []
    for index, x0 in enumerate(starts):
        history = []
        result = simplex(x0, screen, history)
        screened.append((result.fun, index, result, history))
    finite = [item for item in screened if np.isfinite(item[0])]
    if not finite:
        raise NonFiniteResidual("no start reached a finite objective",
                                params=dict(zip(ELEMENTS, np.exp(screened[0][2].x))))
    finite.sort(key=lambda item: (item[0], item[1]))

    best = None
    for fun, index, result, history in finite[: problem.polish_starts]:
        x, iterations = result.x, result.nit
        converged = False
        # Restart the simplex around the incumbent until a restart stops paying off.
        for _ in range(problem.max_restarts):
            again = simplex(x, polish, history)
            iterations += again.nit
            if not again.fun < fun:
                converged = True
                break
            gain = fun - again.fun
            x, fun = again.x, again.fun
            if gain <= 1e-10 * fun or fun <= floor:
                converged = True
                break
        if best is None or (fun, index) < (best[0], best[1]):
            best = (fun, index, x, iterations, converged, history)
        if best[0] <= floor:
            break
    fun, best_index, x, iterations, converged, best_history = best

    model = PiModel.from_array(np.exp(x))
    r = terms(x)
    if not np.all(np.isfinite(r)):
        raise NonFiniteResidual("fitted model has non-finite residuals", params=model.as_dict())
    return FitReport(
        model=model,
        residual=_rms(r),
        iterations=int(iterations),
        converged=bool(converged and np.isfinite(fun)),
        anchor_residuals=tuple(float(v) for v in r) if problem.anchors else (),
        history=tuple(best_history),
        start_index=best_index,
    )
