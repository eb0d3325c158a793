"""Spiral inductor pi-model toolkit: Q decomposition, two-port algebra, fitting and geometry search."""

__version__ = "0.1.0"

from .extraction import REFERENCE_GEOMETRY, ProcessStack, SpiralGeometry, extract_pi_model, inductance_of
from .fitting import REFERENCE_ANCHORS, Anchor, FitProblem, FitReport, fit, residuals
from .network import QLProfile, TwoPortData, convert, de_embed, extract_ql, pi_to_two_port, smith_points
from .optimizer import DesignSpace, optimize
from .pi_model import PiModel, QDecomposition, cp_of, q_factor, rp_of, self_resonance
from .touchstone import read_touchstone, write_touchstone

__all__ = [
    "REFERENCE_ANCHORS", "REFERENCE_GEOMETRY", "Anchor", "DesignSpace", "FitProblem", "FitReport", "PiModel",
    "ProcessStack", "QDecomposition", "QLProfile", "SpiralGeometry", "TwoPortData", "convert", "cp_of",
    "de_embed", "extract_ql", "extract_pi_model", "fit", "inductance_of", "optimize", "pi_to_two_port",
    "q_factor", "read_touchstone", "residuals", "rp_of", "self_resonance", "smith_points", "write_touchstone",
]
