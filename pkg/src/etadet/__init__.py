"""Regularized traces, star products, suspended determinants and eta
invariants on finite-dimensional and Toeplitz-quantized model operators."""

from .families import SuspendedFamily
from .groups import SmoothingPerturbation, chern3, fredholm_det, odd_index, winding_phi
from .numerics import AsymptoticBasis, QuadSpec, SampledPath, asymptotic_fit, quad
from .star import CuspJet, Star2Element, TildeElement, itilde, jet_mul, star2_inv, star2_mul
from .susdet import alpha2, det_cocycle, mu, sus_det, z_connection
from .cuspmodel import (
    CircleSymbol,
    CuspSuspendedFamily,
    ModelCuspOperator,
    btr,
    compose,
    compose_css,
    rtr_boundary,
    trace_defect,
)

__version__ = "0.1.0"

__all__ = [
    "SuspendedFamily",
    "SmoothingPerturbation",
    "chern3",
    "fredholm_det",
    "odd_index",
    "winding_phi",
    "AsymptoticBasis",
    "QuadSpec",
    "SampledPath",
    "asymptotic_fit",
    "quad",
    "CuspJet",
    "Star2Element",
    "TildeElement",
    "itilde",
    "jet_mul",
    "star2_inv",
    "star2_mul",
    "alpha2",
    "det_cocycle",
    "mu",
    "sus_det",
    "z_connection",
    "CircleSymbol",
    "CuspSuspendedFamily",
    "ModelCuspOperator",
    "btr",
    "compose",
    "compose_css",
    "rtr_boundary",
    "trace_defect",
    "__version__",
]
