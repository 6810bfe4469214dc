"""Perturbation groups of the model space: Fredholm determinant by path
integration, the odd (winding) index of once-suspended families, loop
windings through the two-variable 1-form, and the degree-three form on maps
into the invertibles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .families import SuspendedFamily, identity_family
from .numerics import QuadSpec, SampledPath, SingularPathError, integrate_form, quad

__all__ = [
    "SmoothingPerturbation",
    "GroupLoop",
    "UnderResolvedError",
    "OddIndexResult",
    "fredholm_det",
    "straight_line_path",
    "concatenate_dets",
    "odd_index",
    "winding_phi",
    "chern3",
]


# ---------------------------------------------------------------------------
# Finite-dimensional model of the smoothing group
# ---------------------------------------------------------------------------

@dataclass
class SmoothingPerturbation:
    """Id + K acting on the span of the first n model basis vectors."""

    block: np.ndarray

    def __post_init__(self) -> None:
        self.block = np.asarray(self.block, dtype=complex)
        n = self.block.shape[0]
        if self.block.shape != (n, n):
            raise ValueError("block must be square")

    @property
    def n(self) -> int:
        return self.block.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.eye(self.n, dtype=complex) + self.block

    def require_invertible(self, cond_limit: float = 1e12) -> None:
        if np.linalg.cond(self.matrix) > cond_limit:
            raise ValueError("Id + K is numerically singular")


def straight_line_path(endpoint: np.ndarray, margin: float = 0.05) -> SampledPath:
    """Path from Id to ``endpoint`` inside the invertibles.

    Uses the straight segment when it stays invertible; otherwise pre-composes
    with a small scalar rotation e^{i s phi} chosen so that no eigenvalue of
    the rotated endpoint lies on the ray that makes the segment singular.
    """
    b = np.asarray(endpoint, dtype=complex)
    n = b.shape[0]
    eye = np.eye(n, dtype=complex)
    eigs = np.linalg.eigvals(b)

    def segment_margin(phi: float) -> float:
        # Id + s(e^{-i phi} b - Id) is singular iff some rotated eigenvalue
        # is real and <= 0.
        rot = eigs * np.exp(-1j * phi)
        dist = np.inf
        for lam in rot:
            if lam.real < 1.0:
                # distance of the segment [1, lam] from 0
                seg = np.abs(1 + np.linspace(0, 1, 65) * (lam - 1))
                dist = min(dist, float(seg.min()))
        return dist

    phi = 0.0
    if segment_margin(0.0) < margin:
        candidates = [0.4, -0.4, 0.9, -0.9, 1.4, -1.4, 2.0, -2.0]
        phi = max(candidates, key=segment_margin)
        if segment_margin(phi) < 1e-6:
            raise SingularPathError(0.5, "no invertible path candidate found")

    rot_b = np.exp(-1j * phi) * b

    def sampler(s: float) -> np.ndarray:
        return np.exp(1j * s * phi) * (eye + s * (rot_b - eye))

    def tangent(s: float) -> np.ndarray:
        return np.exp(1j * s * phi) * (
            1j * phi * (eye + s * (rot_b - eye)) + (rot_b - eye)
        )

    return SampledPath(sampler=sampler, tangent=tangent)


def _logdet_form(point, velocity) -> complex:
    a = np.asarray(point, dtype=complex)
    v = np.asarray(velocity, dtype=complex)
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] < 1e-13 * sv[0]:
        raise np.linalg.LinAlgError("singular element on path")
    return complex(np.trace(np.linalg.solve(a, v)))


def fredholm_det(
    path_or_endpoint: SampledPath | np.ndarray | SmoothingPerturbation,
    nodes: int = 256,
) -> complex:
    """exp of the integral of Tr(A^{-1} dA) along a path from Id.

    Accepts either an explicit path or an endpoint (a straight-line path with
    automatic detour is used).  The result is path independent because the
    winding form has 2 pi i Z periods.
    """
    if isinstance(path_or_endpoint, SmoothingPerturbation):
        path = straight_line_path(path_or_endpoint.matrix)
    elif isinstance(path_or_endpoint, SampledPath):
        path = path_or_endpoint
    else:
        path = straight_line_path(np.asarray(path_or_endpoint, dtype=complex))
    integral, _ = integrate_form(path, _logdet_form, nodes=nodes)
    return complex(np.exp(integral))


def concatenate_dets(a: np.ndarray, b: np.ndarray, nodes: int = 320) -> complex:
    """Determinant of a b computed along the concatenation Id -> a -> a b."""
    det_a = fredholm_det(a, nodes=nodes)
    path_b = straight_line_path(np.asarray(b, dtype=complex))
    shifted = SampledPath(
        sampler=lambda s: np.asarray(a) @ np.asarray(path_b.sampler(s)),
        tangent=lambda s: np.asarray(a) @ np.asarray(path_b.velocity(s)),
    )
    integral, _ = integrate_form(shifted, _logdet_form, nodes=nodes)
    return det_a * complex(np.exp(integral))


# ---------------------------------------------------------------------------
# Odd index of once-suspended families
# ---------------------------------------------------------------------------

class UnderResolvedError(RuntimeError):
    """The winding integral did not land near an integer."""


@dataclass(frozen=True)
class OddIndexResult:
    raw: complex
    rounded: int

    @property
    def defect(self) -> float:
        return abs(self.raw - self.rounded)


def odd_index(family: SuspendedFamily, nodes: int = 128) -> OddIndexResult:
    """(1/2 pi i) Integral of Tr(A'(t) A(t)^{-1}) over the line."""
    if family.arity != 1:
        raise ValueError("odd_index expects an arity-1 family")
    da = family.d(0)

    def integrand(t):
        a = family(t)
        v = da(t)
        return np.trace(v @ np.linalg.inv(a), axis1=-2, axis2=-1)

    spec = QuadSpec(
        dimension=1,
        node_count=nodes,
        tail_decay_order=min(family.decay_order - 1, -2.0),
    )
    res = quad(integrand, spec)
    raw = complex(res.value) / (2j * np.pi)
    rounded = int(np.round(raw.real))
    if abs(raw - rounded) > 1e-2:
        raise UnderResolvedError(
            f"winding integral {raw} is not within 1e-2 of an integer"
        )
    return OddIndexResult(raw=raw, rounded=rounded)


# ---------------------------------------------------------------------------
# Loops of two-parameter families and their winding
# ---------------------------------------------------------------------------

@dataclass
class GroupLoop:
    """Loop s in S^1 -> invertible two-parameter families, based at Id.

    ``element_at`` returns the loop value as a star element (the first-order
    part may be zero).
    """

    element_at: Callable[[float], object]

    def check_basepoint(self, probe: Sequence[float] = (0.0, 1.0)) -> None:
        from .star import Star2Element

        pts = np.array([0.0, 1.3, -2.1])
        for s in probe:
            el = self.element_at(s)
            if not isinstance(el, Star2Element):
                raise TypeError("loop values must be star elements")
            vals = el.a0.sample_grid(pts, pts)
            dev = float(np.max(np.abs(vals - np.eye(el.size))))
            if dev > 1e-12:
                raise ValueError(f"loop basepoint at s={s} differs from Id by {dev:.3g}")


def winding_phi(loop: GroupLoop, s_nodes: int = 48, grid_nodes: int = 48) -> complex:
    """(1/2 pi i) times the loop integral of the determinant 1-form."""
    from .star import star2_linear_comb
    from .susdet import alpha2

    loop.check_basepoint()
    h = 1.0 / s_nodes
    ds = 1e-5
    total = 0.0 + 0.0j
    for k in range(s_nodes):
        s = (k + 0.5) * h
        el = loop.element_at(s)
        el_p = loop.element_at(s + ds)
        el_m = loop.element_at(s - ds)
        tangent = star2_linear_comb(el_p, el_m, 1.0 / (2 * ds), -1.0 / (2 * ds))
        total += alpha2(el, tangent, nodes=grid_nodes) * h
    return total / (2j * np.pi)


# ---------------------------------------------------------------------------
# Degree-three form on maps into the invertibles
# ---------------------------------------------------------------------------

def chern3(
    g: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    grid: tuple[int, int, int] = (48, 48, 48),
    orientation: int | None = None,
    compactify: tuple[bool, bool, bool] = (False, True, True),
) -> complex:
    """Integral of the normalized Tr((g^{-1} dg)^3) 3-form over a box chart.

    ``g`` takes three broadcast coordinate arrays (u1, u2, u3) and returns
    invertible matrices.  Axes flagged in ``compactify`` are unbounded and are
    substituted u = tan(theta); the others run over [0, 1] periodically.  The
    orientation (+1 or -1) of the chart must be supplied explicitly since the
    result changes sign with it.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation (+1 or -1) must be supplied")
    n1, n2, n3 = grid
    coords = []
    steps = []
    for n, comp in zip(grid, compactify):
        if comp:
            theta = -np.pi / 2 + np.pi * (np.arange(n) + 0.5) / n
            coords.append(theta)
            steps.append(np.pi / n)
        else:
            coords.append((np.arange(n) + 0.5) / n)
            steps.append(1.0 / n)

    mesh = np.meshgrid(*coords, indexing="ij", sparse=True)

    def eval_g(u1, u2, u3):
        args = []
        for u, comp in zip((u1, u2, u3), compactify):
            args.append(np.tan(u) if comp else u)
        return np.asarray(g(*args), dtype=complex)

    base = eval_g(*mesh)
    inv = np.linalg.inv(base)

    def partial(axis: int) -> np.ndarray:
        h = steps[axis] * 1e-2
        shift = [m.copy() for m in mesh]
        total = None
        for wgt, off in ((1.0, -2.0), (-8.0, -1.0), (8.0, 1.0), (-1.0, 2.0)):
            shift[axis] = mesh[axis] + off * h
            term = wgt * eval_g(*shift)
            total = term if total is None else total + term
        return total / (12.0 * h)

    m1 = inv @ partial(0)
    m2 = inv @ partial(1)
    m3 = inv @ partial(2)
    even = np.trace(m1 @ m2 @ m3, axis1=-2, axis2=-1)
    odd = np.trace(m1 @ m3 @ m2, axis1=-2, axis2=-1)
    cell = steps[0] * steps[1] * steps[2]
    integral = 3.0 * np.sum(even - odd) * cell
    norm = 1.0 / (6.0 * (2j * np.pi) ** 2)
    return orientation * norm * integral
