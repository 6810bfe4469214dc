"""The two-variable determinant machinery: the mu functional, the 1-form it
generates, suspended determinants by path integration, determinant-line
cocycles over a discretized base, and the integer-bundle connection built
from half the eta invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .families import SuspendedFamily, identity_family
from .numerics import SingularPathError, winding_number
from .numerics import _axis_nodes
from .star import Star2Element, star2_inv, star2_linear_comb, star2_mul

__all__ = [
    "mu",
    "alpha2",
    "sus_det",
    "straight_star2_path",
    "transition_det",
    "DetLineCocycle",
    "det_cocycle",
    "ZBundleData",
    "ZPatch",
    "z_connection",
]


@lru_cache(maxsize=16)
def _line_nodes(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return _axis_nodes(nodes, "trapezoid")


def _plane_integral(values: np.ndarray, w1: np.ndarray, w2: np.ndarray) -> complex:
    return complex(np.einsum("i,j,ij->", w1, w2, values))


def _sample(fam: SuspendedFamily | None, t, tau, size: int) -> np.ndarray | None:
    if fam is None:
        return None
    return fam(t, tau)


def mu(a: Star2Element, nodes: int = 64) -> complex:
    """(1/(2 pi^2 i)) double integral of Tr(a0^{-1} a1)."""
    if a.a1 is None:
        return 0.0 + 0.0j
    t, w = _line_nodes(nodes)
    tt, ss = t[:, None], t[None, :]
    a0 = a.a0(tt, ss)
    _require_invertible_grid(a0, t)
    a1 = a.a1(tt, ss)
    vals = np.trace(np.linalg.inv(a0) @ a1, axis1=-2, axis2=-1)
    return _plane_integral(vals, w, w) / (2j * np.pi**2)


def _require_invertible_grid(a0: np.ndarray, t: np.ndarray) -> None:
    dets = np.abs(np.linalg.det(a0))
    scale = max(float(np.median(dets)), 1e-30)
    if float(dets.min()) < 1e-12 * scale:
        idx = np.unravel_index(int(np.argmin(dets)), dets.shape)
        raise ValueError(
            f"leading part singular near (t, tau) = ({t[idx[0]]:.4g}, {t[idx[1]]:.4g})"
        )


def d_mu(a: Star2Element, da: Star2Element, nodes: int = 64) -> complex:
    """Directional derivative of mu at ``a`` along ``da``."""
    t, w = _line_nodes(nodes)
    tt, ss = t[:, None], t[None, :]
    a0 = a.a0(tt, ss)
    _require_invertible_grid(a0, t)
    inv0 = np.linalg.inv(a0)
    total = None
    if a.a1 is not None and da.a0 is not None:
        da0 = da.a0(tt, ss)
        a1 = a.a1(tt, ss)
        term = -np.trace(inv0 @ da0 @ inv0 @ a1, axis1=-2, axis2=-1)
        total = term
    if da.a1 is not None:
        da1 = da.a1(tt, ss)
        term = np.trace(inv0 @ da1, axis1=-2, axis2=-1)
        total = term if total is None else total + term
    if total is None:
        return 0.0 + 0.0j
    return _plane_integral(total, w, w) / (2j * np.pi**2)


def alpha2(a: Star2Element, da: Star2Element, nodes: int = 64) -> complex:
    """The determinant 1-form at ``a`` evaluated on the tangent ``da``.

    Equals i pi d(mu) minus the curvature correction
    (1/(4 pi i)) Int Tr((a0^{-1} dt a0)(a0^{-1} dtau a0) a0^{-1} da0
                         - (t <-> tau)) dt dtau
    with the plane oriented by dtau ^ dt.
    """
    value = 1j * np.pi * d_mu(a, da, nodes=nodes)
    if da.a0 is None:
        return value
    t, w = _line_nodes(nodes)
    tt, ss = t[:, None], t[None, :]
    a0 = a.a0(tt, ss)
    _require_invertible_grid(a0, t)
    inv0 = np.linalg.inv(a0)
    lt = inv0 @ a.a0.d(0)(tt, ss)
    ltau = inv0 @ a.a0.d(1)(tt, ss)
    rd = inv0 @ da.a0(tt, ss)
    vals = np.trace(lt @ ltau @ rd - ltau @ lt @ rd, axis1=-2, axis2=-1)
    value -= _plane_integral(vals, w, w) / (4j * np.pi)
    return value


# ---------------------------------------------------------------------------
# Suspended determinant by path integration
# ---------------------------------------------------------------------------

Star2PathSampler = Callable[[float], Star2Element]


def straight_star2_path(b: Star2Element) -> tuple[Star2PathSampler, Star2PathSampler]:
    """Linear path from the identity to ``b`` with its constant tangent."""
    n = b.size
    eye = identity_family(n, arity=2)
    diff0 = b.a0.add(eye, coeff=-1.0)
    tangent = Star2Element(a0=diff0, a1=b.a1)

    def sampler(s: float) -> Star2Element:
        a0 = eye.add(diff0.scaled(s))
        a1 = b.a1.scaled(s) if b.a1 is not None else None
        return Star2Element(a0=a0, a1=a1)

    def tangent_fn(s: float) -> Star2Element:
        return tangent

    return sampler, tangent_fn


def sus_det(
    path: Star2PathSampler,
    tangent: Star2PathSampler | None = None,
    path_nodes: int = 48,
    grid_nodes: int = 64,
) -> complex:
    """exp of the path integral of the determinant 1-form from Id.

    The value only depends on the endpoint because closed loops contribute
    2 pi i integers.  A midpoint pass at ``path_nodes`` and its halving are
    extrapolated.
    """

    def one_pass(k: int) -> complex:
        h = 1.0 / k
        total = 0.0 + 0.0j
        ds = 1e-5
        for j in range(k):
            s = (j + 0.5) * h
            el = path(s)
            if tangent is not None:
                vel = tangent(s)
            else:
                vel = star2_linear_comb(
                    path(s + ds), path(s - ds), 1.0 / (2 * ds), -1.0 / (2 * ds)
                )
            try:
                total += alpha2(el, vel, nodes=grid_nodes) * h
            except ValueError as exc:
                raise SingularPathError(s, str(exc)) from exc
        return total

    coarse = one_pass(path_nodes)
    fine = one_pass(2 * path_nodes)
    integral = (4.0 * fine - coarse) / 3.0
    return complex(np.exp(integral))


def transition_det(
    g: Star2Element,
    path: Star2PathSampler | None = None,
    tangent: Star2PathSampler | None = None,
    path_nodes: int = 48,
    grid_nodes: int = 64,
) -> complex:
    """Determinant of a transition element along a canonical path.

    Defaults to the straight path from Id, which is valid for the
    slowly-varying transitions produced by contractible patch overlaps;
    callers may supply an explicit path otherwise.
    """
    if path is None:
        path, tangent = straight_star2_path(g)
    return sus_det(path, tangent, path_nodes=path_nodes, grid_nodes=grid_nodes)


# ---------------------------------------------------------------------------
# Determinant line cocycles over a discretized base circle
# ---------------------------------------------------------------------------

@dataclass
class DetLineCocycle:
    """Transition data of the associated determinant line over a base circle.

    ``base`` holds the K sample angles; ``transitions`` maps ordered patch
    pairs to arrays of determinant values over the (full-circle) overlap.
    """

    base: np.ndarray
    patch_names: list[str]
    transitions: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def winding(self, pair: tuple[str, str]) -> int:
        return winding_number(self.transitions[pair])

    def cocycle_defect(self) -> float:
        """Max violation of g_pq g_qr = g_pr over stored triples."""
        worst = 0.0
        names = self.patch_names
        for i in range(len(names)):
            for j in range(len(names)):
                for k in range(len(names)):
                    a, b, c = names[i], names[j], names[k]
                    if (a, b) in self.transitions and (b, c) in self.transitions and (a, c) in self.transitions:
                        lhs = self.transitions[(a, b)] * self.transitions[(b, c)]
                        rhs = self.transitions[(a, c)]
                        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
        return worst


def det_cocycle(
    base_points: np.ndarray,
    sections: dict[str, Callable[[float], Star2Element]],
    path_nodes: int = 32,
    grid_nodes: int = 48,
) -> DetLineCocycle:
    """Build the determinant transition data for globally defined sections.

    Each section assigns an invertible star element to every base point; the
    transition between two patches is section_p^{-1} * section_q and its
    determinant is computed along a canonical path.  With a single patch the
    cocycle is trivial.
    """
    names = sorted(sections)
    coc = DetLineCocycle(base=np.asarray(base_points, dtype=float), patch_names=names)
    for i, p in enumerate(names):
        for q in names[i + 1 :]:
            vals = []
            for b in coc.base:
                g = star2_mul(star2_inv(sections[p](b)), sections[q](b))
                vals.append(
                    transition_det(g, path_nodes=path_nodes, grid_nodes=grid_nodes)
                )
            coc.transitions[(p, q)] = np.asarray(vals)
            coc.transitions[(q, p)] = 1.0 / np.asarray(vals)
    for p in names:
        coc.transitions[(p, p)] = np.ones(len(coc.base), dtype=complex)
    return coc


# ---------------------------------------------------------------------------
# Principal integer bundle data and its classifying map
# ---------------------------------------------------------------------------

@dataclass
class ZPatch:
    """One patch of representative data: a family per base point plus the
    integer offset; ``eta_of`` evaluates the suspended eta invariant of the
    representative at a base point."""

    name: str
    eta_of: Callable[[float], complex]
    offset: int = 0


@dataclass
class ZBundleData:
    base: np.ndarray
    patches: list[ZPatch]


def z_connection(data: ZBundleData, tol: float = 1e-6) -> dict[str, np.ndarray]:
    """Classifying map exp(2 pi i h) with h = eta/2 + m per patch.

    Gauge changes move eta by even integers, so h changes by integers across
    patches and the exponential is a well-defined function on the base; the
    per-patch values are returned together with the consistency defect.
    """
    values = {}
    for patch in data.patches:
        h = np.array(
            [0.5 * patch.eta_of(b) + patch.offset for b in data.base], dtype=complex
        )
        values[patch.name] = np.exp(2j * np.pi * h)
    names = [p.name for p in data.patches]
    defect = 0.0
    for i in range(1, len(names)):
        defect = max(
            defect,
            float(np.max(np.abs(values[names[i]] - values[names[0]]))),
        )
    if defect > tol:
        raise ValueError(
            f"classifying map is patch-dependent (defect {defect:.3g} > {tol:.1g})"
        )
    values["defect"] = np.array([defect])
    return values
