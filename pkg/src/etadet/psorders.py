"""Bigraded order bookkeeping for product-suspended families, the P + it
constructor, derivative order drop, and full-ellipticity sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .families import SuspendedFamily

__all__ = [
    "BigradedOrder",
    "PSFamily",
    "EllipticityReport",
    "order_mul",
    "p_plus_it",
    "order_deriv",
    "full_elliptic_check",
]


@dataclass(frozen=True)
class BigradedOrder:
    """(old-boundary order, new-boundary order); composition adds both."""

    k: float
    k_new: float

    def __add__(self, other: "BigradedOrder") -> "BigradedOrder":
        return BigradedOrder(self.k + other.k, self.k_new + other.k_new)

    @classmethod
    def from_suspended(cls, m: float) -> "BigradedOrder":
        """Suspended order m embeds with equal bigrades."""
        return cls(m, m)


def order_mul(a: BigradedOrder, b: BigradedOrder) -> BigradedOrder:
    return a + b


@dataclass
class PSFamily:
    """Product-suspended family: declared bigraded order plus a concrete
    matrix sampler; invertibility flags are computed by sweeps wherever the
    sampler exists, never asserted."""

    order: BigradedOrder
    sampler: Callable[[np.ndarray], np.ndarray]
    size: int
    arity: int = 1
    derivative: Callable[[np.ndarray], np.ndarray] | None = None
    ring_radius: float = 64.0
    flags: dict = field(default_factory=dict)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return np.asarray(self.sampler(np.asarray(t, dtype=float)), dtype=complex)

    def d(self) -> "PSFamily":
        if self.derivative is not None:
            return PSFamily(
                order=BigradedOrder(self.order.k - 1, self.order.k_new - 1),
                sampler=self.derivative,
                size=self.size,
                derivative=_zero_sampler(self.size),
            )
        return order_deriv(self)


def _zero_sampler(n: int) -> Callable[[np.ndarray], np.ndarray]:
    def sampler(t):
        shape = np.shape(t)
        return np.zeros(shape + (n, n), dtype=complex)

    return sampler


def p_plus_it(p: np.ndarray, ring_radius: float = 64.0) -> PSFamily:
    """The family t -> P + i t for self-adjoint P, of bigraded order (1, 1).

    Invertible for every real t exactly when P is; always invertible off
    t = 0 since the spectrum of P is real.
    """
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("P must be a square matrix")
    if np.max(np.abs(p - p.conj().T)) > 1e-12:
        raise ValueError("P must be self-adjoint")
    n = p.shape[0]
    eye = np.eye(n, dtype=complex)

    def sampler(t):
        t = np.asarray(t, dtype=float)
        return p + 1j * t[..., None, None] * eye

    def derivative(t):
        shape = np.shape(np.asarray(t))
        return np.broadcast_to(1j * eye, shape + (n, n)).copy()

    fam = PSFamily(
        order=BigradedOrder(1.0, 1.0),
        sampler=sampler,
        size=n,
        derivative=derivative,
        ring_radius=ring_radius,
    )
    eigs = np.linalg.eigvalsh(p)
    fam.flags["p_invertible"] = bool(np.min(np.abs(eigs)) > 1e-12)
    fam.flags["invertible_off_axis"] = True
    return fam


def order_deriv(f: PSFamily) -> PSFamily:
    """Differentiate in the suspension parameter; both orders drop by one."""
    h = 1e-4

    def sampler(t):
        t = np.asarray(t, dtype=float)
        step = h * (1.0 + np.abs(t))
        out = (
            f(t - 2 * step)
            - 8.0 * f(t - step)
            + 8.0 * f(t + step)
            - f(t + 2 * step)
        )
        return out / (12.0 * step[..., None, None])

    if f.derivative is not None:
        sampler = f.derivative
    return PSFamily(
        order=BigradedOrder(f.order.k - 1, f.order.k_new - 1),
        sampler=sampler,
        size=f.size,
        ring_radius=f.ring_radius,
    )


@dataclass(frozen=True)
class EllipticityReport:
    symbol_ok: bool
    base_family_ok: bool
    indicial_ok: bool
    witnesses: dict
    inverse_growth_ok: bool

    @property
    def fully_elliptic(self) -> bool:
        return self.symbol_ok and self.base_family_ok and self.indicial_ok


def full_elliptic_check(
    f: PSFamily,
    grid: np.ndarray | None = None,
    indicial: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    growth_factor: float = 4.0,
) -> EllipticityReport:
    """Sweep invertibility on a grid plus a large-parameter ring.

    On the interior grid the sweep stands in for the symbol; the ring at
    |t| = ring_radius models the base family at the new boundary.  When an
    indicial two-parameter sampler is supplied it is swept as well.  For a
    passing family the inverse must obey the declared (-k, -k') growth on
    the ring within ``growth_factor``.
    """
    witnesses: dict = {}
    if grid is None:
        grid = np.linspace(-8.0, 8.0, 33)

    def min_sv(mats: np.ndarray) -> np.ndarray:
        return np.linalg.svd(mats, compute_uv=False)[..., -1]

    interior = f(grid)
    sv = min_sv(interior)
    symbol_ok = bool(np.min(sv) > 1e-10)
    if not symbol_ok:
        witnesses["symbol"] = float(grid[int(np.argmin(sv))])

    ring = np.array([f.ring_radius, -f.ring_radius])
    ring_vals = f(ring)
    sv_ring = min_sv(ring_vals)
    base_ok = bool(np.min(sv_ring) > 1e-10)
    if not base_ok:
        witnesses["base_family"] = float(ring[int(np.argmin(sv_ring))])

    indicial_ok = True
    if indicial is not None:
        taus = np.linspace(-8.0, 8.0, 17)
        vals = indicial(grid[:, None], taus[None, :])
        sv_ind = min_sv(vals)
        indicial_ok = bool(np.min(sv_ind) > 1e-10)
        if not indicial_ok:
            i, j = np.unravel_index(int(np.argmin(sv_ind)), sv_ind.shape)
            witnesses["indicial"] = (float(grid[i]), float(taus[j]))

    growth_ok = True
    if symbol_ok and base_ok:
        radii = np.array([0.5, 1.0, 2.0]) * f.ring_radius
        norms = []
        for r in radii:
            vals = f(np.array([r, -r]))
            inv = np.linalg.inv(vals)
            norms.append(float(np.max(np.linalg.norm(inv, ord=2, axis=(-2, -1)))) * r**f.order.k)
        growth_ok = bool(max(norms) <= growth_factor * min(norms))

    return EllipticityReport(
        symbol_ok=symbol_ok,
        base_family_ok=base_ok,
        indicial_ok=indicial_ok,
        witnesses=witnesses,
        inverse_growth_ok=growth_ok,
    )
