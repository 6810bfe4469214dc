"""Truncated star algebras over the two suspension parameters.

Elements a0 + eps a1 are multiplied with the first symplectic correction and
eps^2 = 0; the tilde variant carries the extra x and eps*x slots and the
boundary lift of model operators lands there.  Derivative conventions are
D = -i d/du throughout, with axis 0 = t and axis 1 = tau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import SuspendedFamily, constant_family, identity_family

__all__ = [
    "Star2Element",
    "TildeElement",
    "CuspJet",
    "star2_mul",
    "star2_inv",
    "star2_linear_comb",
    "tilde_mul",
    "jet_mul",
    "jet_moyal_correction",
    "itilde",
    "poisson_bracket",
]


def _zero_like(fam: SuspendedFamily) -> SuspendedFamily:
    return constant_family(
        np.zeros((fam.size, fam.size), dtype=complex), arity=fam.arity
    )


def _symplectic_correction(a0: SuspendedFamily, b0: SuspendedFamily) -> SuspendedFamily:
    """(i/2) omega(D_v, D_w) a0(v) b0(w) |_{v=w} for the 2x2 block form of the
    symplectic matrix; in plain derivatives this is
    (i/2)(dt a0 dtau b0 - dtau a0 dt b0)."""
    da_t, da_tau = a0.d(0), a0.d(1)
    db_t, db_tau = b0.d(0), b0.d(1)
    term1 = da_t.matmul(db_tau)
    term2 = da_tau.matmul(db_t)
    return term1.add(term2, coeff=-1.0).scaled(0.5j)


def poisson_bracket(u: SuspendedFamily, v: SuspendedFamily) -> SuspendedFamily:
    """{u, v} = dtau(u) dt(v) - dt(u) dtau(v)."""
    term1 = u.d(1).matmul(v.d(0))
    term2 = u.d(0).matmul(v.d(1))
    return term1.add(term2, coeff=-1.0)


@dataclass
class Star2Element:
    """a0 + eps a1 with eps^2 = 0; a0 invertible at infinity, a1 decaying."""

    a0: SuspendedFamily
    a1: SuspendedFamily | None = None

    def __post_init__(self) -> None:
        if self.a0.arity != 2:
            raise ValueError("a0 must be an arity-2 family")
        if self.a1 is not None and (
            self.a1.arity != 2 or self.a1.size != self.a0.size
        ):
            raise ValueError("a1 must match a0 in size and arity")

    @property
    def size(self) -> int:
        return self.a0.size

    @classmethod
    def identity(cls, n: int) -> "Star2Element":
        return cls(a0=identity_family(n, arity=2), a1=None)

    def a1_or_zero(self) -> SuspendedFamily:
        return self.a1 if self.a1 is not None else _zero_like(self.a0)


def star2_mul(a: Star2Element, b: Star2Element) -> Star2Element:
    if a.size != b.size:
        raise ValueError("size mismatch")
    c0 = a.a0.matmul(b.a0)
    corr = _symplectic_correction(a.a0, b.a0)
    c1: SuspendedFamily | None = corr
    if a.a1 is not None:
        c1 = c1.add(a.a1.matmul(b.a0))
    if b.a1 is not None:
        c1 = c1.add(a.a0.matmul(b.a1))
    return Star2Element(a0=c0, a1=c1)


def star2_inv(a: Star2Element) -> Star2Element:
    """Two-sided star inverse: a0^{-1} - eps (a0^{-1} a1 a0^{-1}
    - (i/2) {a0^{-1}, a0} a0^{-1})."""
    inv0 = a.a0.inv()
    bracket = poisson_bracket(inv0, a.a0).matmul(inv0).scaled(0.5j)
    c1 = bracket
    if a.a1 is not None:
        c1 = c1.add(inv0.matmul(a.a1).matmul(inv0), coeff=-1.0)
    return Star2Element(a0=inv0, a1=c1)


def star2_linear_comb(
    a: Star2Element, b: Star2Element, ca: complex, cb: complex
) -> Star2Element:
    c0 = a.a0.scaled(ca).add(b.a0.scaled(cb))
    c1 = a.a1_or_zero().scaled(ca).add(b.a1_or_zero().scaled(cb))
    return Star2Element(a0=c0, a1=c1)


# ---------------------------------------------------------------------------
# Tilde algebra: a0 + x e + eps x a1, with x^2 = (eps x)^2 = eps x^2 = 0
# ---------------------------------------------------------------------------

@dataclass
class TildeElement:
    a0: SuspendedFamily
    e: SuspendedFamily | None = None
    a1: SuspendedFamily | None = None

    @property
    def size(self) -> int:
        return self.a0.size

    @classmethod
    def identity(cls, n: int) -> "TildeElement":
        return cls(a0=identity_family(n, arity=2))

    def as_star2(self) -> Star2Element:
        """Forget the x slot; eps x plays the role of the deformation
        parameter, under which the determinant 1-form is unchanged."""
        return Star2Element(a0=self.a0, a1=self.a1)


def tilde_mul(a: TildeElement, b: TildeElement) -> TildeElement:
    c0 = a.a0.matmul(b.a0)
    e: SuspendedFamily | None = None
    if a.e is not None:
        e = a.e.matmul(b.a0)
    if b.e is not None:
        term = a.a0.matmul(b.e)
        e = term if e is None else e.add(term)
    c1 = _symplectic_correction(a.a0, b.a0)
    if a.a1 is not None:
        c1 = c1.add(a.a1.matmul(b.a0))
    if b.a1 is not None:
        c1 = c1.add(a.a0.matmul(b.a1))
    return TildeElement(a0=c0, e=e, a1=c1)


# ---------------------------------------------------------------------------
# Boundary jets in the defining-function variable
# ---------------------------------------------------------------------------

@dataclass
class CuspJet:
    """I_*(A) = I0 + x I1 truncated after the linear term.

    Entries are arity-1 families of the boundary suspension variable tau,
    Schwartz perturbations of constants.
    """

    i0: SuspendedFamily
    i1: SuspendedFamily | None = None

    @property
    def size(self) -> int:
        return self.i0.size

    @classmethod
    def identity(cls, n: int) -> "CuspJet":
        return cls(i0=identity_family(n, arity=1))

    def i1_or_zero(self) -> SuspendedFamily:
        return self.i1 if self.i1 is not None else _zero_like(self.i0)


def jet_moyal_correction(a: CuspJet, b: CuspJet) -> SuspendedFamily:
    """First symplectic correction to the jet product, order x^1 part.

    The correction carries an overall x^2 weight while the x-derivative
    lowers the degree by at most one, so its expansion starts at x^2 and the
    coefficient at x^1 vanishes identically for length-2 jets.
    """
    return _zero_like(a.i0)


def jet_mul(a: CuspJet, b: CuspJet) -> CuspJet:
    if a.size != b.size:
        raise ValueError("jet size mismatch")
    c0 = a.i0.matmul(b.i0)
    c1 = jet_moyal_correction(a, b)
    if a.i1 is not None:
        c1 = c1.add(a.i1.matmul(b.i0))
    if b.i1 is not None:
        c1 = c1.add(a.i0.matmul(b.i1))
    return CuspJet(i0=c0, i1=c1)


# ---------------------------------------------------------------------------
# The boundary lift
# ---------------------------------------------------------------------------

def itilde(family) -> TildeElement:
    """Map a model element with an eps x part to its boundary star data.

    ``family`` must expose ``indicial_symbol()``, ``jet1_symbol()`` and
    ``eps_indicial_symbol()`` returning arity-2 families in (t, tau) (the
    latter two possibly None).  The lift is an algebra homomorphism onto the
    tilde product, which is this module's central consistency test.
    """
    a0 = family.indicial_symbol()
    e = family.jet1_symbol()
    a1 = family.eps_indicial_symbol()
    return TildeElement(a0=a0, e=e, a1=a1)
