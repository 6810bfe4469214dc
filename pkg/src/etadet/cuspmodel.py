"""Desk-scale model of the boundary calculus: Wiener-Hopf/Toeplitz
quantization of boundary symbol data plus finite-rank interior parts.

After the Cayley transform tau -> (tau - i)/(tau + i) the half-line Hardy
space becomes the circle Hardy space, so concrete realizations are ordinary
(block) Toeplitz matrices.  The regularized trace of a model operator is the
trace of its non-Toeplitz interior part; the finite-part constant of the pure
Toeplitz diagonal is set to zero, and only differences and commutator
identities, which are convention independent, are ever asserted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .families import SuspendedFamily
from .numerics import QuadSpec, quad

__all__ = [
    "CircleSymbol",
    "ToeplitzTruncation",
    "ModelCuspOperator",
    "CuspSuspendedFamily",
    "toeplitz_matrix",
    "hankel_matrix",
    "compose",
    "compose_css",
    "model_inverse",
    "btr",
    "rtr_boundary",
    "trace_defect",
    "TraceDefectResult",
]


def _tau_of_theta(theta: np.ndarray) -> np.ndarray:
    return -1.0 / np.tan(theta / 2.0)


def _cayley(tau: np.ndarray) -> np.ndarray:
    return (tau - 1j) / (tau + 1j)


class CircleSymbol:
    """Matrix-valued symbol on the boundary circle / compactified tau line.

    Carries a sampler in the circle angle theta (always available) and, when
    known, an analytic sampler and derivative in the line variable tau.
    """

    def __init__(
        self,
        theta_fn: Callable[[np.ndarray], np.ndarray],
        size: int,
        tau_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        dtau_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        self.theta_fn = theta_fn
        self.size = size
        self._tau_fn = tau_fn
        self._dtau_fn = dtau_fn
        self._coeff_cache: dict[int, np.ndarray] = {}

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_tau(
        cls,
        tau_fn: Callable[[np.ndarray], np.ndarray],
        size: int,
        dtau_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> "CircleSymbol":
        def theta_fn(theta):
            return tau_fn(_tau_of_theta(theta))

        return cls(theta_fn, size, tau_fn=tau_fn, dtau_fn=dtau_fn)

    @classmethod
    def from_fourier(cls, coeffs: dict[int, np.ndarray], size: int) -> "CircleSymbol":
        ks = np.array(sorted(int(k) for k in coeffs), dtype=float)
        mats = np.stack([np.asarray(coeffs[int(k)], dtype=complex) for k in ks])

        def theta_fn(theta):
            theta = np.asarray(theta, dtype=float)
            phases = np.exp(1j * np.multiply.outer(theta, ks))
            return np.einsum("...k,kij->...ij", phases, mats)

        def tau_fn(tau):
            z = _cayley(np.asarray(tau, dtype=complex))
            powers = np.power(z[..., None], ks)
            return np.einsum("...k,kij->...ij", powers, mats)

        def dtau_fn(tau):
            tau = np.asarray(tau, dtype=complex)
            z = _cayley(tau)
            dz = 2j / (tau + 1j) ** 2
            powers = np.power(z[..., None], ks - 1.0) * ks
            powers = powers * dz[..., None]
            return np.einsum("...k,kij->...ij", powers, mats)

        return cls(theta_fn, size, tau_fn=tau_fn, dtau_fn=dtau_fn)

    # -- sampling -----------------------------------------------------------

    def theta(self, theta: np.ndarray) -> np.ndarray:
        return np.asarray(self.theta_fn(np.asarray(theta, dtype=float)), dtype=complex)

    def tau(self, tau: np.ndarray) -> np.ndarray:
        if self._tau_fn is not None:
            return np.asarray(self._tau_fn(np.asarray(tau)), dtype=complex)
        # theta(tau): tau = -cot(theta/2)  =>  theta = 2 arccot(-tau)
        tau = np.asarray(tau, dtype=float)
        theta = 2.0 * np.arctan2(1.0, -tau)
        return self.theta(theta)

    def dtau(self, tau: np.ndarray) -> np.ndarray:
        if self._dtau_fn is not None:
            return np.asarray(self._dtau_fn(np.asarray(tau)), dtype=complex)
        tau = np.asarray(tau, dtype=float)
        h = 1e-4 * (1.0 + np.abs(tau))
        total = None
        for wgt, off in ((1.0, -2.0), (-8.0, -1.0), (8.0, 1.0), (-1.0, 2.0)):
            term = wgt * self.tau(tau + off * h)
            total = term if total is None else total + term
        return total / (12.0 * h[..., None, None])

    def limit(self) -> np.ndarray:
        """Common value at tau -> +-infinity (theta -> 0)."""
        return self.tau(np.array([1e9]))[0]

    def coeffs(self, m_samples: int) -> np.ndarray:
        """Fourier coefficients in fft order, from the offset theta grid."""
        if m_samples not in self._coeff_cache:
            theta = 2.0 * np.pi * (np.arange(m_samples) + 0.5) / m_samples
            samples = self.theta(theta)
            hat = np.fft.fft(samples, axis=0) / m_samples
            k = np.fft.fftfreq(m_samples, d=1.0 / m_samples)
            phase = np.exp(-1j * np.pi * k / m_samples)
            self._coeff_cache[m_samples] = hat * phase[:, None, None]
        return self._coeff_cache[m_samples]

    def coeff_signed(self, kmin: int, kmax: int, m_samples: int | None = None) -> np.ndarray:
        """Coefficient matrices for signed indices kmin..kmax inclusive."""
        span = max(abs(kmin), abs(kmax))
        if m_samples is None:
            m_samples = 1 << max(10, int(np.ceil(np.log2(4 * span + 4))))
        table = self.coeffs(m_samples)
        ks = np.arange(kmin, kmax + 1)
        return table[np.mod(ks, m_samples)]

    # -- algebra ------------------------------------------------------------

    def mul(self, other: "CircleSymbol") -> "CircleSymbol":
        a, b = self, other

        def theta_fn(theta):
            return a.theta(theta) @ b.theta(theta)

        tau_fn = (lambda tau: a.tau(tau) @ b.tau(tau))
        dtau_fn = lambda tau: a.dtau(tau) @ b.tau(tau) + a.tau(tau) @ b.dtau(tau)
        return CircleSymbol(theta_fn, a.size, tau_fn=tau_fn, dtau_fn=dtau_fn)

    def add(self, other: "CircleSymbol", coeff: complex = 1.0) -> "CircleSymbol":
        a, b = self, other
        return CircleSymbol(
            lambda theta: a.theta(theta) + coeff * b.theta(theta),
            a.size,
            tau_fn=lambda tau: a.tau(tau) + coeff * b.tau(tau),
            dtau_fn=lambda tau: a.dtau(tau) + coeff * b.dtau(tau),
        )

    def scaled(self, factor: complex) -> "CircleSymbol":
        a = self
        return CircleSymbol(
            lambda theta: factor * a.theta(theta),
            a.size,
            tau_fn=lambda tau: factor * a.tau(tau),
            dtau_fn=lambda tau: factor * a.dtau(tau),
        )

    def inv(self) -> "CircleSymbol":
        a = self

        def dtau_fn(tau):
            v = np.linalg.inv(a.tau(tau))
            return -v @ a.dtau(tau) @ v

        return CircleSymbol(
            lambda theta: np.linalg.inv(a.theta(theta)),
            a.size,
            tau_fn=lambda tau: np.linalg.inv(a.tau(tau)),
            dtau_fn=dtau_fn,
        )

    def tilde(self) -> "CircleSymbol":
        """Reflection theta -> -theta (tau -> -tau)."""
        a = self
        return CircleSymbol(
            lambda theta: a.theta(-np.asarray(theta)),
            a.size,
            tau_fn=lambda tau: a.tau(-np.asarray(tau)),
            dtau_fn=lambda tau: -a.dtau(-np.asarray(tau)),
        )

    @classmethod
    def identity(cls, size: int) -> "CircleSymbol":
        return cls.from_fourier({0: np.eye(size, dtype=complex)}, size)

    @classmethod
    def zero(cls, size: int) -> "CircleSymbol":
        return cls.from_fourier({0: np.zeros((size, size), dtype=complex)}, size)


# ---------------------------------------------------------------------------
# Truncated realizations
# ---------------------------------------------------------------------------

def toeplitz_matrix(sym: CircleSymbol, n: int) -> np.ndarray:
    q = sym.size
    c = sym.coeff_signed(-(n - 1), n - 1)
    idx = np.subtract.outer(np.arange(n), np.arange(n)) + (n - 1)
    blocks = c[idx]
    return blocks.transpose(0, 2, 1, 3).reshape(n * q, n * q)


def hankel_matrix(sym: CircleSymbol, n: int) -> np.ndarray:
    q = sym.size
    c = sym.coeff_signed(1, 2 * n - 1)
    idx = np.add.outer(np.arange(n), np.arange(n))
    blocks = c[idx]
    return blocks.transpose(0, 2, 1, 3).reshape(n * q, n * q)


def _embed(block: np.ndarray, n: int, q: int) -> np.ndarray:
    out = np.zeros((n * q, n * q), dtype=complex)
    r = block.shape[0]
    if r > n * q:
        raise ValueError("interior block larger than truncation")
    out[:r, :r] = block
    return out


@dataclass(frozen=True)
class ToeplitzTruncation:
    size: int
    matrix: np.ndarray
    symbol: CircleSymbol


# ---------------------------------------------------------------------------
# Model operators
# ---------------------------------------------------------------------------

@dataclass
class ModelCuspOperator:
    """Boundary symbol jet plus finite-rank interior part.

    ``interior`` maps a truncation size N to the (N q, N q) matrix of the
    non-Toeplitz part; it converges entrywise as N grows.  ``eps`` carries the
    eps*x component structurally; it never enters the regularized trace.
    """

    sym0: CircleSymbol
    jet1: CircleSymbol | None = None
    interior: Callable[[int], np.ndarray] | None = None
    eps: "ModelCuspOperator | None" = None
    truncation: int = 256

    @property
    def size(self) -> int:
        return self.sym0.size

    @classmethod
    def identity(cls, q: int) -> "ModelCuspOperator":
        return cls(sym0=CircleSymbol.identity(q))

    @classmethod
    def from_finite_rank(cls, block: np.ndarray, q: int = 1) -> "ModelCuspOperator":
        block = np.asarray(block, dtype=complex)
        return cls(
            sym0=CircleSymbol.zero(q),
            interior=lambda n, b=block: _embed(b, n, q),
        )

    def interior_matrix(self, n: int) -> np.ndarray:
        if self.interior is None:
            return np.zeros((n * self.size, n * self.size), dtype=complex)
        return np.asarray(self.interior(n), dtype=complex)

    def realize(self, n: int) -> np.ndarray:
        return toeplitz_matrix(self.sym0, n) + self.interior_matrix(n)

    def truncate(self, n: int) -> ToeplitzTruncation:
        return ToeplitzTruncation(size=n, matrix=self.realize(n), symbol=self.sym0)

    def add(self, other: "ModelCuspOperator", coeff: complex = 1.0) -> "ModelCuspOperator":
        a, b = self, other
        sym0 = a.sym0.add(b.sym0, coeff)
        jet1 = _add_opt_sym(a.jet1, b.jet1, coeff, self.size)
        interior = None
        if a.interior is not None or b.interior is not None:
            interior = lambda n: a.interior_matrix(n) + coeff * b.interior_matrix(n)
        eps = None
        if a.eps is not None or b.eps is not None:
            ae = a.eps if a.eps is not None else _zero_op(self.size)
            be = b.eps if b.eps is not None else _zero_op(self.size)
            eps = ae.add(be, coeff)
        return ModelCuspOperator(sym0=sym0, jet1=jet1, interior=interior, eps=eps)

    def scaled(self, factor: complex) -> "ModelCuspOperator":
        a = self
        return ModelCuspOperator(
            sym0=a.sym0.scaled(factor),
            jet1=a.jet1.scaled(factor) if a.jet1 is not None else None,
            interior=(lambda n: factor * a.interior_matrix(n)) if a.interior is not None else None,
            eps=a.eps.scaled(factor) if a.eps is not None else None,
        )

    # Jet access for star-algebra interop.

    def jet_i0_family(self) -> SuspendedFamily:
        sym = self.sym0
        return SuspendedFamily(
            lambda tau: sym.tau(tau),
            self.size,
            arity=1,
            decay_order=-1.0,
            derivatives={0: lambda tau: sym.dtau(tau)},
            at_infinity=sym.limit(),
        )

    def jet_i1_family(self) -> SuspendedFamily | None:
        if self.jet1 is None:
            return None
        sym = self.jet1
        return SuspendedFamily(
            lambda tau: sym.tau(tau),
            self.size,
            arity=1,
            decay_order=-2.0,
            derivatives={0: lambda tau: sym.dtau(tau)},
            at_infinity=sym.limit(),
        )


def _zero_op(q: int) -> ModelCuspOperator:
    return ModelCuspOperator(sym0=CircleSymbol.zero(q))


def _add_opt_sym(a: CircleSymbol | None, b: CircleSymbol | None, coeff: complex, q: int):
    if a is None and b is None:
        return None
    a = a if a is not None else CircleSymbol.zero(q)
    b = b if b is not None else CircleSymbol.zero(q)
    return a.add(b, coeff)


# ---------------------------------------------------------------------------
# Composition, traces, trace defect
# ---------------------------------------------------------------------------

def compose(a: ModelCuspOperator, b: ModelCuspOperator) -> ModelCuspOperator:
    """Operator composition: multiplicative on boundary jets, with the
    Hankel cross term carrying the interior defect of the Toeplitz parts."""
    if a.size != b.size:
        raise ValueError("model operator size mismatch")
    sym0 = a.sym0.mul(b.sym0)
    jet1 = None
    if a.jet1 is not None or b.jet1 is not None:
        parts = []
        if b.jet1 is not None:
            parts.append(a.sym0.mul(b.jet1))
        if a.jet1 is not None:
            parts.append(a.jet1.mul(b.sym0))
        jet1 = parts[0]
        if len(parts) == 2:
            jet1 = jet1.add(parts[1])

    def interior(n: int) -> np.ndarray:
        out = -hankel_matrix(a.sym0, n) @ hankel_matrix(b.sym0.tilde(), n)
        ka = a.interior_matrix(n) if a.interior is not None else None
        kb = b.interior_matrix(n) if b.interior is not None else None
        if kb is not None:
            out += toeplitz_matrix(a.sym0, n) @ kb
        if ka is not None:
            out += ka @ toeplitz_matrix(b.sym0, n)
        if ka is not None and kb is not None:
            out += ka @ kb
        return out

    eps = None
    if a.eps is not None or b.eps is not None:
        parts = []
        if b.eps is not None:
            parts.append(compose(_strip_eps(a), b.eps))
        if a.eps is not None:
            parts.append(compose(a.eps, _strip_eps(b)))
        eps = parts[0]
        if len(parts) == 2:
            eps = eps.add(parts[1])
    return ModelCuspOperator(sym0=sym0, jet1=jet1, interior=interior, eps=eps)


def _strip_eps(a: ModelCuspOperator) -> ModelCuspOperator:
    return ModelCuspOperator(sym0=a.sym0, jet1=a.jet1, interior=a.interior)


def split_margin(matrix: np.ndarray, far_frac: float = 0.25, thresh: float = 0.5):
    """Smallest singular value of a finite section, separating phantom modes.

    Finite sections of half-line operators can carry spurious small singular
    values localized at the far corner (the reflected symbol's defect).
    Returns (true_margin, phantom_triples) where phantoms are (sigma, u, v)
    with both vectors carrying at least ``thresh`` of their mass in the far
    ``far_frac`` of indices.
    """
    u, s, vh = np.linalg.svd(matrix)
    cut = int((1.0 - far_frac) * matrix.shape[0])
    phantom_idx = set()
    phantoms = []
    for j in range(matrix.shape[0] - 1, -1, -1):
        if s[j] > 0.9:
            break
        mu = float(np.sum(np.abs(u[cut:, j]) ** 2))
        mv = float(np.sum(np.abs(vh[j, cut:]) ** 2))
        if mu > thresh and mv > thresh:
            phantom_idx.add(j)
            phantoms.append((s[j], u[:, j], vh[j]))
    true_candidates = [float(s[j]) for j in range(matrix.shape[0]) if j not in phantom_idx]
    true_margin = min(true_candidates) if true_candidates else float(s[-1])
    return true_margin, phantoms


def model_inverse(a: ModelCuspOperator, ambient_factor: int = 2) -> ModelCuspOperator:
    """Inverse of Id-type model operators.

    The interior part of the inverse is computed by inverting the realization
    on an ambient truncation and reading off the corner.  Spurious far-corner
    modes of the finite section (reflected-symbol defects) are lifted by
    aligned rank-one corrections before inverting; the correction is
    exponentially invisible at the near corner.
    """
    sym_inv = a.sym0.inv()
    q = a.size

    def interior(n: int) -> np.ndarray:
        m = ambient_factor * n
        big = a.realize(m)
        sv_min = np.linalg.svd(big, compute_uv=False)[-1]
        if sv_min < 0.05:
            _, phantoms = split_margin(big)
            for sigma, u_j, v_j in phantoms:
                if sigma < 0.05:
                    big = big + (0.5 - sigma) * np.outer(u_j, v_j)
        inv = np.linalg.inv(big) - toeplitz_matrix(sym_inv, m)
        return inv[: n * q, : n * q]

    jet1 = None
    if a.jet1 is not None:
        jet1 = sym_inv.mul(a.jet1).mul(sym_inv).scaled(-1.0)
    return ModelCuspOperator(sym0=sym_inv, jet1=jet1, interior=interior)


def btr(a: ModelCuspOperator, n: int | None = None) -> complex:
    """Regularized trace: the trace of the interior part at truncation n.

    Pure Toeplitz parts contribute zero by the finite-part convention; on
    trace-class (finite-rank interior) elements this is the ordinary trace.
    """
    n = n if n is not None else a.truncation
    if a.interior is None:
        return 0.0 + 0.0j
    return complex(np.trace(a.interior_matrix(n)))


def rtr_boundary(a: ModelCuspOperator, nodes: int = 128) -> complex:
    """(1/2 pi) integral of Tr(jet1(tau)) over the line."""
    if a.jet1 is None:
        raise ValueError("boundary residue trace needs the x-jet coefficient")
    jet = a.jet1

    def integrand(tau):
        return np.trace(jet.tau(tau), axis1=-2, axis2=-1)

    res = quad(integrand, QuadSpec(dimension=1, node_count=nodes, tail_decay_order=-2.0))
    return complex(res.value) / (2.0 * np.pi)


@dataclass(frozen=True)
class TraceDefectResult:
    lhs: complex
    lhs_raw: tuple[complex, complex]
    rhs: complex

    @property
    def mismatch(self) -> float:
        return abs(self.lhs - self.rhs)


def trace_defect(
    a: ModelCuspOperator,
    b: ModelCuspOperator,
    n0: int = 256,
    tau_nodes: int = 192,
) -> TraceDefectResult:
    """Commutator trace against the boundary integral.

    lhs is bTr(AB - BA) at truncations n0 and 2 n0 with one Richardson step;
    rhs is (1/2 pi i) Int Tr(a0 dtau b0) dtau.
    """
    ab = compose(a, b)
    ba = compose(b, a)
    vals = []
    for n in (n0, 2 * n0):
        vals.append(btr(ab, n) - btr(ba, n))
    lhs = 2.0 * vals[1] - vals[0]

    def integrand(tau):
        return np.trace(a.sym0.tau(tau) @ b.sym0.dtau(tau), axis1=-2, axis2=-1)

    res = quad(
        integrand, QuadSpec(dimension=1, node_count=tau_nodes, tail_decay_order=-2.0)
    )
    rhs = complex(res.value) / (2j * np.pi)
    return TraceDefectResult(lhs=lhs, lhs_raw=(vals[0], vals[1]), rhs=rhs)


# ---------------------------------------------------------------------------
# Once-suspended families of model operators (the css model)
# ---------------------------------------------------------------------------

@dataclass
class CuspSuspendedFamily:
    """t -> model operator, with an optional eps*x part.

    Symbol data is carried as arity-2 families in (t, tau) so that boundary
    functionals act on it directly; ``interior_at`` supplies the interior
    matrix of the t-slice at a given truncation.
    """

    sym0: SuspendedFamily
    jet1: SuspendedFamily | None = None
    eps_sym: SuspendedFamily | None = None
    interior_at: Callable[[float, int], np.ndarray] | None = None
    order: tuple[float, float] = (0.0, 0.0)
    invertible_radius: float = 0.0
    # Exact circle-side slices, when the construction knows them; otherwise
    # slices are resampled from the tau side.
    circle0_at: Callable[[float], CircleSymbol] | None = None
    circle_jet_at: Callable[[float], CircleSymbol] | None = None

    @property
    def size(self) -> int:
        return self.sym0.size

    # itilde protocol ------------------------------------------------------

    def indicial_symbol(self) -> SuspendedFamily:
        return self.sym0

    def jet1_symbol(self) -> SuspendedFamily | None:
        return self.jet1

    def eps_indicial_symbol(self) -> SuspendedFamily | None:
        return self.eps_sym

    # operator view --------------------------------------------------------

    def op_at(self, t: float) -> ModelCuspOperator:
        sym = self.sym0
        q = self.size
        if self.circle0_at is not None:
            sym_t = self.circle0_at(t)
        else:
            sym_t = CircleSymbol.from_tau(
                lambda tau: sym(np.full(np.shape(tau), t), tau), q
            )
        jet_t = None
        if self.circle_jet_at is not None:
            jet_t = self.circle_jet_at(t)
        elif self.jet1 is not None:
            jet = self.jet1
            jet_t = CircleSymbol.from_tau(
                lambda tau: jet(np.full(np.shape(tau), t), tau), q
            )
        interior = None
        if self.interior_at is not None:
            interior = lambda n, tt=t: self.interior_at(tt, n)
        return ModelCuspOperator(sym0=sym_t, jet1=jet_t, interior=interior)


def css_lincomb(
    a: CuspSuspendedFamily, b: CuspSuspendedFamily, ca: complex = 1.0, cb: complex = 1.0
) -> CuspSuspendedFamily:
    """ca * a + cb * b slicewise (symbols, jets and interiors)."""
    sym0 = a.sym0.scaled(ca).add(b.sym0.scaled(cb))
    jet1 = None
    if a.jet1 is not None or b.jet1 is not None:
        terms = []
        if a.jet1 is not None:
            terms.append(a.jet1.scaled(ca))
        if b.jet1 is not None:
            terms.append(b.jet1.scaled(cb))
        jet1 = terms[0] if len(terms) == 1 else terms[0].add(terms[1])
    eps_sym = None
    if a.eps_sym is not None or b.eps_sym is not None:
        terms = []
        if a.eps_sym is not None:
            terms.append(a.eps_sym.scaled(ca))
        if b.eps_sym is not None:
            terms.append(b.eps_sym.scaled(cb))
        eps_sym = terms[0] if len(terms) == 1 else terms[0].add(terms[1])

    def interior_at(t: float, n: int) -> np.ndarray:
        out = None
        if a.interior_at is not None:
            out = ca * a.interior_at(t, n)
        if b.interior_at is not None:
            term = cb * b.interior_at(t, n)
            out = term if out is None else out + term
        if out is None:
            q = a.size
            out = np.zeros((n * q, n * q), dtype=complex)
        return out

    circle0_at = None
    if a.circle0_at is not None and b.circle0_at is not None:
        circle0_at = lambda t: a.circle0_at(t).scaled(ca).add(b.circle0_at(t).scaled(cb))

    return CuspSuspendedFamily(
        sym0=sym0,
        jet1=jet1,
        eps_sym=eps_sym,
        interior_at=interior_at,
        order=(max(a.order[0], b.order[0]), max(a.order[1], b.order[1])),
        circle0_at=circle0_at,
    )


def css_inverse(a: CuspSuspendedFamily) -> CuspSuspendedFamily:
    """Star inverse of a group-type family.

    The leading part inverts slicewise (with the interior of the inverse
    computed by ambient sections); the eps*x part follows the deformation
    inverse with its symplectic correction, and the jet slot inverts by
    conjugation.
    """
    from .star import _symplectic_correction, poisson_bracket

    inv0 = a.sym0.inv()
    jet1 = None
    if a.jet1 is not None:
        jet1 = inv0.matmul(a.jet1).matmul(inv0).scaled(-1.0)
    eps_sym = poisson_bracket(inv0, a.sym0).matmul(inv0).scaled(0.5j)
    if a.eps_sym is not None:
        eps_sym = eps_sym.add(inv0.matmul(a.eps_sym).matmul(inv0), coeff=-1.0)

    def interior_at(t: float, n: int) -> np.ndarray:
        return model_inverse(a.op_at(t)).interior_matrix(n)

    circle0_at = None
    if a.circle0_at is not None:
        circle0_at = lambda t: a.circle0_at(t).inv()

    return CuspSuspendedFamily(
        sym0=inv0,
        jet1=jet1,
        eps_sym=eps_sym,
        interior_at=interior_at,
        order=(-a.order[0], -a.order[1]),
        circle0_at=circle0_at,
    )


def compose_css(a: CuspSuspendedFamily, b: CuspSuspendedFamily) -> CuspSuspendedFamily:
    """Composition of once-suspended model families.

    The eps*x component follows the Leibniz rule and picks up the symplectic
    correction pairing the suspension derivative with the boundary one; the
    interior part composes slice by slice with the Hankel cross terms.
    """
    from .star import _symplectic_correction

    sym0 = a.sym0.matmul(b.sym0)
    jet1 = None
    if a.jet1 is not None or b.jet1 is not None:
        terms = []
        if b.jet1 is not None:
            terms.append(a.sym0.matmul(b.jet1))
        if a.jet1 is not None:
            terms.append(a.jet1.matmul(b.sym0))
        jet1 = terms[0] if len(terms) == 1 else terms[0].add(terms[1])

    eps_sym = _symplectic_correction(a.sym0, b.sym0)
    if a.eps_sym is not None:
        eps_sym = eps_sym.add(a.eps_sym.matmul(b.sym0))
    if b.eps_sym is not None:
        eps_sym = eps_sym.add(a.sym0.matmul(b.eps_sym))

    # Even when both interiors vanish the Toeplitz parts leave a Hankel
    # cross term, so the slice interior is always assembled.
    def interior_at(t: float, n: int) -> np.ndarray:
        return compose(a.op_at(t), b.op_at(t)).interior_matrix(n)

    circle0_at = None
    if a.circle0_at is not None and b.circle0_at is not None:
        circle0_at = lambda t: a.circle0_at(t).mul(b.circle0_at(t))

    return CuspSuspendedFamily(
        sym0=sym0,
        jet1=jet1,
        eps_sym=eps_sym,
        interior_at=interior_at,
        order=(a.order[0] + b.order[0], a.order[1] + b.order[1]),
        invertible_radius=max(a.invertible_radius, b.invertible_radius),
        circle0_at=circle0_at,
    )
