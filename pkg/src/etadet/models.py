"""Builders for concrete model data: Gaussian packets, Cayley phase
families, the degree-one three-sphere map, seeded random star elements,
Toeplitz symbols and once-suspended model families.

Everything built here carries analytic derivative samplers so that nested
algebraic operations stay at quadrature accuracy.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .cuspmodel import CircleSymbol, CuspSuspendedFamily, ModelCuspOperator, _embed
from .families import SuspendedFamily, constant_family, identity_family
from .star import Star2Element, TildeElement

__all__ = [
    "gaussian_packet2",
    "gaussian_bump1",
    "cayley_family",
    "cayley_scalar",
    "random_star2",
    "random_schwartz_star2",
    "su2_smash_map",
    "su2_loop",
    "circle_monomial_op",
    "random_toeplitz_symbol",
    "random_smoothing_op",
    "EnvelopeCircleTerm",
    "envelope_circle_family",
    "random_css_group_family",
    "random_gauge",
]


# ---------------------------------------------------------------------------
# Gaussian packets
# ---------------------------------------------------------------------------

def gaussian_packet2(
    amplitude: np.ndarray,
    center: tuple[float, float] = (0.0, 0.0),
    width: tuple[float, float] = (1.0, 1.0),
) -> SuspendedFamily:
    """amplitude * exp(-((t-c1)/w1)^2 - ((tau-c2)/w2)^2) as an arity-2 family."""
    amp = np.asarray(amplitude, dtype=complex)
    n = amp.shape[0]
    c1, c2 = center
    w1, w2 = width

    def bump(t, tau):
        return np.exp(-(((t - c1) / w1) ** 2) - ((tau - c2) / w2) ** 2)

    def sampler(t, tau):
        return bump(t, tau)[..., None, None] * amp

    def d_t(t, tau):
        return (-2.0 * (t - c1) / w1**2 * bump(t, tau))[..., None, None] * amp

    def d_tau(t, tau):
        return (-2.0 * (tau - c2) / w2**2 * bump(t, tau))[..., None, None] * amp

    return SuspendedFamily(
        sampler,
        n,
        arity=2,
        decay_order=-8.0,
        derivatives={0: d_t, 1: d_tau},
        at_infinity=np.zeros((n, n), dtype=complex),
    )


def gaussian_bump1(
    amplitude: np.ndarray, center: float = 0.0, width: float = 1.0
) -> SuspendedFamily:
    amp = np.asarray(amplitude, dtype=complex)
    n = amp.shape[0]

    def sampler(t):
        return np.exp(-(((t - center) / width) ** 2))[..., None, None] * amp

    def d_t(t):
        bump = np.exp(-(((t - center) / width) ** 2))
        return (-2.0 * (t - center) / width**2 * bump)[..., None, None] * amp

    return SuspendedFamily(
        sampler,
        n,
        arity=1,
        decay_order=-8.0,
        derivatives={0: d_t},
        at_infinity=np.zeros((n, n), dtype=complex),
    )


# ---------------------------------------------------------------------------
# Cayley phase families (the winding generators)
# ---------------------------------------------------------------------------

def cayley_scalar(t: np.ndarray, power: int = 1) -> np.ndarray:
    return ((t - 1j) / (t + 1j)) ** power


def cayley_family(projector: np.ndarray, power: int = 1) -> SuspendedFamily:
    """Id + (c(t)^power - 1) P with c the Cayley phase; winding ``power``."""
    p = np.asarray(projector, dtype=complex)
    n = p.shape[0]
    eye = np.eye(n, dtype=complex)

    def sampler(t):
        c = cayley_scalar(np.asarray(t, dtype=float), power)
        return eye + (c - 1.0)[..., None, None] * p

    def d_t(t):
        t = np.asarray(t, dtype=float)
        c = cayley_scalar(t, power)
        dc = power * c * 2j / (t**2 + 1.0)
        return dc[..., None, None] * p

    return SuspendedFamily(
        sampler,
        n,
        arity=1,
        decay_order=-1.0,
        derivatives={0: d_t},
        at_infinity=eye,
    )


# ---------------------------------------------------------------------------
# Seeded random star elements
# ---------------------------------------------------------------------------

def _random_matrix(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * m / max(1.0, np.linalg.norm(m, 2))


def _random_packets(
    rng: np.random.Generator, n: int, count: int, scale: float
) -> SuspendedFamily:
    fams = []
    for _ in range(count):
        amp = _random_matrix(rng, n, scale / count)
        center = tuple(rng.uniform(-1.0, 1.0, size=2))
        width = tuple(rng.uniform(0.8, 1.6, size=2))
        fams.append(gaussian_packet2(amp, center, width))
    out = fams[0]
    for f in fams[1:]:
        out = out.add(f)
    return out


def random_star2(
    rng: np.random.Generator, n: int = 2, scale: float = 0.35, packets: int = 2
) -> Star2Element:
    """Random invertible group-type element: Id + Gaussian packets, with a
    Schwartz first-order part."""
    pert = _random_packets(rng, n, packets, scale)
    a0 = identity_family(n, arity=2).add(pert)
    a1 = _random_packets(rng, n, packets, scale)
    return Star2Element(a0=a0, a1=a1)


def random_schwartz_star2(
    rng: np.random.Generator, n: int = 2, scale: float = 0.5, packets: int = 2
) -> Star2Element:
    """Random Schwartz-type element (not a group element): both slots decay."""
    return Star2Element(
        a0=_random_packets(rng, n, packets, scale),
        a1=_random_packets(rng, n, packets, scale),
    )


# ---------------------------------------------------------------------------
# The degree-one map of the three-sphere and its loop form
# ---------------------------------------------------------------------------

def su2_smash_map() -> Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]:
    """Map (s, t, tau) -> SU(2) of degree one.

    (cot(pi s), t, tau) is compactified stereographically onto the unit
    three-sphere, which is then identified with the unitary 2x2 matrices of
    determinant one; both the loop basepoint s = 0 and the point at infinity
    in (t, tau) land on the identity.
    """

    def g(s, t, tau):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        tau = np.asarray(tau, dtype=float)
        # Stereographic image of (cot(pi s), t, tau), cleared of the apparent
        # pole at integer s by multiplying through with sin^2(pi s).
        sn = np.sin(np.pi * s)
        r2 = t**2 + tau**2
        denom = 1.0 + r2 * sn**2
        w1 = np.sin(2.0 * np.pi * s) / denom
        w2 = 2.0 * t * sn**2 / denom
        w3 = 2.0 * tau * sn**2 / denom
        w4 = (1.0 - (2.0 - r2) * sn**2) / denom
        alpha = w4 + 1j * w1
        beta = w2 + 1j * w3
        shape = np.broadcast(alpha, beta).shape
        out = np.empty(shape + (2, 2), dtype=complex)
        alpha = np.broadcast_to(alpha, shape)
        beta = np.broadcast_to(beta, shape)
        out[..., 0, 0] = alpha
        out[..., 0, 1] = -np.conj(beta)
        out[..., 1, 0] = beta
        out[..., 1, 1] = np.conj(alpha)
        return out

    return g


def su2_loop(power: int = 1):
    """The smash map as a based loop of two-parameter families.

    ``power`` composes the loop with itself pointwise; the winding is
    ``power`` times the generator's.
    """
    from .groups import GroupLoop

    g = su2_smash_map()

    def element_at(s: float) -> Star2Element:
        def sampler(t, tau):
            base = g(np.full(np.broadcast(t, tau).shape, s), t, tau)
            out = base
            for _ in range(power - 1):
                out = out @ base
            return out

        fam = SuspendedFamily(
            sampler, 2, arity=2, decay_order=-1.0, at_infinity=np.eye(2, dtype=complex)
        )
        return Star2Element(a0=fam, a1=None)

    return GroupLoop(element_at=element_at)


# ---------------------------------------------------------------------------
# Toeplitz symbols and model operators
# ---------------------------------------------------------------------------

def circle_monomial_op(k: int, q: int = 1) -> ModelCuspOperator:
    """Model operator with pure symbol z^k on the circle."""
    return ModelCuspOperator(
        sym0=CircleSymbol.from_fourier({k: np.eye(q, dtype=complex)}, q)
    )


def random_toeplitz_symbol(
    rng: np.random.Generator,
    q: int = 1,
    band: int = 6,
    decay: float = 2.0,
    scale: float = 0.3,
    hermitian_envelope: bool = False,
) -> CircleSymbol:
    """Id + random band-limited circle symbol with coefficient decay
    ``decay``^-|k| (small decay base = slowly converging truncations)."""
    coeffs: dict[int, np.ndarray] = {0: np.eye(q, dtype=complex)}
    for k in range(1, band + 1):
        w = scale * decay ** (-k)
        m_plus = _random_matrix(rng, q, w)
        m_minus = m_plus.conj().T if hermitian_envelope else _random_matrix(rng, q, w)
        coeffs[k] = m_plus
        coeffs[-k] = m_minus
    return CircleSymbol.from_fourier(coeffs, q)


def random_smoothing_op(
    rng: np.random.Generator,
    q: int = 1,
    band: int = 4,
    rank: int = 2,
    scale: float = 0.25,
    with_jet: bool = True,
) -> ModelCuspOperator:
    """Random invertible model operator: Id + band-limited symbol
    perturbation + finite-rank interior (+ Schwartz jet coefficient)."""
    sym = random_toeplitz_symbol(rng, q=q, band=band, decay=2.0, scale=scale)
    block = _random_matrix(rng, rank * q, scale)
    jet = None
    if with_jet:
        jet_coeffs = {
            k: _random_matrix(rng, q, scale * 0.5 / (1 + abs(k)))
            for k in range(-band, band + 1)
        }
        jet = CircleSymbol.from_fourier(flatten_coeffs(jet_coeffs), q)
    return ModelCuspOperator(
        sym0=sym,
        jet1=jet,
        interior=lambda n, b=block: _embed(b, n, q),
    )


# ---------------------------------------------------------------------------
# Once-suspended model families built from envelope x circle-polynomial data
# ---------------------------------------------------------------------------

class EnvelopeCircleTerm:
    """env(t) * sum_k C_k z(tau)^k with analytic derivatives."""

    def __init__(
        self,
        env: Callable[[np.ndarray], np.ndarray],
        denv: Callable[[np.ndarray], np.ndarray],
        coeffs: dict[int, np.ndarray],
    ):
        self.env = env
        self.denv = denv
        self.coeffs = {int(k): np.asarray(m, dtype=complex) for k, m in coeffs.items()}

    @classmethod
    def gaussian(
        cls,
        coeffs: dict[int, np.ndarray],
        center: float = 0.0,
        width: float = 1.0,
    ) -> "EnvelopeCircleTerm":
        def env(t):
            return np.exp(-(((t - center) / width) ** 2))

        def denv(t):
            return -2.0 * (t - center) / width**2 * env(t)

        return cls(env, denv, coeffs)

    def circle_at(self, t: float, q: int) -> dict[int, np.ndarray]:
        e = complex(self.env(np.asarray(float(t))))
        return {k: e * m for k, m in self.coeffs.items()}


def envelope_circle_family(
    terms: Sequence[EnvelopeCircleTerm], q: int, include_identity: bool = True
) -> SuspendedFamily:
    eye = np.eye(q, dtype=complex)

    def poly(term: EnvelopeCircleTerm, z: np.ndarray) -> np.ndarray:
        out = np.zeros(np.shape(z) + (q, q), dtype=complex)
        for k, m in term.coeffs.items():
            out += (z**k)[..., None, None] * m
        return out

    def dpoly(term: EnvelopeCircleTerm, tau: np.ndarray, z: np.ndarray) -> np.ndarray:
        dz = 2j / (tau + 1j) ** 2
        out = np.zeros(np.shape(z) + (q, q), dtype=complex)
        for k, m in term.coeffs.items():
            if k != 0:
                out += (k * z ** (k - 1) * dz)[..., None, None] * m
        return out

    def sampler(t, tau):
        z = (tau - 1j) / (tau + 1j)
        shape = np.broadcast(t, tau).shape
        out = np.zeros(shape + (q, q), dtype=complex)
        if include_identity:
            out += eye
        for term in terms:
            out += term.env(t)[..., None, None] * poly(term, z)
        return out

    def d_t(t, tau):
        z = (tau - 1j) / (tau + 1j)
        shape = np.broadcast(t, tau).shape
        out = np.zeros(shape + (q, q), dtype=complex)
        for term in terms:
            out += term.denv(t)[..., None, None] * poly(term, z)
        return out

    def d_tau(t, tau):
        tau = np.asarray(tau, dtype=complex)
        z = (tau - 1j) / (tau + 1j)
        shape = np.broadcast(t, tau).shape
        out = np.zeros(shape + (q, q), dtype=complex)
        for term in terms:
            out += term.env(t)[..., None, None] * dpoly(term, tau, z)
        return out

    # Gaussian envelopes vanish at infinity, so only the identity survives.
    at_inf = eye.copy() if include_identity else np.zeros((q, q), dtype=complex)
    return SuspendedFamily(
        sampler,
        q,
        arity=2,
        decay_order=-2.0,
        derivatives={0: d_t, 1: d_tau},
        at_infinity=at_inf,
    )


def flatten_coeffs(coeffs: dict[int, np.ndarray], order: int = 2) -> dict[int, np.ndarray]:
    """Adjust low modes so the symbol vanishes to ``order`` at z = 1.

    Killing the value and first z-derivative at z = 1 makes the tau-side
    perturbation decay like tau^-2, which keeps every line integral of the
    symbol absolutely convergent.
    """
    out = {k: np.asarray(m, dtype=complex).copy() for k, m in coeffs.items()}
    q = next(iter(out.values())).shape[0]
    zero = np.zeros((q, q), dtype=complex)
    s0 = sum(out.values(), zero)
    out[0] = out.get(0, zero) - s0
    if order >= 2:
        s1 = sum((k * m for k, m in out.items()), zero)
        out[1] = out.get(1, zero) - s1
        out[0] = out[0] + s1
    return out


def _random_terms(
    rng: np.random.Generator, q: int, count: int, band: int, scale: float
) -> list[EnvelopeCircleTerm]:
    terms = []
    for _ in range(count):
        coeffs = {}
        for k in range(-band, band + 1):
            coeffs[k] = _random_matrix(rng, q, scale / (count * (1.0 + abs(k)) ** 2))
        coeffs = flatten_coeffs(coeffs)
        terms.append(
            EnvelopeCircleTerm.gaussian(
                coeffs,
                center=float(rng.uniform(-0.8, 0.8)),
                width=float(rng.uniform(0.9, 1.5)),
            )
        )
    return terms


def random_css_group_family(
    rng: np.random.Generator,
    q: int = 1,
    band: int = 3,
    scale: float = 0.3,
    rank: int = 1,
    with_jet: bool = True,
    with_eps: bool = True,
) -> CuspSuspendedFamily:
    """Random invertible element of the model group of once-suspended
    smoothing perturbations, with nontrivial jet and eps*x data."""
    terms = _random_terms(rng, q, 2, band, scale)
    sym0 = envelope_circle_family(terms, q, include_identity=True)

    jet_terms = _random_terms(rng, q, 1, band, 0.4 * scale) if with_jet else []
    jet1 = envelope_circle_family(jet_terms, q, include_identity=False) if with_jet else None

    eps_terms = _random_terms(rng, q, 1, band, 0.4 * scale) if with_eps else []
    eps_sym = (
        envelope_circle_family(eps_terms, q, include_identity=False) if with_eps else None
    )

    block = _random_matrix(rng, rank * q, scale * 0.6)
    env_center = float(rng.uniform(-0.5, 0.5))

    def interior_at(t: float, n: int) -> np.ndarray:
        w = np.exp(-((t - env_center) ** 2))
        return w * _embed(block, n, q)

    def circle0_at(t: float) -> CircleSymbol:
        coeffs: dict[int, np.ndarray] = {0: np.eye(q, dtype=complex)}
        for term in terms:
            for k, m in term.circle_at(t, q).items():
                coeffs[k] = coeffs.get(k, 0) + m
        return CircleSymbol.from_fourier(coeffs, q)

    def circle_jet_at(t: float) -> CircleSymbol:
        coeffs = {}
        for term in jet_terms:
            for k, m in term.circle_at(t, q).items():
                coeffs[k] = coeffs.get(k, 0) + m
        if not coeffs:
            coeffs = {0: np.zeros((q, q), dtype=complex)}
        return CircleSymbol.from_fourier(coeffs, q)

    return CuspSuspendedFamily(
        sym0=sym0,
        jet1=jet1,
        eps_sym=eps_sym,
        interior_at=interior_at,
        order=(-1.0, -1.0),
        circle0_at=circle0_at,
        circle_jet_at=circle_jet_at if with_jet else None,
    )


def random_gauge(
    rng: np.random.Generator, q: int = 2, scale: float = 0.3, with_eps: bool = True
) -> TildeElement:
    """Random Schwartz gauge in the tilde group model."""
    pert = _random_packets(rng, q, 2, scale)
    a0 = identity_family(q, arity=2).add(pert)
    a1 = _random_packets(rng, q, 2, scale) if with_eps else None
    return TildeElement(a0=a0, e=None, a1=a1)
