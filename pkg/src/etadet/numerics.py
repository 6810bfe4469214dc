"""Shared numerical substrate: quadrature on unbounded domains, asymptotic
fitting with log terms, and line integrals over discretized paths.

All routines are pure functions of their inputs and use a fixed summation
order, so results are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuadSpec",
    "QuadResult",
    "quad",
    "AsymptoticBasis",
    "FitResult",
    "ConditioningError",
    "asymptotic_fit",
    "SampledPath",
    "SingularPathError",
    "integrate_form",
    "winding_number",
]


# ---------------------------------------------------------------------------
# Quadrature over unbounded axes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadSpec:
    """Quadrature rule for integrals over R^dimension.

    Each axis is mapped to (-pi/2, pi/2) by t = tan(theta); the substituted
    integrand is sampled on a uniform midpoint grid (``trapezoid`` rule, which
    for the offset grid amounts to the midpoint rule and converges spectrally
    for integrands smooth on the compactified axis) or on Gauss-Legendre
    panels.

    ``tail_decay_order`` is the decay order of the integrand per axis; it must
    be below -1 for the integral to converge absolutely.
    """

    dimension: int = 1
    node_count: int = 96
    tail_decay_order: float = -2.0
    rule: str = "trapezoid"
    finite_part: bool = False

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.node_count < 8:
            raise ValueError("node_count must be at least 8")
        if self.rule not in ("trapezoid", "gauss"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.tail_decay_order >= -1.0 and not self.finite_part:
            raise ValueError(
                "declared decay order >= -1 per axis; the integral is not "
                "absolutely convergent (pass finite_part=True to override)"
            )


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | complex
    error: float


def _axis_nodes(n: int, rule: str) -> tuple[np.ndarray, np.ndarray]:
    """Nodes t_j and weights w_j for integrating over the real line."""
    if rule == "trapezoid":
        theta = -np.pi / 2 + np.pi * (np.arange(n) + 0.5) / n
        w_theta = np.full(n, np.pi / n)
    else:
        # Composite Gauss-Legendre: 8 panels over (-pi/2, pi/2).
        panels = 8
        order = max(2, n // panels)
        x, w = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(-np.pi / 2, np.pi / 2, panels + 1)
        theta_list = []
        w_list = []
        for a, b in zip(edges[:-1], edges[1:]):
            theta_list.append(0.5 * (b - a) * x + 0.5 * (a + b))
            w_list.append(0.5 * (b - a) * w)
        theta = np.concatenate(theta_list)
        w_theta = np.concatenate(w_list)
    t = np.tan(theta)
    # dt = sec^2(theta) dtheta
    weights = w_theta / np.cos(theta) ** 2
    return t, weights


def _quad_once(f: Callable[..., np.ndarray], spec: QuadSpec, n: int):
    axes = [_axis_nodes(n, spec.rule) for _ in range(spec.dimension)]
    if spec.dimension == 1:
        t, w = axes[0]
        vals = np.asarray(f(t))
        _check_finite(vals)
        return np.einsum("i,i...->...", w, vals)
    if spec.dimension == 2:
        (t, wt), (s, ws) = axes
        vals = np.asarray(f(t[:, None], s[None, :]))
        _check_finite(vals)
        return np.einsum("i,j,ij...->...", wt, ws, vals)
    (t, wt), (s, ws), (u, wu) = axes
    vals = np.asarray(f(t[:, None, None], s[None, :, None], u[None, None, :]))
    _check_finite(vals)
    return np.einsum("i,j,k,ijk...->...", wt, ws, wu, vals)


def _check_finite(vals: np.ndarray) -> None:
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand produced a non-finite sample")


def quad(f: Callable[..., np.ndarray], spec: QuadSpec) -> QuadResult:
    """Integrate ``f`` over R^dimension.

    ``f`` must accept broadcast arrays (one per axis) and return values of a
    fixed trailing shape.  The returned error estimate is the Richardson
    comparison between the requested node count and its double.
    """
    coarse = _quad_once(f, spec, spec.node_count)
    fine = _quad_once(f, spec, 2 * spec.node_count)
    err = float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse))))
    return QuadResult(value=fine, error=err)


# ---------------------------------------------------------------------------
# Asymptotic expansion fitting
# ---------------------------------------------------------------------------

class ConditioningError(ValueError):
    """Raised when the fit design matrix is numerically degenerate."""


@dataclass(frozen=True)
class AsymptoticBasis:
    """Basis t^e for e in power_exponents, t^k for k <= polynomial_degree,
    and optionally log(t).

    Exactly one basis element is the constant t^0; duplicate exponents are
    merged.
    """

    power_exponents: tuple[float, ...]
    polynomial_degree: int = 0
    include_log: bool = False

    def exponents(self) -> list[float]:
        exps = set(float(e) for e in self.power_exponents)
        exps.update(float(k) for k in range(self.polynomial_degree + 1))
        exps.add(0.0)
        out = sorted(exps, reverse=True)
        return out

    def __post_init__(self) -> None:
        exps = list(self.power_exponents)
        if sorted(exps, reverse=True) != exps:
            raise ValueError("power_exponents must be strictly decreasing")
        if len(set(exps)) != len(exps):
            raise ValueError("power_exponents must be distinct")


@dataclass(frozen=True)
class FitResult:
    coefficients: dict
    finite_part: complex
    residual: float
    condition: float


def _design_matrix(t: np.ndarray, exponents: Sequence[float], include_log: bool):
    cols = [t**e for e in exponents]
    labels: list[object] = list(exponents)
    if include_log:
        cols.append(np.log(t))
        labels.append("log")
    return np.stack(cols, axis=1), labels


def _solve_scaled(design: np.ndarray, values: np.ndarray):
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0] = 1.0
    a = design / scale
    cond = np.linalg.cond(a)
    gram = a.conj().T @ a
    rhs = a.conj().T @ values
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        coef, *_ = np.linalg.lstsq(a, values, rcond=None)
    if cond > 1e8:
        # QR fallback for ill-conditioned normal equations.
        q, r = np.linalg.qr(a)
        coef = np.linalg.solve(r, q.conj().T @ values)
    return coef / scale, cond


def asymptotic_fit(
    t: np.ndarray,
    values: np.ndarray,
    basis: AsymptoticBasis,
) -> FitResult:
    """Least-squares fit of samples (t, values) against the asymptotic basis.

    The samples are expected on a geometric grid.  Returns all fitted
    coefficients keyed by exponent (and "log"), with the t^0 coefficient
    exposed as the finite part.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=complex)
    if np.any(t <= 0):
        raise ValueError("fit abscissae must be positive")
    exps = basis.exponents()
    design, labels = _design_matrix(t, exps, basis.include_log)
    coef, cond = _solve_scaled(design, values)
    if cond > 1e12:
        # Tie-break near-degenerate exponents: drop the one whose coefficient
        # carries less weight and refit.
        gaps = np.diff(exps)
        j = int(np.argmax(gaps > -0.15)) if np.any(gaps > -0.15) else -1
        if j >= 0 and exps[j + 1] != 0.0 and exps[j] != 0.0:
            drop = j if abs(coef[j]) < abs(coef[j + 1]) else j + 1
            kept = [e for i, e in enumerate(exps) if i != drop]
            design, labels = _design_matrix(t, kept, basis.include_log)
            coef, cond = _solve_scaled(design, values)
            exps = kept
        if cond > 1e12:
            pair = _closest_pair(exps)
            raise ConditioningError(
                f"fit design matrix is degenerate (condition {cond:.3g}); "
                f"closest exponents {pair[0]} and {pair[1]}"
            )
    fitted = design @ coef
    residual = float(np.linalg.norm(fitted - values) / max(1.0, np.linalg.norm(values)))
    coefficients = dict(zip(labels, coef))
    return FitResult(
        coefficients=coefficients,
        finite_part=complex(coefficients[0.0]),
        residual=residual,
        condition=float(cond),
    )


def _closest_pair(exps: Sequence[float]) -> tuple[float, float]:
    best = (exps[0], exps[1])
    gap = abs(exps[0] - exps[1])
    for a, b in zip(exps[:-1], exps[1:]):
        if abs(a - b) < gap:
            gap = abs(a - b)
            best = (a, b)
    return best


def geometric_grid(t0: float = 4.0, ratio: float = 1.5, count: int = 15) -> np.ndarray:
    """Default abscissae for asymptotic fits."""
    return t0 * ratio ** np.arange(count)


# ---------------------------------------------------------------------------
# Paths and line integrals
# ---------------------------------------------------------------------------

class SingularPathError(RuntimeError):
    def __init__(self, s: float, message: str = "form evaluation failed"):
        super().__init__(f"{message} at path parameter s={s:.6f}")
        self.s = s


@dataclass
class SampledPath:
    """Path s in [0, 1] -> group/algebra elements, given by a sampler.

    ``tangent`` may supply d/ds analytically; otherwise central differences
    with a small step are used.  ``closed`` paths must return to their start.
    """

    sampler: Callable[[float], object]
    closed: bool = False
    refinement_level: int = 0
    tangent: Callable[[float], object] | None = None
    _norm: Callable[[object], float] = field(default=lambda v: float(np.linalg.norm(np.asarray(v))), repr=False)

    @classmethod
    def from_values(cls, values: Sequence[np.ndarray], closed: bool = False) -> "SampledPath":
        values = [np.asarray(v) for v in values]
        if closed and float(np.max(np.abs(values[0] - values[-1]))) > 1e-12:
            raise ValueError("closed path endpoints disagree beyond 1e-12")
        n = len(values) - 1

        def sampler(s: float):
            x = min(max(s, 0.0), 1.0) * n
            k = min(int(np.floor(x)), n - 1)
            w = x - k
            return (1 - w) * values[k] + w * values[k + 1]

        path = cls(sampler=sampler, closed=closed)
        path.check_slow_variation(values)
        return path

    def check_slow_variation(self, values: Sequence[np.ndarray]) -> None:
        for k in range(len(values) - 1):
            step = self._norm(values[k + 1] - values[k])
            ref = self._norm(values[k])
            if ref > 0 and step >= 0.5 * ref:
                raise ValueError(
                    f"path varies too fast between nodes {k} and {k + 1}: "
                    f"step {step:.3g} vs reference {ref:.3g}"
                )

    def velocity(self, s: float, h: float = 1e-6) -> object:
        if self.tangent is not None:
            return self.tangent(s)
        lo, hi = s - h, s + h
        if lo < 0.0:
            lo, hi = s, s + h
        if hi > 1.0:
            lo, hi = s - h, s
        a = np.asarray(self.sampler(lo))
        b = np.asarray(self.sampler(hi))
        return (b - a) / (hi - lo)


def _midpoint_pass(path: SampledPath, form, nodes: int) -> complex:
    total = 0.0 + 0.0j
    h = 1.0 / nodes
    for k in range(nodes):
        s = (k + 0.5) * h
        point = path.sampler(s)
        vel = path.velocity(s)
        try:
            total += form(point, vel) * h
        except np.linalg.LinAlgError as exc:
            raise SingularPathError(s, str(exc)) from exc
    return total


def integrate_form(
    path: SampledPath,
    form: Callable[[object, object], complex],
    nodes: int = 64,
    richardson: bool = True,
) -> tuple[complex, float]:
    """Second-order midpoint line integral of ``form`` along ``path``.

    ``form(point, tangent)`` must be linear in the tangent.  Returns the
    integral together with the change produced by halving the step; with
    ``richardson`` the two passes are extrapolated.
    """
    coarse = _midpoint_pass(path, form, nodes)
    fine = _midpoint_pass(path, form, 2 * nodes)
    delta = abs(fine - coarse)
    if richardson:
        return (4.0 * fine - coarse) / 3.0, delta
    return fine, delta


def winding_number(values: Sequence[complex]) -> int:
    """Winding of a discretely sampled loop in C*.

    The loop must be sampled densely enough that consecutive ratios stay in
    the right half plane of 1.
    """
    vals = np.asarray(list(values) + [values[0]], dtype=complex)
    if np.any(np.abs(vals) == 0):
        raise ValueError("winding undefined: loop passes through 0")
    ratios = vals[1:] / vals[:-1]
    total = np.sum(np.log(ratios))
    w = total / (2j * np.pi)
    w_int = int(np.round(w.real))
    if abs(w - w_int) > 1e-6:
        raise ValueError(f"winding {w} is not an integer; refine the loop sampling")
    return w_int
