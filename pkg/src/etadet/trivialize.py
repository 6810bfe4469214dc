"""The trivialization experiment: a block family over a base circle, the
determinant cocycle of its boundary family, and the exponentiated eta
invariant as a global nonvanishing section, with the winding bookkeeping
that makes the cancellation exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cuspmodel import CuspSuspendedFamily, compose_css
from .eta import DiracModel, GaugedDiracFamily, dirac_build, eta_gauged_dirac
from .families import SuspendedFamily, identity_family
from .models import gaussian_packet2
from .numerics import winding_number
from .star import itilde
from .susdet import straight_star2_path, sus_det

__all__ = [
    "FamilyOverBase",
    "SectionSearchReport",
    "suspended_ratio",
    "ratio_gauge",
    "build_sections",
    "tau_section",
    "equivariance_check",
    "winding_cancellation",
    "periodicity_compare",
    "transition_dets",
]


# ---------------------------------------------------------------------------
# Suspended transition elements associated to boundary matrices
# ---------------------------------------------------------------------------

def suspended_ratio(m0: np.ndarray, m1: np.ndarray) -> SuspendedFamily:
    """E(m0)^{-1} E(m1): the group element carrying the clutching data of the
    boundary family into the two-parameter suspension."""
    d0 = DiracModel(m=m0)
    d1 = DiracModel(m=m1)
    return d0.indicial_family().inv().matmul(d1.indicial_family())


def ratio_gauge(
    m0: np.ndarray,
    m1: np.ndarray,
    interior_block: np.ndarray | None = None,
) -> CuspSuspendedFamily:
    """The ratio element as a gauge: symbol-rate decay, optional finite-rank
    interior (the interior does not change the boundary lift)."""
    fam = suspended_ratio(m0, m1)
    fam.decay_order = -1.0
    interior_at = None
    if interior_block is not None:
        block = np.asarray(interior_block, dtype=complex)
        q = fam.size

        def interior_at(t: float, n: int) -> np.ndarray:
            from .cuspmodel import _embed

            return np.exp(-float(t) ** 2) * _embed(block, n, q)

    return CuspSuspendedFamily(sym0=fam, order=(-1.0, -1.0), interior_at=interior_at)


def _gauge_margin(
    gauge: CuspSuspendedFamily, probes=(0.0, 0.25, 0.5, 1.0), sizes=(32, 64)
) -> float:
    """Worst true-mode margin of the gauge realizations over t-probes.

    Far-corner phantom modes of the finite sections (reflected-symbol
    defects) are excluded: they are truncation artifacts that the inversion
    routine lifts by aligned corrections."""
    from .cuspmodel import split_margin

    worst = np.inf
    for t in probes:
        op = gauge.op_at(float(t))
        for n in sizes:
            margin, _ = split_margin(op.realize(n))
            worst = min(worst, margin)
    return worst


def repaired_ratio_gauge(
    m0: np.ndarray,
    m1: np.ndarray,
    rng: np.random.Generator,
    margin: float = 0.12,
    attempts: int = 24,
) -> CuspSuspendedFamily:
    """Ratio gauge with an invertible model realization.

    The symbol of the ratio is invertible pointwise, but along the loop its
    quantization can cross a partial-index stratum where no perturbation-free
    realization is invertible.  A seeded random search over finite-rank
    corner blocks repairs the operator; the boundary lift, and with it every
    transition determinant, is untouched.
    """
    raw = ratio_gauge(m0, m1)
    if _gauge_margin(raw) >= margin:
        return raw
    q = raw.size
    best = None
    best_margin = 0.0
    for _ in range(attempts):
        block = rng.standard_normal((2 * q, 2 * q)) + 1j * rng.standard_normal((2 * q, 2 * q))
        block *= 0.8 / np.linalg.norm(block, 2)
        cand = ratio_gauge(m0, m1, interior_block=block)
        got = _gauge_margin(cand)
        if got >= margin:
            return cand
        if got > best_margin:
            best, best_margin = cand, got
    if best is not None and best_margin > 0.5 * margin:
        return best
    raise RuntimeError("no invertible interior repair found within the budget")


def transition_dets(
    m_of: Callable[[float], np.ndarray],
    params: Sequence[float],
    path_nodes: int = 24,
    grid_nodes: int = 64,
) -> np.ndarray:
    """Determinants of the suspended ratio elements along a parameter loop.

    Each determinant is integrated along the homotopy path s -> ratio(m(0),
    m(s b)), which stays in the group because the block family is invertible
    for every boundary matrix.
    """
    m0 = np.atleast_2d(np.asarray(m_of(0.0), dtype=complex))
    out = []
    for b in params:
        def path(s: float):
            from .star import Star2Element

            fam = suspended_ratio(m0, np.atleast_2d(np.asarray(m_of(s * b), dtype=complex)))
            return Star2Element(a0=fam, a1=None)

        out.append(sus_det(path, None, path_nodes=path_nodes, grid_nodes=grid_nodes))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# Families over a base circle and their sections
# ---------------------------------------------------------------------------

@dataclass
class FamilyOverBase:
    """Block family over a discretized base circle with per-patch sections.

    A section assigns to each base angle a gauge (None is the unperturbed
    family, valid when the boundary matrix is invertible there)."""

    base: np.ndarray
    dirac_at: Callable[[float], DiracModel]
    sections: dict[str, Callable[[float], CuspSuspendedFamily | None]] = field(
        default_factory=dict
    )

    def gauged(self, b: float, patch: str) -> GaugedDiracFamily:
        gauge = self.sections[patch](b)
        return GaugedDiracFamily(dirac=self.dirac_at(b), gauge=gauge)


@dataclass
class SectionSearchReport:
    ranks: list[int]
    global_candidate: bool
    failures: list[float]


def _symbol_margin(fam: SuspendedFamily, grid: np.ndarray) -> float:
    vals = fam.sample_grid(grid, grid)
    sv = np.linalg.svd(vals, compute_uv=False)[..., -1]
    return float(np.min(sv))


def build_sections(
    family: FamilyOverBase,
    rng: np.random.Generator,
    patch: str = "one",
    margin: float = 1e-3,
    max_rank: int = 8,
    attempts: int = 12,
) -> SectionSearchReport:
    """Find an invertible perturbation at every base point.

    The unperturbed family is kept where it is already invertible; otherwise
    Gaussian-packet perturbations of increasing rank are drawn (seeded) until
    the symbol stays invertible on the sweep grid.  The same candidate is
    reused across base points when possible, which records a global section.
    """
    grid = np.linspace(-6.0, 6.0, 25)
    ranks: list[int] = []
    failures: list[float] = []
    gauges: dict[float, CuspSuspendedFamily | None] = {}
    shared: list[tuple[np.ndarray, tuple, tuple]] = []
    global_candidate = True

    for b in family.base:
        dm = family.dirac_at(float(b))
        ehat = dm.indicial_family()
        if _symbol_margin(ehat, grid) > margin:
            gauges[float(b)] = None
            ranks.append(0)
            continue

        rhat = ehat.inv()
        found = None
        for rank in range(1, max_rank + 1):
            candidates = list(shared)
            for _ in range(attempts):
                amp = rng.standard_normal((dm.size, dm.size)) + 1j * rng.standard_normal(
                    (dm.size, dm.size)
                )
                amp *= 0.8 / np.linalg.norm(amp, 2)
                u, s, vh = np.linalg.svd(amp)
                amp = (u[:, :rank] * s[:rank]) @ vh[:rank]
                center = (float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.5, 0.5)))
                width = (1.0, 1.0)
                candidates.append((amp, center, width))
            for amp, center, width in candidates:
                pert = gaussian_packet2(amp, center, width)
                if _symbol_margin(ehat.add(pert), grid) > margin:
                    found = (amp, center, width)
                    break
            if found is not None:
                break
        if found is None:
            failures.append(float(b))
            gauges[float(b)] = None
            ranks.append(-1)
            continue
        if found not in shared:
            if shared:
                global_candidate = False
            shared.append(found)
        amp, center, width = found
        pert = gaussian_packet2(amp, center, width)
        gauge_sym = identity_family(dm.size, arity=2).add(rhat.matmul(pert))
        gauges[float(b)] = CuspSuspendedFamily(sym0=gauge_sym, order=(-1.0, -1.0))
        ranks.append(int(np.linalg.matrix_rank(amp, tol=1e-8)))

    family.sections[patch] = lambda b: gauges[float(b)]
    return SectionSearchReport(
        ranks=ranks, global_candidate=global_candidate, failures=failures
    )


def tau_section(
    family: FamilyOverBase,
    patch: str = "one",
    slow_gauge: bool = False,
    **eta_kwargs,
) -> np.ndarray:
    """tau(b) = exp(i pi eta) of the chosen section at every base point."""
    vals = []
    for b in family.base:
        fam = family.gauged(float(b), patch)
        eta_val = eta_gauged_dirac(fam, slow_gauge=slow_gauge, **eta_kwargs)
        vals.append(np.exp(1j * np.pi * eta_val))
    return np.asarray(vals)


def equivariance_check(
    family: FamilyOverBase,
    gauges: Sequence[CuspSuspendedFamily],
    base_points: Sequence[float],
    patch: str = "one",
    path_nodes: int = 24,
    grid_nodes: int = 64,
    **eta_kwargs,
) -> float:
    """Max relative deviation of tau(A g) / tau(A) from det(g).

    Gauges are distributed cyclically over the base points."""
    worst = 0.0
    for j, gauge in enumerate(gauges):
        b = float(base_points[j % len(base_points)])
        section = family.sections[patch](b)
        base_fam = GaugedDiracFamily(dirac=family.dirac_at(b), gauge=section)
        tau_base = np.exp(1j * np.pi * eta_gauged_dirac(base_fam, **eta_kwargs))
        combined = gauge if section is None else compose_css(section, gauge)
        gauged_fam = GaugedDiracFamily(dirac=family.dirac_at(b), gauge=combined)
        tau_gauged = np.exp(1j * np.pi * eta_gauged_dirac(gauged_fam, **eta_kwargs))
        lift = itilde(gauge)
        path, tang = straight_star2_path(lift.as_star2())
        det_g = sus_det(path, tang, path_nodes=path_nodes, grid_nodes=grid_nodes)
        dev = abs(tau_gauged / tau_base - det_g) / abs(det_g)
        worst = max(worst, float(dev))
    return worst


@dataclass(frozen=True)
class WindingCancellation:
    tau_plain: np.ndarray
    tau_gauged: np.ndarray
    transition: np.ndarray
    winding_plain: int
    winding_gauged: int
    winding_transition: int
    pointwise_defect: float

    @property
    def cancels(self) -> bool:
        return self.winding_gauged - self.winding_plain == self.winding_transition


def winding_cancellation(
    m_of: Callable[[float], np.ndarray],
    base: np.ndarray,
    t_nodes: int = 24,
    trunc: int = 32,
    tau_nodes: int = 64,
    check_points: int = 4,
    seed: int = 1,
) -> WindingCancellation:
    """Compare the winding of the exponentiated eta along two section
    choices with the winding of the connecting transition determinants.

    The second section is the first composed with the suspended-ratio gauge
    (interior-repaired where its realization degenerates); the difference of
    the tau windings must cancel the transition winding exactly, which is
    the degree-one content of the trivialization."""
    rng = np.random.default_rng(seed)
    m0 = np.atleast_2d(np.asarray(m_of(0.0), dtype=complex))
    tau_plain = []
    tau_gauged = []
    for b in base:
        dm = dirac_build(m_of(float(b)))
        plain = GaugedDiracFamily(dirac=dm, gauge=None)
        tau_plain.append(np.exp(1j * np.pi * eta_gauged_dirac(plain)))
        gauge = repaired_ratio_gauge(
            m0, np.atleast_2d(np.asarray(m_of(float(b)), dtype=complex)), rng
        )
        gauged = GaugedDiracFamily(dirac=dm, gauge=gauge)
        eta_val = eta_gauged_dirac(
            gauged,
            t_nodes=t_nodes,
            trunc=trunc,
            tau_nodes=tau_nodes,
            slow_gauge=True,
            fit_kwargs={"fit_count": 12, "u_step": 0.01, "tau_nodes": 96},
        )
        tau_gauged.append(np.exp(1j * np.pi * eta_val))
    tau_plain = np.asarray(tau_plain)
    tau_gauged = np.asarray(tau_gauged)
    trans = transition_dets(m_of, base)

    # pointwise: tau_gauged = tau_plain * det(transition)
    sel = np.linspace(0, len(base) - 1, check_points, dtype=int)
    defect = float(
        np.max(np.abs(tau_gauged[sel] / (tau_plain[sel] * trans[sel]) - 1.0))
    )
    return WindingCancellation(
        tau_plain=tau_plain,
        tau_gauged=tau_gauged,
        transition=trans,
        winding_plain=winding_number(tau_plain),
        winding_gauged=winding_number(tau_gauged),
        winding_transition=winding_number(trans),
        pointwise_defect=defect,
    )


def periodicity_compare(
    m_of: Callable[[float], np.ndarray],
    points: int = 16,
    path_nodes: int = 24,
    grid_nodes: int = 64,
) -> tuple[int, int]:
    """Winding of det(m) against the winding of the suspended-ratio
    determinants over the same loop; the two Chern integers agree.

    The boundary family must be invertible everywhere (vanishing numerical
    index in the model sense), otherwise the comparison is refused."""
    params = 2.0 * np.pi * np.arange(points) / points
    dets_fin = []
    for b in params:
        m = np.atleast_2d(np.asarray(m_of(float(b)), dtype=complex))
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[-1] < 1e-10:
            raise ValueError(f"index obstruction: boundary matrix singular at {b:.4f}")
        dets_fin.append(np.linalg.det(m))
    chern_fin = winding_number(np.asarray(dets_fin))
    trans = transition_dets(m_of, params, path_nodes=path_nodes, grid_nodes=grid_nodes)
    chern_sus = winding_number(trans)
    return chern_fin, chern_sus
