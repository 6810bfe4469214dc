"""Experiment runner and verification harness.

``etadet run <spec.json>`` executes one experiment described by a JSON spec;
``etadet verify <suite|all>`` runs named check suites mirroring the
acceptance gates; ``etadet list-suites`` enumerates them.  Reports are
emitted as JSON or CSV with a stable layout, and runs are deterministic
given (spec, seed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__

__all__ = ["CheckRecord", "Report", "run_spec", "run_suite", "emit", "main", "SUITES"]

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

_RESOLUTIONS = ("low", "default", "high")


class SpecError(ValueError):
    """Schema violation in an experiment spec."""


@dataclass
class CheckRecord:
    name: str
    ref: str
    computed: complex
    expected: complex
    tolerance: float
    passed: bool

    @classmethod
    def close(
        cls, name: str, ref: str, computed: complex, expected: complex, tol: float,
        relative: bool = False,
    ) -> "CheckRecord":
        scale = max(abs(expected), 1e-30) if relative else 1.0
        ok = abs(computed - expected) <= tol * scale
        return cls(name, ref, complex(computed), complex(expected), tol, bool(ok))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "ref": self.ref,
            "computed": [self.computed.real, self.computed.imag],
            "expected": [self.expected.real, self.expected.imag],
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class Report:
    experiment: str
    records: list[CheckRecord]
    environment: dict
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "experiment": self.experiment,
            "records": [r.to_json() for r in sorted(self.records, key=lambda r: r.name)],
            "environment": self.environment,
            "overall": "pass" if self.passed else "fail",
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["name", "computed_re", "computed_im", "expected_re", "expected_im", "tol", "pass"]
        )
        for r in sorted(self.records, key=lambda r: r.name):
            writer.writerow(
                [
                    r.name,
                    repr(r.computed.real),
                    repr(r.computed.imag),
                    repr(r.expected.real),
                    repr(r.expected.imag),
                    repr(r.tolerance),
                    "true" if r.passed else "false",
                ]
            )
        return buf.getvalue()


def _scale(resolution: str, low: int, default: int, high: int) -> int:
    return {"low": low, "default": default, "high": high}[resolution]


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------

def suite_numerics(seed: int, resolution: str) -> list[CheckRecord]:
    from .numerics import AsymptoticBasis, QuadSpec, asymptotic_fit, geometric_grid, quad

    n = _scale(resolution, 48, 96, 192)
    recs = []
    r = quad(lambda t: np.exp(-(t**2)), QuadSpec(1, n, -8.0))
    recs.append(CheckRecord.close("quad-gaussian-1d", "fipomb2.57", r.value, np.sqrt(np.pi), 1e-10))
    r = quad(lambda t, s: np.exp(-(t**2) - s**2), QuadSpec(2, max(n // 2, 32), -8.0))
    recs.append(CheckRecord.close("quad-gaussian-2d", "fipomb2.59", r.value, np.pi, 1e-10))
    tg = geometric_grid()
    fit = asymptotic_fit(tg, 2.0 * np.arctan(tg), AsymptoticBasis((0.0, -1.0, -2.0, -3.0, -4.0, -5.0)))
    recs.append(CheckRecord.close("fit-arctan-finite-part", "detbundle.9", fit.finite_part, np.pi, 1e-5))
    return recs


def suite_fredholm(seed: int, resolution: str) -> list[CheckRecord]:
    from .groups import fredholm_det

    rng = np.random.default_rng(seed)
    count = _scale(resolution, 5, 20, 40)
    recs = []
    for j in range(count):
        n = int(rng.integers(2, 9))
        k = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        k *= rng.uniform(0.5, 2.0) / np.linalg.norm(k, 2)
        mat = np.eye(n) + k
        d_path = fredholm_det(mat)
        d_direct = np.linalg.det(mat)
        recs.append(
            CheckRecord.close(
                f"fredholm-oracle-{j:02d}", "detb.7", d_path, d_direct, 1e-8, relative=True
            )
        )
    return recs


def suite_winding(seed: int, resolution: str) -> list[CheckRecord]:
    from .groups import odd_index, winding_phi
    from .models import cayley_family, su2_loop

    s_nodes = _scale(resolution, 24, 32, 64)
    grid_nodes = _scale(resolution, 32, 48, 64)
    recs = []
    proj = np.zeros((3, 3))
    proj[0, 0] = 1.0
    for power, expect in ((0, 0), (1, 1), (2, 2), (-1, -1)):
        fam = (
            cayley_family(proj, power=power)
            if power
            else cayley_family(proj, power=1).matmul(cayley_family(proj, power=-1))
        )
        res = odd_index(fam)
        recs.append(
            CheckRecord.close(f"odd-index-{power}", "fipomb2.26", res.raw, expect, 1e-3)
        )
    for power in (1, 2):
        w = winding_phi(su2_loop(power), s_nodes=s_nodes, grid_nodes=grid_nodes)
        recs.append(
            CheckRecord.close(f"loop-winding-{power}", "bour.3", w, power, 1e-3)
        )
    return recs


def suite_chern3(seed: int, resolution: str) -> list[CheckRecord]:
    from .groups import chern3
    from .models import su2_smash_map

    n = _scale(resolution, 32, 48, 64)
    g = su2_smash_map()

    def g_stt(s, tau, t):
        return g(s, t, tau)

    val = chern3(g_stt, grid=(n, n, n), orientation=1)
    return [CheckRecord.close("chern3-degree-one", "tsc.9", val, 1.0, 1e-2)]


def suite_star(seed: int, resolution: str) -> list[CheckRecord]:
    from .models import random_schwartz_star2, random_star2
    from .star import star2_inv, star2_mul

    rng = np.random.default_rng(seed)
    count = _scale(resolution, 5, 20, 40)
    pts = np.linspace(-2.5, 2.5, 5)
    recs = []
    worst_assoc = 0.0
    for _ in range(count):
        x, y, z = (random_schwartz_star2(rng) for _ in range(3))
        lhs = star2_mul(star2_mul(x, y), z)
        rhs = star2_mul(x, star2_mul(y, z))
        d0 = np.max(np.abs(lhs.a0.sample_grid(pts, pts) - rhs.a0.sample_grid(pts, pts)))
        d1 = np.max(np.abs(lhs.a1.sample_grid(pts, pts) - rhs.a1.sample_grid(pts, pts)))
        worst_assoc = max(worst_assoc, float(d0), float(d1))
    recs.append(CheckRecord.close("star-associativity", "detb.10", worst_assoc, 0.0, 1e-9))
    worst_inv = 0.0
    for _ in range(count):
        a = random_star2(rng)
        prod = star2_mul(a, star2_inv(a))
        d0 = np.max(np.abs(prod.a0.sample_grid(pts, pts) - np.eye(a.size)))
        d1 = np.max(np.abs(prod.a1.sample_grid(pts, pts)))
        worst_inv = max(worst_inv, float(d0), float(d1))
    recs.append(CheckRecord.close("star-inverse", "tsc.4a", worst_inv, 0.0, 1e-9))
    return recs


def suite_susdet(seed: int, resolution: str) -> list[CheckRecord]:
    from .families import identity_family
    from .models import gaussian_packet2, random_star2
    from .star import Star2Element, star2_mul
    from .susdet import straight_star2_path, sus_det

    rng = np.random.default_rng(seed)
    count = _scale(resolution, 4, 20, 30)
    path_nodes = _scale(resolution, 16, 32, 48)
    grid_nodes = _scale(resolution, 48, 64, 96)
    recs = []
    e11 = np.zeros((2, 2))
    e11[0, 0] = 1.0
    gauss = Star2Element(a0=identity_family(2, arity=2), a1=gaussian_packet2(e11))
    path, tang = straight_star2_path(gauss)
    val = sus_det(path, tang, path_nodes=path_nodes, grid_nodes=grid_nodes)
    recs.append(
        CheckRecord.close("susdet-gaussian-path", "detb.13", val, np.exp(0.5), 1e-6, relative=True)
    )
    worst = 0.0
    for _ in range(count):
        a = random_star2(rng, scale=0.3)
        b = random_star2(rng, scale=0.3)
        pa, ta = straight_star2_path(a)
        pb, tb = straight_star2_path(b)
        pab, tab = straight_star2_path(star2_mul(a, b))
        da = sus_det(pa, ta, path_nodes=path_nodes, grid_nodes=grid_nodes)
        db = sus_det(pb, tb, path_nodes=path_nodes, grid_nodes=grid_nodes)
        dab = sus_det(pab, tab, path_nodes=path_nodes, grid_nodes=grid_nodes)
        worst = max(worst, abs(dab - da * db) / abs(da * db))
    recs.append(CheckRecord.close("susdet-multiplicative", "detb.11", worst, 0.0, 1e-6))
    return recs


def suite_trace_defect(seed: int, resolution: str) -> list[CheckRecord]:
    from .cuspmodel import ModelCuspOperator, trace_defect
    from .models import circle_monomial_op, random_toeplitz_symbol

    rng = np.random.default_rng(seed)
    n0 = _scale(resolution, 64, 256, 512)
    recs = []
    res = trace_defect(circle_monomial_op(1), circle_monomial_op(-1), n0=2)
    recs.append(CheckRecord.close("defect-monomial-n2", "cusp.18", res.lhs_raw[0], -1.0, 1e-12))
    res = trace_defect(circle_monomial_op(1), circle_monomial_op(-1), n0=n0)
    recs.append(CheckRecord.close("defect-monomial", "cusp.18", res.lhs, res.rhs, 1e-10))
    a = ModelCuspOperator(sym0=random_toeplitz_symbol(rng, band=40, decay=1.08, scale=0.4))
    b = ModelCuspOperator(sym0=random_toeplitz_symbol(rng, band=40, decay=1.08, scale=0.4))
    res = trace_defect(a, b, n0=n0)
    recs.append(
        CheckRecord.close("defect-smooth-symbols", "cusp.18", res.lhs, res.rhs, 1e-3)
    )
    return recs


def suite_ddtr(seed: int, resolution: str) -> list[CheckRecord]:
    from .eta import RationalAtom, ddtr_fit, ddtr_rational

    recs = []
    for lam in (1.0, -1.5):
        sym = ddtr_rational([RationalAtom(pole=1j * lam, coeff=-1j)])
        recs.append(
            CheckRecord.close(
                f"ddtr-symbolic-{lam:+.1f}", "detbundle.10", sym, np.pi * np.sign(lam), 1e-6
            )
        )
        fit = ddtr_fit(lambda t, l=lam: 1.0 / (l + 1j * np.asarray(t)), order=-2.0, p=1)
        recs.append(
            CheckRecord.close(
                f"ddtr-numeric-{lam:+.1f}", "detbundle.10", fit.value, np.pi * np.sign(lam), 1e-3
            )
        )
    f1 = ddtr_fit(lambda t: 1.0 / (1.0 + 1j * np.asarray(t)), order=-2.0, p=1)
    f2 = ddtr_fit(lambda t: 1.0 / (1.0 + 1j * np.asarray(t)), order=-2.0, p=2)
    recs.append(CheckRecord.close("ddtr-p-stability", "detbundle.10", f1.value, f2.value, 1e-6))
    return recs


def suite_eta(seed: int, resolution: str) -> list[CheckRecord]:
    from .eta import (
        SpectralSuspendedFamily,
        SpectrumDescription,
        eta_via_resolvent,
        spectral_eta_oracle,
    )

    rng = np.random.default_rng(seed)
    count = _scale(resolution, 3, 10, 20)
    recs = []
    for j in range(count):
        h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = h + h.conj().T
        fam = SpectralSuspendedFamily.from_hermitian(h)
        sig = float(np.sum(np.sign(np.linalg.eigvalsh(h))))
        recs.append(
            CheckRecord.close(
                f"eta-signature-{j:02d}", "dirac.12",
                eta_via_resolvent(fam.spectrum), sig, 1e-6,
            )
        )
    for a in (0.1, 0.25, 0.4):
        sp = SpectrumDescription(lattice_offsets=(a,))
        r1 = eta_via_resolvent(sp)
        r2 = spectral_eta_oracle(sp)
        recs.append(CheckRecord.close(f"eta-lattice-resolvent-{a}", "dirac.25", r1, 1 - 2 * a, 1e-3))
        recs.append(CheckRecord.close(f"eta-lattice-zeta-{a}", "dirac.6", r2, 1 - 2 * a, 1e-6))
    return recs


def suite_eta_mult(seed: int, resolution: str) -> list[CheckRecord]:
    from .eta import eta_additivity_check
    from .models import random_css_group_family

    rng = np.random.default_rng(seed)
    count = _scale(resolution, 3, 20, 30)
    t_nodes = _scale(resolution, 32, 48, 64)
    worst = 0.0
    for _ in range(count):
        a = random_css_group_family(rng, q=1)
        b = random_css_group_family(rng, q=1)
        lhs, rhs = eta_additivity_check(a, b, t_nodes=t_nodes, trunc=48)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return [CheckRecord.close("eta-log-multiplicative", "detbundle.20", worst, 0.0, 1e-5)]


def suite_lift_det(seed: int, resolution: str) -> list[CheckRecord]:
    from .eta import det_eq_exp_eta
    from .models import random_css_group_family

    rng = np.random.default_rng(seed)
    count = _scale(resolution, 3, 10, 20)
    worst = 0.0
    for _ in range(count):
        fam = random_css_group_family(rng, q=1)
        det_val, exp_val = det_eq_exp_eta(fam, path_nodes=32, grid_nodes=64, t_nodes=48, trunc=48)
        worst = max(worst, abs(det_val - exp_val) / abs(exp_val))
    return [CheckRecord.close("lifted-det-equals-exp-eta", "detmult.24", worst, 0.0, 1e-5)]


def suite_trivialize(seed: int, resolution: str) -> list[CheckRecord]:
    from .trivialize import winding_cancellation

    points = _scale(resolution, 8, 8, 32)
    base = 2.0 * np.pi * np.arange(points) / points
    res = winding_cancellation(lambda b: np.array([[np.exp(1j * b)]]), base, seed=seed)
    recs = [
        CheckRecord.close(
            "tau-nonvanishing", "detbundle.26",
            float(np.min(np.abs(res.tau_gauged))), 1.0, 0.6,
        ),
        CheckRecord.close(
            "tau-winding-cancellation", "detbundle.26",
            res.winding_gauged - res.winding_plain, res.winding_transition, 0.0,
        ),
        CheckRecord.close(
            "tau-equivariance-pointwise", "detbundle.26", res.pointwise_defect, 0.0, 1e-2
        ),
    ]
    return recs


def suite_periodicity(seed: int, resolution: str) -> list[CheckRecord]:
    from .trivialize import periodicity_compare

    points = _scale(resolution, 8, 12, 16)
    recs = []
    cf, cs = periodicity_compare(lambda b: np.array([[1.0 + 0.0j]]), points=8)
    recs.append(CheckRecord.close("periodicity-constant", "28.07.05.1", cs, cf, 0.0))
    cf, cs = periodicity_compare(lambda b: np.array([[np.exp(1j * b)]]), points=points)
    recs.append(CheckRecord.close("periodicity-winding-one", "28.07.05.1", cs, cf, 0.0))
    return recs


SUITES: dict[str, Callable[[int, str], list[CheckRecord]]] = {
    "numerics": suite_numerics,
    "fredholm": suite_fredholm,
    "winding": suite_winding,
    "chern3": suite_chern3,
    "star": suite_star,
    "susdet": suite_susdet,
    "trace-defect": suite_trace_defect,
    "ddtr": suite_ddtr,
    "eta": suite_eta,
    "eta-mult": suite_eta_mult,
    "lift-det": suite_lift_det,
    "trivialize": suite_trivialize,
    "periodicity": suite_periodicity,
}


# ---------------------------------------------------------------------------
# Experiment specs
# ---------------------------------------------------------------------------

def _require(spec: dict, key: str, kinds) -> object:
    if key not in spec:
        raise SpecError(f"missing field {key!r}")
    val = spec[key]
    if not isinstance(val, kinds):
        raise SpecError(f"field {key!r} has wrong type {type(val).__name__}")
    return val


def _parse_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(
            [[complex(c[0], c[1]) if isinstance(c, list) else complex(c) for c in row] for row in data]
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise SpecError(f"bad matrix literal: {exc}") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise SpecError("matrix literal must be square")
    return arr


def run_spec(spec: dict) -> Report:
    kind = _require(spec, "kind", str)
    seed = int(_require(spec, "seed", int))
    resolution = spec.get("resolution", "default")
    if resolution not in _RESOLUTIONS:
        raise SpecError(f"resolution must be one of {_RESOLUTIONS}")
    model = spec.get("model", {})
    if not isinstance(model, dict):
        raise SpecError("model must be an object")

    records: list[CheckRecord]
    if kind == "verify":
        suite = _require(spec, "suite", str)
        return run_suite(suite, seed=seed, resolution=resolution)
    if kind == "eta":
        from .eta import SpectrumDescription, eta_via_resolvent, spectral_eta_oracle

        spec_model = model.get("spectrum")
        if not isinstance(spec_model, dict):
            raise SpecError("eta experiments need model.spectrum")
        sp = SpectrumDescription(
            eigenvalues=tuple(float(x) for x in spec_model.get("eigenvalues", [])),
            lattice_offsets=tuple(float(x) for x in spec_model.get("lattice_offsets", [])),
        )
        expected = spectral_eta_oracle(sp)
        tol = float(spec.get("tolerances", {}).get("eta", 1e-3))
        records = [
            CheckRecord.close("eta-resolvent-route", "dirac.25", eta_via_resolvent(sp), expected, tol)
        ]
    elif kind == "det":
        from .groups import fredholm_det

        mat = _parse_matrix(_require(model, "matrix", list))
        tol = float(spec.get("tolerances", {}).get("det", 1e-8))
        records = [
            CheckRecord.close(
                "fredholm-vs-direct", "detb.7",
                fredholm_det(mat), np.linalg.det(mat), tol, relative=True,
            )
        ]
    elif kind == "winding":
        from .groups import odd_index
        from .models import cayley_family

        power = int(model.get("power", 1))
        proj = np.zeros((2, 2))
        proj[0, 0] = 1.0
        res = odd_index(cayley_family(proj, power=power))
        records = [CheckRecord.close("odd-index", "fipomb2.26", res.raw, power, 1e-3)]
    elif kind == "trace-defect":
        from .models import circle_monomial_op
        from .cuspmodel import trace_defect

        k = int(model.get("monomial", 1))
        res = trace_defect(circle_monomial_op(k), circle_monomial_op(-k), n0=int(model.get("trunc", 64)))
        records = [CheckRecord.close("defect-lhs-vs-rhs", "cusp.18", res.lhs, res.rhs, 1e-8)]
    elif kind == "trivialize":
        records = suite_trivialize(seed, resolution)
    else:
        raise SpecError(f"unknown experiment kind {kind!r}")

    return Report(
        experiment=kind,
        records=records,
        environment=_environment(seed, resolution),
    )


def _environment(seed: int, resolution: str) -> dict:
    return {
        "seed": seed,
        "resolution": resolution,
        "versions": {"etadet": __version__, "numpy": np.__version__},
    }


def run_suite(name: str, seed: int = 0, resolution: str = "default") -> Report:
    if name != "all" and name not in SUITES:
        raise SpecError(f"unknown suite {name!r}; see list-suites")
    names = sorted(SUITES) if name == "all" else [name]
    records: list[CheckRecord] = []
    for n in names:
        records.extend(SUITES[n](seed, resolution))
    return Report(
        experiment=f"verify:{name}",
        records=records,
        environment=_environment(seed, resolution),
    )


def emit(report: Report, out: str | None, fmt: str) -> None:
    if fmt == "json":
        payload = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        payload = report.to_csv()
    else:
        raise SpecError(f"unknown format {fmt!r}")
    if out is None:
        sys.stdout.write(payload)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(payload)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etadet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment spec file")
    run_p.add_argument("spec", help="path to the JSON experiment spec")
    verify_p = sub.add_parser("verify", help="run a named verification suite")
    verify_p.add_argument("suite", help="suite name or 'all'")
    sub.add_parser("list-suites", help="list available verification suites")

    for p in (run_p, verify_p):
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", default="json", choices=("json", "csv"))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--resolution", default=None, choices=_RESOLUTIONS)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list-suites":
            for name in sorted(SUITES):
                print(name)
            return EXIT_PASS
        if args.command == "run":
            try:
                with open(args.spec, "r", encoding="utf-8") as fh:
                    spec = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                print(f"error: cannot read spec: {exc}", file=sys.stderr)
                return EXIT_USAGE
            if not isinstance(spec, dict):
                print("error: spec must be a JSON object", file=sys.stderr)
                return EXIT_USAGE
            if args.seed is not None:
                spec["seed"] = args.seed
            if args.resolution is not None:
                spec["resolution"] = args.resolution
            report = run_spec(spec)
        else:
            report = run_suite(
                args.suite,
                seed=args.seed if args.seed is not None else 0,
                resolution=args.resolution or "default",
            )
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    emit(report, args.out, args.format)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
