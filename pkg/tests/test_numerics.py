import numpy as np
import pytest

from etadet.numerics import (
    AsymptoticBasis,
    ConditioningError,
    QuadSpec,
    SampledPath,
    SingularPathError,
    asymptotic_fit,
    geometric_grid,
    integrate_form,
    quad,
    winding_number,
)


class TestQuad:
    def test_gaussian_1d(self):
        res = quad(lambda t: np.exp(-(t**2)), QuadSpec(1, 64, -8.0))
        assert abs(res.value - np.sqrt(np.pi)) < 1e-10
        assert res.error < 1e-8

    def test_odd_integrand_vanishes(self):
        res = quad(lambda t: t * np.exp(-(t**2)), QuadSpec(1, 64, -8.0))
        assert abs(res.value) < 1e-13

    def test_gaussian_2d(self):
        res = quad(lambda t, s: np.exp(-(t**2) - s**2), QuadSpec(2, 48, -8.0))
        assert abs(res.value - np.pi) < 1e-10

    def test_gauss_rule_matches(self):
        spec = QuadSpec(1, 64, -8.0, rule="gauss")
        res = quad(lambda t: np.exp(-(t**2)), spec)
        assert abs(res.value - np.sqrt(np.pi)) < 1e-8

    def test_matrix_valued(self):
        def f(t):
            out = np.zeros(np.shape(t) + (2, 2), dtype=complex)
            out[..., 0, 0] = np.exp(-(t**2))
            out[..., 1, 1] = 2.0 * np.exp(-(t**2))
            return out

        res = quad(f, QuadSpec(1, 64, -8.0))
        assert abs(res.value[0, 0] - np.sqrt(np.pi)) < 1e-10
        assert abs(res.value[1, 1] - 2 * np.sqrt(np.pi)) < 1e-10

    def test_linearity(self):
        spec = QuadSpec(1, 64, -8.0)
        f = lambda t: np.exp(-(t**2))
        g = lambda t: 1.0 / (1.0 + t**2) ** 2
        a, b = 2.3 - 0.7j, -1.1 + 0.2j
        lhs = quad(lambda t: a * f(t) + b * g(t), spec).value
        rhs = a * quad(f, spec).value + b * quad(g, spec).value
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(rhs))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            quad(lambda t: np.where(np.abs(t) < 1.0, np.nan, 0.0), QuadSpec(1, 64, -2.0))

    def test_rejects_bad_decay_order(self):
        with pytest.raises(ValueError, match="decay order"):
            QuadSpec(1, 64, -0.5)
        # explicit finite-part instruction allows it
        QuadSpec(1, 64, -0.5, finite_part=True)

    def test_rejects_small_node_count(self):
        with pytest.raises(ValueError):
            QuadSpec(1, 4, -2.0)


class TestAsymptoticFit:
    def test_arctan_finite_part(self):
        t = geometric_grid()
        basis = AsymptoticBasis((0.0, -1.0, -2.0, -3.0, -4.0, -5.0))
        fit = asymptotic_fit(t, 2.0 * np.arctan(t), basis)
        assert abs(fit.finite_part - np.pi) < 1e-5

    def test_exact_polynomial(self):
        t = geometric_grid()
        fit = asymptotic_fit(t, 5.0 + 3.0 * t, AsymptoticBasis((1.0, 0.0), 1))
        assert abs(fit.finite_part - 5.0) < 1e-10

    def test_exact_log_member(self):
        t = geometric_grid()
        fit = asymptotic_fit(t, 7.0 * np.log(t) + 2.0, AsymptoticBasis((0.0,), 0, True))
        assert abs(fit.finite_part - 2.0) < 1e-10
        assert abs(fit.coefficients["log"] - 7.0) < 1e-10

    def test_exact_combination_recovery(self):
        t = geometric_grid()
        vals = 4.2 * t - 1.7 + 0.3 / t - 2.0 / t**3
        fit = asymptotic_fit(t, vals, AsymptoticBasis((1.0, 0.0, -1.0, -2.0, -3.0)))
        assert abs(fit.finite_part + 1.7) < 1e-10 * 1.7
        assert abs(fit.coefficients[1.0] - 4.2) < 1e-10
        assert fit.residual < 1e-12

    def test_near_degenerate_pair_resolved_by_tie_break(self):
        # one colliding pair is dropped and the fit is retried
        t = geometric_grid(count=12)
        basis = AsymptoticBasis((0.0, -1.0, -1.0000000001, -2.0))
        fit = asymptotic_fit(t, 2.0 * np.arctan(t), basis)
        assert abs(fit.finite_part - np.pi) < 1e-3

    def test_degenerate_exponents_rejected(self):
        # two colliding pairs cannot be saved by dropping one column
        t = geometric_grid(count=12)
        eps = 1e-12
        basis = AsymptoticBasis((0.0, -1.0 + eps, -1.0, -1.0 - eps))
        with pytest.raises(ConditioningError, match="exponent"):
            asymptotic_fit(t, 2.0 * np.arctan(t), basis)

    def test_single_constant_column(self):
        basis = AsymptoticBasis((2.0, 0.0), polynomial_degree=2)
        assert basis.exponents().count(0.0) == 1

    def test_increasing_exponents_rejected(self):
        with pytest.raises(ValueError):
            AsymptoticBasis((-1.0, 0.0))


class TestIntegrateForm:
    def test_residue_loop(self):
        path = SampledPath(
            sampler=lambda s: np.array([[np.exp(2j * np.pi * s)]]),
            tangent=lambda s: np.array([[2j * np.pi * np.exp(2j * np.pi * s)]]),
            closed=True,
        )
        form = lambda z, dz: complex(dz[0, 0] / z[0, 0])
        val, delta = integrate_form(path, form, nodes=64)
        assert abs(val - 2j * np.pi) < 1e-10
        assert delta < 1e-4

    def test_constant_path(self):
        path = SampledPath(sampler=lambda s: np.eye(2), tangent=lambda s: np.zeros((2, 2)))
        form = lambda z, dz: complex(np.trace(np.linalg.inv(z) @ dz))
        val, _ = integrate_form(path, form, nodes=16)
        assert abs(val) < 1e-14

    def test_concatenation_additivity(self):
        a = np.diag([1.5, 1.0]).astype(complex)
        b = np.diag([1.0, 0.5 + 1.0j]).astype(complex)
        form = lambda z, dz: complex(np.trace(np.linalg.inv(z) @ dz))

        def seg(start, end):
            return SampledPath(
                sampler=lambda s: (1 - s) * start + s * end,
                tangent=lambda s: end - start,
            )

        v1, _ = integrate_form(seg(np.eye(2), a), form, nodes=64)
        v2, _ = integrate_form(seg(a, a @ b), form, nodes=64)
        full = []
        # concatenated path traversing both halves
        def both(s):
            if s <= 0.5:
                return (1 - 2 * s) * np.eye(2) + 2 * s * a
            return (2 - 2 * s) * a + (2 * s - 1) * (a @ b)

        def both_tan(s):
            if s <= 0.5:
                return 2 * (a - np.eye(2))
            return 2 * (a @ b - a)

        v12, _ = integrate_form(SampledPath(sampler=both, tangent=both_tan), form, nodes=128)
        assert abs(v12 - (v1 + v2)) < 1e-8

    def test_observed_order_at_least_1_8(self):
        path = SampledPath(
            sampler=lambda s: np.array([[2.0 + np.exp(2j * np.pi * s)]]),
            tangent=lambda s: np.array([[2j * np.pi * np.exp(2j * np.pi * s)]]),
            closed=True,
        )
        form = lambda z, dz: complex(dz[0, 0] / z[0, 0])
        exact = 0.0  # no winding around 0
        errs = []
        for nodes in (8, 16, 32):
            val, _ = integrate_form(path, form, nodes=nodes, richardson=False)
            errs.append(abs(val - exact))
        order = np.log2(errs[0] / errs[1])
        assert order > 1.8

    def test_singular_form_reports_parameter(self):
        path = SampledPath(
            sampler=lambda s: np.array([[1.0 - 2.0 * s]]),
            tangent=lambda s: np.array([[-2.0]]),
        )

        def form(z, dz):
            if abs(z[0, 0]) < 1e-2:
                raise np.linalg.LinAlgError("singular")
            return complex(dz[0, 0] / z[0, 0])

        with pytest.raises(SingularPathError, match="at path parameter") as exc:
            integrate_form(path, form, nodes=1024)
        assert abs(exc.value.s - 0.5) < 0.01

    def test_fast_variation_rejected(self):
        vals = [np.eye(2), 3.0 * np.eye(2), 3.1 * np.eye(2)]
        with pytest.raises(ValueError, match="varies too fast"):
            SampledPath.from_values(vals)


class TestWindingNumber:
    def test_simple_loops(self):
        s = np.linspace(0, 1, 64, endpoint=False)
        assert winding_number(np.exp(2j * np.pi * s)) == 1
        assert winding_number(np.exp(-4j * np.pi * s)) == -2
        assert winding_number(2.0 + np.exp(2j * np.pi * s)) == 0

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            winding_number(np.array([1.0, 0.0, -1.0]))
