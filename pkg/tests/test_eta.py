import numpy as np
import pytest

from etadet.cuspmodel import compose_css, css_inverse
from etadet.eta import (
    DiracModel,
    GaugedDiracFamily,
    RationalAtom,
    SpectralSuspendedFamily,
    SpectrumDescription,
    ddtr_direct,
    ddtr_fit,
    ddtr_rational,
    ddtr_step_asymptote,
    det_eq_exp_eta,
    dirac_build,
    eta_additivity_check,
    eta_cusp,
    eta_gauged_dirac,
    eta_smoothing,
    eta_via_resolvent,
    rds_tr_direct,
    rds_tr_fit,
    spectral_eta_oracle,
    sus_trace_defect,
)
from etadet.models import random_css_group_family


class TestDdtr:
    def test_rational_atoms(self):
        assert abs(ddtr_rational([RationalAtom(1j, -1j)]) - np.pi) < 1e-14
        assert abs(ddtr_rational([RationalAtom(-2j, -1j)]) + np.pi) < 1e-14
        # higher powers contribute nothing
        assert ddtr_rational([RationalAtom(1j, 1.0, power=2)]) == 0.0

    def test_real_pole_rejected(self):
        with pytest.raises(ValueError):
            ddtr_rational([RationalAtom(1.0, 1.0)])

    def test_trace_class_reduces_to_integral(self):
        val = ddtr_direct(lambda t: np.exp(-(t**2)))
        assert abs(val - np.sqrt(np.pi)) < 1e-10

    def test_odd_family_vanishes(self):
        assert abs(ddtr_direct(lambda t: t * np.exp(-(t**2)))) < 1e-12

    def test_resolvent_numeric_path(self):
        for lam in (1.0, -1.5):
            fit = ddtr_fit(lambda t, l=lam: 1.0 / (l + 1j * np.asarray(t)), order=-2.0, p=1)
            assert abs(fit.value - np.pi * np.sign(lam)) < 1e-3
            assert fit.fit.residual < 1e-6

    def test_p_stability(self):
        h = lambda t: 1.0 / (1.0 + 1j * np.asarray(t))
        vals = [ddtr_fit(h, order=-2.0, p=p).value for p in (1, 2)]
        assert abs(vals[0] - vals[1]) < 1e-6

    def test_step_asymptote_route(self):
        # h = pi cot(pi (a + it)) has limits -+ i pi; eta = 1 - 2a
        a = 0.25
        sp = SpectrumDescription(lattice_offsets=(a,))
        val = ddtr_step_asymptote(sp.resolvent_trace, -1j * np.pi, 1j * np.pi)
        assert abs(val / np.pi - (1 - 2 * a)) < 1e-6


class TestRdsTr:
    def test_schwartz_reduces_to_double_integral(self):
        val = rds_tr_direct(lambda t, tau: np.exp(-(t**2) - tau**2))
        assert abs(val - np.pi) < 1e-10

    def test_tau_derivative_annihilated(self):
        val = rds_tr_direct(lambda t, tau: -2 * tau * np.exp(-(t**2) - tau**2))
        assert abs(val) < 1e-8

    def test_commutators_annihilated(self, rng):
        b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))

        def integrand(t, tau):
            env = np.exp(-(t**2) - tau**2)[..., None, None]
            bb = env * b
            cc = (1.0 / (1.0 + t**2 + tau**2))[..., None, None] * c
            comm = bb @ cc - cc @ bb
            return np.trace(comm, axis1=-2, axis2=-1)

        assert abs(rds_tr_direct(integrand)) < 1e-8

    def test_fit_path_on_slow_decay(self):
        # integrand ~ 1/(t^2+tau^2+1)^(3/2): tau-integral ~ 2/(1+t^2):
        # finite part is the full integral 2 pi
        def integrand(t, tau):
            return (1.0 + t**2 + tau**2) ** -1.5

        val = rds_tr_fit(integrand, order=-2.0, p=1).value
        assert abs(val - 2 * np.pi) < 1e-4


class TestSpectralOracles:
    def test_signature_finite(self):
        sp = SpectrumDescription(eigenvalues=(3.0, -1.0, 2.0))
        assert abs(eta_via_resolvent(sp) - 1.0) < 1e-12
        assert abs(spectral_eta_oracle(sp) - 1.0) < 1e-12

    def test_symmetric_spectrum(self):
        sp = SpectrumDescription(eigenvalues=tuple(range(1, 6)) + tuple(range(-5, 0)))
        assert abs(eta_via_resolvent(sp)) < 1e-12

    def test_single_eigenvalue(self):
        assert abs(spectral_eta_oracle(SpectrumDescription(eigenvalues=(-4.0,))) + 1.0) < 1e-12

    def test_lattice_three_routes_agree(self):
        for a in (0.1, 0.25, 0.4):
            sp = SpectrumDescription(lattice_offsets=(a,))
            expect = 1.0 - 2.0 * a
            v_zeta = spectral_eta_oracle(sp)
            v_res = eta_via_resolvent(sp)
            fam = SpectralSuspendedFamily(sp)
            v_cusp = eta_cusp(fam)
            assert abs(v_zeta - expect) < 1e-9
            assert abs(v_res - expect) < 1e-3
            assert abs(v_cusp - expect) < 1e-3
            assert abs(v_res - v_zeta) < 1e-3 and abs(v_cusp - v_zeta) < 1e-3

    def test_zero_mode_rejected(self):
        with pytest.raises(ValueError):
            SpectrumDescription(eigenvalues=(0.0,))
        with pytest.raises(ValueError):
            SpectrumDescription(lattice_offsets=(1.0,))

    def test_hermitian_signature(self, rng):
        for _ in range(4):
            h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            h = h + h.conj().T
            fam = SpectralSuspendedFamily.from_hermitian(h)
            sig = float(np.sum(np.sign(np.linalg.eigvalsh(h))))
            assert abs(eta_cusp(fam) - sig) < 1e-6

    def test_scalar_resolvent_pairs_add(self):
        a = SpectralSuspendedFamily(SpectrumDescription(eigenvalues=(2.0,)))
        b = SpectralSuspendedFamily(SpectrumDescription(eigenvalues=(-0.7,)))
        lhs, rhs = eta_additivity_check(a, b)
        assert abs(lhs - rhs) < 1e-12
        assert abs(lhs - 0.0) < 1e-12


class TestEtaSmoothing:
    def test_identity_family_is_zero(self):
        from etadet.cuspmodel import CuspSuspendedFamily
        from etadet.families import identity_family

        fam = CuspSuspendedFamily(sym0=identity_family(1, arity=2))
        assert eta_smoothing(fam, t_nodes=16, trunc=16) == 0.0

    def test_log_multiplicative(self, rng):
        worst = 0.0
        for _ in range(3):
            a = random_css_group_family(rng, q=1)
            b = random_css_group_family(rng, q=1)
            lhs, rhs = eta_additivity_check(a, b, t_nodes=48, trunc=48)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        assert worst < 1e-5

    def test_inverse_negates(self, rng):
        fam = random_css_group_family(rng, q=1)
        inv = css_inverse(fam)
        ea = eta_smoothing(fam, t_nodes=48, trunc=48)
        eb = eta_smoothing(inv, t_nodes=48, trunc=48)
        assert abs(ea + eb) < 1e-5

    def test_residual_eta_is_twice_index(self, rng):
        # interior-only loop: eta = 2 * winding of the finite determinant
        from etadet.cuspmodel import CuspSuspendedFamily, _embed
        from etadet.families import identity_family

        def interior_at(t, n):
            c = ((t - 1j) / (t + 1j)) - 1.0
            block = np.array([[c]], dtype=complex)
            return _embed(block, n, 1)

        fam = CuspSuspendedFamily(
            sym0=identity_family(1, arity=2), interior_at=interior_at
        )
        val = eta_smoothing(fam, t_nodes=96, trunc=16)
        assert abs(val - 2.0) < 1e-3


class TestLiftedDeterminant:
    def test_det_equals_exp_eta(self, rng):
        worst = 0.0
        for _ in range(3):
            fam = random_css_group_family(rng, q=1)
            det_val, exp_val = det_eq_exp_eta(fam, path_nodes=32, grid_nodes=64, t_nodes=48, trunc=48)
            worst = max(worst, abs(det_val - exp_val) / abs(exp_val))
        assert worst < 1e-5

    def test_gaussian_eps_family(self):
        # A = Id + eps x (Gaussian): both sides are exp(i pi mu)-type values
        from etadet.cuspmodel import CuspSuspendedFamily
        from etadet.families import identity_family
        from etadet.models import EnvelopeCircleTerm, envelope_circle_family, flatten_coeffs

        coeffs = flatten_coeffs({2: 0.4 * np.eye(1), -1: 0.2 * np.eye(1)})
        term = EnvelopeCircleTerm.gaussian(coeffs)
        fam = CuspSuspendedFamily(
            sym0=identity_family(1, arity=2),
            eps_sym=envelope_circle_family([term], 1, include_identity=False),
        )
        det_val, exp_val = det_eq_exp_eta(fam, path_nodes=24, grid_nodes=64, t_nodes=24, trunc=24)
        assert abs(det_val - exp_val) / abs(exp_val) < 1e-6

    def test_kernel_subgroup_has_half_integer_eta(self, rng):
        # elements with trivial boundary lift: half eta is an integer
        from etadet.cuspmodel import CuspSuspendedFamily, _embed
        from etadet.families import identity_family

        block = 0.4 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))

        def interior_at(t, n):
            return np.exp(-(t**2)) * _embed(block, n, 1)

        fam = CuspSuspendedFamily(sym0=identity_family(1, arity=2), interior_at=interior_at)
        val = eta_smoothing(fam, t_nodes=96, trunc=16)
        assert abs(0.5 * val - round((0.5 * val).real)) < 1e-5

    def test_gauge_shift_by_kernel_element_invisible(self, rng):
        # composing with an interior-only element leaves det and exp(i pi eta)
        # equal (both shift by the same unit factor)
        fam = random_css_group_family(rng, q=1)
        from etadet.cuspmodel import CuspSuspendedFamily, _embed, compose_css
        from etadet.families import identity_family

        block = 0.3 * (rng.standard_normal((1, 1)) + 1j * rng.standard_normal((1, 1)))
        kernel = CuspSuspendedFamily(
            sym0=identity_family(1, arity=2),
            interior_at=lambda t, n: np.exp(-(t**2)) * _embed(block, n, 1),
        )
        shifted = compose_css(fam, kernel)
        d1, e1 = det_eq_exp_eta(fam, path_nodes=32, grid_nodes=64, t_nodes=48, trunc=48)
        d2, e2 = det_eq_exp_eta(shifted, path_nodes=32, grid_nodes=64, t_nodes=48, trunc=48)
        assert abs(d2 - e2) / abs(e2) < 1e-5
        assert abs(d1 - d2) / abs(d1) < 1e-5


class TestSusTraceDefect:
    def test_finite_rank_interiors_vanish(self, rng):
        from etadet.cuspmodel import CuspSuspendedFamily, _embed
        from etadet.families import identity_family

        def mk():
            block = 0.3 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
            return CuspSuspendedFamily(
                sym0=identity_family(1, arity=2),
                interior_at=lambda t, n, b=block: np.exp(-(t**2)) * _embed(b, n, 1),
            )

        lhs, rhs1, rhs2 = sus_trace_defect(mk(), mk(), t_nodes=32, trunc=24)
        assert abs(lhs) < 1e-10
        assert abs(rhs1) < 1e-10 and abs(rhs2) < 1e-10

    def test_defect_formula_holds(self, rng):
        a = random_css_group_family(rng, q=1)
        b = random_css_group_family(rng, q=1)
        lhs, rhs1, rhs2 = sus_trace_defect(a, b, t_nodes=48, trunc=48)
        assert abs(lhs - rhs1) < 1e-4
        assert abs(lhs - rhs2) < 1e-4

    def test_two_boundary_forms_agree(self, rng):
        a = random_css_group_family(rng, q=1)
        b = random_css_group_family(rng, q=1)
        _, rhs1, rhs2 = sus_trace_defect(a, b, t_nodes=16, trunc=16)
        assert abs(rhs1 - rhs2) < 1e-8


class TestDiracModel:
    def test_scalar_block_determinant(self):
        dm = dirac_build(np.array([[1.0]]))
        val = dm.indicial_family()(np.array(1.0), np.array(0.5))
        assert abs(np.linalg.det(val) + (1.0 + 0.25 + 1.0)) < 1e-12
        expect = np.array([[1j * 1.0 - 0.5, 1.0], [1.0, 1j * 1.0 + 0.5]])
        assert np.max(np.abs(val - expect)) < 1e-12

    def test_singular_boundary_rejected(self):
        with pytest.raises(ValueError, match="singular"):
            dirac_build(np.array([[0.0]]))

    def test_unitary_gram_identity(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        dm = dirac_build(q)
        assert dm.verify_gram_identity() < 1e-12

    def test_bare_family_eta_vanishes(self):
        dm = dirac_build(np.array([[np.exp(0.3j)]]))
        fam = GaugedDiracFamily(dirac=dm, gauge=None)
        assert eta_gauged_dirac(fam) == 0.0

    def test_gauged_equivariance(self, rng):
        from etadet.star import itilde
        from etadet.susdet import straight_star2_path, sus_det

        dm = dirac_build(np.array([[np.exp(0.7j)]]))
        gauge = random_css_group_family(rng, q=2, scale=0.25)
        bare = GaugedDiracFamily(dirac=dm, gauge=None)
        gauged = GaugedDiracFamily(dirac=dm, gauge=gauge)
        tau0 = np.exp(1j * np.pi * eta_gauged_dirac(bare))
        tau1 = np.exp(1j * np.pi * eta_gauged_dirac(gauged, t_nodes=48, trunc=48))
        lift = itilde(gauge)
        path, tang = straight_star2_path(lift.as_star2())
        det_g = sus_det(path, tang, path_nodes=32, grid_nodes=64)
        assert abs(tau1 / tau0 - det_g) / abs(det_g) < 1e-5
