import numpy as np
import pytest

from etadet.psorders import (
    BigradedOrder,
    PSFamily,
    full_elliptic_check,
    order_deriv,
    order_mul,
    p_plus_it,
)


class TestOrderArithmetic:
    def test_inverse_pair(self):
        assert order_mul(BigradedOrder(1, 1), BigradedOrder(-1, -1)) == BigradedOrder(0, 0)

    def test_neutral_element(self):
        o = BigradedOrder(2.5, -1.0)
        assert order_mul(o, BigradedOrder(0, 0)) == o

    def test_suspended_embedding(self):
        assert BigradedOrder.from_suspended(3.0) == BigradedOrder(3.0, 3.0)

    def test_monoid_homomorphism(self):
        a, b, c = BigradedOrder(1, 2), BigradedOrder(-3, 0.5), BigradedOrder(2, 2)
        assert order_mul(order_mul(a, b), c) == order_mul(a, order_mul(b, c))
        assert order_mul(a, b) == order_mul(b, a)


class TestPPlusIt:
    def test_invertible_everywhere_for_invertible_p(self):
        fam = p_plus_it(np.diag([1.0, -2.0]))
        assert fam.order == BigradedOrder(1, 1)
        assert fam.flags["p_invertible"]
        vals = fam(np.linspace(-3, 3, 13))
        assert np.min(np.abs(np.linalg.det(vals))) > 0.5

    def test_singular_p_flagged(self):
        fam = p_plus_it(np.diag([0.0, 1.0]))
        assert not fam.flags["p_invertible"]
        assert fam.flags["invertible_off_axis"]
        # invertible for t != 0 only
        assert abs(np.linalg.det(fam(np.array([0.0]))[0])) < 1e-12
        assert abs(np.linalg.det(fam(np.array([0.5]))[0])) > 0.1

    def test_non_selfadjoint_rejected(self):
        with pytest.raises(ValueError, match="self-adjoint"):
            p_plus_it(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_lattice_model_feeds_eta(self):
        from etadet.eta import SpectrumDescription, eta_via_resolvent

        # spectral model with spectrum n + 1/4: never singular
        sp = SpectrumDescription(lattice_offsets=(0.25,))
        assert abs(eta_via_resolvent(sp) - 0.5) < 1e-3


class TestOrderDeriv:
    def test_derivative_of_p_plus_it(self):
        fam = p_plus_it(np.diag([1.0, -2.0]))
        d = fam.d()
        assert d.order == BigradedOrder(0, 0)
        vals = d(np.array([0.3, -1.2]))
        assert np.max(np.abs(vals - 1j * np.eye(2))) < 1e-9

    def test_second_derivative_vanishes(self):
        fam = p_plus_it(np.diag([1.0, -2.0]))
        dd = fam.d().d()
        assert dd.order == BigradedOrder(-1, -1)
        assert np.max(np.abs(dd(np.array([0.7])))) < 1e-6

    def test_order_bookkeeping_commutes(self):
        a = p_plus_it(np.diag([1.0, 3.0]))
        b = p_plus_it(np.diag([2.0, -1.0]))
        lhs = order_mul(a.d().order, b.order)
        rhs = order_mul(a.order, b.order) + BigradedOrder(-1, -1)
        assert lhs == rhs


class TestFullEllipticCheck:
    def test_invertible_hermitian_passes(self):
        fam = p_plus_it(np.diag([1.0, -2.0]))
        report = full_elliptic_check(fam)
        assert report.fully_elliptic
        assert report.inverse_growth_ok

    def test_singular_p_fails_with_witness(self):
        fam = p_plus_it(np.diag([0.0, 1.0]))
        report = full_elliptic_check(fam, grid=np.linspace(-4, 4, 33))
        assert not report.symbol_ok
        assert abs(report.witnesses["symbol"]) < 0.3

    def test_dirac_family_passes_everywhere(self):
        from etadet.eta import dirac_build

        dm = dirac_build(np.array([[np.exp(0.4j)]]))
        ind = dm.indicial_family()

        fam = PSFamily(
            order=BigradedOrder(1, 1),
            sampler=lambda t: ind(np.asarray(t), np.zeros(np.shape(t))),
            size=2,
        )
        report = full_elliptic_check(
            fam, indicial=lambda t, tau: ind(t, tau)
        )
        assert report.fully_elliptic

    def test_inverse_growth_bound_on_ring(self):
        fam = p_plus_it(np.diag([0.5, -1.5]))
        report = full_elliptic_check(fam)
        assert report.inverse_growth_ok
