import numpy as np
import pytest

from etadet.families import SuspendedFamily, constant_family, identity_family
from etadet.models import (
    gaussian_packet2,
    random_css_group_family,
    random_schwartz_star2,
    random_star2,
)
from etadet.numerics import QuadSpec, quad
from etadet.star import (
    CuspJet,
    Star2Element,
    TildeElement,
    itilde,
    jet_moyal_correction,
    jet_mul,
    poisson_bracket,
    star2_inv,
    star2_mul,
    tilde_mul,
)
from conftest import grid_dev


def scalar_family(fn, dfn_t=None, dfn_tau=None):
    derivs = {}
    if dfn_t is not None:
        derivs[0] = lambda t, tau: fn_wrap(dfn_t, t, tau)
    if dfn_tau is not None:
        derivs[1] = lambda t, tau: fn_wrap(dfn_tau, t, tau)
    return SuspendedFamily(
        lambda t, tau: fn_wrap(fn, t, tau), 1, arity=2, derivatives=derivs
    )


def fn_wrap(fn, t, tau):
    vals = fn(np.asarray(t, dtype=float), np.asarray(tau, dtype=float))
    return np.asarray(vals, dtype=complex)[..., None, None]


class TestStar2Mul:
    def test_identity_neutral(self, rng):
        a = random_star2(rng)
        ident = Star2Element.identity(2)
        left = star2_mul(ident, a)
        right = star2_mul(a, ident)
        assert grid_dev(left.a0, a.a0) < 1e-14
        assert grid_dev(left.a1, a.a1) < 1e-14
        assert grid_dev(right.a1, a.a1) < 1e-14

    def test_scalar_bracket_frozen_value(self):
        # a0 = exp(-t^2), b0 = exp(-tau^2): first-order part is
        # (i/2) dt(a0) dtau(b0); at (1, 1) this is 2i e^{-2}
        f = scalar_family(
            lambda t, tau: np.exp(-(t**2)),
            dfn_t=lambda t, tau: -2 * t * np.exp(-(t**2)),
            dfn_tau=lambda t, tau: np.zeros(np.broadcast(t, tau).shape),
        )
        g = scalar_family(
            lambda t, tau: np.exp(-(tau**2)),
            dfn_t=lambda t, tau: np.zeros(np.broadcast(t, tau).shape),
            dfn_tau=lambda t, tau: -2 * tau * np.exp(-(tau**2)),
        )
        prod = star2_mul(Star2Element(a0=f), Star2Element(a0=g))
        val = prod.a1(np.array(1.0), np.array(1.0))[0, 0]
        assert abs(val - 2j * np.exp(-2.0)) < 1e-12

    def test_associativity_seeded(self, rng):
        worst = 0.0
        for _ in range(6):
            x, y, z = (random_schwartz_star2(rng) for _ in range(3))
            lhs = star2_mul(star2_mul(x, y), z)
            rhs = star2_mul(x, star2_mul(y, z))
            worst = max(worst, grid_dev(lhs.a0, rhs.a0), grid_dev(lhs.a1, rhs.a1))
        assert worst < 1e-10


class TestStar2Inv:
    def test_constant_leading_part(self, rng):
        # for a0 = Id the Poisson term vanishes: inverse is (Id, -a1)
        a1 = gaussian_packet2(0.3 * np.eye(2))
        a = Star2Element(a0=identity_family(2, arity=2), a1=a1)
        inv = star2_inv(a)
        assert grid_dev(inv.a0, identity_family(2, arity=2)) < 1e-14
        assert grid_dev(inv.a1, a1.scaled(-1.0)) < 1e-14

    def test_roundtrip_both_sides(self, rng):
        for _ in range(4):
            a = random_star2(rng)
            inv = star2_inv(a)
            for prod in (star2_mul(a, inv), star2_mul(inv, a)):
                assert grid_dev(prod.a0, identity_family(2, arity=2)) < 1e-9
                zero = constant_family(np.zeros((2, 2)), arity=2)
                assert grid_dev(prod.a1, zero) < 1e-9

    def test_phase_family_roundtrip(self):
        # scalar phase-type leading part with nontrivial Poisson correction
        lam = 0.7

        def phase(t, tau):
            return (lam + 1j * t - tau) / (lam + 1j * t + tau + 2j)

        a0 = scalar_family(phase)
        a = Star2Element(a0=a0, a1=None)
        inv = star2_inv(a)
        prod = star2_mul(a, inv)
        pts = np.linspace(-1.5, 1.5, 4)
        assert np.max(np.abs(prod.a0.sample_grid(pts, pts) - 1.0)) < 1e-9
        assert np.max(np.abs(prod.a1.sample_grid(pts, pts))) < 1e-8

    def test_singular_leading_part_rejected(self):
        nil = constant_family(np.array([[0.0, 1.0], [0.0, 0.0]]), arity=2)
        from etadet.susdet import mu

        with pytest.raises(ValueError, match="singular"):
            mu(Star2Element(a0=nil, a1=identity_family(2, arity=2)))


class TestPoissonTraceIdentity:
    def test_bracket_trace_integrates_to_zero(self, rng):
        a = random_star2(rng)
        d = random_schwartz_star2(rng)
        br = poisson_bracket(a.a0.inv(), d.a0)

        def integrand(t, tau):
            return np.trace(br(t, tau), axis1=-2, axis2=-1)

        res = quad(integrand, QuadSpec(2, 48, -2.0))
        assert abs(res.value) < 1e-8


class TestJets:
    def make_jet(self, rng, with_i1=True):
        fam = random_css_group_family(rng, q=1, with_jet=with_i1, with_eps=False)
        op = fam.op_at(0.2)
        return CuspJet(i0=op.jet_i0_family(), i1=op.jet_i1_family())

    def test_identity_neutral(self, rng):
        jet = self.make_jet(rng)
        ident = CuspJet.identity(1)
        prod = jet_mul(jet, ident)
        pts = np.linspace(-2.0, 2.0, 7)
        assert np.max(np.abs(prod.i0(pts) - jet.i0(pts))) < 1e-12
        assert np.max(np.abs(prod.i1(pts) - jet.i1(pts))) < 1e-12

    def test_correction_vanishes_for_short_jets(self, rng):
        a = self.make_jet(rng, with_i1=False)
        b = self.make_jet(rng, with_i1=False)
        prod = jet_mul(a, b)
        corr = jet_moyal_correction(a, b)
        pts = np.linspace(-2.0, 2.0, 7)
        # the product's first-order slot equals the correction alone
        assert np.max(np.abs(prod.i1(pts) - corr(pts))) < 1e-14
        assert np.max(np.abs(corr(pts))) == 0.0

    def test_jet_of_composition_is_jet_mul(self, rng):
        from etadet.cuspmodel import compose

        fam_a = random_css_group_family(rng, q=1, with_eps=False)
        fam_b = random_css_group_family(rng, q=1, with_eps=False)
        op_a, op_b = fam_a.op_at(0.1), fam_b.op_at(0.1)
        composed = compose(op_a, op_b)
        lhs = CuspJet(i0=composed.jet_i0_family(), i1=composed.jet_i1_family())
        rhs = jet_mul(
            CuspJet(i0=op_a.jet_i0_family(), i1=op_a.jet_i1_family()),
            CuspJet(i0=op_b.jet_i0_family(), i1=op_b.jet_i1_family()),
        )
        pts = np.linspace(-3.0, 3.0, 9)
        assert np.max(np.abs(lhs.i0(pts) - rhs.i0(pts))) < 1e-8
        assert np.max(np.abs(lhs.i1(pts) - rhs.i1(pts))) < 1e-8


class TestItilde:
    def test_zero_jet_gives_leading_only(self, rng):
        fam = random_css_group_family(rng, q=1, with_jet=False, with_eps=False)
        lifted = itilde(fam)
        assert lifted.e is None and lifted.a1 is None

    def test_homomorphism_against_composition(self, rng):
        from etadet.cuspmodel import compose_css

        worst = 0.0
        for _ in range(3):
            a = random_css_group_family(rng, q=1)
            b = random_css_group_family(rng, q=1)
            lhs = itilde(compose_css(a, b))
            rhs = tilde_mul(itilde(a), itilde(b))
            worst = max(
                worst,
                grid_dev(lhs.a0, rhs.a0),
                grid_dev(lhs.e, rhs.e),
                grid_dev(lhs.a1, rhs.a1),
            )
        assert worst < 1e-9

    def test_eps_part_enters_linearly(self, rng):
        fam = random_css_group_family(rng, q=1, with_eps=True)
        bare = random_css_group_family(rng, q=1, with_eps=False)
        bare.sym0 = fam.sym0
        bare.jet1 = fam.jet1
        lifted_full = itilde(fam)
        lifted_bare = itilde(bare)
        # difference sits purely in the eps slot
        assert grid_dev(lifted_full.a0, lifted_bare.a0) < 1e-14
        pts = np.linspace(-2, 2, 5)
        assert np.max(np.abs(lifted_full.a1.sample_grid(pts, pts) - fam.eps_sym.sample_grid(pts, pts))) < 1e-14
