import numpy as np
import pytest

from etadet.groups import (
    OddIndexResult,
    SmoothingPerturbation,
    UnderResolvedError,
    chern3,
    concatenate_dets,
    fredholm_det,
    odd_index,
    straight_line_path,
    winding_phi,
)
from etadet.families import SuspendedFamily
from etadet.models import cayley_family, su2_loop, su2_smash_map


def proj(n, k=0):
    p = np.zeros((n, n))
    p[k, k] = 1.0
    return p


class TestFredholmDet:
    def test_identity(self):
        assert abs(fredholm_det(np.eye(4)) - 1.0) < 1e-12

    def test_rank_one(self):
        mat = np.eye(4) + proj(4)
        assert abs(fredholm_det(mat) - 2.0) < 1e-8

    def test_diagonal_phase_path(self):
        phi = 2.2
        path_vals = lambda s: np.diag([np.exp(1j * s * phi), 1.0, 1.0])
        from etadet.numerics import SampledPath

        path = SampledPath(
            sampler=path_vals,
            tangent=lambda s: np.diag([1j * phi * np.exp(1j * s * phi), 0.0, 0.0]),
        )
        assert abs(fredholm_det(path) - np.exp(1j * phi)) < 1e-8

    def test_oracle_equivalence_seeded(self, rng):
        for _ in range(8):
            n = int(rng.integers(2, 9))
            k = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            k *= 2.0 / np.linalg.norm(k, 2)
            pert = SmoothingPerturbation(block=k)
            pert.require_invertible()
            d = fredholm_det(pert)
            expect = np.linalg.det(pert.matrix)
            assert abs(d - expect) / abs(expect) < 1e-8

    def test_multiplicative_via_concatenation(self, rng):
        for _ in range(4):
            a = np.eye(3) + 0.6 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
            b = np.eye(3) + 0.6 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
            dab = concatenate_dets(a, b)
            expect = fredholm_det(a) * fredholm_det(b)
            assert abs(dab - expect) / abs(expect) < 1e-8

    def test_detour_avoids_segment_singularity(self):
        # Id + s K is singular at s = 0.5 for this K
        mat = np.eye(2) - 2.0 * proj(2)
        d = fredholm_det(mat)
        assert abs(d - np.linalg.det(mat)) < 1e-7


class TestOddIndex:
    def test_identity_family(self):
        fam = cayley_family(proj(3), power=1)
        ident = fam.matmul(cayley_family(proj(3), power=-1))
        res = odd_index(ident)
        assert res.rounded == 0
        assert res.defect < 1e-10

    def test_cayley_generator_is_plus_one(self):
        res = odd_index(cayley_family(proj(3), power=1))
        assert res.rounded == 1
        assert res.defect < 1e-3

    def test_pointwise_square_doubles(self):
        fam = cayley_family(proj(3), power=1)
        doubled = fam.matmul(fam)
        res = odd_index(doubled)
        assert res.rounded == 2
        assert res.defect < 1e-3

    def test_grid_refinement_stable(self):
        fam = cayley_family(proj(2), power=1)
        raw1 = odd_index(fam, nodes=128).raw
        raw2 = odd_index(fam, nodes=256).raw
        assert abs(raw1 - raw2) < 1e-4

    def test_under_resolved_flagged(self):
        # a sharply localized winding cannot be resolved on a coarse grid
        def sampler(t):
            c = ((t - 0.02j) / (t + 0.02j)) ** 3
            return np.eye(1) + (c - 1.0)[..., None, None] * np.eye(1)

        fam = SuspendedFamily(sampler, 1, arity=1, decay_order=-1.0)
        with pytest.raises(UnderResolvedError):
            odd_index(fam, nodes=8)


class TestWindingPhi:
    def test_constant_loop(self):
        from etadet.groups import GroupLoop
        from etadet.star import Star2Element

        loop = GroupLoop(element_at=lambda s: Star2Element.identity(2))
        w = winding_phi(loop, s_nodes=8, grid_nodes=24)
        assert abs(w) < 1e-10

    def test_generator_and_square(self):
        w1 = winding_phi(su2_loop(1), s_nodes=32, grid_nodes=48)
        assert abs(w1 - 1.0) < 1e-3
        w2 = winding_phi(su2_loop(2), s_nodes=32, grid_nodes=48)
        assert abs(w2 - 2.0) < 1e-3


class TestChern3:
    def test_constant_map(self):
        const = lambda u, v, w: np.broadcast_to(
            np.eye(2, dtype=complex), np.broadcast(u, v, w).shape + (2, 2)
        ).copy()
        val = chern3(const, grid=(12, 12, 12), orientation=1)
        assert abs(val) < 1e-12

    def test_identity_map_degree_one(self):
        g = su2_smash_map()
        val = chern3(lambda s, tau, t: g(s, t, tau), grid=(32, 32, 32), orientation=1)
        assert abs(val - 1.0) < 1e-2

    def test_pointwise_inverse_reverses_degree(self):
        g = su2_smash_map()
        val = chern3(
            lambda s, tau, t: np.linalg.inv(g(s, t, tau)),
            grid=(32, 32, 32),
            orientation=1,
        )
        assert abs(val + 1.0) < 1e-2

    def test_orientation_required(self):
        g = su2_smash_map()
        with pytest.raises(ValueError, match="orientation"):
            chern3(lambda s, tau, t: g(s, t, tau))

    def test_winding_matches_chern3(self):
        w = winding_phi(su2_loop(1), s_nodes=32, grid_nodes=48)
        g = su2_smash_map()
        c = chern3(lambda s, tau, t: g(s, t, tau), grid=(48, 48, 48), orientation=1)
        assert abs(w - c) < 1e-3
