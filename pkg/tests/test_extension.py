import json

import numpy as np
import pytest

from loopext import extension as ext
from loopext import mesh as msh
from loopext import quaternions as qt
from loopext import wz
from loopext.errors import BoundaryMismatch, IndeterminateEquivalence, MeshMismatch
from loopext.lie import CircleValue, circle_distance

RES = msh.TINY_RESOLUTION
ECFG = ext.EquivalenceConfig(resolution=RES)


@pytest.fixture(scope="module")
def element_pair():
    tau = msh.random_map("loop", 50, resolution=RES)
    a = ext.random_element(tau, 51, resolution=RES)
    b = ext.random_element(tau, 52, resolution=RES)
    return tau, a, b


class TestEquivalence:
    def test_reflexive(self, element_pair):
        _, a, _ = element_pair
        assert ext.equivalent(a, a, ECFG)
        assert ext.circle_defect(a, a, ECFG) == 0.0

    def test_definitional_construction(self, element_pair):
        # build b's phase from the glued-sphere action, then both orders
        # of the comparison must accept
        _, a, b = element_pair
        action = wz.wz_action(ext.glue_representatives(a, b, ECFG),
                              resolution=RES)
        b_eq = b.with_z(a.z.times(action.inverse()))
        assert ext.equivalent(a, b_eq, ECFG)
        assert ext.equivalent(b_eq, a, ECFG)

    def test_phase_offset_rejected(self, element_pair):
        _, a, _ = element_pair
        shifted = ext.scalar_mul(a, CircleValue.from_turns(0.3))
        assert not ext.equivalent(a, shifted, ECFG)

    def test_gray_band_raises(self, element_pair):
        _, a, _ = element_pair
        shifted = ext.scalar_mul(a, CircleValue.from_turns(3 * ECFG.circle_tol))
        with pytest.raises(IndeterminateEquivalence):
            ext.equivalent(a, shifted, ECFG)

    def test_different_boundaries_not_equivalent(self, element_pair):
        _, a, _ = element_pair
        other = ext.random_element(msh.random_map("loop", 53, resolution=RES),
                                   54, resolution=RES)
        assert not ext.equivalent(a, other, ECFG)


class TestProduct:
    def test_unit_laws(self, element_pair):
        _, a, _ = element_pair
        e = ext.identity_element(RES)
        assert ext.equivalent(ext.product(e, a), a, ECFG)
        assert ext.equivalent(ext.product(a, e), a, ECFG)
        assert ext.equivalent(ext.product(e, e), e, ECFG)

    def test_paper_formula_for_z(self, element_pair):
        _, a, b = element_pair
        p = ext.product(a, b)
        phase = CircleValue.from_turns(-wz.integrate_rho_disk(a.phi, b.phi))
        assert circle_distance(p.z, a.z.times(b.z).times(phase)) == 0.0

    def test_projection_homomorphism(self, element_pair):
        _, a, b = element_pair
        p = ext.product(a, b)
        expected = qt.qmul(ext.project(a).samples, ext.project(b).samples)
        assert np.array_equal(ext.project(p).samples, expected)
        assert np.array_equal(ext.project(ext.scalar_mul(a, CircleValue.from_turns(0.2))).samples,
                              ext.project(a).samples)

    def test_inverse(self, element_pair):
        _, a, _ = element_pair
        e = ext.identity_element(RES)
        inv = ext.inverse(a)
        assert ext.equivalent(ext.product(a, inv), e, ECFG)
        assert ext.equivalent(ext.product(inv, a), e, ECFG)
        assert ext.equivalent(ext.inverse(e), e, ECFG)

    def test_inverse_is_involutive_bitwise(self, element_pair):
        _, a, _ = element_pair
        dbl = ext.inverse(ext.inverse(a))
        assert np.array_equal(dbl.phi.grid, a.phi.grid)
        assert circle_distance(dbl.z, a.z) < 1e-15

    def test_scalar_action(self, element_pair):
        _, a, b = element_pair
        w = CircleValue.from_turns(0.17)
        w2 = CircleValue.from_turns(-0.05)
        assert ext.scalar_mul(a, CircleValue.one()).z.u == a.z.u
        two_step = ext.scalar_mul(ext.scalar_mul(a, w), w2)
        one_step = ext.scalar_mul(a, w.times(w2))
        assert circle_distance(two_step.z, one_step.z) < 1e-15
        # centrality
        lhs = ext.product(ext.scalar_mul(a, w), b)
        rhs = ext.scalar_mul(ext.product(a, b), w)
        assert circle_distance(lhs.z, rhs.z) < 1e-15

    def test_class_invariance(self, element_pair):
        _, a, b = element_pair
        phi2 = msh.disk_product(msh.bulk_disk(60, resolution=RES), a.phi)
        action = wz.wz_action(msh.glue_sphere(phi2, a.phi), jitter_seed=3,
                              resolution=RES)
        a2 = ext.ExtElement(phi2, a.z.times(action))
        assert ext.equivalent(a2, a, ECFG)
        assert ext.equivalent(ext.product(a2, b), ext.product(a, b), ECFG)

    def test_associativity(self):
        elems = [ext.random_element(msh.random_map("loop", 61 + i, resolution=RES),
                                    64 + i, resolution=RES) for i in range(3)]
        a, b, c = elems
        lhs = ext.product(ext.product(a, b), c)
        rhs = ext.product(a, ext.product(b, c))
        assert ext.equivalent(lhs, rhs, ECFG)
        # with exact velocities the raw circle parts agree to rounding
        assert circle_distance(lhs.z, rhs.z) < 1e-12

    def test_mesh_mismatch(self, element_pair):
        _, a, _ = element_pair
        other = ext.random_element(
            msh.random_map("loop", 66, resolution=msh.SMALL_RESOLUTION), 67,
            resolution=msh.SMALL_RESOLUTION)
        with pytest.raises(MeshMismatch):
            ext.product(a, other)


@pytest.fixture(scope="module")
def fusion_setup():
    triple = msh.random_path_triple(70, resolution=RES)
    ctx = ext.FusionContext(triple)
    p1, p2, p3 = ctx.paths
    a12 = ext.random_element(msh.loop_join(p1, p2), 71, resolution=RES)
    a23 = ext.random_element(msh.loop_join(p2, p3), 72, resolution=RES)
    return ctx, a12, a23


class TestFusion:
    def test_projects_to_outer_join(self, fusion_setup):
        ctx, a12, a23 = fusion_setup
        p1, _, p3 = ctx.paths
        f = ext.fusion(a12, a23, ctx)
        assert np.array_equal(ext.project(f).samples,
                              msh.loop_join(p1, p3).samples)

    def test_constant_data_multiplies_phases(self):
        e_path = msh.constant_path(qt.IDENTITY, RES.path_segments)
        ctx = ext.FusionContext(msh.PathTriple(e_path, e_path, e_path))
        z1, z2 = CircleValue.from_turns(0.2), CircleValue.from_turns(0.15)
        a = ext.ExtElement(msh.constant_disk(qt.IDENTITY, RES), z1)
        b = ext.ExtElement(msh.constant_disk(qt.IDENTITY, RES), z2)
        f = ext.fusion(a, b, ctx)
        assert circle_distance(f.z, z1.times(z2)) < 1e-14

    def test_equivariance_both_slots(self, fusion_setup):
        ctx, a12, a23 = fusion_setup
        w = CircleValue.from_turns(0.123)
        base = ext.fusion(a12, a23, ctx)
        assert circle_distance(ext.fusion(ext.scalar_mul(a12, w), a23, ctx).z,
                               base.z.times(w)) < 1e-14
        assert circle_distance(ext.fusion(a12, ext.scalar_mul(a23, w), ctx).z,
                               base.z.times(w)) < 1e-14

    def test_independent_of_filling(self, fusion_setup):
        ctx, a12, a23 = fusion_setup
        f1 = ext.fusion(a12, a23, ctx, fill_seed=1, jitter_seed=1)
        f2 = ext.fusion(a12, a23, ctx, fill_seed=2, jitter_seed=2)
        assert not np.array_equal(f1.phi.grid, f2.phi.grid)
        assert ext.equivalent(f1, f2, ECFG)

    def test_class_invariance(self, fusion_setup):
        ctx, a12, a23 = fusion_setup
        phi2 = msh.disk_product(msh.bulk_disk(75, resolution=RES), a12.phi)
        action = wz.wz_action(msh.glue_sphere(phi2, a12.phi), jitter_seed=5,
                              resolution=RES)
        a12_eq = ext.ExtElement(phi2, a12.z.times(action))
        f1 = ext.fusion(a12, a23, ctx)
        f2 = ext.fusion(a12_eq, a23, ctx, jitter_seed=8)
        assert ext.equivalent(f1, f2, ECFG)

    def test_wrong_boundary_raises(self, fusion_setup):
        ctx, a12, _ = fusion_setup
        with pytest.raises(BoundaryMismatch):
            ext.fusion(a12, a12, ctx)

    def test_associativity_over_quadruple(self):
        paths = msh.random_path_system(80, 4, resolution=RES)
        p1, p2, p3, p4 = paths
        mk = lambda i, j, s: ext.random_element(
            msh.loop_join(paths[i], paths[j]), s, resolution=RES)
        a12, a23, a34 = mk(0, 1, 81), mk(1, 2, 82), mk(2, 3, 83)
        lhs = ext.fusion(ext.fusion(a12, a23,
                                    ext.FusionContext(msh.PathTriple(p1, p2, p3))),
                         a34, ext.FusionContext(msh.PathTriple(p1, p3, p4)),
                         fill_seed=1, jitter_seed=1)
        rhs = ext.fusion(a12,
                         ext.fusion(a23, a34,
                                    ext.FusionContext(msh.PathTriple(p2, p3, p4)),
                                    fill_seed=2),
                         ext.FusionContext(msh.PathTriple(p1, p2, p4)),
                         fill_seed=3, jitter_seed=2)
        assert ext.equivalent(lhs, rhs, ECFG)

    def test_multiplicativity(self):
        tripA = msh.random_path_triple(85, resolution=RES)
        tripB = msh.random_path_triple(86, resolution=RES)
        qa, qb = tripA.paths(), tripB.paths()
        prod = msh.PathTriple(*[msh.path_product(x, y) for x, y in zip(qa, qb)])
        mk = lambda pths, i, j, s: ext.random_element(
            msh.loop_join(pths[i], pths[j]), s, resolution=RES)
        a12, a23 = mk(qa, 0, 1, 87), mk(qa, 1, 2, 88)
        b12, b23 = mk(qb, 0, 1, 89), mk(qb, 1, 2, 90)
        lhs = ext.product(ext.fusion(a12, a23, ext.FusionContext(tripA)),
                          ext.fusion(b12, b23, ext.FusionContext(tripB)))
        rhs = ext.fusion(ext.product(a12, b12), ext.product(a23, b23),
                         ext.FusionContext(prod), fill_seed=4, jitter_seed=3)
        assert ext.equivalent(lhs, rhs, ECFG)


class TestSerialization:
    def test_element_roundtrip_bit_exact(self, element_pair):
        _, a, _ = element_pair
        data = json.loads(json.dumps(ext.element_to_dict(a)))
        back = ext.element_from_dict(data)
        assert np.array_equal(a.phi.grid, back.phi.grid)
        assert np.array_equal(a.phi.d_r, back.phi.d_r)
        assert a.z.u == back.z.u
