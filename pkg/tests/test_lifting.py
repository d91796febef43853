import numpy as np
import pytest

from loopext import extension as ext
from loopext import lifting as lf
from loopext import mesh as msh
from loopext import quaternions as qt
from loopext.errors import (
    ActionConditionViolated,
    BaseMismatch,
    FusionContextMismatch,
    MiddleMismatch,
)
from loopext.lie import CircleValue, circle_distance

RES = msh.TINY_RESOLUTION
BUNDLE = lf.SampledBundle.for_resolution(RES)
ECFG = ext.EquivalenceConfig(resolution=RES)


@pytest.fixture(scope="module")
def loops3():
    base, fibers = lf.sample_bundle_loops(BUNDLE, 5)
    return base, [lf.BundleLoop(base, f) for f in fibers]


class TestDifferenceMap:
    def test_definition(self, loops3):
        base, (t1, t2, _) = loops3[0], loops3[1]
        d = lf.difference_loop(t1, t2)
        moved = msh.loop_product(t1.fiber, d)
        assert np.abs(moved.samples - t2.fiber.samples).max() < 1e-15

    def test_diagonal_is_identity(self, loops3):
        _, (t1, _, _) = loops3
        d = lf.difference_loop(t1, t1)
        assert np.abs(d.samples - qt.IDENTITY).max() < 5e-16

    def test_cocycle_exact(self, loops3):
        _, (t1, t2, t3) = loops3
        lhs = msh.loop_product(lf.difference_loop(t1, t2),
                               lf.difference_loop(t2, t3))
        rhs = lf.difference_loop(t1, t3)
        assert np.abs(lhs.samples - rhs.samples).max() < 1e-15

    def test_base_mismatch(self, loops3):
        base, (t1, _, _) = loops3
        other = lf.BundleLoop(np.mod(base + 0.25, 1.0), t1.fiber)
        with pytest.raises(BaseMismatch):
            lf.difference_loop(t1, other)

    def test_translate_then_difference(self, loops3):
        base, (t1, _, _) = loops3
        gamma = msh.random_map("loop", 99, resolution=RES)
        moved = lf.BundleLoop(base, msh.loop_product(t1.fiber, gamma))
        d = lf.difference_loop(t1, moved)
        assert np.abs(d.samples - gamma.samples).max() < 1e-15


class TestGerbeProduct:
    def test_middle_cancels_and_betas_multiply(self):
        q12, q23, _ = lf.sample_gerbe_chain(BUNDLE, 9)
        q12.validate()
        q23.validate()
        out = lf.gerbe_mu(q12, q23)
        out.validate(atol=1e-12)
        assert out.tau is q12.tau
        assert out.tau_prime is q23.tau_prime
        expect = ext.product(q12.beta, q23.beta)
        assert circle_distance(out.beta.z, expect.z) == 0.0

    def test_identity_betas(self):
        q12, q23, _ = lf.sample_gerbe_chain(BUNDLE, 10)
        e12 = lf.GerbeElement(q12.tau, q12.tau,
                              ext.identity_element(RES))
        e23 = lf.GerbeElement(q12.tau, q12.tau,
                              ext.identity_element(RES))
        out = lf.gerbe_mu(e12, e23)
        assert ext.equivalent(out.beta, ext.identity_element(RES), ECFG)

    def test_middle_mismatch(self):
        q12, q23, _ = lf.sample_gerbe_chain(BUNDLE, 11)
        with pytest.raises(MiddleMismatch):
            lf.gerbe_mu(q12, q12)

    def test_associativity_up_to_equivalence(self):
        base, fibers = lf.sample_bundle_loops(BUNDLE, 12, count=4)
        loops = [lf.BundleLoop(base, f) for f in fibers]
        qs = []
        for i in range(3):
            delta = lf.difference_loop(loops[i], loops[i + 1])
            qs.append(lf.GerbeElement(loops[i], loops[i + 1],
                                      ext.random_element(delta, 13 + i,
                                                         resolution=RES)))
        lhs = lf.gerbe_mu(lf.gerbe_mu(qs[0], qs[1]), qs[2])
        rhs = lf.gerbe_mu(qs[0], lf.gerbe_mu(qs[1], qs[2]))
        assert ext.equivalent(lhs.beta, rhs.beta, ECFG)


class TestInternalFusion:
    def test_loops_rewired_and_beta_fused(self):
        ctx = lf.sample_fibered_data(BUNDLE, 20, n_components=2)
        deltas = ctx.delta_paths(0, 1)
        q12 = lf.GerbeElement(ctx.bundle_loop(0, 1, 0), ctx.bundle_loop(0, 1, 1),
                              ext.random_element(msh.loop_join(deltas[0], deltas[1]),
                                                 21, resolution=RES))
        q23 = lf.GerbeElement(ctx.bundle_loop(1, 2, 0), ctx.bundle_loop(1, 2, 1),
                              ext.random_element(msh.loop_join(deltas[1], deltas[2]),
                                                 22, resolution=RES))
        out = lf.internal_fusion(q12, q23, ctx)
        out.validate(atol=1e-12)
        assert np.array_equal(out.tau.fiber.samples,
                              ctx.bundle_loop(0, 2, 0).fiber.samples)
        expect = ext.fusion(q12.beta, q23.beta, ctx.fusion_context(0, 1))
        assert circle_distance(out.beta.z, expect.z) == 0.0

    def test_context_mismatch(self):
        ctx = lf.sample_fibered_data(BUNDLE, 23, n_components=2)
        other = lf.sample_fibered_data(BUNDLE, 24, n_components=2)
        deltas = ctx.delta_paths(0, 1)
        q12 = lf.GerbeElement(ctx.bundle_loop(0, 1, 0), ctx.bundle_loop(0, 1, 1),
                              ext.random_element(msh.loop_join(deltas[0], deltas[1]),
                                                 25, resolution=RES))
        q23 = lf.GerbeElement(ctx.bundle_loop(1, 2, 0), ctx.bundle_loop(1, 2, 1),
                              ext.random_element(msh.loop_join(deltas[1], deltas[2]),
                                                 26, resolution=RES))
        with pytest.raises(FusionContextMismatch):
            lf.internal_fusion(q12, q23, other)

    def test_constant_data_degenerates_to_phase_product(self):
        e_path = msh.constant_path(qt.IDENTITY, RES.path_segments)
        base = np.full(RES.path_segments + 1, 0.25)
        ctx = lf.FiberedPathData((base, base, base),
                                 ((e_path,) * 3, (e_path,) * 3))
        z12, z23 = CircleValue.from_turns(0.21), CircleValue.from_turns(-0.4)
        const = msh.constant_disk(qt.IDENTITY, RES)
        q12 = lf.GerbeElement(ctx.bundle_loop(0, 1, 0), ctx.bundle_loop(0, 1, 1),
                              ext.ExtElement(const, z12))
        q23 = lf.GerbeElement(ctx.bundle_loop(1, 2, 0), ctx.bundle_loop(1, 2, 1),
                              ext.ExtElement(const, z23))
        out = lf.internal_fusion(q12, q23, ctx)
        assert circle_distance(out.beta.z, z12.times(z23)) < 1e-14

    def test_mu_is_fusion_preserving(self):
        ctx = lf.sample_fibered_data(BUNDLE, 27, n_components=3)

        def gerbe(i, j, a, b, seed):
            deltas = ctx.delta_paths(a, b)
            return lf.GerbeElement(
                ctx.bundle_loop(i, j, a), ctx.bundle_loop(i, j, b),
                ext.random_element(msh.loop_join(deltas[i], deltas[j]), seed,
                                   resolution=RES))

        q12, q23 = gerbe(0, 1, 0, 1, 28), gerbe(1, 2, 0, 1, 29)
        r12, r23 = gerbe(0, 1, 1, 2, 30), gerbe(1, 2, 1, 2, 31)
        sub = lambda a, b: lf.FiberedPathData(
            ctx.base_paths, (ctx.components[a], ctx.components[b]))
        lhs = lf.gerbe_mu(lf.internal_fusion(q12, q23, sub(0, 1)),
                          lf.internal_fusion(r12, r23, sub(1, 2)))
        rhs = lf.internal_fusion(lf.gerbe_mu(q12, r12), lf.gerbe_mu(q23, r23),
                                 sub(0, 2), fill_seed=1, jitter_seed=1)
        assert ext.equivalent(lhs.beta, rhs.beta, ECFG)


class TestRoundTrips:
    def test_lift_triv_lift_pointwise(self):
        lift = lf.canonical_fusion_lift(BUNDLE)
        lift2 = lf.lift_from_trivialization(lf.trivialization_from_lift(lift))
        for seed in range(6):
            q12, q23, t = lf.sample_gerbe_chain(BUNDLE, 40 + seed)
            d = lf.fiber_element_defect(lift.act(t, q12.beta),
                                        lift2.act(t, q12.beta))
            assert max(d.values()) < 1e-12

    def test_triv_lift_triv_pointwise(self):
        triv = lf.canonical_trivialization(BUNDLE)
        triv2 = lf.trivialization_from_lift(lf.lift_from_trivialization(triv))
        for seed in range(6):
            q12, q23, t = lf.sample_gerbe_chain(BUNDLE, 50 + seed)
            d = lf.fiber_element_defect(triv.kappa(q23, t), triv2.kappa(q23, t))
            assert max(d.values()) < 1e-12

    def test_kappa_with_identity_beta(self):
        triv = lf.canonical_trivialization(BUNDLE)
        _, _, t = lf.sample_gerbe_chain(BUNDLE, 60)
        q = lf.GerbeElement(t.loop, t.loop, ext.identity_element(RES))
        out = triv.kappa(q, t)
        assert circle_distance(out.element.z, t.element.z) < 1e-12
        assert np.array_equal(out.element.phi.grid[-1], t.element.phi.grid[-1])


class TestActionCondition:
    def test_canonical_is_quadrature_free(self):
        triv = lf.canonical_trivialization(BUNDLE)
        rep = lf.check_action_condition(triv, samples=4, seed=3, tolerance=1e-9)
        assert rep["passed"] and not rep["vacuous"]
        assert rep["max_error"] < 1e-12

    def test_zero_samples_is_vacuous(self):
        triv = lf.canonical_trivialization(BUNDLE)
        rep = lf.check_action_condition(triv, samples=0, seed=0)
        assert rep["vacuous"] and rep["passed"]

    def test_mutated_kappa_fails(self):
        triv = lf.mutate_kappa(lf.canonical_trivialization(BUNDLE))
        rep = lf.check_action_condition(triv, samples=3, seed=3)
        assert not rep["passed"]
        with pytest.raises(ActionConditionViolated):
            lf.lift_from_trivialization(triv, check_samples=3, check_seed=3)

    def test_right_action(self):
        lift = lf.canonical_fusion_lift(BUNDLE)
        q12, q23, t = lf.sample_gerbe_chain(BUNDLE, 70)
        lhs = lift.act(lift.act(t, q12.beta), q23.beta)
        rhs = lift.act(t, ext.product(q12.beta, q23.beta))
        assert circle_distance(lhs.element.z, rhs.element.z) < 1e-12


class TestFusionEquivalence:
    def test_canonical_concordant_pass(self):
        triv = lf.canonical_trivialization(BUNDLE)
        rep = lf.check_fusion_equivalence(triv, samples=2, seed=7)
        assert rep["kappa_pass"] and rep["action_pass"] and rep["concordant"]
        assert rep["max_inverse_error"] < 1e-3

    @pytest.mark.parametrize("mutate", [lf.mutate_fusion, lf.mutate_kappa])
    def test_mutations_fail_concordantly(self, mutate):
        triv = mutate(lf.canonical_trivialization(BUNDLE))
        rep = lf.check_fusion_equivalence(triv, samples=2, seed=7)
        assert not rep["kappa_pass"]
        assert not rep["action_pass"]
        assert rep["discordant"] == 0
        for r in rep["records"]:
            assert not r["kappa_pass"] and not r["action_pass"]


class TestCanonicalModel:
    def test_projection_covers_group_action(self):
        lift = lf.canonical_fusion_lift(BUNDLE)
        q12, _, t = lf.sample_gerbe_chain(BUNDLE, 80)
        moved = lift.act(t, q12.beta)
        expect = msh.loop_product(t.loop.fiber, ext.project(q12.beta))
        assert np.abs(moved.loop.fiber.samples - expect.samples).max() == 0.0
        assert np.abs(ext.project(moved.element).samples
                      - expect.samples).max() < 1e-15

    def test_scalar_action_uses_inversion(self):
        lift = lf.canonical_fusion_lift(BUNDLE)
        p = lift.sample(81)
        w = CircleValue.from_turns(0.22)
        direct = lift.scalar(p, w)
        assert circle_distance(direct.element.z,
                               p.element.z.times(w.inverse())) < 1e-15
        central = ext.scalar_mul(ext.identity_element(RES), w.inverse())
        via = lift.act(p, central)
        assert circle_distance(direct.element.z, via.element.z) < 1e-15
