import numpy as np
import pytest

from loopext import mesh as msh
from loopext import quaternions as qt
from loopext import wz
from loopext.errors import MeshMismatch, NonConvergence
from loopext.lie import CircleValue, KAPPA_UNIT_TOTAL, Pairing, circle_distance

RES = msh.SMALL_RESOLUTION
TINY = msh.TINY_RESOLUTION


class TestCalibration:
    def test_converges_to_closed_form(self):
        # independent oracle: the det-density integrates to 2 pi^2 over the
        # group, so the calibrated constant must be 1/(2 pi^2)
        pairing = wz.calibrate_pairing(
            wz.QuadratureConfig(refinement_level=3, tolerance=1e-2),
            base_level=16)
        assert abs(pairing.kappa - KAPPA_UNIT_TOTAL) / KAPPA_UNIT_TOTAL < 2e-4

    def test_second_order_ladder(self):
        study = wz.calibration_study(wz.QuadratureConfig(refinement_level=3),
                                     base_level=8)
        errs = [abs(v - 2 * np.pi**2) for v in study["estimates"]]
        assert errs[0] > errs[1] > errs[2]
        order = np.log2(errs[0] / errs[1])
        assert order > 1.7
        assert study["fitted_order"] > 1.7

    def test_linearity_in_pairing(self):
        level = 12
        base = wz.unit_volume_integral(level)
        sphere = msh.geodesic_sphere(0.7, TINY)
        ball = msh.extend_to_ball(sphere, resolution=TINY)
        one = wz.integrate_h_ball(ball, Pairing(kappa=1.0))
        two = wz.integrate_h_ball(ball, Pairing(kappa=2.0))
        assert abs(two - 2.0 * one) < 1e-14
        assert base > 0

    def test_nonconvergence_raises(self):
        with pytest.raises(NonConvergence):
            wz.calibrate_pairing(
                wz.QuadratureConfig(refinement_level=3, tolerance=1e-9),
                base_level=8)


class TestRhoIntegral:
    def test_vanishes_for_constant_factor(self):
        phi = msh.random_map("disk", 1, resolution=TINY)
        const = msh.constant_disk(qt.qexp(np.array([0.4, 0.1, -0.3])), TINY)
        # identically zero on exact velocities, rounding-level for edge logs
        assert wz.integrate_rho_disk(phi, const) == 0.0
        assert wz.integrate_rho_disk(const, phi) == 0.0
        assert abs(wz.integrate_rho_disk(phi, const, scheme="midpoint")) < 1e-15
        assert abs(wz.integrate_rho_disk(const, phi, scheme="midpoint")) < 1e-15

    def test_schemes_agree_at_quadrature_order(self):
        a = msh.random_map("disk", 2, resolution=RES)
        b = msh.random_map("disk", 3, resolution=RES)
        exact = wz.integrate_rho_disk(a, b, scheme="trapezoid")
        fd = wz.integrate_rho_disk(a, b, scheme="midpoint")
        assert abs(exact - fd) < 1e-4

    def test_trapezoid_requires_velocities(self):
        a = msh.random_map("disk", 4, resolution=TINY)
        stripped = msh.DiskMap(a.grid, a.collar_fraction)
        with pytest.raises(MeshMismatch):
            wz.integrate_rho_disk(a, stripped, scheme="trapezoid")

    def test_mesh_mismatch(self):
        a = msh.random_map("disk", 5, resolution=TINY)
        b = msh.random_map("disk", 5, resolution=RES)
        with pytest.raises(MeshMismatch):
            wz.integrate_rho_disk(a, b)

    def test_richardson_convergence(self):
        gen1 = msh.random_map("disk", 6, resolution=TINY).generator
        gen2 = msh.random_map("disk", 7, resolution=TINY).generator
        vals = []
        for f in (1, 2, 4):
            d1 = gen1.sample(TINY.disk_radial * f, TINY.disk_angular * f)
            d2 = gen2.sample(TINY.disk_radial * f, TINY.disk_angular * f)
            vals.append(wz.integrate_rho_disk(d1, d2, scheme="midpoint"))
        e1, e2 = abs(vals[0] - vals[2]), abs(vals[1] - vals[2])
        assert e2 < e1
        assert np.log2(e1 / e2) > 1.5


class TestWZAction:
    def test_constant_sphere_is_one(self):
        const = msh.constant_disk(qt.IDENTITY, TINY)
        action = wz.wz_action(msh.glue_sphere(const, const), resolution=TINY)
        assert circle_distance(action, CircleValue.one()) == 0.0

    def test_doubled_disk_is_exactly_one(self):
        phi = msh.random_map("disk", 8, resolution=TINY)
        action = wz.wz_action(msh.glue_sphere(phi, phi), resolution=TINY)
        assert circle_distance(action, CircleValue.one()) == 0.0

    def test_two_extensions_differ_by_near_integer(self):
        tau = msh.random_map("loop", 9, resolution=RES)
        phi = msh.fill_disk(tau)
        phi2 = msh.disk_product(msh.bulk_disk(10, resolution=RES), phi)
        sphere = msh.glue_sphere(phi, phi2)
        s1 = wz.raw_wz_integral(sphere, jitter_seed=1, resolution=RES)
        s2 = wz.raw_wz_integral(sphere, jitter_seed=2, resolution=RES)
        assert s1 != s2
        assert wz.integer_defect(s1 - s2) < 1e-4
        assert circle_distance(CircleValue.from_turns(s1),
                               CircleValue.from_turns(s2)) < 1e-4

    def test_orientation_reversal_negates(self):
        phi = msh.random_map("disk", 11, resolution=TINY)
        phi2 = msh.disk_product(msh.bulk_disk(12, resolution=TINY), phi)
        ball = msh.extend_to_ball(msh.glue_sphere(phi, phi2), resolution=TINY)
        flipped = msh.BallMap(
            tuple(msh.BallChart(c.values, -c.orientation) for c in ball.charts),
            boundary=ball.boundary)
        assert abs(wz.integrate_h_ball(ball) + wz.integrate_h_ball(flipped)) < 1e-16

    def test_degree_bookkeeping_oracle(self):
        # short-way and long-way contractions of the unit-distance sphere
        # bracket the total volume twice
        sphere = msh.geodesic_sphere(0.9, RES)
        near = wz.raw_wz_integral(sphere, shells=64, resolution=RES)
        far = wz.integrate_h_ball(wz.far_extension(sphere, shells=64,
                                                   resolution=RES))
        assert round(near - far) == 2
        assert abs(near - far - 2.0) < 0.25
        # the near side alone is the volume of the geodesic ball
        r = 0.9
        exact = (r - np.sin(r) * np.cos(r)) / np.pi
        assert abs(near - exact) < 5e-3

    def test_far_extension_needs_annulus(self):
        phi = msh.random_map("disk", 13, resolution=TINY)
        with pytest.raises(MeshMismatch):
            wz.far_extension(msh.glue_sphere(phi, phi), resolution=TINY)

    def test_trisection_additivity(self):
        triple = msh.random_path_triple(14, resolution=RES)
        p1, p2, p3 = triple.paths()
        phi12 = msh.fill_disk(msh.loop_join(p1, p2))
        phi23 = msh.fill_disk(msh.loop_join(p2, p3))
        fa = msh.fill_disk(msh.loop_join(p1, p3), seed=1)
        fb = msh.fill_disk(msh.loop_join(p1, p3), seed=2)
        sa = wz.raw_wz_integral(msh.trisect_sphere(phi12, phi23, fa, triple),
                                jitter_seed=4, resolution=RES)
        sb = wz.raw_wz_integral(msh.trisect_sphere(phi12, phi23, fb, triple),
                                jitter_seed=5, resolution=RES)
        sg = wz.raw_wz_integral(msh.glue_sphere(fa, fb), jitter_seed=6,
                                resolution=RES)
        assert wz.integer_defect(sa - sb - sg) < 1e-4


class TestFormIdentities:
    def test_gluing_identity_has_unit_coefficient(self):
        # the finite-difference exterior derivative must cancel the product
        # defect of the 3-form with coefficient exactly one
        for seed in range(5):
            out = wz.id1_defect(seed, eps=1e-3)
            ratio = (out["h_product"] - out["h_1"] - out["h_2"]) / (-out["drho"])
            assert abs(ratio - 1.0) < 1e-4

    def test_gluing_identity_fd_convergence(self):
        defects = []
        for eps in (0.16, 0.08, 0.04):
            worst = max(wz.id1_defect(seed, eps=eps)["defect"]
                        for seed in range(5))
            defects.append(worst)
        assert defects[0] > defects[1] > defects[2]
        assert defects[-1] < 1e-2

    def test_rho_cocycle_exact(self):
        worst = max(wz.id2_defect(seed) for seed in range(200))
        assert worst < 1e-12


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        wz.QuadratureConfig(refinement_level=0)
    with pytest.raises(ValueError):
        wz.QuadratureConfig(tolerance=-1.0)
    with pytest.raises(ValueError):
        wz.QuadratureConfig(scheme="simpson")
