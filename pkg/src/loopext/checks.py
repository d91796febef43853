"""Named verification checks, suite configuration, and reports.

Every check is a pure function of its configuration: seeded randomness only,
no shared state, deterministic output regardless of the number of worker
threads.  Records carry the identity tag of the structure they verify, or
the literal tag "plumbing" for artifact-level checks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
import json
import os
import time

import numpy as np

from . import extension as ext
from . import lifting as lf
from . import mesh as msh
from . import quaternions as qt
from . import wz
from .errors import ConfigError, IndeterminateEquivalence
from .lie import (
    CircleValue,
    KAPPA_UNIT_TOTAL,
    bracket,
    circle_distance,
    AlgElement,
    GroupElement,
    exp_map,
    group_mul,
    h_density,
    log_map,
    rho_density,
)

ALL_SUITES = ("lie", "mesh", "wz", "mickelsson", "lifting")

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SuiteConfig:
    resolution: str = "default"
    tolerance: float = 1e-3
    tolerance_ladder: tuple = ()  # per refinement level, coarse to fine
    seeds: tuple = (0,)
    samples: int = 4
    suites: tuple = ALL_SUITES
    refinement_levels: int = 3
    allow_indeterminate: bool = False
    threads: int = None

    def validate(self):
        if not self.suites:
            raise ConfigError("no suites selected")
        for s in self.suites:
            if s not in ALL_SUITES:
                raise ConfigError(f"unknown suite {s!r}")
        if self.tolerance <= 0 or any(t <= 0 for t in self.tolerance_ladder):
            raise ConfigError("tolerances must be positive")
        if self.resolution not in msh.RESOLUTION_PRESETS:
            raise ConfigError(f"unknown resolution preset {self.resolution!r}")
        if self.refinement_levels < 1:
            raise ConfigError("refinement_levels must be >= 1")
        if self.samples < 0:
            raise ConfigError("samples must be >= 0")

    def ladder(self) -> tuple:
        """Per-level tolerances for convergence runs; defaults to the base
        tolerance scaled at second order from the finest level up."""
        if self.tolerance_ladder:
            if len(self.tolerance_ladder) != self.refinement_levels:
                raise ConfigError("tolerance ladder length must match levels")
            return self.tolerance_ladder
        return tuple(self.tolerance * 4.0 ** (self.refinement_levels - 1 - i)
                     for i in range(self.refinement_levels))

    def mesh_resolution(self) -> msh.Resolution:
        return msh.RESOLUTION_PRESETS[self.resolution]

    def worker_count(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        env = os.environ.get("LOOPEXT_THREADS")
        if env:
            return max(1, int(env))
        return os.cpu_count() or 1


@dataclass
class CheckRecord:
    name: str
    anchor: str
    status: str  # pass | fail | indeterminate | vacuous
    max_error: float
    tolerance: float
    resolution: str
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _status(max_error, tolerance):
    return "pass" if max_error <= tolerance else "fail"


# ---------------------------------------------------------------------------
# lie suite
# ---------------------------------------------------------------------------


def check_group_axioms(cfg: SuiteConfig) -> CheckRecord:
    rng = np.random.default_rng(cfg.seeds[0])
    tol = 1e-13
    worst = 0.0
    e = GroupElement.identity()
    i = GroupElement.from_quaternion([0, 1, 0, 0])
    j = GroupElement.from_quaternion([0, 0, 1, 0])
    k = GroupElement.from_quaternion([0, 0, 0, 1])
    worst = max(worst, float(np.abs(group_mul(i, j).q - k.q).max()))
    for _ in range(200):
        g = exp_map(AlgElement.from_coords(rng.normal(size=3)))
        worst = max(worst, float(np.abs(group_mul(e, g).q - g.q).max()))
        worst = max(worst, float(np.abs(group_mul(g, g.inverse()).q - e.q).max()))
        x = AlgElement.from_coords(rng.normal(size=3) * rng.uniform(0.1, 0.9))
        g2 = exp_map(x)
        back = log_map(g2)
        worst = max(worst, float(np.abs(back.x - x.x).max()))
    # near the antipode the logarithm must stay finite and accurate
    d = rng.normal(size=3)
    d = d / np.linalg.norm(d) * (np.pi - 1e-9)
    back = log_map(exp_map(AlgElement.from_coords(d)), antipode_margin=1e-12)
    worst = max(worst, float(np.abs(back.x - d).max() / np.pi))
    return CheckRecord("lie.group-axioms", "plumbing", _status(worst, tol),
                       worst, tol, cfg.resolution)


def check_bracket_jacobi(cfg: SuiteConfig) -> CheckRecord:
    rng = np.random.default_rng(cfg.seeds[0] + 1)
    tol = 1e-12
    worst = 0.0
    for _ in range(300):
        x, y, z = (AlgElement.from_coords(rng.normal(size=3)) for _ in range(3))
        jac = (bracket(x, bracket(y, z)).x + bracket(y, bracket(z, x)).x
               + bracket(z, bracket(x, y)).x)
        scale = max(1.0, float(np.linalg.norm(bracket(x, bracket(y, z)).x)))
        worst = max(worst, float(np.abs(jac).max()) / scale)
        anti = bracket(x, y).x + bracket(y, x).x
        worst = max(worst, float(np.abs(anti).max()))
    return CheckRecord("lie.bracket-jacobi", "plumbing", _status(worst, tol),
                       worst, tol, cfg.resolution)


_PERMS = [((0, 1, 2), 1), ((1, 0, 2), -1), ((0, 2, 1), -1),
          ((1, 2, 0), 1), ((2, 0, 1), 1), ((2, 1, 0), -1)]


def check_h_antisymmetry(cfg: SuiteConfig) -> CheckRecord:
    rng = np.random.default_rng(cfg.seeds[0] + 2)
    tol = 1e-12
    worst = 0.0
    for _ in range(200):
        v = [rng.normal(size=3) for _ in range(3)]
        base = h_density(*v)
        scale = max(1.0, abs(base))
        for perm, sign in _PERMS:
            val = h_density(v[perm[0]], v[perm[1]], v[perm[2]])
            worst = max(worst, abs(val - sign * base) / scale)
        worst = max(worst, abs(h_density(v[0], v[0], v[1])) / scale)
    return CheckRecord("lie.h-antisymmetry", "wz-3form-density",
                       _status(worst, tol), worst, tol, cfg.resolution)


def check_rho_antisymmetry(cfg: SuiteConfig) -> CheckRecord:
    rng = np.random.default_rng(cfg.seeds[0] + 3)
    tol = 1e-12
    worst = 0.0
    for _ in range(200):
        g1 = qt.qexp(rng.normal(size=3))
        g2 = qt.qexp(rng.normal(size=3))
        t1 = (qt.qmul(g1, qt.pure(rng.normal(size=3))),
              qt.qmul(g2, qt.pure(rng.normal(size=3))))
        t2 = (qt.qmul(g1, qt.pure(rng.normal(size=3))),
              qt.qmul(g2, qt.pure(rng.normal(size=3))))
        a = rho_density(g1, g2, t1, t2)
        b = rho_density(g1, g2, t2, t1)
        worst = max(worst, abs(a + b) / max(1.0, abs(a)))
        zero2 = rho_density(g1, g2, (t1[0], np.zeros(4)), (t2[0], np.zeros(4)))
        worst = max(worst, abs(zero2))
        worst = max(worst, abs(rho_density(g1, g2, t1, t1)))
    return CheckRecord("lie.rho-antisymmetry", "rho-cross-term",
                       _status(worst, tol), worst, tol, cfg.resolution)


# ---------------------------------------------------------------------------
# mesh suite
# ---------------------------------------------------------------------------


def check_loop_join(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = 0.0
    worst = 0.0
    for seed in cfg.seeds:
        g1, g2 = msh.random_path_system(seed + 70, 2, resolution=res)
        lp = msh.loop_join(g1, g2)
        n = g1.segments
        # independent index bookkeeping
        expect = np.empty_like(lp.samples)
        for idx in range(2 * n):
            expect[idx] = g1.samples[idx] if idx <= n - 1 else g2.samples[2 * n - idx]
        worst = max(worst, float(np.abs(lp.samples - expect).max()))
        rev = msh.reverse_loop(msh.loop_join(g2, g1))
        worst = max(worst, float(np.abs(rev.samples - lp.samples).max()))
    return CheckRecord("mesh.loop-join", "path-join", _status(worst, tol),
                       worst, tol, cfg.resolution)


def check_seam_agreement(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    worst = 0.0
    for seed in cfg.seeds:
        triple = msh.random_path_triple(seed + 80, resolution=res)
        p1, p2, p3 = triple.paths()
        phi12 = msh.fill_disk(msh.loop_join(p1, p2))
        phi23 = msh.fill_disk(msh.loop_join(p2, p3))
        phi13 = msh.fill_disk(msh.loop_join(p1, p3))
        sphere = msh.trisect_sphere(phi12, phi23, phi13, triple)
        sphere.check_seams(atol=0.0)
        glue = msh.glue_sphere(phi12, msh.disk_product(
            msh.bulk_disk(seed + 81, resolution=res), phi12))
        glue.check_seams(atol=0.0)
    return CheckRecord("mesh.seam-agreement", "longitude-trisection",
                       "pass", worst, 0.0, cfg.resolution)


def check_ball_boundary(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    for seed in cfg.seeds:
        phi = msh.random_map("disk", seed + 90, resolution=res)
        sphere = msh.glue_sphere(phi, phi)
        ball = msh.extend_to_ball(sphere, seed=seed, resolution=res)
        ball.validate()
    return CheckRecord("mesh.ball-boundary", "ball-extension", "pass",
                       0.0, 0.0, cfg.resolution)


def check_random_map_determinism(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    worst = 0.0
    for kind in ("path", "loop", "disk"):
        a = msh.random_map(kind, 42, resolution=res)
        b = msh.random_map(kind, 42, resolution=res)
        arr_a = a.grid if kind == "disk" else a.samples
        arr_b = b.grid if kind == "disk" else b.samples
        if not np.array_equal(arr_a, arr_b):
            worst = 1.0
    zero = msh.random_map("loop", 7, amplitude=0.0, resolution=res)
    if not np.allclose(zero.samples, qt.IDENTITY, atol=0.0, rtol=0.0):
        worst = 1.0
    disk = msh.random_map("disk", 11, resolution=res)
    disk.validate()
    return CheckRecord("mesh.random-map-determinism", "plumbing",
                       _status(worst, 0.0), worst, 0.0, cfg.resolution)


def check_serialization(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    worst = 0.0
    objs = [msh.random_map("path", 3, resolution=res),
            msh.random_map("loop", 4, resolution=res),
            msh.random_map("disk", 5, resolution=res)]
    for obj in objs:
        data = json.loads(json.dumps(msh.map_to_dict(obj)))
        back = msh.map_from_dict(data)
        arrs = ((obj.grid, back.grid) if isinstance(obj, msh.DiskMap)
                else (obj.samples, back.samples))
        if not np.array_equal(*arrs):
            worst = 1.0
    el = ext.random_element(msh.random_map("loop", 6, resolution=res), 7,
                            resolution=res)
    back = ext.element_from_dict(json.loads(json.dumps(ext.element_to_dict(el))))
    if not (np.array_equal(el.phi.grid, back.phi.grid) and el.z.u == back.z.u):
        worst = 1.0
    return CheckRecord("mesh.serialization", "plumbing", _status(worst, 0.0),
                       worst, 0.0, cfg.resolution)


def check_resample_commute(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    # interpolation error scales at second order with the mesh
    tol = cfg.tolerance * (msh.DEFAULT_RESOLUTION.path_segments
                           / res.path_segments) ** 2
    fine = msh.Resolution(path_segments=2 * res.path_segments,
                          disk_radial=2 * res.disk_radial,
                          disk_angular=2 * res.disk_angular,
                          ball_shells=2 * res.ball_shells)
    g1, g2 = msh.random_path_system(cfg.seeds[0] + 95, 2, resolution=res)
    g1f, g2f = msh.random_path_system(cfg.seeds[0] + 95, 2, resolution=fine)
    # join-then-interpolate against the exact fine-grid join
    up = msh.resample_loop(msh.SampledLoop(msh.loop_join(g1, g2).samples),
                           fine.disk_angular)
    direct = msh.loop_join(g1f, g2f)
    worst = float(np.abs(up.samples - direct.samples).max())
    return CheckRecord("mesh.resample-commute", "plumbing",
                       _status(worst, tol), worst, tol, cfg.resolution,
                       details={"note": "geodesic interpolation against the "
                                        "exact finer sampling"})


# ---------------------------------------------------------------------------
# wz suite
# ---------------------------------------------------------------------------


def check_calibration(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    base = max(8, res.disk_radial // 2)
    qc = wz.QuadratureConfig(refinement_level=max(3, cfg.refinement_levels),
                             tolerance=1e-2)
    study = wz.calibration_study(qc, base_level=base)
    pairing = wz.calibrate_pairing(qc, base_level=base)
    total_finest = study["estimates"][-1] * pairing.kappa
    err = abs(total_finest - 1.0)
    order = study["fitted_order"] or 0.0
    tol = 1e-3 * (64.0 / res.disk_radial) ** 2
    ok = err <= tol and order >= 1.8
    details = {"kappa": pairing.kappa,
               "closed_form": KAPPA_UNIT_TOTAL,
               "kappa_rel_gap": abs(pairing.kappa - KAPPA_UNIT_TOTAL) / KAPPA_UNIT_TOTAL,
               "fitted_order": order,
               "levels": study["levels"]}
    return CheckRecord("wz.calibration", "generator-normalization",
                       "pass" if ok else "fail", err, tol, cfg.resolution,
                       details=details)


def check_rho_vanishing(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    phi = msh.random_map("disk", cfg.seeds[0] + 30, resolution=res)
    const = msh.constant_disk(qt.qexp(np.array([0.3, -0.2, 0.5])), res)
    worst = max(abs(wz.integrate_rho_disk(phi, const)),
                abs(wz.integrate_rho_disk(const, phi)),
                abs(wz.integrate_rho_disk(phi, const, scheme="midpoint")),
                abs(wz.integrate_rho_disk(const, phi, scheme="midpoint")))
    return CheckRecord("wz.rho-vanishing", "rho-cross-term",
                       _status(worst, 1e-15), worst, 1e-15, cfg.resolution)


def check_rho_convergence(cfg: SuiteConfig) -> CheckRecord:
    base = cfg.mesh_resolution()
    gen1 = msh.random_map("disk", cfg.seeds[0] + 31, resolution=base).generator
    gen2 = msh.random_map("disk", cfg.seeds[0] + 32, resolution=base).generator
    values = []
    sizes = []
    for f in (1, 2, 4):
        nr, nt = base.disk_radial * f, base.disk_angular * f
        d1, d2 = gen1.sample(nr, nt), gen2.sample(nr, nt)
        values.append(wz.integrate_rho_disk(d1, d2, scheme="midpoint"))
        sizes.append(nr)
    errs = [abs(v - values[-1]) for v in values[:-1]]
    order = wz.fit_decay_order([1.0 / s for s in sizes[:-1]], errs)
    tol = cfg.tolerance
    ok = errs[1] < errs[0] and order >= 1.5 and errs[-1] <= tol
    return CheckRecord("wz.rho-convergence", "mickelsson-product",
                       "pass" if ok else "fail", errs[-1], tol, cfg.resolution,
                       details={"errors": errs, "fitted_order": order})


def _random_sphere(seed, res):
    tau = msh.random_map("loop", seed, resolution=res)
    phi = msh.fill_disk(tau, seed=0)
    bulk = msh.bulk_disk(seed + 1, resolution=res)
    return msh.glue_sphere(phi, msh.disk_product(bulk, phi))


def check_wz_integrality(cfg: SuiteConfig, samples: int = None,
                         tol: float = None) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = cfg.tolerance if tol is None else tol
    samples = cfg.samples if samples is None else samples
    worst = 0.0
    worst_circle = 0.0
    for k in range(samples):
        sphere = _random_sphere(1000 + 17 * k + cfg.seeds[0], res)
        s1 = wz.raw_wz_integral(sphere, jitter_seed=2 * k + 1, resolution=res)
        s2 = wz.raw_wz_integral(sphere, jitter_seed=2 * k + 2, resolution=res)
        worst = max(worst, wz.integer_defect(s1 - s2))
        worst_circle = max(worst_circle, circle_distance(
            CircleValue.from_turns(s1), CircleValue.from_turns(s2)))
    err = max(worst, worst_circle)
    return CheckRecord("wz.integrality", "wz-term-mod-integers",
                       _status(err, tol), err, tol, cfg.resolution,
                       details={"samples": samples,
                                "max_integer_defect": worst,
                                "max_circle_distance": worst_circle})


def check_orientation_flip(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    sphere = _random_sphere(77 + cfg.seeds[0], res)
    ball = msh.extend_to_ball(sphere, seed=1, resolution=res)
    flipped = msh.BallMap(
        tuple(msh.BallChart(c.values, -c.orientation) for c in ball.charts),
        boundary=ball.boundary)
    a = wz.integrate_h_ball(ball)
    b = wz.integrate_h_ball(flipped)
    worst = abs(a + b)
    return CheckRecord("wz.orientation-flip", "wz-term-mod-integers",
                       _status(worst, 1e-15), worst, 1e-15, cfg.resolution)


def check_degree_bookkeeping(cfg: SuiteConfig) -> CheckRecord:
    # fixed oracle resolution: the far sweep covers most of the group, so
    # it needs the full mesh regardless of the suite preset
    res = msh.DEFAULT_RESOLUTION
    sphere = msh.geodesic_sphere(0.9, res)
    near = wz.raw_wz_integral(sphere, jitter_seed=0, shells=64, resolution=res)
    far = wz.integrate_h_ball(wz.far_extension(sphere, shells=64, resolution=res))
    diff = near - far
    tol = 0.06
    err = abs(diff - 2.0)
    return CheckRecord("wz.degree-bookkeeping", "degree-bookkeeping",
                       _status(err, tol), err, tol, cfg.resolution,
                       details={"near": near, "far": far, "difference": diff,
                                "expected_integer": 2})


def check_trisection_additivity(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = cfg.tolerance
    worst = 0.0
    for k in range(max(1, cfg.samples // 2)):
        triple = msh.random_path_triple(500 + k + cfg.seeds[0], resolution=res)
        p1, p2, p3 = triple.paths()
        phi12 = msh.fill_disk(msh.loop_join(p1, p2))
        phi23 = msh.fill_disk(msh.loop_join(p2, p3))
        phi13a = msh.fill_disk(msh.loop_join(p1, p3), seed=3 * k + 1)
        phi13b = msh.fill_disk(msh.loop_join(p1, p3), seed=3 * k + 2)
        sa = wz.raw_wz_integral(
            msh.trisect_sphere(phi12, phi23, phi13a, triple),
            jitter_seed=k + 1, resolution=res)
        sb = wz.raw_wz_integral(
            msh.trisect_sphere(phi12, phi23, phi13b, triple),
            jitter_seed=k + 2, resolution=res)
        sglue = wz.raw_wz_integral(msh.glue_sphere(phi13a, phi13b),
                                   jitter_seed=k + 3, resolution=res)
        worst = max(worst, wz.integer_defect(sa - sb - sglue))
    return CheckRecord("wz.trisection-additivity", "fusion-independence-of-filling",
                       _status(worst, tol), worst, tol, cfg.resolution)


def check_id1(cfg: SuiteConfig, samples: int = None, eps: float = 0.02) -> CheckRecord:
    tol = 1e-2
    samples = cfg.samples * 5 if samples is None else samples
    worst = 0.0
    for k in range(samples):
        out = wz.id1_defect(cfg.seeds[0] + k, eps=eps)
        worst = max(worst, out["defect"])
    return CheckRecord("wz.id1-gluing", "gluing-identity-3form",
                       _status(worst, tol), worst, tol, cfg.resolution,
                       details={"eps": eps, "samples": samples})


def check_id2(cfg: SuiteConfig, samples: int = 1000) -> CheckRecord:
    tol = 1e-10
    worst = 0.0
    for k in range(samples):
        worst = max(worst, wz.id2_defect(cfg.seeds[0] + k))
    return CheckRecord("wz.id2-cocycle", "rho-cocycle", _status(worst, tol),
                       worst, tol, cfg.resolution, details={"samples": samples})


# ---------------------------------------------------------------------------
# mickelsson suite
# ---------------------------------------------------------------------------


def _equiv_cfg(cfg: SuiteConfig) -> ext.EquivalenceConfig:
    return ext.EquivalenceConfig(circle_tol=cfg.tolerance,
                                 resolution=cfg.mesh_resolution())


def check_equivalence_relation(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    ecfg = _equiv_cfg(cfg)
    tau = msh.random_map("loop", cfg.seeds[0] + 200, resolution=res)
    a = ext.random_element(tau, cfg.seeds[0] + 201, resolution=res)
    b = ext.random_element(tau, cfg.seeds[0] + 202, resolution=res)
    failures = []
    if not ext.equivalent(a, a, ecfg):
        failures.append("reflexivity")
    action = wz.wz_action(ext.glue_representatives(a, b, ecfg),
                          jitter_seed=0, resolution=res)
    b_eq = b.with_z(a.z.times(action.inverse()))
    if not (ext.equivalent(a, b_eq, ecfg) and ext.equivalent(b_eq, a, ecfg)):
        failures.append("definitional-construction")
    if ext.equivalent(a, ext.scalar_mul(b_eq, CircleValue.from_turns(0.31)), ecfg):
        failures.append("z-offset-accepted")
    try:
        ext.equivalent(a, ext.scalar_mul(b_eq, CircleValue.from_turns(
            3.0 * cfg.tolerance)), ecfg)
        failures.append("gray-band-not-flagged")
    except IndeterminateEquivalence:
        pass
    worst = float(len(failures))
    return CheckRecord("mickelsson.equivalence-relation", "wz-term-mod-integers",
                       _status(worst, 0.0), worst, 0.0, cfg.resolution,
                       details={"failures": failures})


def check_product_formula(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    tau1 = msh.random_map("loop", cfg.seeds[0] + 210, resolution=res)
    tau2 = msh.random_map("loop", cfg.seeds[0] + 211, resolution=res)
    a = ext.random_element(tau1, cfg.seeds[0] + 212, resolution=res)
    b = ext.random_element(tau2, cfg.seeds[0] + 213, resolution=res)
    p = ext.product(a, b)
    expected = a.z.times(b.z).times(
        CircleValue.from_turns(-wz.integrate_rho_disk(a.phi, b.phi)))
    worst = circle_distance(p.z, expected)
    worst = max(worst, float(np.abs(
        p.phi.grid - qt.qmul(a.phi.grid, b.phi.grid)).max()))
    # projection is a homomorphism, exactly
    proj = ext.project(p).samples
    expect_proj = qt.qmul(ext.project(a).samples, ext.project(b).samples)
    worst = max(worst, float(np.abs(proj - expect_proj).max()))
    return CheckRecord("mickelsson.product-formula", "mickelsson-product",
                       _status(worst, 1e-15), worst, 1e-15, cfg.resolution)


def check_product_units(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    ecfg = _equiv_cfg(cfg)
    tau = msh.random_map("loop", cfg.seeds[0] + 220, resolution=res)
    a = ext.random_element(tau, cfg.seeds[0] + 221, resolution=res)
    e = ext.identity_element(res)
    failures = []
    if not ext.equivalent(ext.product(e, a), a, ecfg):
        failures.append("left-unit")
    if not ext.equivalent(ext.product(a, e), a, ecfg):
        failures.append("right-unit")
    inv = ext.inverse(a)
    if not ext.equivalent(ext.product(a, inv), e, ecfg):
        failures.append("right-inverse")
    if not ext.equivalent(ext.product(inv, a), e, ecfg):
        failures.append("left-inverse")
    dbl = ext.inverse(inv)
    if circle_distance(dbl.z, a.z) > 1e-12 or not np.array_equal(
            dbl.phi.grid, a.phi.grid):
        failures.append("involution")
    w = CircleValue.from_turns(0.2)
    if not ext.equivalent(ext.product(ext.scalar_mul(a, w), inv),
                          ext.scalar_mul(ext.product(a, inv), w), ecfg):
        failures.append("centrality")
    if circle_distance(ext.scalar_mul(ext.scalar_mul(a, w), w).z,
                       ext.scalar_mul(a, w.times(w)).z) > 1e-15:
        failures.append("scalar-composition")
    worst = float(len(failures))
    return CheckRecord("mickelsson.product-units", "circle-action-centrality",
                       _status(worst, 0.0), worst, 0.0, cfg.resolution,
                       details={"failures": failures})


def check_product_class_invariance(cfg: SuiteConfig, samples: int = None,
                                   tol: float = None) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = cfg.tolerance if tol is None else tol
    samples = cfg.samples if samples is None else samples
    ecfg = ext.EquivalenceConfig(circle_tol=tol, resolution=res)
    worst = 0.0
    for k in range(samples):
        s0 = cfg.seeds[0] + 230 + 13 * k
        tau1 = msh.random_map("loop", s0, resolution=res)
        tau2 = msh.random_map("loop", s0 + 1, resolution=res)
        a = ext.random_element(tau1, s0 + 2, resolution=res)
        b = ext.random_element(tau2, s0 + 3, resolution=res)
        # rebuild both factors over rebuilt fillings, transporting z along
        aj = _rebuilt_representative(a, s0 + 4, k + 1, res)
        bj = _rebuilt_representative(b, s0 + 5, k + 2, res)
        worst = max(worst, ext.circle_defect(ext.product(aj, bj),
                                             ext.product(a, b), ecfg))
    return CheckRecord("mickelsson.product-class-invariance",
                       "product-class-invariance", _status(worst, tol), worst,
                       tol, cfg.resolution, details={"samples": samples})


def _rebuilt_representative(a: ext.ExtElement, bulk_seed: int,
                            jitter_seed: int, res) -> ext.ExtElement:
    """Equivalent element over a genuinely different filling (fresh bulk
    texture, fresh extension jitter for the transported phase)."""
    phi2 = msh.disk_product(msh.bulk_disk(bulk_seed, resolution=res), a.phi)
    action = wz.wz_action(msh.glue_sphere(phi2, a.phi),
                          jitter_seed=jitter_seed, resolution=res)
    return ext.ExtElement(phi2, a.z.times(action))


def check_product_associativity(cfg: SuiteConfig, samples: int = None,
                                tol: float = None) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = cfg.tolerance if tol is None else tol
    samples = cfg.samples if samples is None else samples
    ecfg = ext.EquivalenceConfig(circle_tol=tol, resolution=res)
    worst = 0.0
    for k in range(samples):
        s0 = cfg.seeds[0] + 260 + 7 * k
        elems = [ext.random_element(msh.random_map("loop", s0 + i, resolution=res),
                                    s0 + 10 + i, resolution=res) for i in range(3)]
        a, b, c = elems
        if k % 2 == 1:
            # exercise the edge-log quadrature path as well
            a = ext.ExtElement(msh.DiskMap(a.phi.grid, a.phi.collar_fraction), a.z)
        lhs = ext.product(ext.product(a, b), c)
        rhs = ext.product(a, ext.product(b, c))
        worst = max(worst, ext.circle_defect(lhs, rhs, ecfg))
    return CheckRecord("mickelsson.product-associativity", "product-associativity",
                       _status(worst, tol), worst, tol, cfg.resolution,
                       details={"samples": samples})


def check_product_mutation(cfg: SuiteConfig) -> CheckRecord:
    """Perturbing the circle part must break equivalence: the class checkers
    are sensitive, not vacuous."""
    res = cfg.mesh_resolution()
    ecfg = _equiv_cfg(cfg)
    s0 = cfg.seeds[0] + 280
    tau1 = msh.random_map("loop", s0, resolution=res)
    tau2 = msh.random_map("loop", s0 + 1, resolution=res)
    a = ext.random_element(tau1, s0 + 2, resolution=res)
    b = ext.random_element(tau2, s0 + 3, resolution=res)
    mutated = ext.scalar_mul(b, CircleValue.from_turns(0.137))
    good = ext.product(a, b)
    bad = ext.product(a, mutated)
    caught = not ext.equivalent(good, bad, ecfg)
    defect = ext.circle_defect(good, bad, ecfg)
    return CheckRecord("mickelsson.product-mutation", "product-class-invariance",
                       "pass" if caught else "fail", 0.0 if caught else 1.0,
                       0.0, cfg.resolution, details={"mutation_defect": defect})


def check_fusion_welldefined(cfg: SuiteConfig, samples: int = None,
                             tol: float = None) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = cfg.tolerance if tol is None else tol
    samples = cfg.samples if samples is None else samples
    ecfg = ext.EquivalenceConfig(circle_tol=tol, resolution=res)
    worst = 0.0
    for k in range(samples):
        s0 = cfg.seeds[0] + 300 + 11 * k
        triple = msh.random_path_triple(s0, resolution=res)
        ctx = ext.FusionContext(triple)
        p1, p2, p3 = ctx.paths
        a12 = ext.random_element(msh.loop_join(p1, p2), s0 + 1, resolution=res)
        a23 = ext.random_element(msh.loop_join(p2, p3), s0 + 2, resolution=res)
        f1 = ext.fusion(a12, a23, ctx, fill_seed=2 * k + 1, jitter_seed=k + 1)
        f2 = ext.fusion(a12, a23, ctx, fill_seed=2 * k + 2, jitter_seed=k + 2)
        worst = max(worst, ext.circle_defect(f1, f2, ecfg))
    return CheckRecord("mickelsson.fusion-welldefined",
                       "fusion-independence-of-filling", _status(worst, tol),
                       worst, tol, cfg.resolution, details={"samples": samples})


def check_fusion_equivariance(cfg: SuiteConfig) -> CheckRecord:
    res = cfg.mesh_resolution()
    s0 = cfg.seeds[0] + 320
    triple = msh.random_path_triple(s0, resolution=res)
    ctx = ext.FusionContext(triple)
    p1, p2, p3 = ctx.paths
    a12 = ext.random_element(msh.loop_join(p1, p2), s0 + 1, resolution=res)
    a23 = ext.random_element(msh.loop_join(p2, p3), s0 + 2, resolution=res)
    w = CircleValue.from_turns(0.271)
    base = ext.fusion(a12, a23, ctx)
    worst = max(
        circle_distance(ext.fusion(ext.scalar_mul(a12, w), a23, ctx).z,
                        base.z.times(w)),
        circle_distance(ext.fusion(a12, ext.scalar_mul(a23, w), ctx).z,
                        base.z.times(w)),
    )
    return CheckRecord("mickelsson.fusion-equivariance",
                       "circle-action-centrality", _status(worst, 1e-14),
                       worst, 1e-14, cfg.resolution)


def check_fusion_associativity(cfg: SuiteConfig, samples: int = None,
                               tol: float = None) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = cfg.tolerance if tol is None else tol
    samples = cfg.samples if samples is None else samples
    ecfg = ext.EquivalenceConfig(circle_tol=tol, resolution=res)
    worst = 0.0
    for k in range(samples):
        s0 = cfg.seeds[0] + 340 + 17 * k
        paths = msh.random_path_system(s0, 4, resolution=res)
        p1, p2, p3, p4 = paths
        a12 = ext.random_element(msh.loop_join(p1, p2), s0 + 1, resolution=res)
        a23 = ext.random_element(msh.loop_join(p2, p3), s0 + 2, resolution=res)
        a34 = ext.random_element(msh.loop_join(p3, p4), s0 + 3, resolution=res)
        lhs = ext.fusion(ext.fusion(a12, a23, ext.FusionContext(
            msh.PathTriple(p1, p2, p3)), fill_seed=k + 1), a34,
            ext.FusionContext(msh.PathTriple(p1, p3, p4)), fill_seed=k + 2,
            jitter_seed=k + 1)
        rhs = ext.fusion(a12, ext.fusion(a23, a34, ext.FusionContext(
            msh.PathTriple(p2, p3, p4)), fill_seed=k + 3), ext.FusionContext(
            msh.PathTriple(p1, p2, p4)), fill_seed=k + 4, jitter_seed=k + 2)
        worst = max(worst, ext.circle_defect(lhs, rhs, ecfg))
    return CheckRecord("mickelsson.fusion-associativity", "fusion-associativity",
                       _status(worst, tol), worst, tol, cfg.resolution,
                       details={"samples": samples})


def check_fusion_multiplicativity(cfg: SuiteConfig, samples: int = None,
                                  tol: float = None) -> CheckRecord:
    res = cfg.mesh_resolution()
    tol = cfg.tolerance if tol is None else tol
    samples = cfg.samples if samples is None else samples
    ecfg = ext.EquivalenceConfig(circle_tol=tol, resolution=res)
    worst = 0.0
    for k in range(samples):
        s0 = cfg.seeds[0] + 360 + 19 * k
        tripA = msh.random_path_triple(s0, resolution=res)
        tripB = msh.random_path_triple(s0 + 1, resolution=res)
        qa = tripA.paths()
        qb = tripB.paths()
        prod_trip = msh.PathTriple(*[msh.path_product(x, y)
                                     for x, y in zip(qa, qb)])
        a12 = ext.random_element(msh.loop_join(qa[0], qa[1]), s0 + 2, resolution=res)
        a23 = ext.random_element(msh.loop_join(qa[1], qa[2]), s0 + 3, resolution=res)
        b12 = ext.random_element(msh.loop_join(qb[0], qb[1]), s0 + 4, resolution=res)
        b23 = ext.random_element(msh.loop_join(qb[1], qb[2]), s0 + 5, resolution=res)
        lhs = ext.product(ext.fusion(a12, a23, ext.FusionContext(tripA),
                                     fill_seed=k + 1),
                          ext.fusion(b12, b23, ext.FusionContext(tripB),
                                     fill_seed=k + 2))
        rhs = ext.fusion(ext.product(a12, b12), ext.product(a23, b23),
                         ext.FusionContext(prod_trip), fill_seed=k + 3,
                         jitter_seed=k + 1)
        worst = max(worst, ext.circle_defect(lhs, rhs, ecfg))
    return CheckRecord("mickelsson.fusion-multiplicativity",
                       "fusion-multiplicativity", _status(worst, tol), worst,
                       tol, cfg.resolution, details={"samples": samples})


# ---------------------------------------------------------------------------
# lifting suite
# ---------------------------------------------------------------------------


def _bundle(cfg: SuiteConfig) -> lf.SampledBundle:
    return lf.SampledBundle.for_resolution(cfg.mesh_resolution())


def check_delta_cocycle(cfg: SuiteConfig) -> CheckRecord:
    bundle = _bundle(cfg)
    tol = 1e-14
    worst = 0.0
    for seed in cfg.seeds:
        base, (f1, f2, f3) = lf.sample_bundle_loops(bundle, seed + 400)
        t1, t2, t3 = (lf.BundleLoop(base, f) for f in (f1, f2, f3))
        d12 = lf.difference_loop(t1, t2)
        d23 = lf.difference_loop(t2, t3)
        d13 = lf.difference_loop(t1, t3)
        comp = msh.loop_product(d12, d23)
        worst = max(worst, float(np.abs(comp.samples - d13.samples).max()))
        worst = max(worst, float(np.abs(
            lf.difference_loop(t1, t1).samples - qt.IDENTITY).max()))
    return CheckRecord("lifting.delta-cocycle", "difference-map",
                       _status(worst, tol), worst, tol, cfg.resolution)


def check_gerbe_mu(cfg: SuiteConfig) -> CheckRecord:
    bundle = _bundle(cfg)
    res = bundle.resolution
    ecfg = _equiv_cfg(cfg)
    worst = 0.0
    s0 = cfg.seeds[0] + 420
    q12, q23, _ = lf.sample_gerbe_chain(bundle, s0)
    out = lf.gerbe_mu(q12, q23)
    out.validate(atol=1e-12)
    expected = ext.product(q12.beta, q23.beta)
    worst = max(worst, circle_distance(out.beta.z, expected.z))
    # associativity up to equivalence on a random triple
    base, (f1, f2, f3) = lf.sample_bundle_loops(bundle, s0 + 1, count=3)
    rng = np.random.default_rng(s0 + 2)
    f4 = msh.FourierLoopGenerator.from_rng(rng, 3, 0.5).sample(bundle.base_samples)
    loops = [lf.BundleLoop(base, f) for f in (f1, f2, f3, f4)]
    qs = []
    for i in range(3):
        delta = lf.difference_loop(loops[i], loops[i + 1])
        qs.append(lf.GerbeElement(loops[i], loops[i + 1],
                                  ext.random_element(delta, s0 + 10 + i,
                                                     resolution=res)))
    lhs = lf.gerbe_mu(lf.gerbe_mu(qs[0], qs[1]), qs[2])
    rhs = lf.gerbe_mu(qs[0], lf.gerbe_mu(qs[1], qs[2]))
    worst = max(worst, ext.circle_defect(lhs.beta, rhs.beta, ecfg))
    return CheckRecord("lifting.gerbe-mu", "gerbe-product",
                       _status(worst, cfg.tolerance), worst, cfg.tolerance,
                       cfg.resolution)


def check_internal_fusion_preserving(cfg: SuiteConfig, samples: int = None,
                                     tol: float = None) -> CheckRecord:
    """The gerbe product is fusion-preserving for the internal fusion."""
    bundle = _bundle(cfg)
    res = bundle.resolution
    tol = cfg.tolerance if tol is None else tol
    samples = max(1, (cfg.samples if samples is None else samples) // 2)
    ecfg = ext.EquivalenceConfig(circle_tol=tol, resolution=res)
    worst = 0.0
    for k in range(samples):
        s0 = cfg.seeds[0] + 440 + 23 * k
        ctx = lf.sample_fibered_data(bundle, s0, n_components=3)

        def gerbe(i, j, a, b, seed):
            deltas = ctx.delta_paths(a, b)
            loop = msh.loop_join(deltas[i], deltas[j])
            return lf.GerbeElement(
                ctx.bundle_loop(i, j, a), ctx.bundle_loop(i, j, b),
                ext.random_element(loop, seed, resolution=res))

        q12 = gerbe(0, 1, 0, 1, s0 + 1)
        q23 = gerbe(1, 2, 0, 1, s0 + 2)
        r12 = gerbe(0, 1, 1, 2, s0 + 3)
        r23 = gerbe(1, 2, 1, 2, s0 + 4)

        ctx01 = lf.FiberedPathData(ctx.base_paths,
                                   (ctx.components[0], ctx.components[1]))
        ctx12 = lf.FiberedPathData(ctx.base_paths,
                                   (ctx.components[1], ctx.components[2]))
        ctx02 = lf.FiberedPathData(ctx.base_paths,
                                   (ctx.components[0], ctx.components[2]))
        lhs = lf.gerbe_mu(lf.internal_fusion(q12, q23, ctx01),
                          lf.internal_fusion(r12, r23, ctx12))
        rhs = lf.internal_fusion(lf.gerbe_mu(q12, r12), lf.gerbe_mu(q23, r23),
                                 ctx02, fill_seed=k + 1, jitter_seed=k + 1)
        worst = max(worst, ext.circle_defect(lhs.beta, rhs.beta, ecfg))
    return CheckRecord("lifting.internal-fusion-preserving", "mu-fusion-preserving",
                       _status(worst, tol), worst, tol, cfg.resolution,
                       details={"samples": samples})


def check_roundtrips(cfg: SuiteConfig, elements: int = None) -> CheckRecord:
    bundle = _bundle(cfg)
    res = bundle.resolution
    tol = 1e-12
    elements = (25 * cfg.samples if elements is None else elements)
    lift = lf.canonical_fusion_lift(bundle)
    triv = lf.trivialization_from_lift(lift)
    lift2 = lf.lift_from_trivialization(triv)
    triv2 = lf.trivialization_from_lift(lift2)
    worst = 0.0
    for k in range(elements):
        s0 = cfg.seeds[0] + 460 + k
        q12, q23, t = lf.sample_gerbe_chain(bundle, s0)
        g = q12.beta
        a1, a2 = lift.act(t, g), lift2.act(t, g)
        d = lf.fiber_element_defect(a1, a2)
        worst = max(worst, d["base"], d["fiber"], d["grid"], d["z"])
        k1, k2 = triv.kappa(q23, t), triv2.kappa(q23, t)
        d = lf.fiber_element_defect(k1, k2)
        worst = max(worst, d["base"], d["fiber"], d["grid"], d["z"])
    return CheckRecord("lifting.roundtrips", "lift-trivialization-equivalence",
                       _status(worst, tol), worst, tol, cfg.resolution,
                       details={"elements": 2 * elements})


def check_action_condition_canonical(cfg: SuiteConfig, samples: int = None,
                                     tol: float = 1e-9) -> CheckRecord:
    bundle = _bundle(cfg)
    samples = cfg.samples if samples is None else samples
    triv = lf.canonical_trivialization(bundle)
    rep = lf.check_action_condition(triv, samples, cfg.seeds[0] + 480, tol)
    status = "vacuous" if rep["vacuous"] else _status(rep["max_error"], tol)
    return CheckRecord("lifting.action-condition", "action-compatibility",
                       status, rep["max_error"], tol, cfg.resolution,
                       details={"samples": samples})


def check_action_condition_mutated(cfg: SuiteConfig) -> CheckRecord:
    bundle = _bundle(cfg)
    triv = lf.mutate_kappa(lf.canonical_trivialization(bundle))
    rep = lf.check_action_condition(triv, max(2, cfg.samples // 2),
                                    cfg.seeds[0] + 490, 1e-9)
    caught = not rep["passed"]
    return CheckRecord("lifting.action-condition-mutated", "action-compatibility",
                       "pass" if caught else "fail",
                       0.0 if caught else 1.0, 0.0, cfg.resolution,
                       details={"mutation_error": rep["max_error"]})


def check_right_action(cfg: SuiteConfig) -> CheckRecord:
    bundle = _bundle(cfg)
    res = bundle.resolution
    tol = 1e-9
    lift = lf.canonical_fusion_lift(bundle)
    worst = 0.0
    for k in range(max(2, cfg.samples // 2)):
        s0 = cfg.seeds[0] + 500 + k
        q12, q23, t = lf.sample_gerbe_chain(bundle, s0)
        g1, g2 = q12.beta, q23.beta
        lhs = lift.act(lift.act(t, g1), g2)
        rhs = lift.act(t, ext.product(g1, g2))
        worst = max(worst, circle_distance(lhs.element.z, rhs.element.z))
        worst = max(worst, float(np.abs(
            lhs.element.phi.grid - rhs.element.phi.grid).max()))
    return CheckRecord("lifting.right-action", "action-compatibility",
                       _status(worst, tol), worst, tol, cfg.resolution)


def check_fusion_equivalence_canonical(cfg: SuiteConfig, samples: int = None,
                                       tol: float = None) -> CheckRecord:
    bundle = _bundle(cfg)
    samples = cfg.samples if samples is None else samples
    tol = cfg.tolerance if tol is None else tol
    triv = lf.canonical_trivialization(bundle)
    rep = lf.check_fusion_equivalence(triv, samples, cfg.seeds[0] + 520, tol)
    ok = rep["concordant"] and rep["kappa_pass"] and rep["action_pass"]
    err = max(rep["max_kappa_error"], rep["max_action_error"])
    status = "vacuous" if rep["vacuous"] else ("pass" if ok else "fail")
    return CheckRecord("lifting.fusion-equivalence", "fusion-lift-equivalence",
                       status, err, tol, cfg.resolution,
                       details={"samples": samples,
                                "discordant": rep["discordant"],
                                "max_inverse_error": rep["max_inverse_error"]})


def check_fusion_equivalence_mutated(cfg: SuiteConfig, samples: int = None,
                                     tol: float = None) -> CheckRecord:
    bundle = _bundle(cfg)
    samples = max(2, (cfg.samples if samples is None else samples))
    tol = cfg.tolerance if tol is None else tol
    base = lf.canonical_trivialization(bundle)
    outcomes = {}
    bad = 0.0
    for label, mutant in (("fusion-twist", lf.mutate_fusion(base)),
                          ("kappa-twist", lf.mutate_kappa(base))):
        rep = lf.check_fusion_equivalence(mutant, samples,
                                          cfg.seeds[0] + 540, tol)
        both_fail = (not rep["kappa_pass"]) and (not rep["action_pass"])
        outcomes[label] = {"both_fail": both_fail,
                           "discordant": rep["discordant"],
                           "max_kappa_error": rep["max_kappa_error"],
                           "max_action_error": rep["max_action_error"]}
        if not both_fail or rep["discordant"]:
            bad = 1.0
    return CheckRecord("lifting.fusion-equivalence-mutated",
                       "fusion-lift-equivalence", _status(bad, 0.0), bad, 0.0,
                       cfg.resolution, details=outcomes)


def check_scalar_inversion(cfg: SuiteConfig) -> CheckRecord:
    bundle = _bundle(cfg)
    res = bundle.resolution
    tol = 1e-14
    lift = lf.canonical_fusion_lift(bundle)
    p = lift.sample(cfg.seeds[0] + 560)
    w = CircleValue.from_turns(0.3)
    direct = lift.scalar(p, w)
    central = ext.scalar_mul(ext.identity_element(res), w.inverse())
    via_action = lift.act(p, central)
    worst = circle_distance(direct.element.z, via_action.element.z)
    covered = lift.act(p, ext.random_element(
        lf.sample_bundle_loops(bundle, cfg.seeds[0] + 561, count=1)[1][0],
        cfg.seeds[0] + 562, resolution=res))
    proj_gap = float(np.abs(ext.project(covered.element).samples
                            - covered.loop.fiber.samples).max())
    worst = max(worst, proj_gap)
    return CheckRecord("lifting.scalar-inversion", "inversion-embedding",
                       _status(worst, tol), worst, tol, cfg.resolution)


# ---------------------------------------------------------------------------
# registry and runners
# ---------------------------------------------------------------------------

CHECKS = (
    ("lie", check_group_axioms),
    ("lie", check_bracket_jacobi),
    ("lie", check_h_antisymmetry),
    ("lie", check_rho_antisymmetry),
    ("mesh", check_loop_join),
    ("mesh", check_seam_agreement),
    ("mesh", check_ball_boundary),
    ("mesh", check_random_map_determinism),
    ("mesh", check_serialization),
    ("mesh", check_resample_commute),
    ("wz", check_calibration),
    ("wz", check_rho_vanishing),
    ("wz", check_rho_convergence),
    ("wz", check_wz_integrality),
    ("wz", check_orientation_flip),
    ("wz", check_degree_bookkeeping),
    ("wz", check_trisection_additivity),
    ("wz", check_id1),
    ("wz", check_id2),
    ("mickelsson", check_equivalence_relation),
    ("mickelsson", check_product_formula),
    ("mickelsson", check_product_units),
    ("mickelsson", check_product_class_invariance),
    ("mickelsson", check_product_associativity),
    ("mickelsson", check_product_mutation),
    ("mickelsson", check_fusion_welldefined),
    ("mickelsson", check_fusion_equivariance),
    ("mickelsson", check_fusion_associativity),
    ("mickelsson", check_fusion_multiplicativity),
    ("lifting", check_delta_cocycle),
    ("lifting", check_gerbe_mu),
    ("lifting", check_internal_fusion_preserving),
    ("lifting", check_roundtrips),
    ("lifting", check_action_condition_canonical),
    ("lifting", check_action_condition_mutated),
    ("lifting", check_right_action),
    ("lifting", check_fusion_equivalence_canonical),
    ("lifting", check_fusion_equivalence_mutated),
    ("lifting", check_scalar_inversion),
)


def _run_one(fn, cfg):
    start = time.perf_counter()
    try:
        record = fn(cfg)
    except IndeterminateEquivalence as exc:
        record = CheckRecord(fn.__name__, "plumbing", "indeterminate",
                             exc.distance, exc.tolerance, cfg.resolution,
                             details={"reason": str(exc)})
    except Exception as exc:  # a crashed check is a failed check
        record = CheckRecord(fn.__name__, "plumbing", "fail", float("inf"),
                             0.0, cfg.resolution,
                             details={"exception": f"{type(exc).__name__}: {exc}"})
    record.wall_time = time.perf_counter() - start
    return record


def run_suite(config: SuiteConfig) -> dict:
    """Execute all selected checks; deterministic report body.

    Checks run in a worker pool sized by config.threads (or the
    LOOPEXT_THREADS environment variable); each check is single-seeded and
    pure, and records are merged in registry order, so the report body is
    identical for any worker count.
    """
    config.validate()
    selected = [(suite, fn) for suite, fn in CHECKS if suite in config.suites]
    workers = config.worker_count()
    records = [None] * len(selected)
    if workers == 1:
        for idx, (_, fn) in enumerate(selected):
            records[idx] = _run_one(fn, config)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_one, fn, config): idx
                       for idx, (_, fn) in enumerate(selected)}
            for fut, idx in futures.items():
                records[idx] = fut.result()
    statuses = [r.status for r in records]
    n_fail = statuses.count("fail")
    n_indet = statuses.count("indeterminate")
    report = {
        "schema_version": SCHEMA_VERSION,
        "mode": "suite",
        "config": {
            "resolution": config.resolution,
            "tolerance": config.tolerance,
            "tolerance_ladder": list(config.tolerance_ladder),
            "seeds": list(config.seeds),
            "samples": config.samples,
            "suites": list(config.suites),
            "refinement_levels": config.refinement_levels,
            "allow_indeterminate": config.allow_indeterminate,
        },
        "records": [r.to_dict() for r in records],
        "summary": {
            "total": len(records),
            "pass": statuses.count("pass"),
            "fail": n_fail,
            "indeterminate": n_indet,
            "vacuous": statuses.count("vacuous"),
        },
        "timing": {
            "total_wall_time": sum(r.wall_time for r in records),
            "per_check": {r.name: r.wall_time for r in records},
        },
    }
    return report


def exit_code(report: dict, allow_indeterminate: bool = False) -> int:
    if report["summary"]["fail"]:
        return 1
    if report["summary"]["indeterminate"] and not allow_indeterminate:
        return 1
    return 0


def report_body(report: dict) -> dict:
    """The deterministic part of a report: everything except timing."""
    body = {k: v for k, v in report.items() if k != "timing"}
    body["records"] = [{k: v for k, v in r.items() if k != "wall_time"}
                       for r in report["records"]]
    return body


def report_body_json(report: dict) -> str:
    return json.dumps(report_body(report), sort_keys=True)


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------


def _integrality_error(res: msh.Resolution, seed: int) -> float:
    sphere = _random_sphere(seed, res)
    s1 = wz.raw_wz_integral(sphere, jitter_seed=1, resolution=res)
    s2 = wz.raw_wz_integral(sphere, jitter_seed=2, resolution=res)
    return wz.integer_defect(s1 - s2)


def _trisection_error(res: msh.Resolution, seed: int) -> float:
    triple = msh.random_path_triple(seed, resolution=res)
    p1, p2, p3 = triple.paths()
    phi12 = msh.fill_disk(msh.loop_join(p1, p2))
    phi23 = msh.fill_disk(msh.loop_join(p2, p3))
    phi13a = msh.fill_disk(msh.loop_join(p1, p3), seed=1)
    phi13b = msh.fill_disk(msh.loop_join(p1, p3), seed=2)
    sa = wz.raw_wz_integral(msh.trisect_sphere(phi12, phi23, phi13a, triple),
                            jitter_seed=1, resolution=res)
    sb = wz.raw_wz_integral(msh.trisect_sphere(phi12, phi23, phi13b, triple),
                            jitter_seed=2, resolution=res)
    sg = wz.raw_wz_integral(msh.glue_sphere(phi13a, phi13b), jitter_seed=3,
                            resolution=res)
    return wz.integer_defect(sa - sb - sg)


def _calibration_error(res: msh.Resolution, seed: int) -> float:
    level = res.disk_radial
    return abs(wz.unit_volume_integral(level) * KAPPA_UNIT_TOTAL - 1.0)


def _id1_error(res: msh.Resolution, seed: int) -> float:
    # the spacing here is the finite-difference step, tied to the ladder
    eps = 1.28 / res.disk_radial
    return max(wz.id1_defect(seed + k, eps=eps)["defect"] for k in range(5))


def _fusion_error(res: msh.Resolution, seed: int) -> float:
    triple = msh.random_path_triple(seed, resolution=res)
    ctx = ext.FusionContext(triple)
    p1, p2, p3 = ctx.paths
    a12 = ext.random_element(msh.loop_join(p1, p2), seed + 1, resolution=res)
    a23 = ext.random_element(msh.loop_join(p2, p3), seed + 2, resolution=res)
    f1 = ext.fusion(a12, a23, ctx, fill_seed=1, jitter_seed=1)
    f2 = ext.fusion(a12, a23, ctx, fill_seed=2, jitter_seed=2)
    return ext.circle_defect(f1, f2, ext.EquivalenceConfig(resolution=res))


CONVERGENCE_TARGETS = (
    ("wz.calibration", "generator-normalization", _calibration_error),
    ("wz.integrality", "wz-term-mod-integers", _integrality_error),
    ("wz.trisection-additivity", "fusion-independence-of-filling",
     _trisection_error),
    ("wz.id1-gluing", "gluing-identity-3form", _id1_error),
    ("mickelsson.fusion-welldefined", "fusion-independence-of-filling",
     _fusion_error),
)


def run_convergence(config: SuiteConfig) -> dict:
    """Repeat the tolerance-bearing identity checks over a refinement ladder
    and fit the decay order of each error."""
    config.validate()
    if config.refinement_levels < 3:
        raise ConfigError("convergence study needs refinement_levels >= 3")
    finest = config.mesh_resolution()
    resolutions = [finest.scaled(2 ** (config.refinement_levels - 1 - i))
                   for i in range(config.refinement_levels)]
    spacings = [1.0 / r.disk_radial for r in resolutions]
    tolerances = config.ladder()
    records = []
    for name, anchor, fn in CONVERGENCE_TARGETS:
        start = time.perf_counter()
        errors = [fn(r, config.seeds[0] + 600) for r in resolutions]
        order = wz.fit_decay_order(spacings, errors)
        monotone = all(e1 > e2 for e1, e2 in zip(errors, errors[1:]))
        records.append({
            "name": name,
            "anchor": anchor,
            "status": "pass" if monotone else "fail",
            "max_error": errors[-1],
            "tolerance": tolerances[-1],
            "resolution": config.resolution,
            "wall_time": time.perf_counter() - start,
            "details": {
                "levels": [r.disk_radial for r in resolutions],
                "errors": errors,
                "tolerance_ladder": list(tolerances),
                "fitted_order": order,
                "monotone": monotone,
            },
        })
    n_fail = sum(1 for r in records if r["status"] == "fail")
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "convergence",
        "config": {
            "resolution": config.resolution,
            "tolerance": config.tolerance,
            "seeds": list(config.seeds),
            "refinement_levels": config.refinement_levels,
        },
        "records": records,
        "summary": {"total": len(records),
                    "pass": len(records) - n_fail,
                    "fail": n_fail,
                    "indeterminate": 0,
                    "vacuous": 0},
        "timing": {"total_wall_time": sum(r["wall_time"] for r in records)},
    }
