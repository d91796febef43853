"""Lifting-gerbe calculus over a trivial bundle on the circle.

The base is S^1 sampled at N cyclic points and the bundle is the product
bundle, so loops in the total space are pairs (base loop, fiber loop) and
the difference map is exact pointwise group algebra in the fiber
coordinates.  The gerbe sits over pairs of loops with a common base loop;
its elements are triples (tau, tau', beta) with beta an extension element
over the difference loop, multiplied fiberwise by the extension product.

Structure-level operations here never integrate anything themselves:
quadrature enters only inside the arithmetic of the beta components.  The
two constructions between trivializations and lifts are data-preserving, so
their round trips are exact to rounding; that relies on inversion in the
extension being an involution bitwise.
"""

from dataclasses import dataclass

import numpy as np

from . import extension as ext
from . import mesh as msh
from . import quaternions as qt
from .errors import (
    ActionConditionViolated,
    BaseMismatch,
    FusionContextMismatch,
    MiddleMismatch,
)
from .lie import CircleValue, circle_distance


@dataclass(frozen=True)
class SampledBundle:
    """Trivial principal bundle over S^1 with the group as fiber."""

    base_samples: int = 256
    resolution: msh.Resolution = msh.DEFAULT_RESOLUTION

    @staticmethod
    def for_resolution(resolution: msh.Resolution) -> "SampledBundle":
        return SampledBundle(base_samples=resolution.disk_angular,
                             resolution=resolution)


@dataclass(frozen=True)
class BundleLoop:
    """Loop in the total space: base loop (points of S^1 as reals mod 1)
    plus fiber loop in trivialization coordinates."""

    base: np.ndarray  # (N,)
    fiber: msh.SampledLoop

    def __post_init__(self):
        base = np.ascontiguousarray(np.asarray(self.base, dtype=float))
        base.flags.writeable = False
        object.__setattr__(self, "base", base)
        if base.shape[0] != self.fiber.size:
            raise BaseMismatch("base and fiber sample counts differ")


def difference_loop(a: BundleLoop, b: BundleLoop) -> msh.SampledLoop:
    """Pointwise g with a(t) g(t) = b(t); exact in fiber coordinates."""
    if not np.array_equal(a.base, b.base):
        raise BaseMismatch("loops sit over different base loops")
    return msh.loop_product(msh.loop_inverse(a.fiber), b.fiber)


@dataclass(frozen=True)
class GerbeElement:
    """Point (tau, tau', beta) of the pulled-back gerbe bundle."""

    tau: BundleLoop
    tau_prime: BundleLoop
    beta: ext.ExtElement

    def validate(self, atol: float = 1e-9):
        delta = difference_loop(self.tau, self.tau_prime)
        bdry = ext.project(self.beta)
        if not np.allclose(bdry.samples, delta.samples, atol=atol, rtol=0.0):
            raise MiddleMismatch("beta does not project onto the difference loop")


def gerbe_mu(q12: GerbeElement, q23: GerbeElement) -> GerbeElement:
    """Gerbe product: middle loops cancel, betas multiply in the extension."""
    if not (np.array_equal(q12.tau_prime.base, q23.tau.base)
            and np.array_equal(q12.tau_prime.fiber.samples, q23.tau.fiber.samples)):
        raise MiddleMismatch("middle loops differ")
    return GerbeElement(q12.tau, q23.tau_prime, ext.product(q12.beta, q23.beta))


# ---------------------------------------------------------------------------
# fibered path data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberedPathData:
    """Three paths in a fibre power of the bundle, with common endpoints.

    `components[a][i]` is the fiber path of the a-th fibre-product slot along
    the i-th path; all slots of one path share the base path `base_paths[i]`.
    """

    base_paths: tuple  # 3 arrays (N+1,)
    components: tuple  # n_components tuples of 3 SampledPath

    @property
    def n_components(self) -> int:
        return len(self.components)

    def base_join(self, i: int, j: int) -> np.ndarray:
        bi, bj = self.base_paths[i], self.base_paths[j]
        n = bi.shape[0] - 1
        return np.concatenate([bi[:n], bj[n:0:-1]])

    def bundle_loop(self, i: int, j: int, a: int) -> BundleLoop:
        fiber = msh.loop_join(self.components[a][i], self.components[a][j])
        return BundleLoop(self.base_join(i, j), fiber)

    def delta_paths(self, a: int, b: int):
        """Fiber-difference paths between slots a and b, one per path index."""
        return tuple(
            msh.path_product(msh.path_inverse(self.components[a][i]),
                             self.components[b][i])
            for i in range(3)
        )

    def fusion_context(self, a: int, b: int) -> ext.FusionContext:
        return ext.FusionContext(msh.PathTriple(*self.delta_paths(a, b)))

    def bundle_triple(self, a: int) -> "BundlePathTriple":
        return BundlePathTriple(self.base_paths, msh.PathTriple(*self.components[a]))


@dataclass(frozen=True)
class BundlePathTriple:
    """Triple of paths in the total space with common endpoints."""

    base_paths: tuple
    fibers: msh.PathTriple

    def loop(self, i: int, j: int) -> BundleLoop:
        bi, bj = self.base_paths[i], self.base_paths[j]
        n = bi.shape[0] - 1
        base = np.concatenate([bi[:n], bj[n:0:-1]])
        paths = self.fibers.paths()
        return BundleLoop(base, msh.loop_join(paths[i], paths[j]))

    def acted(self, deltas) -> "BundlePathTriple":
        paths = self.fibers.paths()
        moved = msh.PathTriple(*[msh.path_product(paths[i], deltas[i]) for i in range(3)])
        return BundlePathTriple(self.base_paths, moved)


def internal_fusion(q12: GerbeElement, q23: GerbeElement, ctx: FiberedPathData,
                    atol: float = 1e-9, **fusion_kwargs) -> GerbeElement:
    """Fusion on the gerbe bundle: fuse the betas along the fiber-difference
    paths and rewire the outer loops of the context."""
    if ctx.n_components < 2:
        raise FusionContextMismatch("need at least two fibre-product slots")
    expected12 = ctx.bundle_loop(0, 1, 0)
    expected23 = ctx.bundle_loop(1, 2, 0)
    for got, want, name in ((q12.tau, expected12, "q12.tau"),
                            (q23.tau, expected23, "q23.tau")):
        if not np.allclose(got.fiber.samples, want.fiber.samples, atol=atol, rtol=0.0):
            raise FusionContextMismatch(f"{name} does not arise from the context")
    beta13 = ext.fusion(q12.beta, q23.beta, ctx.fusion_context(0, 1),
                        boundary_atol=atol, **fusion_kwargs)
    return GerbeElement(ctx.bundle_loop(0, 2, 0), ctx.bundle_loop(0, 2, 1), beta13)


# ---------------------------------------------------------------------------
# fiber elements, lifts, trivializations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberElement:
    """Point of the total space of a lift (equally: of a trivialization)."""

    loop: BundleLoop
    element: ext.ExtElement


def fiber_element_defect(a: FiberElement, b: FiberElement) -> dict:
    """Pointwise distances between two fiber elements; all should sit at
    rounding level for structure-level identities."""
    return {
        "base": float(np.abs(a.loop.base - b.loop.base).max()),
        "fiber": float(np.abs(a.loop.fiber.samples - b.loop.fiber.samples).max()),
        "grid": float(np.abs(a.element.phi.grid - b.element.phi.grid).max()),
        "z": circle_distance(a.element.z, b.element.z),
    }


@dataclass(frozen=True)
class FusionLiftModel:
    """Lift of the looped structure group with a compatible fusion product.

    Totals are lazy: `sample` draws elements on demand.  `act` covers the
    loop-group action on bundle loops; `scalar` is the circle action of the
    associated bundle, which acts through inversion.
    """

    bundle: SampledBundle
    act: object  # (FiberElement, ExtElement) -> FiberElement
    fus: object  # (FiberElement, FiberElement, BundlePathTriple) -> FiberElement
    scalar: object  # (FiberElement, CircleValue) -> FiberElement
    sample: object  # seed -> FiberElement
    label: str = ""


@dataclass(frozen=True)
class Trivialization:
    """Circle bundle over the looped total space with the gerbe action."""

    bundle: SampledBundle
    kappa: object  # (GerbeElement, FiberElement) -> FiberElement
    fus: object
    scalar: object
    sample: object
    label: str = ""


def canonical_fusion_lift(bundle: SampledBundle) -> FusionLiftModel:
    """The evident lift of the trivial bundle: pairs (base loop, extension
    element), acted on by the extension product slotwise."""

    def act(p: FiberElement, g: ext.ExtElement) -> FiberElement:
        moved = BundleLoop(p.loop.base,
                           msh.loop_product(p.loop.fiber, ext.project(g)))
        return FiberElement(moved, ext.product(p.element, g))

    def fus(e12: FiberElement, e23: FiberElement, bctx: BundlePathTriple,
            **kw) -> FiberElement:
        fused = ext.fusion(e12.element, e23.element,
                           ext.FusionContext(bctx.fibers), **kw)
        return FiberElement(bctx.loop(0, 2), fused)

    def scalar(p: FiberElement, w: CircleValue) -> FiberElement:
        # associated-bundle action: the circle embeds through inversion
        return FiberElement(p.loop, ext.scalar_mul(p.element, w.inverse()))

    def sample(seed: int) -> FiberElement:
        data = sample_bundle_loops(bundle, seed, count=1)
        base, fibers = data
        el = ext.random_element(fibers[0], seed + 1000,
                                resolution=bundle.resolution)
        return FiberElement(BundleLoop(base, fibers[0]), el)

    return FusionLiftModel(bundle, act, fus, scalar, sample,
                           label="canonical-lift")


def trivialization_from_lift(model: FusionLiftModel) -> Trivialization:
    """Gerbe action kappa(q, t) = t acted by the inverse of beta.

    Data-preserving: the fusion and scalar structures are reused as they
    are, and the output loop is rewired to the gerbe's outer loop.
    """

    def kappa(q: GerbeElement, t: FiberElement) -> FiberElement:
        out = model.act(t, ext.inverse(q.beta))
        return FiberElement(q.tau, out.element)

    return Trivialization(model.bundle, kappa, model.fus, model.scalar,
                          model.sample, label=f"triv({model.label})")


def lift_from_trivialization(triv: Trivialization, check_samples: int = 0,
                             check_seed: int = 0,
                             tolerance: float = 1e-9) -> FusionLiftModel:
    """Action p * g = kappa(g^{-1} (x) p), fusion datum unchanged.

    With check_samples > 0 the compatibility of kappa with the gerbe product
    is verified first and ActionConditionViolated raised on failure.
    """
    if check_samples:
        report = check_action_condition(triv, check_samples, check_seed, tolerance)
        if not report["passed"]:
            raise ActionConditionViolated(
                f"max circle error {report['max_error']:.3e} over "
                f"{check_samples} samples exceeds {tolerance:g}"
            )

    def act(p: FiberElement, g: ext.ExtElement) -> FiberElement:
        moved = BundleLoop(p.loop.base,
                           msh.loop_product(p.loop.fiber, ext.project(g)))
        q = GerbeElement(moved, p.loop, ext.inverse(g))
        return triv.kappa(q, p)

    return FusionLiftModel(triv.bundle, act, triv.fus, triv.scalar,
                           triv.sample, label=f"lift({triv.label})")


def canonical_trivialization(bundle: SampledBundle) -> Trivialization:
    return trivialization_from_lift(canonical_fusion_lift(bundle))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_bundle_loops(bundle: SampledBundle, seed: int, count: int = 3,
                        amplitude: float = 0.5):
    """One base loop plus `count` fiber loops with exact velocities."""
    rng = np.random.default_rng(seed)
    n = bundle.base_samples
    winding = int(rng.integers(-1, 2))
    base = np.mod(rng.uniform(0.0, 1.0) + winding * np.arange(n) / n, 1.0)
    fibers = [
        msh.FourierLoopGenerator.from_rng(rng, 3, amplitude).sample(n)
        for _ in range(count)
    ]
    return base, fibers


def sample_gerbe_chain(bundle: SampledBundle, seed: int):
    """Loops tau1, tau2, tau3 over one base with gerbe elements q12, q23 and
    a fiber element over tau3; the raw material of the action condition."""
    base, (f1, f2, f3) = sample_bundle_loops(bundle, seed, count=3)
    tau1 = BundleLoop(base, f1)
    tau2 = BundleLoop(base, f2)
    tau3 = BundleLoop(base, f3)
    res = bundle.resolution
    q12 = GerbeElement(tau1, tau2,
                       ext.random_element(difference_loop(tau1, tau2), seed + 11,
                                          resolution=res))
    q23 = GerbeElement(tau2, tau3,
                       ext.random_element(difference_loop(tau2, tau3), seed + 22,
                                          resolution=res))
    t = FiberElement(tau3, ext.random_element(f3, seed + 33, resolution=res))
    return q12, q23, t


#: Start-point distance bands per fibre-product slot.  Disjoint bands keep
#: the slots structurally separated, so a loop-dependent twist of a fusion
#: datum can never cancel between the two sides of the equivalence check.
COMPONENT_START_BANDS = ((0.15, 0.30), (0.60, 0.80), (0.40, 0.50))


def sample_fibered_data(bundle: SampledBundle, seed: int,
                        n_components: int = 2,
                        amplitude: float = 0.35) -> FiberedPathData:
    """Random fibered path data: three paths in the n-fold fibre power."""
    rng = np.random.default_rng(seed)
    segments = bundle.base_samples // 2
    t = np.arange(segments + 1) / segments
    u = msh.smoothstep5((t - 1.0 / 8.0) / (1.0 - 2.0 / 8.0))
    b0, b1 = rng.uniform(0.0, 1.0, size=2)
    base_paths = tuple(
        np.mod(b0 + u * (b1 - b0 + int(rng.integers(-1, 2))), 1.0)
        for _ in range(3)
    )
    components = tuple(
        tuple(msh.random_path_system(int(rng.integers(0, 2**31)), 3,
                                     amplitude=amplitude,
                                     resolution=bundle.resolution,
                                     start_band=COMPONENT_START_BANDS[a]))
        for a in range(n_components)
    )
    return FiberedPathData(base_paths, components)


def sample_kappa_fusion_data(bundle: SampledBundle, seed: int):
    """Gerbe elements and fiber elements over a two-slot fibered system."""
    ctx = sample_fibered_data(bundle, seed, n_components=2)
    res = bundle.resolution
    q12 = GerbeElement(ctx.bundle_loop(0, 1, 0), ctx.bundle_loop(0, 1, 1),
                       ext.random_element(
                           msh.loop_join(*[ctx.delta_paths(0, 1)[i] for i in (0, 1)]),
                           seed + 41, resolution=res))
    q23 = GerbeElement(ctx.bundle_loop(1, 2, 0), ctx.bundle_loop(1, 2, 1),
                       ext.random_element(
                           msh.loop_join(*[ctx.delta_paths(0, 1)[i] for i in (1, 2)]),
                           seed + 42, resolution=res))
    t12 = FiberElement(ctx.bundle_loop(0, 1, 1),
                       ext.random_element(ctx.bundle_loop(0, 1, 1).fiber,
                                          seed + 43, resolution=res))
    t23 = FiberElement(ctx.bundle_loop(1, 2, 1),
                       ext.random_element(ctx.bundle_loop(1, 2, 1).fiber,
                                          seed + 44, resolution=res))
    return ctx, q12, q23, t12, t23


# ---------------------------------------------------------------------------
# checkers
# ---------------------------------------------------------------------------


def check_action_condition(triv: Trivialization, samples: int, seed: int,
                           tolerance: float = 1e-9) -> dict:
    """Compatibility of kappa with the gerbe product on sampled chains.

    Compares kappa(q12 (x) kappa(q23 (x) t)) against kappa(mu(q12 (x) q23)
    (x) t); the disks agree exactly, so the error is the circle distance.
    """
    errors = []
    for k in range(samples):
        q12, q23, t = sample_gerbe_chain(triv.bundle, seed + 101 * k)
        lhs = triv.kappa(q12, triv.kappa(q23, t))
        rhs = triv.kappa(gerbe_mu(q12, q23), t)
        grid_gap = float(np.abs(lhs.element.phi.grid - rhs.element.phi.grid).max())
        errors.append(max(circle_distance(lhs.element.z, rhs.element.z), grid_gap))
    max_error = max(errors) if errors else 0.0
    return {
        "name": "action-condition",
        "samples": samples,
        "max_error": max_error,
        "tolerance": tolerance,
        "passed": bool(samples == 0 or max_error <= tolerance),
        "vacuous": samples == 0,
        "errors": errors,
    }


def check_fusion_equivalence(triv: Trivialization, samples: int, seed: int,
                             tolerance: float = 1e-3,
                             inverse_samples: int = 3) -> dict:
    """Both sides of the lift/trivialization fusion compatibility.

    (i) the gerbe action kappa preserves fusion; (ii) the induced group
    action preserves fusion.  The two conditions must agree pass/fail on
    every sample; the report also carries the inverse-compatibility defect
    of the fusion product, evaluated on the first `inverse_samples` samples.
    """
    lift = lift_from_trivialization(triv)
    records = []
    for k in range(samples):
        ctx, q12, q23, t12, t23 = sample_kappa_fusion_data(triv.bundle,
                                                           seed + 313 * k)
        tri0 = ctx.bundle_triple(0)
        tri1 = ctx.bundle_triple(1)
        deltas = ctx.delta_paths(0, 1)
        fused_beta = ext.fusion(q12.beta, q23.beta, ctx.fusion_context(0, 1))

        # (i) kappa o (fusion (x) fusion) = fusion o kappa
        lhs_i = triv.fus(triv.kappa(q12, t12), triv.kappa(q23, t23), tri0)
        fused_q = GerbeElement(ctx.bundle_loop(0, 2, 0),
                               ctx.bundle_loop(0, 2, 1), fused_beta)
        rhs_i = triv.kappa(fused_q, triv.fus(t12, t23, tri1))
        err_i = _fiber_circle_defect(lhs_i, rhs_i, triv.bundle.resolution)

        # (ii) fusion of acted elements = acted fusion
        lhs_ii = triv.fus(lift.act(t12, q12.beta), lift.act(t23, q23.beta),
                          tri1.acted(deltas))
        rhs_ii = lift.act(triv.fus(t12, t23, tri1), fused_beta)
        err_ii = _fiber_circle_defect(lhs_ii, rhs_ii, triv.bundle.resolution)

        # inverse compatibility of the fusion product itself
        err_inv = 0.0
        if k < inverse_samples:
            inv_ctx = ext.FusionContext(
                msh.PathTriple(*[msh.path_inverse(d) for d in deltas]))
            lhs_inv = ext.inverse(fused_beta)
            rhs_inv = ext.fusion(ext.inverse(q12.beta), ext.inverse(q23.beta),
                                 inv_ctx)
            err_inv = ext.circle_defect(
                lhs_inv, rhs_inv,
                ext.EquivalenceConfig(resolution=triv.bundle.resolution))

        records.append({
            "kappa_error": err_i,
            "action_error": err_ii,
            "inverse_error": err_inv,
            "kappa_pass": bool(err_i <= tolerance),
            "action_pass": bool(err_ii <= tolerance),
        })
    discordant = sum(1 for r in records if r["kappa_pass"] != r["action_pass"])
    return {
        "name": "fusion-equivalence",
        "samples": samples,
        "tolerance": tolerance,
        "records": records,
        "max_kappa_error": max((r["kappa_error"] for r in records), default=0.0),
        "max_action_error": max((r["action_error"] for r in records), default=0.0),
        "max_inverse_error": max((r["inverse_error"] for r in records), default=0.0),
        "kappa_pass": bool(all(r["kappa_pass"] for r in records)),
        "action_pass": bool(all(r["action_pass"] for r in records)),
        "discordant": discordant,
        "concordant": bool(discordant == 0),
        "vacuous": samples == 0,
    }


def _fiber_circle_defect(a: FiberElement, b: FiberElement,
                         resolution: msh.Resolution = msh.DEFAULT_RESOLUTION) -> float:
    """Equivalence defect of two fiber elements over the same loop."""
    d = ext.circle_defect(a.element, b.element,
                          ext.EquivalenceConfig(boundary_atol=1e-7,
                                                resolution=resolution))
    loop_gap = float(np.abs(a.loop.fiber.samples - b.loop.fiber.samples).max())
    return max(d, loop_gap)


# ---------------------------------------------------------------------------
# documented mutations (checker sensitivity)
# ---------------------------------------------------------------------------


def _loop_feature(e: FiberElement) -> float:
    # distance of the loop's start point from e: under the banded samplers
    # this is bounded apart between the fibre-product slots, so twist
    # differences cannot cancel by chance
    return float(qt.angle_from_identity(e.loop.fiber.samples[0]))


def mutate_fusion(triv: Trivialization, strength: float = 0.05) -> Trivialization:
    """Twist the fusion datum by a loop-dependent circle factor.

    The twist depends on the loops of the inputs, so it breaks
    multiplicativity and both sides of the fusion equivalence."""

    def fus(e12: FiberElement, e23: FiberElement, bctx, **kw) -> FiberElement:
        out = triv.fus(e12, e23, bctx, **kw)
        twist = CircleValue.from_turns(strength * _loop_feature(e12))
        return FiberElement(out.loop, ext.scalar_mul(out.element, twist))

    return Trivialization(triv.bundle, triv.kappa, fus, triv.scalar,
                          triv.sample, label=f"{triv.label}+fusion-twist")


def mutate_kappa(triv: Trivialization, strength: float = 0.05) -> Trivialization:
    """Perturb kappa by a non-constant circle factor of the difference loop;
    the compatibility with the gerbe product fails."""

    def kappa(q: GerbeElement, t: FiberElement) -> FiberElement:
        out = triv.kappa(q, t)
        feature = float(qt.angle_from_identity(
            ext.project(q.beta).samples).mean())
        return FiberElement(out.loop,
                            ext.scalar_mul(out.element,
                                           CircleValue.from_turns(strength * feature)))

    return Trivialization(triv.bundle, kappa, triv.fus, triv.scalar,
                          triv.sample, label=f"{triv.label}+kappa-twist")
