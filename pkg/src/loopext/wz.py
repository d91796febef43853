"""Quadrature of the invariant 3-form over balls and of the cross-term
2-form over disks; the circle-valued action of sphere maps; pairing
calibration.

Schemes
-------
H-integrals use a cell scheme: the left-translated displacement of every
mesh edge (log of the transition between adjacent samples) is averaged over
each cell and fed to the trilinear density, so parameter spacings are
absorbed and the error is O(1/N^2) with no boundary special-casing.

rho-integrals come in two flavours.  The "midpoint" flavour is the same
edge-log cell scheme.  The "trapezoid" flavour evaluates the density at the
nodes from exact velocity payloads; because the density identities hold
pointwise on exact tangents, sums of such integrals cancel identically in
algebraic identities, which downstream structure checks exploit.

The circle value exp(2 pi i S) of a sphere map is independent of the chosen
ball extension up to quadrature error; raw integrals of two extensions
differ by a near-integer.  That is verified, not assumed.
"""

from dataclasses import dataclass

import numpy as np

from . import mesh as msh
from . import quaternions as qt
from .errors import MeshMismatch, NonConvergence
from .lie import (
    CircleValue,
    DEFAULT_PAIRING,
    Pairing,
    h_density_batch,
    rho_density_batch,
)


@dataclass(frozen=True)
class QuadratureConfig:
    refinement_level: int = 3
    tolerance: float = 1e-3
    scheme: str = "midpoint"

    def __post_init__(self):
        if self.refinement_level < 1:
            raise ValueError("refinement_level must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.scheme not in ("midpoint", "trapezoid"):
            raise ValueError("scheme must be 'midpoint' or 'trapezoid'")


# ---------------------------------------------------------------------------
# edge logs and cell averages
# ---------------------------------------------------------------------------


def _edge_logs_left(values, axis, cyclic):
    """log(v_i^{-1} v_{i+1}) along `axis`: left-translated displacements."""
    if cyclic:
        nxt = np.roll(values, -1, axis=axis)
        cur = values
    else:
        n = values.shape[axis]
        nxt = np.take(values, range(1, n), axis=axis)
        cur = np.take(values, range(n - 1), axis=axis)
    return qt.qlog(qt.qmul(qt.qconj(cur), nxt))


def _edge_logs_right(values, axis, cyclic):
    """log(v_{i+1} v_i^{-1}): right-translated displacements."""
    if cyclic:
        nxt = np.roll(values, -1, axis=axis)
        cur = values
    else:
        n = values.shape[axis]
        nxt = np.take(values, range(1, n), axis=axis)
        cur = np.take(values, range(n - 1), axis=axis)
    return qt.qlog(qt.qmul(nxt, qt.qconj(cur)))


def _cell_average(arr, axes, cyclic_axis):
    out = arr
    for ax in axes:
        if ax == cyclic_axis:
            out = 0.5 * (out + np.roll(out, -1, axis=ax))
        else:
            n = out.shape[ax]
            out = 0.5 * (np.take(out, range(n - 1), axis=ax)
                         + np.take(out, range(1, n), axis=ax))
    return out


def _cone_integral(values, kappa):
    """Oriented H-integral of one ball chart in its own (s, r, t) frame."""
    ls = _edge_logs_left(values, 0, cyclic=False)
    lr = _edge_logs_left(values, 1, cyclic=False)
    lt = _edge_logs_left(values, 2, cyclic=True)
    ds = _cell_average(ls, (1, 2), cyclic_axis=2)
    dr = _cell_average(lr, (0, 2), cyclic_axis=2)
    dt = _cell_average(lt, (0, 1), cyclic_axis=2)
    return float(h_density_batch(ds, dr, dt, kappa).sum())


def integrate_h_ball(ball: msh.BallMap, pairing: Pairing = DEFAULT_PAIRING) -> float:
    """Quadrature of the pulled-back 3-form over the ball, all charts."""
    total = 0.0
    for chart in ball.charts:
        total += chart.orientation * _cone_integral(chart.values, pairing.kappa)
    return total


def integrate_rho_disk(phi1: msh.DiskMap, phi2: msh.DiskMap,
                       pairing: Pairing = DEFAULT_PAIRING,
                       scheme: str = "auto") -> float:
    """Quadrature of the paired cross-term form over the disk.

    scheme "auto" uses exact velocities when both factors carry them and the
    edge-log cell scheme otherwise; "midpoint" forces the cell scheme;
    "trapezoid" requires velocities.
    """
    if phi1.grid.shape != phi2.grid.shape:
        raise MeshMismatch("disk meshes differ")
    exact = phi1.has_velocity and phi2.has_velocity
    if scheme == "trapezoid" and not exact:
        raise MeshMismatch("trapezoid scheme needs velocity payloads on both disks")
    if scheme == "midpoint":
        exact = False

    if exact:
        g1c = qt.qconj(phi1.grid)
        g2c = qt.qconj(phi2.grid)
        x_r = qt.qmul(g1c, phi1.d_r)[..., 1:]
        x_t = qt.qmul(g1c, phi1.d_t)[..., 1:]
        y_r = qt.qmul(phi2.d_r, g2c)[..., 1:]
        y_t = qt.qmul(phi2.d_t, g2c)[..., 1:]
        integrand = rho_density_batch(x_r, y_r, x_t, y_t, pairing.kappa)
        w = np.ones(integrand.shape[0])
        w[0] = w[-1] = 0.5
        nr = phi1.radial
        nt = phi1.angular
        return float((integrand * w[:, None]).sum() / (nr * nt))

    a_r = _cell_average(_edge_logs_left(phi1.grid, 0, False), (1,), cyclic_axis=1)
    a_t = _cell_average(_edge_logs_left(phi1.grid, 1, True), (0,), cyclic_axis=1)
    b_r = _cell_average(_edge_logs_right(phi2.grid, 0, False), (1,), cyclic_axis=1)
    b_t = _cell_average(_edge_logs_right(phi2.grid, 1, True), (0,), cyclic_axis=1)
    return float(rho_density_batch(a_r, b_r, a_t, b_t, pairing.kappa).sum())


def raw_wz_integral(sphere: msh.SphereMap, pairing: Pairing = DEFAULT_PAIRING,
                    shells: int = None, jitter_seed: int = 0,
                    resolution: msh.Resolution = msh.DEFAULT_RESOLUTION) -> float:
    ball = msh.extend_to_ball(sphere, shells=shells, seed=jitter_seed,
                              resolution=resolution)
    return integrate_h_ball(ball, pairing)


def wz_action(sphere: msh.SphereMap, pairing: Pairing = DEFAULT_PAIRING,
              shells: int = None, jitter_seed: int = 0,
              resolution: msh.Resolution = msh.DEFAULT_RESOLUTION) -> CircleValue:
    """Circle value exp(2 pi i * ball integral) of a sphere map."""
    return CircleValue.from_turns(
        raw_wz_integral(sphere, pairing, shells, jitter_seed, resolution)
    )


# ---------------------------------------------------------------------------
# pairing calibration against the once-around ball
# ---------------------------------------------------------------------------


def unit_volume_integral(level: int) -> float:
    """H-integral (kappa = 1) of a ball sweeping the group exactly once.

    The ball sends (s, colatitude, azimuth) to exp(s * pi * n); the boundary
    shell collapses to the antipode, so the image covers the group with
    degree one and the exact value is 2 pi^2.
    """
    ns, na, nb = level, level, 2 * level
    s = np.arange(ns + 1) / ns
    a = np.linspace(0.0, np.pi, na + 1)
    b = 2.0 * np.pi * np.arange(nb) / nb
    S, A, B = np.meshgrid(s, a, b, indexing="ij")
    n = np.stack([np.sin(A) * np.cos(B), np.sin(A) * np.sin(B), np.cos(A)], axis=-1)
    values = qt.qexp(S[..., None] * np.pi * n)
    return _cone_integral(values, 1.0)


def calibration_study(config: QuadratureConfig = QuadratureConfig(),
                      base_level: int = 32) -> dict:
    """Refinement ladder for the once-around integral, with extrapolation."""
    levels = [base_level * 2**i for i in range(config.refinement_level)]
    estimates = [unit_volume_integral(level) for level in levels]
    diffs = [abs(b - a) for a, b in zip(estimates, estimates[1:])]
    order = None
    if len(diffs) >= 2:
        orders = [np.log2(d0 / d1) for d0, d1 in zip(diffs, diffs[1:]) if d1 > 0]
        order = float(np.mean(orders)) if orders else None
    if len(estimates) >= 2:
        extrapolated = estimates[-1] + (estimates[-1] - estimates[-2]) / 3.0
    else:
        extrapolated = estimates[-1]
    return {
        "levels": levels,
        "estimates": estimates,
        "differences": diffs,
        "fitted_order": order,
        "extrapolated": extrapolated,
    }


def calibrate_pairing(config: QuadratureConfig = QuadratureConfig(),
                      base_level: int = 32) -> Pairing:
    """Pairing constant that normalizes the total H-integral to 1.

    Raises NonConvergence when successive refinements do not settle within
    the configured tolerance.
    """
    study = calibration_study(config, base_level)
    diffs = study["differences"]
    if len(diffs) >= 2 and not all(d1 < d0 for d0, d1 in zip(diffs, diffs[1:])):
        raise NonConvergence(f"refinement differences not decreasing: {diffs}")
    total = study["extrapolated"]
    # the extrapolation residual of a second-order ladder is a third of the
    # last step
    if diffs and diffs[-1] / (3.0 * abs(total)) > config.tolerance:
        raise NonConvergence(
            f"extrapolation residual {diffs[-1] / 3.0:.3e} exceeds tolerance "
            f"{config.tolerance:g} relative to {total:.6f}"
        )
    return Pairing(kappa=1.0 / total)


# ---------------------------------------------------------------------------
# the two density identities as numbers
# ---------------------------------------------------------------------------


def id1_defect(seed: int, eps: float = 0.02,
               pairing: Pairing = DEFAULT_PAIRING) -> dict:
    """Gluing identity for the 3-form at a random point of G x G.

    Evaluates H at the product minus the two factor terms plus a
    finite-difference exterior derivative of rho on a coordinate 3-frame;
    returns the combination and a scale for relative comparison.
    """
    rng = np.random.default_rng(seed)
    g1 = qt.qexp(rng.normal(size=3) * 0.6)
    g2 = qt.qexp(rng.normal(size=3) * 0.6)
    A = rng.normal(size=(3, 3)) * 0.8
    B = rng.normal(size=(3, 3)) * 0.8

    def point(u):
        p, q = g1, g2
        for ui, Ai, Bi in zip(u, A, B):
            p = qt.qmul(p, qt.qexp(ui * Ai))
            q = qt.qmul(q, qt.qexp(ui * Bi))
        return p, q

    def frame(u, j):
        # exact tangent of the chart along coordinate j
        p, q = g1, g2
        dp = dq = None
        for i in range(3):
            ea, eb = qt.qexp(u[i] * A[i]), qt.qexp(u[i] * B[i])
            if dp is not None:
                dp, dq = qt.qmul(dp, ea), qt.qmul(dq, eb)
            if i == j:
                dp = qt.qmul(p, qt.qmul(ea, qt.pure(A[i])))
                dq = qt.qmul(q, qt.qmul(eb, qt.pure(B[i])))
            p, q = qt.qmul(p, ea), qt.qmul(q, eb)
        return dp, dq

    def rho_val(u, j, k):
        p, q = point(u)
        vj, wj = frame(u, j)
        vk, wk = frame(u, k)
        xj = qt.qmul(qt.qconj(p), vj)[1:]
        xk = qt.qmul(qt.qconj(p), vk)[1:]
        yj = qt.qmul(wj, qt.qconj(q))[1:]
        yk = qt.qmul(wk, qt.qconj(q))[1:]
        return 0.5 * pairing.kappa * (np.dot(xj, yk) - np.dot(xk, yj))

    u0 = np.zeros(3)
    tangents = [frame(u0, j) for j in range(3)]
    g12 = qt.qmul(g1, g2)
    pushed = [qt.qmul(v, g2) + qt.qmul(g1, w) for v, w in tangents]

    def h_at(g, vecs):
        x = [qt.qmul(qt.qconj(g), v)[1:] for v in vecs]
        return pairing.kappa * float(np.dot(x[0], np.cross(x[1], x[2])))

    h_prod = h_at(g12, pushed)
    h_1 = h_at(g1, [v for v, _ in tangents])
    h_2 = h_at(g2, [w for _, w in tangents])

    drho = 0.0
    for i in range(3):
        j, k = [x for x in range(3) if x != i]
        up, um = u0.copy(), u0.copy()
        up[i], um[i] = eps / 2.0, -eps / 2.0
        drho += (-1) ** i * (rho_val(up, j, k) - rho_val(um, j, k)) / eps

    combo = h_prod - h_1 - h_2 + drho
    scale = max(abs(h_prod), abs(h_1), abs(h_2), abs(drho), 1e-30)
    return {"combo": combo, "scale": scale, "defect": abs(combo) / scale,
            "h_product": h_prod, "h_1": h_1, "h_2": h_2, "drho": drho, "eps": eps}


def id2_defect(seed: int, pairing: Pairing = DEFAULT_PAIRING) -> float:
    """Cocycle identity for rho at a random point of G^3, exact formula level.

    Returns the relative defect; pure algebra, so it sits at rounding level.
    """
    rng = np.random.default_rng(seed)
    g1, g2, g3 = (qt.qexp(rng.normal(size=3) * 0.8) for _ in range(3))

    def tangent_triple():
        return tuple(qt.qmul(g, qt.pure(rng.normal(size=3)))
                     for g in (g1, g2, g3))

    t1, t2 = tangent_triple(), tangent_triple()
    g12, g23 = qt.qmul(g1, g2), qt.qmul(g2, g3)

    def push(v, w, a, b):
        return qt.qmul(v, b) + qt.qmul(a, w)

    def rho_at(p, q, pair1, pair2):
        x1 = qt.qmul(qt.qconj(p), pair1[0])[1:]
        x2 = qt.qmul(qt.qconj(p), pair2[0])[1:]
        y1 = qt.qmul(pair1[1], qt.qconj(q))[1:]
        y2 = qt.qmul(pair2[1], qt.qconj(q))[1:]
        return 0.5 * pairing.kappa * (np.dot(x1, y2) - np.dot(x2, y1))

    r_12 = rho_at(g1, g2, (t1[0], t1[1]), (t2[0], t2[1]))
    r_12_3 = rho_at(g12, g3,
                    (push(t1[0], t1[1], g1, g2), t1[2]),
                    (push(t2[0], t2[1], g1, g2), t2[2]))
    r_23 = rho_at(g2, g3, (t1[1], t1[2]), (t2[1], t2[2]))
    r_1_23 = rho_at(g1, g23,
                    (t1[0], push(t1[1], t1[2], g2, g3)),
                    (t2[0], push(t2[1], t2[2], g2, g3)))
    combo = r_12 + r_12_3 - r_23 - r_1_23
    scale = max(abs(r_12), abs(r_12_3), abs(r_23), abs(r_1_23), 1e-30)
    return abs(combo) / scale


# ---------------------------------------------------------------------------
# refinement fits
# ---------------------------------------------------------------------------


def fit_decay_order(spacings, errors) -> float:
    """Least-squares slope of log|error| against log(spacing)."""
    h = np.log(np.asarray(spacings, dtype=float))
    e = np.log(np.maximum(np.abs(np.asarray(errors, dtype=float)), 1e-300))
    slope, _ = np.polyfit(h, e, 1)
    return float(slope)


def integer_defect(x: float) -> float:
    """Distance from the nearest integer."""
    return abs(x - round(x))


def far_extension(sphere: msh.SphereMap, shells: int = None,
                  resolution: msh.Resolution = msh.DEFAULT_RESOLUTION) -> msh.BallMap:
    """Extension contracting the long way around the great circles.

    Requires every chart value bounded away from both e and -e.  Together
    with the standard contraction this swings each geodesic through the full
    circle, so the two raw integrals differ by one unit of total volume.
    """
    ns = resolution.ball_shells if shells is None else shells
    angles = [qt.angle_from_identity(c.disk.grid) for c in sphere.charts]
    lo = min(float(a.min()) for a in angles)
    hi = max(float(a.max()) for a in angles)
    if lo < 0.05 or hi > np.pi - 0.05:
        raise MeshMismatch("far extension needs values away from both e and -e")
    ramp = msh.smoothstep5(np.arange(ns + 1) / ns)
    charts = []
    for chart in sphere.charts:
        lv = qt.qlog(chart.disk.grid)
        n = np.linalg.norm(lv, axis=-1, keepdims=True)
        far = (1.0 - 2.0 * np.pi / n) * lv
        vals = qt.qexp(ramp[:, None, None, None] * far[None])
        vals[0] = qt.IDENTITY
        vals[-1] = chart.disk.grid
        charts.append(msh.BallChart(vals, chart.orientation))
    return msh.BallMap(tuple(charts), boundary=sphere,
                       provenance={"kind": "far-extension"})
