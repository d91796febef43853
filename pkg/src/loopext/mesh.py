"""Sampled maps into SU(2) and the geometric constructions on them.

All parameter domains are unit intervals: a path is sampled at t = i/N for
i = 0..N, a loop at t = i/N for i = 0..N-1 (cyclic, no duplicated endpoint),
a disk on a polar grid (r, t) = (j/Nr, k/Nt) where the angular coordinate t
runs once around per unit.  Velocity payloads, when present, are exact
analytic derivatives with respect to these unit parameters; they are carried
through products, inverses, joins and fillings by closed-form rules, which
is what lets downstream identity checks cancel their quadratures exactly.

Paths sit still near their endpoints (collar samples are bitwise constant)
and disks are radially constant near the boundary, so joins and gluings of
sampled maps stay smooth across seams.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from . import quaternions as qt
from .errors import (
    AntipodalSingularity,
    BoundaryMismatch,
    EndpointMismatch,
    MeshMismatch,
)

DEFAULT_COLLAR_FRACTION = 1.0 / 8.0


@dataclass(frozen=True)
class Resolution:
    """Mesh sizes used throughout; disk_angular must equal 2*path_segments."""

    path_segments: int = 128
    disk_radial: int = 64
    disk_angular: int = 256
    ball_shells: int = 32

    def __post_init__(self):
        if self.disk_angular != 2 * self.path_segments:
            raise MeshMismatch(
                "disk_angular must be twice path_segments so disk boundaries "
                "match joined paths"
            )

    def scaled(self, factor: int) -> "Resolution":
        return Resolution(
            path_segments=self.path_segments // factor,
            disk_radial=self.disk_radial // factor,
            disk_angular=self.disk_angular // factor,
            ball_shells=self.ball_shells // factor,
        )


DEFAULT_RESOLUTION = Resolution()
SMALL_RESOLUTION = DEFAULT_RESOLUTION.scaled(2)
TINY_RESOLUTION = DEFAULT_RESOLUTION.scaled(4)

RESOLUTION_PRESETS = {
    "default": DEFAULT_RESOLUTION,
    "small": SMALL_RESOLUTION,
    "tiny": TINY_RESOLUTION,
}


def smoothstep5(t):
    """Quintic ramp with vanishing first and second derivatives at 0 and 1."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def smoothstep5_deriv(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)


def _freeze(arr):
    if arr is not None:
        arr = np.ascontiguousarray(np.asarray(arr, dtype=float))
        arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------------------
# sampled map types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampledPath:
    """Map [0,1] -> G at N+1 uniform samples, constant on its end collars."""

    samples: np.ndarray  # (N+1, 4)
    collar: int
    velocity: np.ndarray = None  # (N+1, 4) optional, d(samples)/dt
    provenance: dict = field(default_factory=dict, compare=False)
    generator: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", _freeze(self.samples))
        object.__setattr__(self, "velocity", _freeze(self.velocity))

    @property
    def segments(self) -> int:
        return self.samples.shape[0] - 1

    def validate(self):
        n = self.segments
        if n < 4 * self.collar:
            raise MeshMismatch(f"{n} segments cannot carry collar {self.collar}")
        head = self.samples[: self.collar + 1]
        tail = self.samples[n - self.collar :]
        if not (np.array_equal(head, np.broadcast_to(self.samples[0], head.shape))
                and np.array_equal(tail, np.broadcast_to(self.samples[n], tail.shape))):
            raise MeshMismatch("collar samples are not constant")

    def start(self):
        return self.samples[0]

    def end(self):
        return self.samples[-1]


@dataclass(frozen=True)
class SampledLoop:
    """Map S^1 -> G at N uniform samples, cyclic indexing."""

    samples: np.ndarray  # (N, 4)
    velocity: np.ndarray = None
    provenance: dict = field(default_factory=dict, compare=False)
    generator: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", _freeze(self.samples))
        object.__setattr__(self, "velocity", _freeze(self.velocity))

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    def max_angle(self) -> float:
        return float(qt.angle_from_identity(self.samples).max())


@dataclass(frozen=True)
class DiskMap:
    """Polar-sampled map D^2 -> G, radially constant for r > 1 - collar."""

    grid: np.ndarray  # (Nr+1, Nt, 4)
    collar_fraction: float = DEFAULT_COLLAR_FRACTION
    d_r: np.ndarray = None  # (Nr+1, Nt, 4) optional
    d_t: np.ndarray = None
    provenance: dict = field(default_factory=dict, compare=False)
    generator: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "grid", _freeze(self.grid))
        object.__setattr__(self, "d_r", _freeze(self.d_r))
        object.__setattr__(self, "d_t", _freeze(self.d_t))

    @property
    def radial(self) -> int:
        return self.grid.shape[0] - 1

    @property
    def angular(self) -> int:
        return self.grid.shape[1]

    @property
    def has_velocity(self) -> bool:
        return self.d_r is not None and self.d_t is not None

    def boundary(self) -> SampledLoop:
        vel = self.d_t[-1] if self.d_t is not None else None
        return SampledLoop(self.grid[-1], velocity=vel)

    def collar_rows(self) -> int:
        """Number of top rows guaranteed constant (r > 1 - collar_fraction)."""
        nr = self.radial
        first = int(np.ceil((1.0 - self.collar_fraction) * nr))
        return nr - first + 1

    def validate(self):
        nr = self.radial
        first = int(np.ceil((1.0 - self.collar_fraction) * nr))
        ring = self.grid[-1]
        for j in range(first, nr + 1):
            if not np.array_equal(self.grid[j], ring):
                raise MeshMismatch(f"row {j} not radially constant")
        center = self.grid[0]
        if not np.array_equal(center, np.broadcast_to(center[0], center.shape)):
            raise MeshMismatch("center row is not a single point")


@dataclass(frozen=True)
class SeamEnd:
    chart: int
    start: int
    step: int  # +1 or -1 around the boundary ring


@dataclass(frozen=True)
class Seam:
    name: str
    samples: np.ndarray  # (M, 4)
    ends: tuple

    def __post_init__(self):
        object.__setattr__(self, "samples", _freeze(self.samples))


@dataclass(frozen=True)
class SphereChart:
    disk: DiskMap
    orientation: int  # +1 if the disk's (r, t) frame maps to the outward
    name: str = ""  # orientation of the sphere, else -1


@dataclass(frozen=True)
class SphereMap:
    """Atlas of disk charts covering S^2 with declared orientations."""

    charts: tuple
    seams: tuple = ()

    def check_seams(self, atol: float = 0.0):
        for seam in self.seams:
            m = seam.samples.shape[0]
            for end in seam.ends:
                ring = self.charts[end.chart].disk.grid[-1]
                idx = (end.start + end.step * np.arange(m)) % ring.shape[0]
                if not np.allclose(ring[idx], seam.samples, atol=atol, rtol=0.0):
                    raise BoundaryMismatch(
                        f"seam {seam.name!r} disagrees on chart {end.chart}"
                    )

    def max_angle(self) -> float:
        return max(float(qt.angle_from_identity(c.disk.grid).max()) for c in self.charts)


@dataclass(frozen=True)
class BallChart:
    values: np.ndarray  # (Ns+1, Nr+1, Nt, 4)
    orientation: int

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))


@dataclass(frozen=True)
class BallMap:
    """Shells over s in [0,1]: s=0 collapses to e, s=1 is the boundary sphere."""

    charts: tuple
    boundary: SphereMap
    provenance: dict = field(default_factory=dict, compare=False)

    def validate(self):
        for bc, sc in zip(self.charts, self.boundary.charts):
            if not np.array_equal(bc.values[-1], sc.disk.grid):
                raise BoundaryMismatch("boundary shell differs from sphere chart")
            first = bc.values[0]
            if not np.allclose(first, qt.IDENTITY, atol=0.0, rtol=0.0):
                raise BoundaryMismatch("inner shell is not constant at e")


@dataclass(frozen=True)
class PathTriple:
    """Three paths sharing initial and final points exactly."""

    p1: SampledPath
    p2: SampledPath
    p3: SampledPath

    def __post_init__(self):
        paths = (self.p1, self.p2, self.p3)
        for p in paths[1:]:
            if p.segments != self.p1.segments:
                raise MeshMismatch("path sample counts differ")
            if not (np.array_equal(p.start(), self.p1.start())
                    and np.array_equal(p.end(), self.p1.end())):
                raise EndpointMismatch("paths do not share endpoints exactly")

    def paths(self):
        return (self.p1, self.p2, self.p3)


# ---------------------------------------------------------------------------
# pointwise algebra on sampled maps (velocities follow the Leibniz rule)
# ---------------------------------------------------------------------------


def _mul_vel(a, va, b, vb):
    if va is None or vb is None:
        return None
    return qt.qmul(va, b) + qt.qmul(a, vb)


def path_product(a: SampledPath, b: SampledPath) -> SampledPath:
    if a.segments != b.segments:
        raise MeshMismatch("path resolutions differ")
    return SampledPath(
        qt.qmul(a.samples, b.samples),
        collar=min(a.collar, b.collar),
        velocity=_mul_vel(a.samples, a.velocity, b.samples, b.velocity),
    )


def path_inverse(a: SampledPath) -> SampledPath:
    vel = qt.qconj(a.velocity) if a.velocity is not None else None
    return SampledPath(qt.qconj(a.samples), collar=a.collar, velocity=vel)


def loop_product(a: SampledLoop, b: SampledLoop) -> SampledLoop:
    if a.size != b.size:
        raise MeshMismatch("loop resolutions differ")
    return SampledLoop(
        qt.qmul(a.samples, b.samples),
        velocity=_mul_vel(a.samples, a.velocity, b.samples, b.velocity),
    )


def loop_inverse(a: SampledLoop) -> SampledLoop:
    vel = qt.qconj(a.velocity) if a.velocity is not None else None
    return SampledLoop(qt.qconj(a.samples), velocity=vel)


def disk_product(a: DiskMap, b: DiskMap) -> DiskMap:
    if a.grid.shape != b.grid.shape:
        raise MeshMismatch("disk meshes differ")
    d_r = d_t = None
    if a.has_velocity and b.has_velocity:
        d_r = _mul_vel(a.grid, a.d_r, b.grid, b.d_r)
        d_t = _mul_vel(a.grid, a.d_t, b.grid, b.d_t)
    return DiskMap(
        qt.qmul(a.grid, b.grid),
        collar_fraction=min(a.collar_fraction, b.collar_fraction),
        d_r=d_r,
        d_t=d_t,
    )


def disk_inverse(a: DiskMap) -> DiskMap:
    d_r = qt.qconj(a.d_r) if a.d_r is not None else None
    d_t = qt.qconj(a.d_t) if a.d_t is not None else None
    return DiskMap(qt.qconj(a.grid), collar_fraction=a.collar_fraction, d_r=d_r, d_t=d_t)


def constant_disk(value, resolution: Resolution = DEFAULT_RESOLUTION,
                  with_velocity: bool = True) -> DiskMap:
    nr, nt = resolution.disk_radial, resolution.disk_angular
    grid = np.broadcast_to(np.asarray(value, dtype=float), (nr + 1, nt, 4)).copy()
    zeros = np.zeros_like(grid)
    return DiskMap(grid, d_r=zeros if with_velocity else None,
                   d_t=zeros.copy() if with_velocity else None)


def constant_loop(value, size: int) -> SampledLoop:
    samples = np.broadcast_to(np.asarray(value, dtype=float), (size, 4)).copy()
    return SampledLoop(samples, velocity=np.zeros_like(samples))


def constant_path(value, segments: int, collar: int = None) -> SampledPath:
    collar = max(2, segments // 8) if collar is None else collar
    samples = np.broadcast_to(np.asarray(value, dtype=float), (segments + 1, 4)).copy()
    return SampledPath(samples, collar=collar, velocity=np.zeros_like(samples))


# ---------------------------------------------------------------------------
# joins, gluings, trisection
# ---------------------------------------------------------------------------


def loop_join(g1: SampledPath, g2: SampledPath, atol: float = 0.0) -> SampledLoop:
    """Loop running through g1 and back along g2; paths must share endpoints.

    The first half of the cyclic sample array is g1, the second half is g2
    reversed; sitting-instant collars make the result smooth at the joins.
    """
    if g1.segments != g2.segments:
        raise MeshMismatch("path resolutions differ")
    n = g1.segments
    same = (np.allclose(g1.start(), g2.start(), atol=atol, rtol=0.0)
            and np.allclose(g1.end(), g2.end(), atol=atol, rtol=0.0))
    if not same:
        raise EndpointMismatch("paths do not share endpoints")
    samples = np.concatenate([g1.samples[:n], g2.samples[n:0:-1]], axis=0)
    velocity = None
    if g1.velocity is not None and g2.velocity is not None:
        velocity = np.concatenate(
            [2.0 * g1.velocity[:n], -2.0 * g2.velocity[n:0:-1]], axis=0
        )
    return SampledLoop(samples, velocity=velocity)


def reverse_loop(loop: SampledLoop) -> SampledLoop:
    """Cyclic reversal fixing index 0."""
    idx = (-np.arange(loop.size)) % loop.size
    vel = -loop.velocity[idx] if loop.velocity is not None else None
    return SampledLoop(loop.samples[idx], velocity=vel)


def glue_sphere(phi: DiskMap, phi_prime: DiskMap, atol: float = 0.0) -> SphereMap:
    """Two-chart sphere: phi on the northern hemisphere (orientation kept),
    phi_prime on the southern (orientation reversed)."""
    if phi.grid.shape != phi_prime.grid.shape:
        raise MeshMismatch("disk meshes differ")
    if not np.allclose(phi.grid[-1], phi_prime.grid[-1], atol=atol, rtol=0.0):
        raise BoundaryMismatch("boundary rings differ")
    seam = Seam("equator", phi.grid[-1],
                (SeamEnd(0, 0, +1), SeamEnd(1, 0, +1)))
    return SphereMap(
        charts=(SphereChart(phi, +1, "north"), SphereChart(phi_prime, -1, "south")),
        seams=(seam,),
    )


def trisect_sphere(phi12: DiskMap, phi23: DiskMap, phi13: DiskMap,
                   triple: PathTriple, atol: float = 0.0) -> SphereMap:
    """Three-chart sphere cut along three meridians carrying the paths.

    The sectors carry phi12 and phi23 with reversed orientation and phi13
    with kept orientation; their boundaries must equal the pairwise joins of
    the path triple sample-wise.
    """
    p1, p2, p3 = triple.paths()
    expected = {
        "phi12": (phi12, loop_join(p1, p2)),
        "phi23": (phi23, loop_join(p2, p3)),
        "phi13": (phi13, loop_join(p1, p3)),
    }
    for name, (disk, ring) in expected.items():
        if disk.grid.shape[1] != ring.size:
            raise MeshMismatch(f"{name}: angular resolution differs from joined paths")
        if not np.allclose(disk.grid[-1], ring.samples, atol=atol, rtol=0.0):
            raise BoundaryMismatch(f"{name}: boundary differs from the joined paths")
    n = p1.segments
    seams = (
        Seam("gamma1", p1.samples, (SeamEnd(0, 0, +1), SeamEnd(2, 0, +1))),
        Seam("gamma2", p2.samples, (SeamEnd(0, 0, -1), SeamEnd(1, 0, +1))),
        Seam("gamma3", p3.samples, (SeamEnd(1, 0, -1), SeamEnd(2, 0, -1))),
    )
    return SphereMap(
        charts=(
            SphereChart(phi12, -1, "sector12"),
            SphereChart(phi23, -1, "sector23"),
            SphereChart(phi13, +1, "sector13"),
        ),
        seams=seams,
    )


# ---------------------------------------------------------------------------
# fillings and extensions by jittered contraction
# ---------------------------------------------------------------------------

DEFAULT_ANTIPODE_MARGIN = 0.05
DEFAULT_JITTER_RETRIES = 32


def _pick_jitter(values, seed, margin, retries):
    """Group element c with every sampled value*c away from the antipode.

    Seed 0 prefers c = e, giving the plain geodesic contraction whenever the
    data allows it; a nonzero seed always draws a random jitter, so distinct
    seeds give genuinely distinct contractions.
    """
    flat = values.reshape(-1, 4)
    if seed == 0 and float(qt.angle_from_identity(flat).max()) < np.pi - margin:
        return qt.IDENTITY.copy(), 0
    rng = np.random.default_rng(seed)
    for attempt in range(1, retries + 1):
        d = rng.normal(size=3)
        d *= rng.uniform(0.2, 1.4) / np.linalg.norm(d)
        c = qt.qexp(d)
        if float(qt.angle_from_identity(qt.qmul(flat, c)).max()) < np.pi - margin:
            return c, attempt
    raise AntipodalSingularity(
        f"no jitter found in {retries} tries keeping samples {margin:g} away "
        "from the antipode"
    )


def _contract(values, c, ramp):
    """exp(ramp * log(values * c)) * exp(-ramp * log c), broadcast over ramp.

    Smooth family from the constant map e (ramp 0) to `values` (ramp 1); the
    only singular locus is values = -c^{-1}, which the jitter avoids.
    """
    lc = qt.qlog(c)
    lv = qt.qlog(qt.qmul(values, c))
    ramp = np.asarray(ramp, dtype=float)
    left = qt.qexp(ramp.reshape(ramp.shape + (1,) * lv.ndim) * lv.reshape((1,) * ramp.ndim + lv.shape))
    right = qt.qexp(np.multiply.outer(-ramp, lc))
    right = right.reshape(ramp.shape + (1,) * (lv.ndim - 1) + (4,))
    return qt.qmul(left, np.broadcast_to(right, left.shape))


def fill_disk(tau: SampledLoop, radial: int = None,
              collar_fraction: float = DEFAULT_COLLAR_FRACTION,
              seed: int = 0, margin: float = DEFAULT_ANTIPODE_MARGIN,
              retries: int = DEFAULT_JITTER_RETRIES) -> DiskMap:
    """Disk with boundary tau by radial contraction toward e.

    The contraction runs along a quintic ramp of the radius and is jittered
    when tau passes near the antipode.  The boundary rows are bitwise copies
    of tau, and exact velocities are produced whenever tau carries them.
    """
    nr = tau.size // 4 if radial is None else radial
    nt = tau.size
    c, attempt = _pick_jitter(tau.samples, seed, margin, retries)
    lc = qt.qlog(c)
    tc = qt.qmul(tau.samples, c)
    lv = qt.qlog(tc)  # (Nt, 3)

    r = np.arange(nr + 1) / nr
    rhat = r / (1.0 - collar_fraction)
    psi = smoothstep5(rhat)
    dpsi = smoothstep5_deriv(rhat) / (1.0 - collar_fraction)

    arg = psi[:, None, None] * lv[None, :, :]  # (Nr+1, Nt, 3)
    e1 = qt.qexp(arg)
    e2 = qt.qexp(np.multiply.outer(-psi, lc))  # (Nr+1, 3->4)
    grid = qt.qmul(e1, e2[:, None, :])

    d_r = d_t = None
    if tau.velocity is not None:
        dlv = qt.dqlog(tc, qt.qmul(tau.velocity, c))  # d/dt of log(tau*c)
        d_t = qt.qmul(qt.dqexp(arg, psi[:, None, None] * dlv[None, :, :]), e2[:, None, :])
        de1_r = qt.dqexp(arg, dpsi[:, None, None] * lv[None, :, :])
        de2_r = qt.dqexp(np.multiply.outer(-psi, lc), np.multiply.outer(-dpsi, lc))
        d_r = qt.qmul(de1_r, e2[:, None, :]) + qt.qmul(e1, de2_r[:, None, :])

    # bitwise-exact boundary collar and center
    first = int(np.ceil((1.0 - collar_fraction) * nr))
    grid[first:] = tau.samples[None, :, :]
    grid[0] = qt.IDENTITY
    if d_t is not None:
        d_t[first:] = tau.velocity[None, :, :]
        d_r[first:] = 0.0
        d_t[0] = 0.0
    prov = {"jitter_seed": seed, "jitter_attempt": attempt, "jitter": c.tolist()}
    return DiskMap(grid, collar_fraction=collar_fraction, d_r=d_r, d_t=d_t,
                   provenance=prov)


def extend_to_ball(sphere: SphereMap, shells: int = None, seed: int = 0,
                   margin: float = DEFAULT_ANTIPODE_MARGIN,
                   retries: int = DEFAULT_JITTER_RETRIES,
                   resolution: Resolution = DEFAULT_RESOLUTION) -> BallMap:
    """Ball with the given boundary sphere, by one jittered contraction.

    A single jitter is chosen for all charts, so equal charts produce equal
    cones and their contributions cancel exactly in oriented sums.
    """
    ns = resolution.ball_shells if shells is None else shells
    stacked = np.concatenate([c.disk.grid.reshape(-1, 4) for c in sphere.charts])
    c, attempt = _pick_jitter(stacked, seed, margin, retries)
    ramp = smoothstep5(np.arange(ns + 1) / ns)
    charts = []
    for chart in sphere.charts:
        vals = _contract(chart.disk.grid, c, ramp)
        vals[0] = qt.IDENTITY
        vals[-1] = chart.disk.grid
        charts.append(BallChart(vals, chart.orientation))
    prov = {"jitter_seed": seed, "jitter_attempt": attempt, "jitter": c.tolist()}
    return BallMap(tuple(charts), boundary=sphere, provenance=prov)


# ---------------------------------------------------------------------------
# deterministic random maps (closed-form generators)
# ---------------------------------------------------------------------------


class FourierLoopGenerator:
    """su(2)-valued trigonometric series composed with exp.

    The same generator can be sampled at any resolution, which is what the
    refinement suites rely on.
    """

    def __init__(self, cos_coeffs, sin_coeffs):
        self.cos_coeffs = np.asarray(cos_coeffs, dtype=float)
        self.sin_coeffs = np.asarray(sin_coeffs, dtype=float)

    @staticmethod
    def from_rng(rng, modes, amplitude, cap=1.3):
        k = np.arange(1, modes + 1)[:, None]
        scale = amplitude / (k * k * np.sqrt(modes))
        a = rng.normal(size=(modes, 3)) * scale
        b = rng.normal(size=(modes, 3)) * scale
        gen = FourierLoopGenerator(a, b)
        m = gen.max_norm()
        if m > cap:
            gen = FourierLoopGenerator(a * (cap / m), b * (cap / m))
        return gen

    def coords(self, t):
        t = np.asarray(t, dtype=float)
        k = np.arange(1, self.cos_coeffs.shape[0] + 1)
        phase = 2.0 * np.pi * np.multiply.outer(t, k)  # (..., m)
        x = np.tensordot(np.cos(phase), self.cos_coeffs, axes=(-1, 0))
        x += np.tensordot(np.sin(phase), self.sin_coeffs, axes=(-1, 0))
        dx = np.tensordot(-np.sin(phase) * (2.0 * np.pi * k), self.cos_coeffs, axes=(-1, 0))
        dx += np.tensordot(np.cos(phase) * (2.0 * np.pi * k), self.sin_coeffs, axes=(-1, 0))
        return x, dx

    def max_norm(self, probe: int = 2048) -> float:
        x, _ = self.coords(np.arange(probe) / probe)
        return float(np.linalg.norm(x, axis=-1).max())

    def sample(self, size: int) -> SampledLoop:
        x, dx = self.coords(np.arange(size) / size)
        return SampledLoop(qt.qexp(x), velocity=qt.dqexp(x, dx), generator=self)


class PathSystemGenerator:
    """k paths from a common start to a common end with sitting instants."""

    def __init__(self, start, direction, wiggles, collar_fraction):
        self.start = np.asarray(start, dtype=float)
        self.direction = np.asarray(direction, dtype=float)
        self.wiggles = wiggles  # list of (m, 3) sine coefficients
        self.collar_fraction = collar_fraction

    @staticmethod
    def from_rng(rng, count, modes, amplitude, collar_fraction=DEFAULT_COLLAR_FRACTION,
                 cap=1.5, start_band=None):
        if start_band is None:
            start = qt.qexp(rng.normal(size=3) * 0.25)
        else:
            d = rng.normal(size=3)
            d *= rng.uniform(*start_band) / np.linalg.norm(d)
            start = qt.qexp(d)
        end = qt.qexp(rng.normal(size=3) * 0.25)
        direction = qt.qlog(qt.qmul(qt.qconj(start), end))
        k = np.arange(1, modes + 1)[:, None]
        wiggles = []
        for _ in range(count):
            w = rng.normal(size=(modes, 3)) * amplitude / (k * k * np.sqrt(modes))
            wiggles.append(w)
        gen = PathSystemGenerator(start, direction, wiggles, collar_fraction)
        m = gen.max_norm()
        if m > cap:
            gen = PathSystemGenerator(start, direction,
                                      [w * (cap / m) for w in wiggles],
                                      collar_fraction)
        return gen

    def _ramp(self, t):
        c = self.collar_fraction
        u = smoothstep5((t - c) / (1.0 - 2.0 * c))
        du = smoothstep5_deriv((t - c) / (1.0 - 2.0 * c)) / (1.0 - 2.0 * c)
        return u, du

    def coords(self, index, t):
        u, du = self._ramp(np.asarray(t, dtype=float))
        w = self.wiggles[index]
        k = np.arange(1, w.shape[0] + 1)
        phase = np.pi * np.multiply.outer(u, k)
        wig = np.tensordot(np.sin(phase), w, axes=(-1, 0))
        dwig_du = np.tensordot(np.cos(phase) * (np.pi * k), w, axes=(-1, 0))
        # sin(pi k) is only zero to rounding; endpoints must coincide exactly
        clamped = (u <= 0.0) | (u >= 1.0)
        wig[clamped] = 0.0
        x = u[..., None] * self.direction + wig
        # d/dt (u D + W(u)) = u' (D + W'(u))
        dx = du[..., None] * (self.direction + dwig_du)
        return x, dx

    def max_norm(self, probe: int = 1024) -> float:
        t = np.arange(probe + 1) / probe
        return max(
            float(np.linalg.norm(self.coords(i, t)[0], axis=-1).max())
            for i in range(len(self.wiggles))
        )

    def sample(self, index: int, segments: int) -> SampledPath:
        t = np.arange(segments + 1) / segments
        x, dx = self.coords(index, t)
        samples = qt.qmul(self.start, qt.qexp(x))
        velocity = qt.qmul(self.start, qt.dqexp(x, dx))
        collar = int(np.floor(self.collar_fraction * segments))
        # force the collars bitwise constant (the ramp is exactly flat there)
        samples[: collar + 1] = samples[0]
        samples[segments - collar :] = samples[segments]
        velocity[: collar + 1] = 0.0
        velocity[segments - collar :] = 0.0
        return SampledPath(samples, collar=collar, velocity=velocity, generator=(self, index))


class DiskGenerator:
    """Radial-ramp filling of a Fourier boundary loop times a bulk texture."""

    def __init__(self, boundary: FourierLoopGenerator, texture: FourierLoopGenerator,
                 bulk_amplitude: float, collar_fraction: float):
        self.boundary = boundary
        self.texture = texture
        self.bulk_amplitude = bulk_amplitude
        self.collar_fraction = collar_fraction

    def _profiles(self, r):
        rhat = r / (1.0 - self.collar_fraction)
        s = smoothstep5(rhat)
        ds = smoothstep5_deriv(rhat) / (1.0 - self.collar_fraction)
        b = 4.0 * self.bulk_amplitude * s * (1.0 - s)
        db = 4.0 * self.bulk_amplitude * ds * (1.0 - 2.0 * s)
        return s, ds, b, db

    def sample(self, radial: int, angular: int) -> DiskMap:
        r = np.arange(radial + 1) / radial
        t = np.arange(angular) / angular
        x, dx = self.boundary.coords(t)
        w, dw = self.texture.coords(t)
        psi, dpsi, b, db = self._profiles(r)

        argE = psi[:, None, None] * x[None]
        argB = b[:, None, None] * w[None]
        E = qt.qexp(argE)
        B = qt.qexp(argB)
        grid = qt.qmul(B, E)
        dE_t = qt.dqexp(argE, psi[:, None, None] * dx[None])
        dB_t = qt.dqexp(argB, b[:, None, None] * dw[None])
        d_t = qt.qmul(dB_t, E) + qt.qmul(B, dE_t)
        dE_r = qt.dqexp(argE, dpsi[:, None, None] * x[None])
        dB_r = qt.dqexp(argB, db[:, None, None] * w[None])
        d_r = qt.qmul(dB_r, E) + qt.qmul(B, dE_r)

        first = int(np.ceil((1.0 - self.collar_fraction) * radial))
        ring = qt.qexp(x)
        dring = qt.dqexp(x, dx)
        grid[first:] = ring[None]
        d_t[first:] = dring[None]
        d_r[first:] = 0.0
        grid[0] = qt.IDENTITY
        d_t[0] = 0.0
        return DiskMap(grid, collar_fraction=self.collar_fraction,
                       d_r=d_r, d_t=d_t, generator=self)


def geodesic_sphere(radius_angle: float = 0.9,
                    resolution: Resolution = DEFAULT_RESOLUTION) -> SphereMap:
    """Sphere of points at fixed geodesic distance from e.

    The direction swept runs over the whole unit sphere once, so contractions
    of this map along the short and the long geodesics differ by one unit of
    total volume: a fixed-degree test case.
    """
    nr, nt = resolution.disk_radial, resolution.disk_angular
    r = np.arange(nr + 1) / nr
    t = np.arange(nt) / nt
    colat_north = (np.pi / 2.0) * smoothstep5(r / (1.0 - DEFAULT_COLLAR_FRACTION))
    colat_south = np.pi - colat_north

    def chart(colat):
        a = colat[:, None]
        n = np.stack(
            [
                np.sin(a) * np.cos(2.0 * np.pi * t)[None, :],
                np.sin(a) * np.sin(2.0 * np.pi * t)[None, :],
                np.broadcast_to(np.cos(a), (colat.size, nt)),
            ],
            axis=-1,
        )
        return DiskMap(qt.qexp(radius_angle * n))

    north, south = chart(colat_north), chart(colat_south)
    seam = Seam("equator", north.grid[-1], (SeamEnd(0, 0, +1), SeamEnd(1, 0, +1)))
    return SphereMap(
        charts=(SphereChart(north, +1, "north"), SphereChart(south, -1, "south")),
        seams=(seam,),
    )


def bulk_disk(seed: int, modes: int = 3, amplitude: float = 0.4,
              resolution: Resolution = DEFAULT_RESOLUTION,
              collar_fraction: float = DEFAULT_COLLAR_FRACTION) -> DiskMap:
    """Disk with constant-e boundary ring: multiplies onto any filling
    without changing its boundary."""
    rng = np.random.default_rng(seed)
    texture = FourierLoopGenerator.from_rng(rng, modes, amplitude, cap=0.9)
    gen = DiskGenerator(FourierLoopGenerator(np.zeros((1, 3)), np.zeros((1, 3))),
                        texture, amplitude, collar_fraction)
    return gen.sample(resolution.disk_radial, resolution.disk_angular)


def random_map(kind: str, seed: int, modes: int = 3, amplitude: float = 0.5,
               resolution: Resolution = DEFAULT_RESOLUTION):
    """Deterministic smooth test map of the requested kind.

    Same seed, same output, bit for bit; amplitudes are capped well away
    from the antipode.
    """
    rng = np.random.default_rng(seed)
    prov = {"seed": seed, "modes": modes, "amplitude": amplitude}
    if kind == "loop":
        out = FourierLoopGenerator.from_rng(rng, modes, amplitude).sample(
            resolution.disk_angular
        )
        out.provenance.update(prov)
        return out
    if kind == "path":
        gen = PathSystemGenerator.from_rng(rng, 1, modes, amplitude)
        out = gen.sample(0, resolution.path_segments)
        out.provenance.update(prov)
        return out
    if kind == "disk":
        boundary = FourierLoopGenerator.from_rng(rng, modes, amplitude)
        texture = FourierLoopGenerator.from_rng(rng, modes, amplitude, cap=0.9)
        gen = DiskGenerator(boundary, texture, 0.5 * amplitude, DEFAULT_COLLAR_FRACTION)
        out = gen.sample(resolution.disk_radial, resolution.disk_angular)
        out.provenance.update(prov)
        return out
    raise ValueError(f"unknown map kind {kind!r}")


def random_path_system(seed: int, count: int = 3, modes: int = 3,
                       amplitude: float = 0.5,
                       resolution: Resolution = DEFAULT_RESOLUTION,
                       start_band=None):
    """`count` paths with common endpoints, sampled with exact velocities.

    `start_band` (lo, hi) prescribes the geodesic distance of the common
    start point from e; samplers use disjoint bands where downstream checks
    need structurally separated data.
    """
    rng = np.random.default_rng(seed)
    gen = PathSystemGenerator.from_rng(rng, count, modes, amplitude,
                                       start_band=start_band)
    return [gen.sample(i, resolution.path_segments) for i in range(count)]


def random_path_triple(seed: int, modes: int = 3, amplitude: float = 0.5,
                       resolution: Resolution = DEFAULT_RESOLUTION) -> PathTriple:
    p1, p2, p3 = random_path_system(seed, 3, modes, amplitude, resolution)
    return PathTriple(p1, p2, p3)


# ---------------------------------------------------------------------------
# resampling and serialization
# ---------------------------------------------------------------------------


def resample_loop(loop: SampledLoop, size: int) -> SampledLoop:
    """Resample to `size` points: exactly via the generator when present,
    else by piecewise-geodesic interpolation (O(1/N^2) error)."""
    if loop.generator is not None:
        return loop.generator.sample(size)
    t = np.arange(size) / size * loop.size
    j = np.floor(t).astype(int) % loop.size
    frac = t - np.floor(t)
    a = loop.samples[j]
    b = loop.samples[(j + 1) % loop.size]
    return SampledLoop(qt.slerp(a, b, frac))


def resample_path(path: SampledPath, segments: int) -> SampledPath:
    if path.generator is not None:
        gen, index = path.generator
        return gen.sample(index, segments)
    t = np.arange(segments + 1) / segments * path.segments
    j = np.clip(np.floor(t).astype(int), 0, path.segments - 1)
    frac = t - j
    a = path.samples[j]
    b = path.samples[j + 1]
    collar = max(2, int(round(path.collar / path.segments * segments)))
    return SampledPath(qt.slerp(a, b, frac), collar=collar)


_KIND_BY_TYPE = {"path": SampledPath, "loop": SampledLoop, "disk": DiskMap}


def map_to_dict(obj) -> dict:
    """JSON-ready container; floats survive a round trip bit for bit."""
    if isinstance(obj, SampledPath):
        out = {"kind": "path", "dims": [obj.segments + 1], "collar": obj.collar,
               "provenance": dict(obj.provenance),
               "samples": obj.samples.ravel().tolist()}
        if obj.velocity is not None:
            out["velocity"] = obj.velocity.ravel().tolist()
    elif isinstance(obj, SampledLoop):
        out = {"kind": "loop", "dims": [obj.size],
               "provenance": dict(obj.provenance),
               "samples": obj.samples.ravel().tolist()}
        if obj.velocity is not None:
            out["velocity"] = obj.velocity.ravel().tolist()
    elif isinstance(obj, DiskMap):
        out = {"kind": "disk", "dims": [obj.radial + 1, obj.angular],
               "collar": obj.collar_fraction,
               "samples": obj.grid.ravel().tolist(),
               "provenance": dict(obj.provenance)}
        if obj.d_r is not None:
            out["velocity_r"] = obj.d_r.ravel().tolist()
            out["velocity_t"] = obj.d_t.ravel().tolist()
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    out["schema_version"] = 1
    return out


def map_from_dict(data: dict):
    kind = data["kind"]
    dims = data["dims"]
    if kind == "path":
        shape = (dims[0], 4)
        vel = np.array(data["velocity"]).reshape(shape) if "velocity" in data else None
        return SampledPath(np.array(data["samples"]).reshape(shape),
                           collar=data["collar"], velocity=vel,
                           provenance=data.get("provenance", {}))
    if kind == "loop":
        shape = (dims[0], 4)
        vel = np.array(data["velocity"]).reshape(shape) if "velocity" in data else None
        return SampledLoop(np.array(data["samples"]).reshape(shape), velocity=vel,
                           provenance=data.get("provenance", {}))
    if kind == "disk":
        shape = (dims[0], dims[1], 4)
        d_r = np.array(data["velocity_r"]).reshape(shape) if "velocity_r" in data else None
        d_t = np.array(data["velocity_t"]).reshape(shape) if "velocity_t" in data else None
        return DiskMap(np.array(data["samples"]).reshape(shape),
                       collar_fraction=data["collar"], d_r=d_r, d_t=d_t,
                       provenance=data.get("provenance", {}))
    raise ValueError(f"unknown kind {kind!r}")


def save_map(obj, path):
    with open(path, "w") as fh:
        json.dump(map_to_dict(obj), fh)


def load_map(path):
    with open(path) as fh:
        return map_from_dict(json.load(fh))
