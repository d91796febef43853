"""Exact arithmetic on SU(2) = Spin(3), its Lie algebra, and the two
invariant form densities driving every integral in this package.

Conventions
-----------
* Group points are unit quaternions; su(2) coordinates are the pure part of
  the quaternion logarithm, so the antipode -e sits at coordinate norm pi.
* The invariant pairing is <X, Y> = kappa * (X . Y).  kappa is not a fixed
  convention: it is calibrated so the bi-invariant 3-form density integrates
  to 1 over the whole group (see wz.calibrate_pairing).  The closed-form
  value of that calibration is 1/(2 pi^2).
* With this normalization the 3-form density on left-translated frames is
  h(X, Y, Z) = kappa * det[X Y Z], and the cross-term 2-form density on
  G x G is rho = (kappa/2) * (<theta(v1), thetabar(w2)> - <theta(v2),
  thetabar(w1)>).  These satisfy, with coefficient exactly one,

      H_{g1 g2} = H_{g1} + H_{g2} - d rho_{g1,g2}
      rho_{g1,g2} + rho_{g1 g2,g3} = rho_{g2,g3} + rho_{g1,g2 g3}

  which the wz module verifies numerically.
"""

from dataclasses import dataclass

import numpy as np

from . import quaternions as qt
from .errors import AntipodalSingularity

#: Closed-form value of the calibrated pairing constant: the det-density
#: integrates to 2 pi^2 over the unit 3-sphere, so kappa = 1/(2 pi^2) makes
#: the total integral equal to 1.
KAPPA_UNIT_TOTAL = 1.0 / (2.0 * np.pi**2)

DEFAULT_ANTIPODE_MARGIN = 1e-6


@dataclass(frozen=True)
class Pairing:
    """Scalar multiple of the Euclidean pairing on su(2) coordinates."""

    kappa: float = KAPPA_UNIT_TOTAL

    def __call__(self, x, y):
        return self.kappa * float(np.dot(np.asarray(x), np.asarray(y)))


DEFAULT_PAIRING = Pairing()


@dataclass(frozen=True)
class GroupElement:
    """A point of SU(2), stored as a unit quaternion (w, x, y, z)."""

    q: np.ndarray

    @staticmethod
    def from_quaternion(q) -> "GroupElement":
        q = np.asarray(q, dtype=float)
        n = np.linalg.norm(q)
        if n == 0.0:
            raise ValueError("zero quaternion")
        return GroupElement(q / n)

    @staticmethod
    def identity() -> "GroupElement":
        return GroupElement(qt.IDENTITY.copy())

    def inverse(self) -> "GroupElement":
        return GroupElement(qt.qconj(self.q))

    def angle(self) -> float:
        return float(qt.angle_from_identity(self.q))


@dataclass(frozen=True)
class AlgElement:
    """su(2) value in the fixed orthogonal coordinate basis (radians)."""

    x: np.ndarray

    @staticmethod
    def from_coords(x) -> "AlgElement":
        return AlgElement(np.asarray(x, dtype=float))

    def norm(self) -> float:
        return float(np.linalg.norm(self.x))


@dataclass(frozen=True)
class CircleValue:
    """Point of U(1), stored as a unit complex number."""

    u: complex

    @staticmethod
    def one() -> "CircleValue":
        return CircleValue(1.0 + 0.0j)

    @staticmethod
    def from_complex(u: complex) -> "CircleValue":
        m = abs(u)
        if m == 0.0:
            raise ValueError("zero is not on the circle")
        return CircleValue(u / m)

    @staticmethod
    def from_turns(t: float) -> "CircleValue":
        return CircleValue(complex(np.cos(2.0 * np.pi * t), np.sin(2.0 * np.pi * t)))

    def times(self, other: "CircleValue") -> "CircleValue":
        return CircleValue.from_complex(self.u * other.u)

    def inverse(self) -> "CircleValue":
        return CircleValue.from_complex(self.u.conjugate())

    def turns(self) -> float:
        """Argument as a fraction of a full turn, in (-1/2, 1/2]."""
        return float(np.angle(self.u)) / (2.0 * np.pi)


def circle_distance(a: CircleValue, b: CircleValue) -> float:
    """Distance on U(1) in turn units, in [0, 1/2]."""
    return abs(float(np.angle(a.u * b.u.conjugate()))) / (2.0 * np.pi)


def group_mul(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group product, renormalized to unit norm."""
    return GroupElement(qt.qnormalize(qt.qmul(a.q, b.q)))


def exp_map(x: AlgElement) -> GroupElement:
    return GroupElement(qt.qexp(x.x))


def log_map(g: GroupElement, antipode_margin: float = DEFAULT_ANTIPODE_MARGIN) -> AlgElement:
    """Principal logarithm; rejects points within `antipode_margin` of -e."""
    ang = qt.angle_from_identity(g.q)
    if ang > np.pi - antipode_margin:
        raise AntipodalSingularity(
            f"point at angle {ang:.6f} is within {antipode_margin:g} of the antipode"
        )
    return AlgElement(qt.qlog(g.q))


def bracket(x: AlgElement, y: AlgElement) -> AlgElement:
    """Commutator in quaternion coordinates: [X, Y] = 2 X x Y."""
    return AlgElement(2.0 * np.cross(x.x, y.x))


def h_density(x, y, z, pairing: Pairing = DEFAULT_PAIRING) -> float:
    """Value of the invariant 3-form on a left-translated tangent triple.

    Accepts AlgElement or raw (...,3) coordinate arrays; totally
    antisymmetric; equals kappa * det[X Y Z].
    """
    x = x.x if isinstance(x, AlgElement) else np.asarray(x)
    y = y.x if isinstance(y, AlgElement) else np.asarray(y)
    z = z.x if isinstance(z, AlgElement) else np.asarray(z)
    return pairing.kappa * float(np.dot(x, np.cross(y, z)))


def h_density_batch(x, y, z, kappa: float) -> np.ndarray:
    """Batched h_density on (...,3) arrays: kappa * det[x y z] per entry."""
    return kappa * np.sum(x * np.cross(y, z), axis=-1)


def maurer_cartan(g, v):
    """Left Maurer-Cartan value theta(v) = Im(g^-1 v) of an ambient tangent."""
    gq = g.q if isinstance(g, GroupElement) else np.asarray(g)
    return qt.qmul(qt.qconj(gq), np.asarray(v, dtype=float))[..., 1:]


def maurer_cartan_right(g, v):
    """Right-invariant form value thetabar(v) = Im(v g^-1)."""
    gq = g.q if isinstance(g, GroupElement) else np.asarray(g)
    return qt.qmul(np.asarray(v, dtype=float), qt.qconj(gq))[..., 1:]


def rho_density(g1, g2, t1, t2, pairing: Pairing = DEFAULT_PAIRING) -> float:
    """Cross-term 2-form on G x G evaluated on two tangent pairs.

    t1 and t2 are pairs (v, w) of ambient tangents at (g1, g2).  Value:
    (kappa/2) (<theta(v1), thetabar(w2)> - <theta(v2), thetabar(w1)>);
    antisymmetric in (t1, t2) by construction, and zero whenever both
    tangents on one factor vanish.
    """
    v1, w1 = t1
    v2, w2 = t2
    a = np.dot(maurer_cartan(g1, v1), maurer_cartan_right(g2, w2))
    b = np.dot(maurer_cartan(g1, v2), maurer_cartan_right(g2, w1))
    return 0.5 * pairing.kappa * float(a - b)


def rho_density_batch(x1, y1bar, x2, y2bar, kappa: float) -> np.ndarray:
    """Batched rho on precomputed form values.

    x_i are left-form values of the first-factor tangents, y_ibar right-form
    values of the second-factor tangents, all (...,3).
    """
    return 0.5 * kappa * (np.sum(x1 * y2bar, axis=-1) - np.sum(x2 * y1bar, axis=-1))
