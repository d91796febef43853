"""Vectorized unit-quaternion arithmetic.

Quaternions are stored as float64 arrays of shape (..., 4) in (w, x, y, z)
order; su(2) tangent coordinates as (..., 3) arrays identified with pure
quaternions.  exp/log use the geodesic angle from the identity, so the
antipode -e sits at angle pi.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

_SMALL = 1e-8


def qmul(a, b):
    """Hamilton product, broadcasting over leading axes."""
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(q):
    """Conjugate; equals the inverse on the unit sphere."""
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def qnorm(q):
    return np.linalg.norm(q, axis=-1)


def qnormalize(q):
    return q / qnorm(q)[..., None]


def qidentity(shape=()):
    out = np.zeros(shape + (4,))
    out[..., 0] = 1.0
    return out


def pure(v):
    """Embed (..., 3) su(2) coordinates as pure quaternions."""
    out = np.zeros(v.shape[:-1] + (4,))
    out[..., 1:] = v
    return out


def impart(q):
    return q[..., 1:]


def angle_from_identity(q):
    """Geodesic distance from e on the unit sphere, in [0, pi]."""
    return np.arctan2(np.linalg.norm(q[..., 1:], axis=-1), q[..., 0])


def _sinc(n):
    # sin(n)/n, stable near 0
    return np.where(n > _SMALL, np.sin(n) / np.where(n == 0.0, 1.0, n), 1.0 - n * n / 6.0)


def qexp(v):
    """exp of su(2) coordinates: |v| is the geodesic angle of the result."""
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.concatenate([np.cos(n), _sinc(n) * v], axis=-1)


def qlog(q):
    """Inverse of qexp for unit quaternions; |qlog(q)| <= pi.

    Raw version: no antipode guard.  At -e the direction is undefined and the
    result degenerates; callers that may approach the antipode must check
    angle_from_identity first.
    """
    w = q[..., 0:1]
    im = q[..., 1:]
    n = np.linalg.norm(im, axis=-1, keepdims=True)
    ang = np.arctan2(n, w)
    # the series branch ang/n ~ 1/w holds near the identity only; near the
    # antipode ang/n is large but well-conditioned for any nonzero n
    series = (n <= _SMALL) & (w > 0.0)
    f = np.where(series, 1.0 / np.where(w > 0.5, w, 1.0),
                 ang / np.where(n == 0.0, 1.0, n))
    return f * im


def dqexp(v, dv):
    """Tangent of qexp: d/ds qexp(v(s)) for v' = dv.  Shapes (...,3)->(...,4)."""
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    vdv = np.sum(v * dv, axis=-1, keepdims=True)
    s = _sinc(n)
    # (n cos n - sin n)/n^3, stable near 0
    small = n <= _SMALL
    nsafe = np.where(small, 1.0, n)
    g = np.where(small, -1.0 / 3.0 + n * n / 30.0, (nsafe * np.cos(nsafe) - np.sin(nsafe)) / nsafe**3)
    dw = -s * vdv
    dvec = s * dv + g * vdv * v
    return np.concatenate([dw, dvec], axis=-1)


def dqlog(q, dq):
    """Tangent of qlog along a curve of unit quaternions.

    Valid away from the antipode.  dq need not be exactly tangent to the
    sphere; the radial component is projected out by the formulas.
    """
    w = q[..., 0:1]
    im = q[..., 1:]
    dw = dq[..., 0:1]
    dim = dq[..., 1:]
    n2 = np.sum(im * im, axis=-1, keepdims=True)
    n = np.sqrt(n2)
    ang = np.arctan2(n, w)
    r2 = n2 + w * w
    small = (n <= _SMALL) & (w > 0.0)
    nsafe = np.where(n == 0.0, 1.0, n)
    dn = np.sum(im * dim, axis=-1, keepdims=True) / nsafe
    dang = (w * dn - n * dw) / r2
    f = np.where(small, 1.0 / np.where(w > 0.5, w, 1.0), ang / nsafe)
    # df = (dang - f*dn)/n has a 0/0 at n->0; the v*df term is O(n)*df so a
    # series value of df suffices there.
    df = np.where(small, 0.0, (dang - f * dn) / nsafe)
    return f * dim + df * im


def slerp(a, b, t):
    """Geodesic interpolation between unit quaternions a and b at fraction t."""
    rel = qlog(qmul(qconj(a), b))
    t = np.asarray(t, dtype=float)
    return qmul(a, qexp(t[..., None] * rel))
