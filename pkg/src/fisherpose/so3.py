"""Rotation utilities on SO(3).

Conventions
-----------
- Rotations are ``(3, 3)`` float arrays acting on column vectors; most
  functions also accept stacks of shape ``(..., 3, 3)``.
- Quaternions are ``(w, x, y, z)`` with the scalar first (Hamilton product).
- Angles are radians.
- Serialized rotations are 9 row-major reals.
"""

from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError

ROTATION_TOL = 1e-9


class ProperSVD(NamedTuple):
    """Factors of ``m = u @ diag(s) @ v.T`` with ``u, v`` in SO(3).

    ``s`` is ordered ``s[0] >= s[1] >= |s[2]|``; only ``s[2]`` may be negative.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self):
        return (self.u * self.s[..., None, :]) @ np.swapaxes(self.v, -1, -2)


def rotation_error(m):
    """Return ``(||m^T m - I||_F, |det m - 1|)`` for a single matrix."""
    m = np.asarray(m, dtype=float)
    ortho = np.linalg.norm(m.T @ m - np.eye(3))
    return float(ortho), float(abs(np.linalg.det(m) - 1.0))


def is_rotation(m, tol=ROTATION_TOL):
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    ortho, det = rotation_error(m)
    return ortho < tol and det < tol


def as_rotation(m, tol=ROTATION_TOL):
    """Validate and return ``m`` as a float (3, 3) rotation, else raise."""
    m = np.asarray(m, dtype=float)
    if not is_rotation(m, tol):
        raise InvalidArgumentError(f"not a rotation matrix within {tol:g}: {m!r}")
    return m


def proper_svd(m):
    """Proper singular value decomposition of one or more 3x3 matrices.

    From a standard SVD ``m = U diag(sigma) V^T`` the factors are flipped to
    ``U' = U diag(1, 1, det U)`` and ``V' = V diag(1, 1, det V)``, and the
    sign ``det U det V`` is folded into the smallest singular value.

    >>> f = proper_svd(np.diag([1.0, 1.0, -1.0]))
    >>> f.s.tolist()
    [1.0, 1.0, -1.0]
    """
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (3, 3):
        raise InvalidArgumentError(f"expected (..., 3, 3) input, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError("proper_svd input must be finite")
    u, sigma, vt = np.linalg.svd(m)
    v = np.swapaxes(vt, -1, -2)
    det_u = np.linalg.det(u)
    det_v = np.linalg.det(v)
    # determinants of orthogonal factors are +-1; round away float noise
    det_u = np.where(det_u < 0, -1.0, 1.0)
    det_v = np.where(det_v < 0, -1.0, 1.0)
    u = u.copy()
    v = v.copy()
    u[..., :, 2] *= det_u[..., None]
    v[..., :, 2] *= det_v[..., None]
    s = sigma.copy()
    s[..., 2] *= det_u * det_v
    return ProperSVD(u, s, v)


def project_to_so3(m):
    """Nearest rotation in Frobenius norm, ``u @ v.T`` of the proper SVD."""
    f = proper_svd(m)
    return f.u @ np.swapaxes(f.v, -1, -2)


def geodesic_distance(a, b):
    """Angle of the relative rotation ``a^T b`` in ``[0, pi]``.

    Broadcasts over leading dimensions.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    tr = np.einsum("...ij,...ij->...", a, b)
    # clamp: near-identity traces overshoot 3 by ~1e-16
    out = np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))
    return float(out) if out.ndim == 0 else out


def quat_to_rot(q):
    """Rotation matrix of a unit quaternion ``(w, x, y, z)``.

    Accepts ``(4,)`` or ``(..., 4)``. ``q`` and ``-q`` give the same matrix.
    """
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 4:
        raise InvalidArgumentError(f"quaternion must have 4 components, got {q.shape}")
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    ww, xx, yy, zz = w * w, x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    r = np.empty(q.shape[:-1] + (3, 3))
    r[..., 0, 0] = ww + xx - yy - zz
    r[..., 0, 1] = 2.0 * (xy - wz)
    r[..., 0, 2] = 2.0 * (xz + wy)
    r[..., 1, 0] = 2.0 * (xy + wz)
    r[..., 1, 1] = ww - xx + yy - zz
    r[..., 1, 2] = 2.0 * (yz - wx)
    r[..., 2, 0] = 2.0 * (xz - wy)
    r[..., 2, 1] = 2.0 * (yz + wx)
    r[..., 2, 2] = ww - xx - yy + zz
    return r


def rot_to_quat(r, tol=1e-8):
    """Unit quaternion ``(w, x, y, z)`` of a single rotation, with ``w >= 0``.

    Uses Shepperd's branch on the largest diagonal term for stability.
    """
    r = as_rotation(r, tol)
    tr = np.trace(r)
    diag = np.diag(r)
    k = int(np.argmax([tr, *diag]))
    if k == 0:
        t = np.sqrt(1.0 + tr) * 2.0
        q = [0.25 * t, (r[2, 1] - r[1, 2]) / t, (r[0, 2] - r[2, 0]) / t, (r[1, 0] - r[0, 1]) / t]
    elif k == 1:
        t = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = [(r[2, 1] - r[1, 2]) / t, 0.25 * t, (r[0, 1] + r[1, 0]) / t, (r[0, 2] + r[2, 0]) / t]
    elif k == 2:
        t = np.sqrt(1.0 - r[0, 0] + r[1, 1] - r[2, 2]) * 2.0
        q = [(r[0, 2] - r[2, 0]) / t, (r[0, 1] + r[1, 0]) / t, 0.25 * t, (r[1, 2] + r[2, 1]) / t]
    else:
        t = np.sqrt(1.0 - r[0, 0] - r[1, 1] + r[2, 2]) * 2.0
        q = [(r[1, 0] - r[0, 1]) / t, (r[0, 2] + r[2, 0]) / t, (r[1, 2] + r[2, 1]) / t, 0.25 * t]
    q = np.array(q)
    q /= np.linalg.norm(q)
    return -q if q[0] < 0 else q


def skew(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def rot_from_axis_angle(axis, angle):
    """Rodrigues' formula ``I + sin(t) K + (1 - cos(t)) K^2`` for a unit axis."""
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"axis must be a unit 3-vector, got {axis!r}")
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rot_from_rotvec(rotvec):
    """Exponential map of rotation vectors ``(..., 3)`` (axis times angle)."""
    rotvec = np.asarray(rotvec, dtype=float)
    theta = np.linalg.norm(rotvec, axis=-1)
    small = theta < 1e-12
    safe = np.where(small, 1.0, theta)
    k = skew(rotvec / safe[..., None])
    s = np.where(small, 0.0, np.sin(theta))[..., None, None]
    c = np.where(small, 0.0, 1.0 - np.cos(theta))[..., None, None]
    return np.eye(3) + s * k + c * (k @ k)


def random_unit_quaternion(rng, size=None):
    shape = (4,) if size is None else tuple(np.atleast_1d(size)) + (4,)
    q = rng.standard_normal(shape)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def random_uniform_rotation(rng, size=None):
    """Haar-uniform rotation(s) from normalized Gaussian 4-vectors.

    ``rng`` is a ``numpy.random.Generator``. Returns ``(3, 3)`` when ``size``
    is None, else ``(size, 3, 3)``.
    """
    return quat_to_rot(random_unit_quaternion(rng, size))
