"""Rigid motions ISO(3), their Lie algebra iso(3) and its dual.

Conventions
-----------
* A rigid motion is a pair ``(a, R)`` acting on points by ``x -> a + R x``;
  the group law is ``(a, R)(a', R') = (a + R a', R R')``.
* An algebra element is a pair ``(v, w)``: infinitesimal translation ``v`` and
  the axial vector ``w`` of an infinitesimal rotation.  The matrix form of the
  rotation part is ``hat(w)``, the matrix of ``u -> w x u``.
* The 4x4 homogeneous embedding is ``[[R, a], [0, 1]]`` for group elements and
  ``[[hat(w), v], [0, 0]]`` for algebra elements; the bracket is the matrix
  commutator in that embedding.
* The metric is Euclidean in orthonormal frames, so index placement never
  changes a component value.

The vectorised helpers (``hat``, ``vee``, ``rotation_exp``, ...) accept
arrays with arbitrary leading dimensions; the field modules build on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_EYE3 = np.eye(3)
_EYE4 = np.eye(4)

TOL_ORTHO = 1e-10
TOL_GROUP = 1e-9

# Below this angle the Rodrigues coefficients switch to their Taylor series.
_SMALL_ANGLE = 1e-2


def hat(w: np.ndarray) -> np.ndarray:
    """Antisymmetric matrix of ``u -> w x u``; leading dims are preserved."""
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def vee(m: np.ndarray) -> np.ndarray:
    """Axial vector of the antisymmetric part of ``m``.

    For an antisymmetric input this is the exact inverse of :func:`hat`.
    """
    m = np.asarray(m, dtype=float)
    return 0.5 * np.stack(
        [
            m[..., 2, 1] - m[..., 1, 2],
            m[..., 0, 2] - m[..., 2, 0],
            m[..., 1, 0] - m[..., 0, 1],
        ],
        axis=-1,
    )


def antisym(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m - np.swapaxes(m, -1, -2))


def sym(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def cross(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Cross product over the last axis; cheaper than ``np.cross`` on small inputs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x0, x1, x2 = x[..., 0], x[..., 1], x[..., 2]
    y0, y1, y2 = y[..., 0], y[..., 1], y[..., 2]
    return np.stack([x1 * y2 - x2 * y1, x2 * y0 - x0 * y2, x0 * y1 - x1 * y0], axis=-1)


def _rodrigues_scalar(t: float):
    if t < _SMALL_ANGLE:
        t2 = t * t
        t4 = t2 * t2
        return (
            1.0 - t2 / 6.0 + t4 / 120.0 - t4 * t2 / 5040.0,
            0.5 - t2 / 24.0 + t4 / 720.0 - t4 * t2 / 40320.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t4 * t2 / 362880.0,
        )
    s = math.sin(t)
    return s / t, (1.0 - math.cos(t)) / (t * t), (t - s) / (t * t * t)


def _rodrigues_coefficients(theta: np.ndarray):
    """Return ``sin(t)/t``, ``(1-cos t)/t^2`` and ``(t - sin t)/t^3``."""
    if np.ndim(theta) == 0:
        return _rodrigues_scalar(float(theta))
    small = theta < _SMALL_ANGLE
    t = np.where(small, 1.0, theta)
    t2 = theta * theta
    t4 = t2 * t2
    a = np.where(small, 1.0 - t2 / 6.0 + t4 / 120.0 - t4 * t2 / 5040.0, np.sin(t) / t)
    b = np.where(small, 0.5 - t2 / 24.0 + t4 / 720.0 - t4 * t2 / 40320.0, (1.0 - np.cos(t)) / (t * t))
    c = np.where(
        small,
        1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t4 * t2 / 362880.0,
        (t - np.sin(t)) / (t * t * t),
    )
    return a, b, c


def rotation_exp(w: np.ndarray) -> np.ndarray:
    """Rodrigues formula ``exp(hat(w))`` over leading dims."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    a, b, _ = _rodrigues_coefficients(theta)
    a = np.asarray(a)[..., None, None]
    b = np.asarray(b)[..., None, None]
    W = hat(w)
    return _EYE3 + a * W + b * (W @ W)


def se3_exp(v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form exponential of ``(v, w)``; returns ``(a, R)`` arrays."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w, axis=-1)
    a, b, c = _rodrigues_coefficients(theta)
    a = np.asarray(a)[..., None, None]
    b = np.asarray(b)[..., None, None]
    c = np.asarray(c)[..., None, None]
    W = hat(w)
    W2 = W @ W
    R = _EYE3 + a * W + b * W2
    V = _EYE3 + b * W + c * W2
    return np.einsum("...ij,...j->...i", V, v), R


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector of ``R`` (principal branch)."""
    from scipy.spatial.transform import Rotation as _ScipyRotation

    R = np.asarray(R, dtype=float)
    flat = R.reshape(-1, 3, 3)
    rv = _ScipyRotation.from_matrix(flat).as_rotvec()
    return rv.reshape(R.shape[:-2] + (3,))


def polar_rotation(m: np.ndarray) -> np.ndarray:
    """Orthogonal polar factor of ``m`` over leading dims.

    Raises ``ValueError`` when ``det(m) <= 0`` since the polar factor is then
    not a proper rotation.
    """
    m = np.asarray(m, dtype=float)
    if np.any(np.linalg.det(m) <= 0.0):
        raise ValueError("polar projection needs a positive determinant")
    u, _, vt = np.linalg.svd(m)
    return u @ vt




def _det3(m: np.ndarray) -> np.ndarray:
    """Closed-form 3x3 determinant over leading dims (cheaper than LAPACK for single matrices)."""
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def orthogonality_defect(m: np.ndarray) -> float:
    """``max(|m^T m - I|, |det m - 1|)``."""
    m = np.asarray(m, dtype=float)
    if m.shape == (3, 3):
        # scalar arithmetic is much faster than array calls for one matrix
        a, b, c, d, e, f, g, h, i = m.ravel().tolist()
        det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
        return max(
            abs(a * a + d * d + g * g - 1.0),
            abs(b * b + e * e + h * h - 1.0),
            abs(c * c + f * f + i * i - 1.0),
            abs(a * b + d * e + g * h),
            abs(a * c + d * f + g * i),
            abs(b * c + e * f + h * i),
            abs(det - 1.0),
        )
    gram = np.swapaxes(m, -1, -2) @ m - _EYE3
    return float(max(np.abs(gram).max(), np.abs(_det3(m) - 1.0).max()))


@dataclass(frozen=True)
class Rotation:
    """Proper rotation stored as a 3x3 matrix."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {m.shape}")
        defect = orthogonality_defect(m)
        if not defect <= TOL_ORTHO:
            raise ValueError(f"not a proper rotation (defect {defect:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def _checked(cls, m: np.ndarray) -> Rotation:
        """Wrap a matrix whose defect the caller has already verified."""
        obj = object.__new__(cls)
        m = np.array(m, dtype=float)
        m.setflags(write=False)
        object.__setattr__(obj, "m", m)
        return obj

    @classmethod
    def identity(cls) -> Rotation:
        return cls(np.eye(3))

    @classmethod
    def project(cls, m: np.ndarray) -> Rotation:
        """Nearest rotation to ``m`` in the Frobenius norm."""
        return cls(polar_rotation(m))

    @classmethod
    def from_rotvec(cls, w) -> Rotation:
        return cls(rotation_exp(w))

    @property
    def T(self) -> np.ndarray:
        return self.m.T

    def rotvec(self) -> np.ndarray:
        return rotation_log(self.m)


def _rotation_from_product(m: np.ndarray) -> Rotation:
    # products drift slowly; project only once drift is visible
    if orthogonality_defect(m) > TOL_ORTHO:
        return Rotation(polar_rotation(m))
    return Rotation._checked(m)


@dataclass(frozen=True)
class RigidMotion:
    """Element ``(a, R)`` of ISO(3)."""

    a: np.ndarray
    r: Rotation

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(3)
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        if not isinstance(self.r, Rotation):
            object.__setattr__(self, "r", Rotation(self.r))

    @classmethod
    def identity(cls) -> RigidMotion:
        return cls(np.zeros(3), Rotation.identity())

    @classmethod
    def from_matrix(cls, h: np.ndarray) -> RigidMotion:
        h = np.asarray(h, dtype=float)
        return cls(h[:3, 3], Rotation(h[:3, :3]))

    def as_matrix(self) -> np.ndarray:
        h = _EYE4.copy()
        h[:3, :3] = self.r.m
        h[:3, 3] = self.a
        return h

    def apply(self, x) -> np.ndarray:
        """Image of the point(s) ``x`` under ``x -> a + R x``."""
        return self.a + np.asarray(x, dtype=float) @ self.r.m.T

    def __matmul__(self, other: RigidMotion) -> RigidMotion:
        return compose(self, other)


@dataclass(frozen=True)
class IsoAlgebraElement:
    """Element ``(v, w)`` of iso(3); ``w`` is the axial rotation vector."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("v", "w"):
            arr = np.array(getattr(self, name), dtype=float).reshape(3)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zero(cls) -> IsoAlgebraElement:
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, xi) -> IsoAlgebraElement:
        """From a 6-vector ordered translations first, rotations last."""
        xi = np.asarray(xi, dtype=float)
        return cls(xi[:3], xi[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.w])

    def rotation_matrix(self) -> np.ndarray:
        return hat(self.w)

    def as_matrix(self) -> np.ndarray:
        m = np.zeros((4, 4))
        m[:3, :3] = hat(self.w)
        m[:3, 3] = self.v
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> IsoAlgebraElement:
        m = np.asarray(m, dtype=float)
        return cls(m[:3, 3], vee(m[:3, :3]))

    def __add__(self, other: IsoAlgebraElement) -> IsoAlgebraElement:
        return IsoAlgebraElement(self.v + other.v, self.w + other.w)

    def __sub__(self, other: IsoAlgebraElement) -> IsoAlgebraElement:
        return IsoAlgebraElement(self.v - other.v, self.w - other.w)

    def __mul__(self, s: float) -> IsoAlgebraElement:
        return IsoAlgebraElement(self.v * s, self.w * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Wrench:
    """Element ``(p, l)`` of iso(3)*: force (or momentum) and moment."""

    p: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        for name in ("p", "l"):
            arr = np.array(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"wrench component {name} is not finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class AffineFrame:
    """Affine frame ``(origin, e_i)``; the legs ``e_i`` are the basis columns."""

    origin: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        origin = np.array(self.origin, dtype=float).reshape(3)
        basis = np.array(self.basis, dtype=float).reshape(3, 3)
        if not np.linalg.det(basis) > 0.0:
            raise ValueError("frame basis must have positive determinant")
        origin.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def standard(cls) -> AffineFrame:
        return cls(np.zeros(3), np.eye(3))

    def is_orthonormal(self, tol: float = TOL_ORTHO) -> bool:
        return orthogonality_defect(self.basis) <= tol


def compose(g: RigidMotion, h: RigidMotion) -> RigidMotion:
    return RigidMotion(g.a + g.r.m @ h.a, _rotation_from_product(g.r.m @ h.r.m))


def inverse(g: RigidMotion) -> RigidMotion:
    rt = g.r.m.T
    return RigidMotion(-rt @ g.a, Rotation._checked(rt))


def exp(x: IsoAlgebraElement, scale: float = 1.0) -> RigidMotion:
    """Group element reached at parameter ``scale`` along ``x``'s one-parameter subgroup."""
    a, R = se3_exp(x.v * scale, x.w * scale)
    return RigidMotion(a, _rotation_from_product(R))


def bracket(x: IsoAlgebraElement, y: IsoAlgebraElement) -> IsoAlgebraElement:
    """Semi-direct bracket; equals the commutator of the 4x4 matrix forms."""
    return IsoAlgebraElement(
        cross(x.w, y.v) - cross(y.w, x.v),
        cross(x.w, y.w),
    )


def pair(P: Wrench, x: IsoAlgebraElement) -> float:
    """Work (or energy) ``p.v + l.w`` of a wrench on a twist."""
    return float(P.p @ x.v + P.l @ x.w)


def act_on_frame(f: AffineFrame, g: RigidMotion) -> AffineFrame:
    """Right action ``(x, f_i)(a, R) = (x + a^i f_i, f_j R^j_i)``."""
    if not f.is_orthonormal():
        raise ValueError("act_on_frame needs an oriented orthonormal frame")
    basis = f.basis @ g.r.m
    if orthogonality_defect(basis) > TOL_ORTHO:
        basis = polar_rotation(basis)
    return AffineFrame(f.origin + f.basis @ g.a, basis)


def fundamental_field(x: IsoAlgebraElement, pt) -> np.ndarray:
    """Velocity ``v + w x pt`` of ``pt`` under ``s -> exp(x, s)``."""
    pt = np.asarray(pt, dtype=float)
    return x.v + cross(x.w, pt)
