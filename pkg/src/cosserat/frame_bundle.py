"""Oriented orthonormal frames on E^3 as group coordinates, and the
Maurer-Cartan structure of ISO(3).

The adapted basis of iso(3) used throughout is ``E_0, E_1, E_2`` (unit
translations) followed by ``E_3, E_4, E_5`` (unit rotations about the
coordinate axes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rigid_motion import (
    AffineFrame,
    IsoAlgebraElement,
    RigidMotion,
    Rotation,
    bracket,
    orthogonality_defect,
    polar_rotation,
    TOL_ORTHO,
)

Family = Callable[[float], RigidMotion]


class StepTooLargeError(ValueError):
    """The finite-difference residual does not show its expected order."""


@dataclass(frozen=True)
class FrameCoordinates:
    """Origin ``x`` and leg matrix ``f`` (legs as columns) of a rigid frame."""

    x: np.ndarray
    f: Rotation

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(3)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if not isinstance(self.f, Rotation):
            object.__setattr__(self, "f", Rotation(self.f))

    def as_frame(self) -> AffineFrame:
        return AffineFrame(self.x, self.f.m)


def _check_reference(ref: AffineFrame) -> None:
    if not ref.is_orthonormal():
        raise ValueError("reference frame must be oriented orthonormal")


def frame_from_group(g: RigidMotion, ref: AffineFrame) -> FrameCoordinates:
    """Coordinates of the frame ``ref . g``: origin ``O + e_i a^i``, legs ``e_i R^i_j``."""
    _check_reference(ref)
    f = ref.basis @ g.r.m
    if orthogonality_defect(f) > TOL_ORTHO:
        f = polar_rotation(f)
    return FrameCoordinates(ref.origin + ref.basis @ g.a, Rotation(f))


def group_from_frame(fc: FrameCoordinates, ref: AffineFrame) -> RigidMotion:
    """Inverse of :func:`frame_from_group` for a fixed reference frame."""
    _check_reference(ref)
    bt = ref.basis.T
    r = bt @ fc.f.m
    if orthogonality_defect(r) > TOL_ORTHO:
        r = polar_rotation(r)
    return RigidMotion(bt @ (fc.x - ref.origin), Rotation(r))


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3), dtype=int)
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1
        eps[i, k, j] = -1
    return eps


@dataclass(frozen=True)
class StructureConstants:
    """Table ``c[a, b, c]`` with ``[E_b, E_c] = c[a, b, c] E_a``."""

    c: np.ndarray

    def bracket(self, x, y) -> np.ndarray:
        """Bracket of two 6-vectors through the table."""
        return np.einsum("abc,b,c->a", self.c, np.asarray(x), np.asarray(y))

    def is_antisymmetric(self) -> bool:
        return bool(np.all(self.c == -np.swapaxes(self.c, 1, 2)))

    def jacobi_defect(self) -> float:
        """Largest entry of the Jacobi identity written in structure constants."""
        c = self.c
        # c^d_{ae} c^e_{bc} + cyclic(a, b, c)
        t = np.einsum("dae,ebc->dabc", c, c)
        total = t + np.transpose(t, (0, 2, 3, 1)) + np.transpose(t, (0, 3, 1, 2))
        return float(np.max(np.abs(total)))


def structure_constants_iso3() -> StructureConstants:
    """Structure constants of iso(3) in the adapted basis.

    Translation-translation brackets vanish, a translation with a rotation
    brackets into translations with ``c^a_{b,3+i} = eps_{bia}``, and the
    rotations close on themselves with ``c^{3+i}_{3+j,3+k} = eps_{jki}``.
    """
    eps = levi_civita()
    c = np.zeros((6, 6, 6), dtype=int)
    for b in range(3):
        for i in range(3):
            for a in range(3):
                # [E_b, E_{3+i}] has translational part -(e_i x e_b) = e_b x e_i
                c[a, b, 3 + i] = eps[b, i, a]
                c[a, 3 + i, b] = -eps[b, i, a]
    for j in range(3):
        for k in range(3):
            for i in range(3):
                c[3 + i, 3 + j, 3 + k] = eps[j, k, i]
    return StructureConstants(c)


def basis_element(k: int) -> IsoAlgebraElement:
    e = np.zeros(6)
    e[k] = 1.0
    return IsoAlgebraElement.from_vector(e)


def bracket_table() -> np.ndarray:
    """Brute-force table from :func:`rigid_motion.bracket` on all basis pairs."""
    table = np.zeros((6, 6, 6))
    for b in range(6):
        for c in range(6):
            table[:, b, c] = bracket(basis_element(b), basis_element(c)).as_vector()
    return table


def _left_form(g: np.ndarray, gp: np.ndarray, gm: np.ndarray, h: float) -> np.ndarray:
    """6-vector of ``g^{-1} dg`` from central differences of 4x4 matrices."""
    ginv = np.linalg.inv(g)
    m = ginv @ (gp - gm) / (2.0 * h)
    return IsoAlgebraElement.from_matrix(m).as_vector()


def maurer_cartan_terms(
    curve_pair: tuple[Family, Family], h: float, at: tuple[float, float] = (0.0, 0.0)
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Finite-difference pieces of the structure equation on ``g(s, t) = g1(s) g2(t)``.

    Returns ``(d_theta, theta_s, theta_t)`` where ``theta = g^{-1} dg`` is the
    left-invariant Maurer-Cartan form evaluated on the coordinate fields
    ``d/ds`` and ``d/dt`` and ``d_theta = d/ds theta_t - d/dt theta_s``, all
    at the point ``at``.
    """
    g1, g2 = curve_pair
    s0, t0 = at

    def g(s, t):
        return g1(s).as_matrix() @ g2(t).as_matrix()

    def theta_s(s, t):
        return _left_form(g(s, t), g(s + h, t), g(s - h, t), h)

    def theta_t(s, t):
        return _left_form(g(s, t), g(s, t + h), g(s, t - h), h)

    d_theta = (theta_t(s0 + h, t0) - theta_t(s0 - h, t0)) / (2.0 * h) - (
        theta_s(s0, t0 + h) - theta_s(s0, t0 - h)
    ) / (2.0 * h)
    return d_theta, theta_s(s0, t0), theta_t(s0, t0)


def _residual_vector(curve_pair, h, at) -> np.ndarray:
    d_theta, ts, tt = maurer_cartan_terms(curve_pair, h, at)
    br = bracket(IsoAlgebraElement.from_vector(ts), IsoAlgebraElement.from_vector(tt)).as_vector()
    return d_theta + br


def maurer_cartan_residual(
    curve_pair: tuple[Family, Family],
    h: float,
    at: tuple[float, float] = (0.0, 0.0),
    check_order: bool = True,
) -> float:
    """Norm of ``d theta(X, Y) + [theta(X), theta(Y)]`` on the coordinate fields.

    The residual vanishes in the continuum and is O(h^2) here.  With
    ``check_order`` the residual is also evaluated at ``h/2``; if it sits
    above the round-off floor but decays slower than order 1.5,
    :class:`StepTooLargeError` is raised.
    """
    r = float(np.linalg.norm(_residual_vector(curve_pair, h, at)))
    if check_order:
        r2 = float(np.linalg.norm(_residual_vector(curve_pair, h / 2.0, at)))
        floor = 1e3 * np.finfo(float).eps / (h / 2.0) ** 2
        if r2 > floor and r > 0.0:
            order = math.log2(r / r2) if r2 > 0.0 else math.inf
            if order < 1.5:
                raise StepTooLargeError(
                    f"step {h:g} is outside the asymptotic range (observed order {order:.2f})"
                )
    return r
