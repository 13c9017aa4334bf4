"""Discrete Cosserat kinematics on parameter grids.

A displacement field assigns a rigid motion ``chi = (a, R)`` to every grid
node.  A kinematical state is a 1-jet of framed positions: values ``(x, e)``
plus ``p`` formal derivative slots ``(x_a, e_a)``.  The deformation of a
displacement field is the Eulerian form ``d chi chi^{-1} = (xi, omega)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import ParameterGrid, node_norms
from .rigid_motion import (
    TOL_ORTHO,
    RigidMotion,
    Rotation,
    hat,
    polar_rotation,
    rotation_exp,
    sym,
    vee,
)

__all__ = [
    "ParameterGrid",
    "DisplacementField",
    "KinematicalState",
    "StateNode",
    "DeformationForm",
    "StrainDecomposition",
    "GridMismatchError",
    "displace_state",
    "deformation_of",
    "deformation_chain",
    "spencer_residual",
    "strain_decompose",
    "from_schaefer",
    "SCHAEFER_PHI_LIMIT",
]

# Largest infinitesimal rotation accepted by from_schaefer.  Beyond this the
# first-order map is too far from the group for the projection to mean much.
SCHAEFER_PHI_LIMIT = 0.5


class GridMismatchError(ValueError):
    pass


def _matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", m, v)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_rotations(r: np.ndarray, name: str) -> None:
    gram = np.swapaxes(r, -1, -2) @ r - np.eye(3)
    worst = np.max(np.abs(gram), axis=(-2, -1))
    worst = np.maximum(worst, np.abs(np.linalg.det(r) - 1.0))
    if np.any(worst > TOL_ORTHO):
        idx = np.unravel_index(int(np.argmax(worst)), worst.shape)
        raise ValueError(f"{name} is not a rotation at node {idx} (defect {worst[idx]:.3g})")


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Per-node rigid motions ``(a, R)``; arrays of shape ``(*shape, 3)`` and ``(*shape, 3, 3)``."""

    grid: ParameterGrid
    a: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        a = self.grid.check_field(self.a, "translation")
        r = self.grid.check_field(self.r, "rotation")
        if a.shape != self.grid.shape + (3,) or r.shape != self.grid.shape + (3, 3):
            raise ValueError("displacement arrays have the wrong component shape")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(r))):
            raise ValueError("displacement field has non-finite entries")
        _check_rotations(r, "rotation field")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "r", _frozen(r))

    @classmethod
    def identity(cls, grid: ParameterGrid) -> DisplacementField:
        return cls(grid, np.zeros(grid.shape + (3,)), np.broadcast_to(np.eye(3), grid.shape + (3, 3)))

    @classmethod
    def constant(cls, grid: ParameterGrid, g: RigidMotion) -> DisplacementField:
        return cls(
            grid,
            np.broadcast_to(g.a, grid.shape + (3,)),
            np.broadcast_to(g.r.m, grid.shape + (3, 3)),
        )

    @classmethod
    def from_rotvec(cls, grid: ParameterGrid, a: np.ndarray, w: np.ndarray) -> DisplacementField:
        """Field with rotations ``exp(hat(w))`` built from a rotation-vector field."""
        return cls(grid, a, rotation_exp(w))

    @classmethod
    def from_functions(
        cls,
        grid: ParameterGrid,
        translation: Callable[[np.ndarray], np.ndarray],
        rotvec: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> DisplacementField:
        """Sample callables of the node coordinates (shape ``(*shape, p)``)."""
        rho = grid.coordinates
        a = np.broadcast_to(translation(rho), grid.shape + (3,))
        w = np.zeros(grid.shape + (3,)) if rotvec is None else np.broadcast_to(rotvec(rho), grid.shape + (3,))
        return cls.from_rotvec(grid, a, w)

    def at(self, node) -> RigidMotion:
        return RigidMotion(self.a[node], Rotation(self.r[node]))

    def left_compose(self, g: RigidMotion) -> DisplacementField:
        """The field ``g . chi`` for a constant rigid motion ``g``."""
        return DisplacementField(self.grid, g.a + _matvec(g.r.m, self.a), g.r.m @ self.r)


@dataclass(frozen=True)
class StateNode:
    """Single-node view of a kinematical state; ``rho`` is the node index when known."""

    x: np.ndarray
    e: np.ndarray
    x_d: np.ndarray
    e_d: np.ndarray
    rho: tuple[int, ...] | None = None

    def __post_init__(self):
        x_d = np.asarray(self.x_d, dtype=float)
        e_d = np.asarray(self.e_d, dtype=float)
        if x_d.ndim != 2 or x_d.shape[1] != 3 or e_d.shape != (x_d.shape[0], 3, 3):
            raise ValueError("node slots must have shapes (p, 3) and (p, 3, 3)")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        object.__setattr__(self, "e", np.asarray(self.e, dtype=float).reshape(3, 3))
        object.__setattr__(self, "x_d", x_d)
        object.__setattr__(self, "e_d", e_d)

    @property
    def p(self) -> int:
        return self.x_d.shape[0]


@dataclass(frozen=True, eq=False)
class KinematicalState:
    """Per-node 1-jet ``(x, e, x_a, e_a)`` of framed positions.

    Slot arrays put the derivative index right after the grid dims:
    ``x_d`` has shape ``(*shape, p, 3)``, ``e_d`` shape ``(*shape, p, 3, 3)``.
    """

    grid: ParameterGrid
    x: np.ndarray
    e: np.ndarray
    x_d: np.ndarray
    e_d: np.ndarray

    def __post_init__(self):
        g = self.grid
        expect = {
            "x": g.shape + (3,),
            "e": g.shape + (3, 3),
            "x_d": g.shape + (g.p, 3),
            "e_d": g.shape + (g.p, 3, 3),
        }
        for name, shape in expect.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"state slot {name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"state slot {name} has non-finite entries")
            object.__setattr__(self, name, _frozen(arr))
        _check_rotations(self.e, "frame field")

    @classmethod
    def prolong(cls, grid: ParameterGrid, x: np.ndarray, e: np.ndarray) -> KinematicalState:
        """State whose slots are the finite-difference derivatives of its values."""
        x = grid.check_field(x)
        e = grid.check_field(e)
        return cls(grid, x, e, grid.gradient(x), grid.gradient(e))

    @classmethod
    def reference(cls, grid: ParameterGrid) -> KinematicalState:
        """Straight reference embedding ``x0 = (rho, 0...)`` with the standard frame.

        For ``p = 3`` this is the inclusion of the parameter box in space.
        """
        x = np.zeros(grid.shape + (3,))
        x[..., : grid.p] = grid.coordinates
        e = np.broadcast_to(np.eye(3), grid.shape + (3, 3))
        x_d = np.zeros(grid.shape + (grid.p, 3))
        for a in range(grid.p):
            x_d[..., a, a] = 1.0
        return cls(grid, x, e, x_d, np.zeros(grid.shape + (grid.p, 3, 3)))

    def node(self, idx) -> StateNode:
        idx = (int(idx),) if isinstance(idx, (int, np.integer)) else tuple(int(i) for i in idx)
        return StateNode(self.x[idx], self.e[idx], self.x_d[idx], self.e_d[idx], rho=idx)

    @classmethod
    def from_nodes(cls, grid: ParameterGrid, nodes: dict) -> KinematicalState:
        """Assemble from a mapping ``node index -> StateNode`` covering every node."""
        x = np.empty(grid.shape + (3,))
        e = np.empty(grid.shape + (3, 3))
        x_d = np.empty(grid.shape + (grid.p, 3))
        e_d = np.empty(grid.shape + (grid.p, 3, 3))
        for idx in np.ndindex(*grid.shape):
            n = nodes[idx]
            x[idx], e[idx], x_d[idx], e_d[idx] = n.x, n.e, n.x_d, n.e_d
        return cls(grid, x, e, x_d, e_d)


@dataclass(frozen=True, eq=False)
class DeformationForm:
    """Per-node slots ``xi_a`` and axial ``omega_a``, both of shape ``(*shape, p, 3)``.

    ``symmetric_residue`` is the per-node norm of the symmetric part of
    ``(d_a R) R^T`` that the antisymmetrization discarded.
    """

    grid: ParameterGrid
    xi: np.ndarray
    omega: np.ndarray
    symmetric_residue: np.ndarray | None = None

    def __post_init__(self):
        g = self.grid
        for name in ("xi", "omega"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != g.shape + (g.p, 3):
                raise ValueError(f"{name} has shape {arr.shape}, expected {g.shape + (g.p, 3)}")
            object.__setattr__(self, name, _frozen(arr))
        res = np.zeros(g.shape) if self.symmetric_residue is None else self.symmetric_residue
        object.__setattr__(self, "symmetric_residue", _frozen(res))

    @classmethod
    def zero(cls, grid: ParameterGrid) -> DeformationForm:
        z = np.zeros(grid.shape + (grid.p, 3))
        return cls(grid, z, z)

    def omega_matrix(self) -> np.ndarray:
        return hat(self.omega)

    def node(self, idx) -> tuple[np.ndarray, np.ndarray]:
        return self.xi[idx], self.omega[idx]


@dataclass(frozen=True, eq=False)
class StrainDecomposition:
    """Classical strain parts for the 3D inclusion; all entries ``(*shape, 3, 3)``."""

    e: np.ndarray
    theta: np.ndarray
    E: np.ndarray
    orbital: np.ndarray

    def reconstruction_residual(self) -> float:
        """Largest entry of ``E - (1/2 (e + theta) - orbital)``."""
        return float(np.max(np.abs(self.E - (0.5 * (self.e + self.theta) - self.orbital))))


def _same_grid(g1: ParameterGrid, g2: ParameterGrid) -> None:
    if g1 != g2:
        raise GridMismatchError(f"grid mismatch: {g1.extents} vs {g2.extents}")


def displace_state(initial: KinematicalState, chi: DisplacementField) -> KinematicalState:
    """Apply ``x = a + R x0``, ``e = R e0`` and their product-rule slots."""
    _same_grid(initial.grid, chi.grid)
    g = chi.grid
    a_d = g.gradient(chi.a)
    r_d = g.gradient(chi.r)
    R = chi.r
    x = chi.a + _matvec(R, initial.x)
    e = R @ initial.e
    Rn = R[..., None, :, :]
    x_d = a_d + _matvec(r_d, initial.x[..., None, :]) + _matvec(Rn, initial.x_d)
    e_d = r_d @ initial.e[..., None, :, :] + Rn @ initial.e_d
    return KinematicalState(g, x, e, x_d, e_d)


def deformation_of(chi: DisplacementField) -> DeformationForm:
    """Eulerian deformation ``omega_a = (d_a R) R^T`` (antisymmetrized), ``xi_a = d_a a - omega_a a``."""
    g = chi.grid
    W = g.gradient(chi.r) @ np.swapaxes(chi.r, -1, -2)[..., None, :, :]
    omega = vee(W)
    residue = node_norms(sym(W), g)
    xi = g.gradient(chi.a) - np.cross(omega, chi.a[..., None, :])
    return DeformationForm(g, xi, omega, residue)


def deformation_chain(chi: DisplacementField, x0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three translational expressions ``da - W a``, ``dx - W x``, ``du - W x``.

    ``W_a = (d_a R) R^T`` is used without antisymmetrization and ``x0`` is a
    single material point carried along, ``x = a + R x0`` and ``u = x - x0``.
    The expressions coincide only because ``x0`` does not depend on the
    parameters; with shared stencils they then agree to round-off.
    """
    g = chi.grid
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError("the carried point must be a single 3-vector")
    W = g.gradient(chi.r) @ np.swapaxes(chi.r, -1, -2)[..., None, :, :]
    x = chi.a + _matvec(chi.r, x0)
    u = x - x0
    xn = x[..., None, :]
    first = g.gradient(chi.a) - _matvec(W, chi.a[..., None, :])
    second = g.gradient(x) - _matvec(W, xn)
    third = g.gradient(u) - _matvec(W, xn)
    return first, second, third


def spencer_residual(s: KinematicalState) -> np.ndarray:
    """Per-node distance between the stored slots and the derivatives of the values."""
    g = s.grid
    dx = g.gradient(s.x) - s.x_d
    de = g.gradient(s.e) - s.e_d
    flat = np.concatenate([dx.reshape(g.shape + (-1,)), de.reshape(g.shape + (-1,))], axis=-1)
    return np.sqrt(np.sum(flat * flat, axis=-1))


def strain_decompose(chi: DisplacementField, initial: KinematicalState) -> StrainDecomposition:
    """Classical strain parts when the parameters are the initial coordinates.

    ``u = x - x0`` with ``x = a + R x0``; ``u_{i,j}`` is the derivative along
    parameter ``j``.  The orbital term is ``(omega_j x x)_i``.
    """
    _same_grid(initial.grid, chi.grid)
    g = chi.grid
    if g.p != 3:
        raise ValueError(f"strain decomposition needs a 3D parameter grid, got p = {g.p}")
    x = chi.a + _matvec(chi.r, initial.x)
    u = x - initial.x
    # u_ij = d_j u_i; gradient puts j before i
    grad_u = np.swapaxes(g.gradient(u), -1, -2)
    e = grad_u + np.swapaxes(grad_u, -1, -2)
    theta = grad_u - np.swapaxes(grad_u, -1, -2)
    omega = deformation_of(chi).omega
    orbital = np.swapaxes(np.cross(omega, x[..., None, :]), -1, -2)
    E = grad_u - orbital
    return StrainDecomposition(e, theta, E, orbital)


def from_schaefer(phi: np.ndarray, u: np.ndarray, initial: KinematicalState) -> DisplacementField:
    """Displacement field from a small rotation ``phi`` and displacement ``u``.

    The first-order map ``a = u - phi x x0``, ``R = I + hat(phi)`` only holds
    infinitesimally; ``R`` is projected back to the rotation group by its
    polar factor, which changes it at second order in ``|phi|``.
    """
    g = initial.grid
    phi = np.broadcast_to(np.asarray(phi, dtype=float), g.shape + (3,))
    u = np.broadcast_to(np.asarray(u, dtype=float), g.shape + (3,))
    size = float(np.max(np.linalg.norm(phi, axis=-1)))
    if size > SCHAEFER_PHI_LIMIT:
        raise ValueError(
            f"infinitesimal rotation of size {size:.3g} exceeds {SCHAEFER_PHI_LIMIT}; "
            "the first-order map does not project to a meaningful rotation"
        )
    a = u - np.cross(phi, initial.x)
    R = polar_rotation(np.eye(3) + hat(phi))
    return DisplacementField(g, a, R)
