"""The groupoid of 1-jets of rigid motions and its algebroid.

An element at a parameter node ``rho`` is ``(a, R, a_a, R_a)``: a rigid
motion together with ``p`` free derivative slots.  Elements multiply only
when they sit over the same node.  Variations are carried as plain component
arrays, never as symbolic vector fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ParameterGrid
from .kinematics import KinematicalState, StateNode
from .rigid_motion import TOL_ORTHO, Rotation, hat, vee

__all__ = [
    "SourceMismatch",
    "JetElement",
    "JetVariation",
    "AlgebroidElement",
    "StateVariation",
    "jet_identity",
    "jet_compose",
    "jet_inverse",
    "jet_act",
    "to_algebroid",
    "fundamental_variation",
    "fundamental_variation_field",
    "prolong_variation",
]


class SourceMismatch(ValueError):
    """Two groupoid objects over different parameter nodes were combined."""


def _node(rho) -> tuple[int, ...]:
    if isinstance(rho, (int, np.integer)):
        return (int(rho),)
    return tuple(int(i) for i in rho)


def _arr(x, shape) -> np.ndarray:
    out = np.array(x, dtype=float).reshape(shape)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite jet component")
    out.setflags(write=False)
    return out


def _matvec(m, v):
    return np.einsum("...ij,...j->...i", m, v)


@dataclass(frozen=True, eq=False)
class JetElement:
    """``(rho; a, R, a_a, R_a)`` with ``a_d`` of shape ``(p, 3)`` and ``r_d`` of shape ``(p, 3, 3)``."""

    rho: tuple[int, ...]
    a: np.ndarray
    r: Rotation
    a_d: np.ndarray
    r_d: np.ndarray

    def __post_init__(self):
        rho = _node(self.rho)
        p = len(rho)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "a", _arr(self.a, (3,)))
        if not isinstance(self.r, Rotation):
            object.__setattr__(self, "r", Rotation(self.r))
        object.__setattr__(self, "a_d", _arr(self.a_d, (p, 3)))
        object.__setattr__(self, "r_d", _arr(self.r_d, (p, 3, 3)))

    @property
    def p(self) -> int:
        return len(self.rho)

    @property
    def dimension(self) -> int:
        """Coordinate count: ``p`` base coordinates, 6 group and ``6p`` slot coordinates."""
        return self.p + 6 + 6 * self.p

    def as_tuple(self):
        return self.a, self.r.m, self.a_d, self.r_d


@dataclass(frozen=True, eq=False)
class JetVariation:
    """Tangent components ``(da, dR, da_a, dR_a)`` at a jet element."""

    da: np.ndarray
    dr: np.ndarray
    da_d: np.ndarray
    dr_d: np.ndarray


@dataclass(frozen=True, eq=False)
class AlgebroidElement:
    """``(rho; zeta, iota, zeta_a, iota_a)``; rotations are stored as axial vectors."""

    rho: tuple[int, ...]
    zeta: np.ndarray
    iota: np.ndarray
    zeta_d: np.ndarray
    iota_d: np.ndarray

    def __post_init__(self):
        rho = _node(self.rho)
        p = len(rho)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "zeta", _arr(self.zeta, (3,)))
        object.__setattr__(self, "iota", _arr(self.iota, (3,)))
        object.__setattr__(self, "zeta_d", _arr(self.zeta_d, (p, 3)))
        object.__setattr__(self, "iota_d", _arr(self.iota_d, (p, 3)))

    @classmethod
    def zero(cls, rho) -> AlgebroidElement:
        p = len(_node(rho))
        return cls(rho, np.zeros(3), np.zeros(3), np.zeros((p, 3)), np.zeros((p, 3)))

    @classmethod
    def constant(cls, rho, v, w) -> AlgebroidElement:
        """Constant section through the algebra element ``(v, w)``: zero slots."""
        p = len(_node(rho))
        return cls(rho, v, w, np.zeros((p, 3)), np.zeros((p, 3)))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.zeta, self.iota, self.zeta_d.ravel(), self.iota_d.ravel()])

    def __add__(self, other: AlgebroidElement) -> AlgebroidElement:
        _same(self.rho, other.rho)
        return AlgebroidElement(
            self.rho,
            self.zeta + other.zeta,
            self.iota + other.iota,
            self.zeta_d + other.zeta_d,
            self.iota_d + other.iota_d,
        )

    def __mul__(self, s: float) -> AlgebroidElement:
        s = float(s)
        return AlgebroidElement(self.rho, s * self.zeta, s * self.iota, s * self.zeta_d, s * self.iota_d)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class StateVariation:
    """Variation ``(dx, de, dx_a, de_a)`` of a state; node or whole-grid arrays."""

    dx: np.ndarray
    de: np.ndarray
    dx_d: np.ndarray
    de_d: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.dx), np.ravel(self.de), np.ravel(self.dx_d), np.ravel(self.de_d)])


def _same(r1, r2) -> None:
    if _node(r1) != _node(r2):
        raise SourceMismatch(f"elements sit over different nodes {_node(r1)} and {_node(r2)}")


def jet_identity(rho) -> JetElement:
    p = len(_node(rho))
    return JetElement(rho, np.zeros(3), Rotation.identity(), np.zeros((p, 3)), np.zeros((p, 3, 3)))


def jet_compose(g: JetElement, h: JetElement) -> JetElement:
    """Fiberwise product; the slots follow the product rule."""
    _same(g.rho, h.rho)
    R, Rp = g.r.m, h.r.m
    a2 = g.a + R @ h.a
    r2 = R @ Rp
    if np.max(np.abs(r2.T @ r2 - np.eye(3))) > TOL_ORTHO:
        r2 = Rotation.project(r2).m
    a2_d = g.a_d + _matvec(g.r_d, h.a) + _matvec(R, h.a_d)
    r2_d = g.r_d @ Rp + R @ h.r_d
    return JetElement(g.rho, a2, Rotation(r2), a2_d, r2_d)


def jet_inverse(g: JetElement) -> JetElement:
    """Two-sided inverse obtained by differentiating ``g g^{-1} = 1``.

    ``R^{-1}_a = -R^T R_a R^T`` and ``a^{-1}_a = R^T R_a R^T a - R^T a_a``.
    """
    Rt = g.r.m.T
    rinv_d = -Rt @ g.r_d @ Rt
    ainv = -Rt @ g.a
    ainv_d = -_matvec(rinv_d, g.a) - _matvec(Rt, g.a_d)
    return JetElement(g.rho, ainv, Rotation(Rt), ainv_d, rinv_d)


def _check_node(rho, s: StateNode) -> None:
    if s.p != len(_node(rho)):
        raise SourceMismatch(f"state node has {s.p} slots, element has {len(_node(rho))}")
    srho = getattr(s, "rho", None)
    if srho is not None:
        _same(rho, srho)


def jet_act(g: JetElement, s: StateNode) -> StateNode:
    """``x = a + R x0``, ``e = R e0`` and their product-rule slots."""
    _check_node(g.rho, s)
    R = g.r.m
    x = g.a + R @ s.x
    e = R @ s.e
    x_d = g.a_d + _matvec(g.r_d, s.x) + _matvec(R, s.x_d)
    e_d = g.r_d @ s.e + R @ s.e_d
    return StateNode(x, e, x_d, e_d, rho=getattr(s, "rho", None))


def to_algebroid(g: JetElement, v: JetVariation) -> AlgebroidElement:
    """Right-translate a variation at ``g`` to the identity.

    ``dI = dR R^T``, ``zeta = da - dI a`` and the slot versions
    ``dI_a = dR_a R^T + dR (R^{-1})_a``, ``zeta_a = da_a - dI_a a - dI a_a``
    with ``(R^{-1})_a = -R^T R_a R^T`` the inverse slot of the jet.
    """
    R = g.r.m
    Rt = R.T
    da = _arr(v.da, (3,))
    dr = _arr(v.dr, (3, 3))
    da_d = _arr(v.da_d, (g.p, 3))
    dr_d = _arr(v.dr_d, (g.p, 3, 3))
    dI = dr @ Rt
    dI_d = dr_d @ Rt + dr @ (-Rt @ g.r_d @ Rt)
    zeta = da - dI @ g.a
    zeta_d = da_d - _matvec(dI_d, g.a) - _matvec(dI, g.a_d)
    return AlgebroidElement(g.rho, zeta, vee(dI), zeta_d, vee(dI_d))


def _fundamental(zeta, iota, zeta_d, iota_d, x, e, x_d, e_d) -> StateVariation:
    """Array core shared by the node and field versions; slot axis precedes components."""
    I = hat(iota)
    Id = hat(iota_d)
    dx = zeta + np.cross(iota, x)
    de = I @ e
    dx_d = zeta_d + np.cross(iota_d, x[..., None, :]) + np.cross(iota[..., None, :], x_d)
    de_d = Id @ e[..., None, :, :] + I[..., None, :, :] @ e_d
    return StateVariation(dx, de, dx_d, de_d)


def fundamental_variation(xi: AlgebroidElement, s: StateNode) -> StateVariation:
    """Infinitesimal action of an algebroid element on a state node."""
    _check_node(xi.rho, s)
    return _fundamental(xi.zeta, xi.iota, xi.zeta_d, xi.iota_d, s.x, s.e, s.x_d, s.e_d)


def fundamental_variation_field(
    state: KinematicalState, zeta, iota, zeta_d=None, iota_d=None
) -> StateVariation:
    """Whole-grid version of :func:`fundamental_variation`.

    ``zeta`` and ``iota`` have shape ``(*shape, 3)`` (or broadcast to it);
    omitted slots are taken as the finite-difference derivatives, i.e. the
    algebroid section is the prolongation of ``(zeta, iota)``.
    """
    g = state.grid
    zeta = np.broadcast_to(np.asarray(zeta, dtype=float), g.shape + (3,))
    iota = np.broadcast_to(np.asarray(iota, dtype=float), g.shape + (3,))
    zeta_d = g.gradient(zeta) if zeta_d is None else np.asarray(zeta_d, dtype=float)
    iota_d = g.gradient(iota) if iota_d is None else np.asarray(iota_d, dtype=float)
    return _fundamental(zeta, iota, zeta_d, iota_d, state.x, state.e, state.x_d, state.e_d)


def prolong_variation(grid: ParameterGrid, dx, de) -> StateVariation:
    """Fill the slots of a value variation with its finite-difference derivatives."""
    dx = grid.check_field(dx, "position variation")
    de = grid.check_field(de, "frame variation")
    return StateVariation(dx, de, grid.gradient(dx), grid.gradient(de))
