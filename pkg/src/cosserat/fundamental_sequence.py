"""Covariant exterior differences of iso(3)-valued forms on a parameter grid.

Level 0 -> 1 is the deformation ``d chi chi^{-1}``; level 1 -> 2 gives the
dislocation ``Theta`` and disclination ``Omega``; level 2 -> 3 gives the
incompatibility (only for ``p = 3``).  Two-forms store the ordered pairs
``a < b`` in lexicographic order, so a 3D grid has pairs (0,1), (0,2), (1,2).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .grid import ParameterGrid, node_norms
from .kinematics import DeformationForm, DisplacementField, deformation_of
from .rigid_motion import hat

__all__ = [
    "Iso3TwoForm",
    "Iso3ThreeForm",
    "CompatibilityResiduals",
    "nabla_chi",
    "nabla_wedge_1",
    "nabla_wedge_2",
    "covariant_derivative",
    "compatibility_report",
]


def _pairs(p: int) -> list[tuple[int, int]]:
    return list(combinations(range(p), 2))


@dataclass(frozen=True, eq=False)
class Iso3TwoForm:
    """Slots ``theta`` and ``omega`` of shape ``(*shape, npairs, 3)``, pairs as in :attr:`pairs`."""

    grid: ParameterGrid
    theta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        n = len(self.pairs)
        for name in ("theta", "omega"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.grid.shape + (n, 3):
                raise ValueError(f"{name} has shape {arr.shape}, expected {self.grid.shape + (n, 3)}")
            object.__setattr__(self, name, arr)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return _pairs(self.grid.p)

    @classmethod
    def zero(cls, grid: ParameterGrid) -> Iso3TwoForm:
        z = np.zeros(grid.shape + (len(_pairs(grid.p)), 3))
        return cls(grid, z, z)

    def component(self, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        """``(Theta_ab, Omega_ab)`` for any ordered pair, using antisymmetry."""
        if a == b:
            z = np.zeros(self.grid.shape + (3,))
            return z, z
        if a < b:
            k = self.pairs.index((a, b))
            return self.theta[..., k, :], self.omega[..., k, :]
        k = self.pairs.index((b, a))
        return -self.theta[..., k, :], -self.omega[..., k, :]

    def norms(self) -> tuple[np.ndarray, np.ndarray]:
        return node_norms(self.theta, self.grid), node_norms(self.omega, self.grid)


@dataclass(frozen=True, eq=False)
class Iso3ThreeForm:
    """Single-slot 3-form on a 3D grid: ``theta`` and ``omega`` of shape ``(*shape, 3)``."""

    grid: ParameterGrid
    theta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        if self.grid.p != 3:
            raise ValueError("3-forms exist only on 3D parameter grids")

    def norms(self) -> tuple[np.ndarray, np.ndarray]:
        return node_norms(self.theta, self.grid), node_norms(self.omega, self.grid)


@dataclass(frozen=True)
class CompatibilityResiduals:
    """Per-node norms of the dislocation and disclination."""

    theta_norm: np.ndarray
    omega_norm: np.ndarray


def nabla_chi(chi: DisplacementField) -> DeformationForm:
    return deformation_of(chi)


def nabla_wedge_1(E: DeformationForm) -> Iso3TwoForm:
    """``Theta_ab = d_a xi_b - d_b xi_a - (omega_a x xi_b - omega_b x xi_a)``,
    ``Omega_ab = d_a omega_b - d_b omega_a - omega_a x omega_b``.

    For ``p = 1`` the result has no slots.
    """
    g = E.grid
    pairs = _pairs(g.p)
    theta = np.zeros(g.shape + (len(pairs), 3))
    omega = np.zeros(g.shape + (len(pairs), 3))
    xi, om = E.xi, E.omega
    for k, (a, b) in enumerate(pairs):
        xa, xb = xi[..., a, :], xi[..., b, :]
        wa, wb = om[..., a, :], om[..., b, :]
        theta[..., k, :] = g.diff(xb, a) - g.diff(xa, b) - (np.cross(wa, xb) - np.cross(wb, xa))
        omega[..., k, :] = g.diff(wb, a) - g.diff(wa, b) - np.cross(wa, wb)
    return Iso3TwoForm(g, theta, omega)


def nabla_wedge_2(F: Iso3TwoForm, E: DeformationForm) -> Iso3ThreeForm:
    """Incompatibility of ``F`` relative to the deformation ``E``.

    Cyclic sums over ``(a, b, c)`` in ``(0,1,2), (1,2,0), (2,0,1)``::

        Theta3 = sum d_c Theta_ab - omega_c x Theta_ab + Omega_ab x xi_c
        Omega3 = sum d_c Omega_ab - omega_c x Omega_ab
    """
    g = F.grid
    if g.p != 3:
        raise ValueError(f"incompatibility is defined for p = 3 only, got p = {g.p}")
    if E.grid != g:
        raise ValueError("two-form and deformation live on different grids")
    t3 = np.zeros(g.shape + (3,))
    o3 = np.zeros(g.shape + (3,))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        th, om = F.component(a, b)
        wc = E.omega[..., c, :]
        xc = E.xi[..., c, :]
        t3 += g.diff(th, c) - np.cross(wc, th) + np.cross(om, xc)
        o3 += g.diff(om, c) - np.cross(wc, om)
    return Iso3ThreeForm(g, t3, o3)


def covariant_derivative(E: DeformationForm) -> tuple[np.ndarray, np.ndarray]:
    """Mixed covariant derivatives as two-index tensors.

    Returns ``T_xi[..., a, b, :] = d_a xi_b - omega_a x xi_b`` and
    ``T_omega[..., a, b, :, :] = d_a W_b - W_a W_b`` with ``W = hat(omega)``.
    Their antisymmetric parts in ``(a, b)`` are the 2-form slots.
    """
    g = E.grid
    grad_xi = g.gradient(E.xi)  # [..., a, b, :]
    W = hat(E.omega)
    grad_W = g.gradient(W)
    t_xi = grad_xi - np.cross(E.omega[..., :, None, :], E.xi[..., None, :, :])
    t_om = grad_W - W[..., :, None, :, :] @ W[..., None, :, :, :]
    return t_xi, t_om


def compatibility_report(E: DeformationForm) -> CompatibilityResiduals:
    th, om = nabla_wedge_1(E).norms()
    return CompatibilityResiduals(th, om)
