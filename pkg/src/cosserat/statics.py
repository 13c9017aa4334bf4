"""Dynamical states, virtual work, the Euclidian condition and equilibrium residuals.

Storage of a fundamental 1-form (slot index first, components last):

* ``F``     ``(*shape, 3)``        pairs with ``dx``
* ``M``     ``(*shape, 3, 3)``     ``M[i, j]`` pairs with ``de[i, j]``
* ``sigma`` ``(*shape, p, 3)``     ``sigma[a, i]`` pairs with ``dx_a[i]``
* ``mu``    ``(*shape, p, 3, 3)``  ``mu[a, i, j]`` pairs with ``de_a[i, j]``

Eulerian moments are antisymmetric matrices paired with ``hat(dI)`` by the
full double contraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ParameterGrid, field_norms, node_norms
from .jet_groupoid import StateVariation
from .kinematics import GridMismatchError, KinematicalState, spencer_residual
from .rigid_motion import antisym, hat

__all__ = [
    "FundamentalOneForm",
    "EulerianComponents",
    "BoundaryTerm",
    "EquilibriumResidual",
    "ReductionChain",
    "NonEuclidianError",
    "NonIntegrableError",
    "SingularJacobianError",
    "EUCLIDIAN_TOL",
    "INTEGRABILITY_TOL",
    "virtual_work",
    "total_virtual_work",
    "eulerian_components",
    "eulerian_pairing",
    "euclidian_check",
    "euclidian_project",
    "equilibrium_residual_lagrangian",
    "equilibrium_residual_eulerian",
    "equilibrium_residual_cosserat3d",
    "reduction_chain",
]

# Relative tolerances for the admissibility checks on inputs.
EUCLIDIAN_TOL = 1e-9
INTEGRABILITY_TOL = 1e-9


class NonEuclidianError(ValueError):
    pass


class NonIntegrableError(ValueError):
    pass


class SingularJacobianError(ValueError):
    pass


def _outer(u, v):
    return u[..., :, None] * v[..., None, :]


def _t(m):
    return np.swapaxes(m, -1, -2)


@dataclass(frozen=True, eq=False)
class FundamentalOneForm:
    """Per-node ``(F, M, sigma, mu)``; no symmetry is imposed on any slot."""

    grid: ParameterGrid
    F: np.ndarray
    M: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        g = self.grid
        expect = {
            "F": g.shape + (3,),
            "M": g.shape + (3, 3),
            "sigma": g.shape + (g.p, 3),
            "mu": g.shape + (g.p, 3, 3),
        }
        for name, shape in expect.items():
            arr = np.array(np.broadcast_to(np.asarray(getattr(self, name), dtype=float), shape))
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"fundamental form slot {name} has non-finite entries")
            object.__setattr__(self, name, arr)

    @classmethod
    def zero(cls, grid: ParameterGrid) -> FundamentalOneForm:
        return cls(
            grid,
            np.zeros(grid.shape + (3,)),
            np.zeros(grid.shape + (3, 3)),
            np.zeros(grid.shape + (grid.p, 3)),
            np.zeros(grid.shape + (grid.p, 3, 3)),
        )

    def replace(self, **kw) -> FundamentalOneForm:
        vals = {"F": self.F, "M": self.M, "sigma": self.sigma, "mu": self.mu}
        vals.update(kw)
        return FundamentalOneForm(self.grid, **vals)

    def scale(self) -> float:
        """Largest absolute entry; used to make tolerances relative."""
        return float(max(np.max(np.abs(a)) if a.size else 0.0 for a in (self.F, self.M, self.sigma, self.mu)))


@dataclass(frozen=True, eq=False)
class EulerianComponents:
    """``F_bar = F``, ``sigma_bar = sigma`` and antisymmetric ``M_bar``, ``mu_bar``."""

    F: np.ndarray
    M: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray


@dataclass(frozen=True)
class BoundaryTerm:
    """Boundary traction and couple on one face, with its quadrature weights.

    ``traction[i] = sigma[axis, i]`` and ``couple = mu[axis]``, both already
    multiplied by the outward sign of the face.
    """

    axis: int
    side: int
    traction: np.ndarray
    couple: np.ndarray
    weights: np.ndarray

    def work(self, dx: np.ndarray, de: np.ndarray) -> float:
        w = np.sum(self.traction * dx, axis=-1) + np.sum(self.couple * de, axis=(-2, -1))
        return float(np.sum(self.weights * w))


@dataclass(frozen=True, eq=False)
class EquilibriumResidual:
    """Per-node force residual ``(*shape, 3)`` and antisymmetric moment residual ``(*shape, 3, 3)``."""

    grid: ParameterGrid
    force: np.ndarray
    moment: np.ndarray

    def norms(self) -> dict[str, tuple[float, float]]:
        return {
            "force": field_norms(self.force, self.grid),
            "moment": field_norms(self.moment, self.grid),
        }

    def max_norm(self) -> float:
        f = node_norms(self.force, self.grid)
        m = node_norms(self.moment, self.grid)
        return float(max(np.max(f), np.max(m)))


def _check(phi: FundamentalOneForm, grid: ParameterGrid) -> None:
    if phi.grid != grid:
        raise GridMismatchError(f"grid mismatch: {phi.grid.extents} vs {grid.extents}")


def virtual_work(phi: FundamentalOneForm, ds: StateVariation) -> np.ndarray:
    """Per-node ``F.dx + M:de + sigma:dx_a + mu:de_a``."""
    g = phi.grid
    dx = np.asarray(ds.dx, dtype=float)
    if dx.shape[: g.p] != g.shape:
        raise GridMismatchError(f"variation grid shape {dx.shape[: g.p]} differs from {g.shape}")
    return (
        np.einsum("...i,...i->...", phi.F, dx)
        + np.einsum("...ij,...ij->...", phi.M, ds.de)
        + np.einsum("...ai,...ai->...", phi.sigma, ds.dx_d)
        + np.einsum("...aij,...aij->...", phi.mu, ds.de_d)
    )


def _check_integrable(grid: ParameterGrid, ds: StateVariation) -> None:
    dx_gap = grid.gradient(ds.dx) - ds.dx_d
    de_gap = grid.gradient(ds.de) - ds.de_d
    gap = max(np.max(np.abs(dx_gap)), np.max(np.abs(de_gap)))
    scale = max(1.0, np.max(np.abs(ds.dx_d)), np.max(np.abs(ds.de_d)))
    if gap > INTEGRABILITY_TOL * scale:
        raise NonIntegrableError(
            f"variation slots differ from the derivatives of its values by {gap:.3g}"
        )


def boundary_terms(phi: FundamentalOneForm) -> list[BoundaryTerm]:
    """Per-face tractions ``+-sigma_a`` and couples ``+-mu_a`` on the faces normal to each axis."""
    g = phi.grid
    out = []
    for a in range(g.p):
        w = g.face_weights(a)
        for side, sign in ((0, -1.0), (1, 1.0)):
            sig = g.face(phi.sigma[..., a, :], a, side)
            mu = g.face(phi.mu[..., a, :, :], a, side)
            out.append(BoundaryTerm(a, side, sign * sig, sign * mu, w))
    return out


def total_virtual_work(
    phi: FundamentalOneForm, ds: StateVariation, state: KinematicalState | None = None
) -> tuple[float, float]:
    """Split the integrated virtual work into interior and boundary parts.

    ``interior = int (F - d_a sigma_a).dx + (M - d_a mu_a):de`` and
    ``boundary = sum over faces of +-int (sigma_a.dx + mu_a:de)``; their sum
    matches the quadrature of :func:`virtual_work` to second order.
    """
    g = phi.grid
    if state is not None:
        _check(phi, state.grid)
    _check_integrable(g, ds)
    jf = phi.F - g.divergence(phi.sigma)
    jm = phi.M - g.divergence(phi.mu)
    dens = np.einsum("...i,...i->...", jf, ds.dx) + np.einsum("...ij,...ij->...", jm, ds.de)
    interior = float(np.sum(g.weights * dens))
    boundary = 0.0
    for term in boundary_terms(phi):
        boundary += term.work(g.face(ds.dx, term.axis, term.side), g.face(ds.de, term.axis, term.side))
    return interior, boundary


def eulerian_components(phi: FundamentalOneForm, state: KinematicalState) -> EulerianComponents:
    """Moments about the origin in the Eulerian (right-translated) coframe.

    ``M_bar = [F x + M e^T + sum_a sigma_a x_a + mu_a e_a^T]`` and
    ``mu_bar_a = [mu_a e^T + sigma_a x]``, with ``[.]`` the antisymmetric part
    and juxtaposed vectors meaning the outer product.
    """
    _check(phi, state.grid)
    x, e, x_d, e_d = state.x, state.e, state.x_d, state.e_d
    m = (
        _outer(phi.F, x)
        + phi.M @ _t(e)
        + np.einsum("...ai,...aj->...ij", phi.sigma, x_d)
        + np.einsum("...aik,...ajk->...ij", phi.mu, e_d)
    )
    mu_bar = phi.mu @ _t(e)[..., None, :, :] + _outer(phi.sigma, x[..., None, :])
    return EulerianComponents(phi.F, antisym(m), phi.sigma, antisym(mu_bar))


def eulerian_pairing(ec: EulerianComponents, zeta, iota, zeta_d, iota_d) -> np.ndarray:
    """Per-node ``F.dzeta + M_bar:hat(dI) + sigma:dzeta_a + mu_bar:hat(dI_a)``."""
    return (
        np.einsum("...i,...i->...", ec.F, zeta)
        + np.einsum("...ij,...ij->...", ec.M, hat(iota))
        + np.einsum("...ai,...ai->...", ec.sigma, zeta_d)
        + np.einsum("...aij,...aij->...", ec.mu, hat(iota_d))
    )


def _internal_moment(phi: FundamentalOneForm, state: KinematicalState) -> np.ndarray:
    """``[sum_a sigma_a x_a + mu_a e_a^T]``, the moment the stresses require of ``M``."""
    return antisym(
        np.einsum("...ai,...aj->...ij", phi.sigma, state.x_d)
        + np.einsum("...aik,...ajk->...ij", phi.mu, state.e_d)
    )


def euclidian_check(phi: FundamentalOneForm, state: KinematicalState) -> tuple[float, float]:
    """Quadrature-L2 norms of ``F`` and of ``[M e^T] + [sigma_a x_a + mu_a e_a^T]``."""
    _check(phi, state.grid)
    g = phi.grid
    res_m = antisym(phi.M @ _t(state.e)) + _internal_moment(phi, state)
    return field_norms(phi.F, g)[1], field_norms(res_m, g)[1]


def euclidian_project(phi: FundamentalOneForm, state: KinematicalState) -> FundamentalOneForm:
    """Zero ``F`` and shift ``M`` so that its moment balances the stresses.

    The shift only touches the antisymmetric part of ``M e^T``, so applying
    the projection twice changes nothing.
    """
    _check(phi, state.grid)
    target = antisym(phi.M @ _t(state.e)) + _internal_moment(phi, state)
    M = phi.M - target @ state.e
    return phi.replace(F=np.zeros_like(phi.F), M=M)


def _require_euclidian(phi: FundamentalOneForm, state: KinematicalState) -> None:
    rf, rm = euclidian_check(phi, state)
    scale = max(1.0, phi.scale())
    if max(rf, rm) > EUCLIDIAN_TOL * scale:
        raise NonEuclidianError(
            f"fundamental form is not Euclidian (force {rf:.3g}, moment {rm:.3g})"
        )


def equilibrium_residual_lagrangian(
    phi: FundamentalOneForm, state: KinematicalState, tol: float = INTEGRABILITY_TOL
) -> EquilibriumResidual:
    """``F - d_a sigma_a`` and ``[(M - d_a mu_a) e^T]``.

    The state must be integrable: its slots have to equal the finite
    differences of its values.
    """
    _check(phi, state.grid)
    g = phi.grid
    spencer = float(np.max(spencer_residual(state)))
    scale = max(1.0, float(np.max(np.abs(state.x_d))))
    if spencer > tol * scale:
        raise NonIntegrableError(f"state is not integrable (Spencer residual {spencer:.3g})")
    force = phi.F - g.divergence(phi.sigma)
    moment = antisym((phi.M - g.divergence(phi.mu)) @ _t(state.e))
    return EquilibriumResidual(g, force, moment)


def couple_part(phi: FundamentalOneForm, state: KinematicalState) -> np.ndarray:
    """``[mu_a e^T]`` per slot: the couple-stress part of ``mu_bar``."""
    return antisym(phi.mu @ _t(state.e)[..., None, :, :])


def transverse_moment(phi: FundamentalOneForm, state: KinematicalState) -> np.ndarray:
    """``[sum_a sigma_a x_a]``."""
    return antisym(np.einsum("...ai,...aj->...ij", phi.sigma, state.x_d))


def equilibrium_residual_eulerian(
    phi: FundamentalOneForm,
    state: KinematicalState,
    body_force: np.ndarray | None = None,
    body_couple: np.ndarray | None = None,
    check: bool = True,
) -> EquilibriumResidual:
    """``d_a sigma_a`` and ``d_a [mu_a e^T] + [sigma_a x_a]`` for a Euclidian form.

    Optional distributed loads enter as ``+ f`` and ``+ 1/2 hat(c)``, so the
    axial vector of twice the moment residual is a couple balance.
    """
    _check(phi, state.grid)
    if check:
        _require_euclidian(phi, state)
    g = phi.grid
    force = g.divergence(phi.sigma)
    moment = g.divergence(couple_part(phi, state)) + transverse_moment(phi, state)
    if body_force is not None:
        force = force + body_force
    if body_couple is not None:
        moment = moment + 0.5 * hat(body_couple)
    return EquilibriumResidual(g, force, moment)


def equilibrium_residual_cosserat3d(
    phi: FundamentalOneForm, state: KinematicalState, check: bool = True
) -> EquilibriumResidual:
    """``d_j sigma^j_i`` and ``d_k mu_bar^k + sigma_[ij]`` in deformed coordinates.

    Slot ``a`` of the stresses is identified with the spatial face index, and
    ``d/dx^i = sum_a Jinv[a, i] d/drho^a`` with ``J[i, a] = d_a x^i``.
    """
    _check(phi, state.grid)
    g = phi.grid
    if g.p != 3:
        raise ValueError(f"the 3D Cosserat equations need p = 3, got p = {g.p}")
    if check:
        _require_euclidian(phi, state)
    J = _t(state.x_d)  # J[..., i, a]
    det = np.linalg.det(J)
    scale = np.max(np.abs(J), axis=(-2, -1)) ** 3
    bad = np.abs(det) <= 1e-12 * np.maximum(scale, 1e-300)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SingularJacobianError(f"embedding Jacobian is singular at node {idx}")
    Jinv = np.linalg.inv(J)  # Jinv[..., a, i]
    dsig = g.gradient(phi.sigma)  # [..., a, j, i]: d_a sigma^j_i
    force = np.einsum("...aj,...aji->...i", Jinv, dsig)
    mu_bar = couple_part(phi, state)
    dmu = g.gradient(mu_bar)  # [..., a, k, i, j]
    moment = np.einsum("...ak,...akij->...ij", Jinv, dmu) + antisym(_t(phi.sigma))
    return EquilibriumResidual(g, force, moment)


@dataclass(frozen=True, eq=False)
class ReductionChain:
    """Moment residuals of the three successive forms of the equilibrium equations.

    ``full``      ``M_bar - d_a mu_bar_a`` (the whole Eulerian moment balance)
    ``expanded``  the same with ``d_a [sigma_a x]`` expanded by the product rule
    ``reduced``   ``[(M - d_a mu_a) e^T]`` after the force balance and
                  integrability are used

    Exact identities with shared stencils::

        expanded - full    = sigma_defect
        expanded - reduced = force_term + spencer_term - mu_defect

    where the product-rule defects are O(h^2) and the other terms vanish on
    integrable states in force balance.
    """

    full: np.ndarray
    expanded: np.ndarray
    reduced: np.ndarray
    cross_terms: np.ndarray
    sigma_defect: np.ndarray
    mu_defect: np.ndarray
    force_term: np.ndarray
    spencer_term: np.ndarray


def reduction_chain(phi: FundamentalOneForm, state: KinematicalState) -> ReductionChain:
    _check(phi, state.grid)
    g = phi.grid
    x, e = state.x, state.e
    ec = eulerian_components(phi, state)
    full = ec.M - g.divergence(ec.mu)
    div_sigma = g.divergence(phi.sigma)
    grad_x = g.gradient(x)
    grad_e = g.gradient(e)
    cross = antisym(_outer(div_sigma, x) + np.einsum("...ai,...aj->...ij", phi.sigma, grad_x))
    mu_c = couple_part(phi, state)
    expanded = (
        antisym(phi.M @ _t(e))
        + antisym(_outer(phi.F, x))
        + transverse_moment(phi, state)
        + antisym(np.einsum("...aik,...ajk->...ij", phi.mu, state.e_d))
        - g.divergence(mu_c)
        - cross
    )
    reduced = antisym((phi.M - g.divergence(phi.mu)) @ _t(e))
    sigma_defect = g.divergence(antisym(_outer(phi.sigma, x[..., None, :]))) - cross
    # d_a mu_a for each slot a separately (no sum)
    dmu = np.stack([g.diff(phi.mu[..., a, :, :], a) for a in range(g.p)], axis=g.p)
    mu_defect = g.divergence(mu_c) - antisym(
        np.einsum("...aik,...jk->...ij", dmu, e) + np.einsum("...aik,...ajk->...ij", phi.mu, grad_e)
    )
    force_term = antisym(_outer(phi.F - div_sigma, x))
    spencer_term = antisym(
        np.einsum("...ai,...aj->...ij", phi.sigma, state.x_d - grad_x)
        + np.einsum("...aik,...ajk->...ij", phi.mu, state.e_d - grad_e)
    )
    return ReductionChain(full, expanded, reduced, cross, sigma_defect, mu_defect, force_term, spencer_term)
