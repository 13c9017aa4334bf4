"""Newton solver for the equilibrium of a Cosserat rod (one parameter).

The reference rod is straight along ``e_x`` with the standard frame.  The
unknowns are the node rigid motions ``(a, R)``; the deformed state is the
prolongation of ``x = a + R x0``, ``e = R``.  Interior nodes enforce the
Eulerian balance with distributed loads::

    d sigma + f = 0,      d m + x' x n + c = 0

(``n = sigma``, ``m`` the spatial couple) and each end either prescribes
the rigid motion or the applied end wrench.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import ParameterGrid
from .kinematics import DisplacementField, KinematicalState
from .laws import ConstitutiveLaw
from .rigid_motion import rotation_exp, rotation_log, vee
from .statics import couple_part, equilibrium_residual_eulerian

__all__ = [
    "SOLVE_TOL",
    "MAX_ITER",
    "SolverError",
    "EndCondition",
    "RodBoundary",
    "RodSolution",
    "rod_state",
    "rod_residual",
    "solve_rod",
    "manufactured_loads",
    "field_error",
    "tip_rotation_angle",
]

SOLVE_TOL = 1e-8
MAX_ITER = 50

# Finite-difference step for Jacobian columns and the node coupling width of
# the residual (a node's residual depends on unknowns at most 2 nodes away).
_JAC_STEP = 1e-7
_COUPLING = 2
_MIN_STEP = 2.0**-12


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class EndCondition:
    """``fixed`` prescribes ``(translation, rotation vector)``; ``free`` applies ``(force, couple)``."""

    kind: str = "free"
    translation: tuple = (0.0, 0.0, 0.0)
    rotation: tuple = (0.0, 0.0, 0.0)
    force: tuple = (0.0, 0.0, 0.0)
    couple: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("fixed", "free"):
            raise ValueError(f"end condition must be 'fixed' or 'free', got {self.kind!r}")
        for name in ("translation", "rotation", "force", "couple"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.all(np.isfinite(v)):
                raise ValueError(f"end condition {name} must be a finite 3-vector")
            object.__setattr__(self, name, tuple(float(c) for c in v))

    @classmethod
    def fixed(cls, translation=(0.0, 0.0, 0.0), rotation=(0.0, 0.0, 0.0)) -> EndCondition:
        return cls("fixed", translation=translation, rotation=rotation)

    @classmethod
    def free(cls, force=(0.0, 0.0, 0.0), couple=(0.0, 0.0, 0.0)) -> EndCondition:
        return cls("free", force=force, couple=couple)


@dataclass(frozen=True)
class RodBoundary:
    start: EndCondition
    end: EndCondition


@dataclass(frozen=True, eq=False)
class RodSolution:
    field: DisplacementField
    state: KinematicalState
    iterations: int
    residual_norm: float
    converged: bool
    trace: list = field(default_factory=list)


def _reference_positions(grid: ParameterGrid) -> np.ndarray:
    x0 = np.zeros(grid.shape + (3,))
    x0[..., 0] = grid.coordinates[..., 0]
    return x0


def rod_state(grid: ParameterGrid, a: np.ndarray, R: np.ndarray) -> KinematicalState:
    """Prolonged deformed state of the straight reference rod."""
    x = a + np.einsum("...ij,...j->...i", R, _reference_positions(grid))
    return KinematicalState.prolong(grid, x, R)


def rod_residual(
    law: ConstitutiveLaw,
    grid: ParameterGrid,
    bc: RodBoundary,
    a: np.ndarray,
    R: np.ndarray,
    body_force: np.ndarray | None = None,
    body_couple: np.ndarray | None = None,
) -> np.ndarray:
    """Stacked residual of shape ``(n, 6)``: force then couple balance per node."""
    state = rod_state(grid, a, R)
    phi = law(state)
    eq = equilibrium_residual_eulerian(phi, state, body_force, body_couple, check=False)
    res = np.concatenate([eq.force, vee(2.0 * eq.moment)], axis=-1)
    couple = vee(2.0 * couple_part(phi, state)[:, 0])
    for node, cond, sign in ((0, bc.start, -1.0), (-1, bc.end, 1.0)):
        if cond.kind == "fixed":
            res[node, :3] = a[node] - np.asarray(cond.translation)
            target = rotation_exp(np.asarray(cond.rotation))
            res[node, 3:] = rotation_log(R[node] @ target.T)
        else:
            res[node, :3] = phi.sigma[node, 0] - sign * np.asarray(cond.force)
            res[node, 3:] = couple[node] - sign * np.asarray(cond.couple)
    return res


def _update(a, R, d, t):
    d = d.reshape(a.shape[0], 6)
    return a + t * d[:, :3], rotation_exp(t * d[:, 3:]) @ R


def _jacobian(fun, a, R) -> np.ndarray:
    """Column-colored central-difference Jacobian of ``fun`` at ``(a, R)``."""
    n = a.shape[0]
    stride = 2 * _COUPLING + 1
    J = np.zeros((6 * n, 6 * n))
    rows = np.arange(n)
    for c in range(min(stride, n)):
        cols = np.arange(c, n, stride)
        # for each row node, the perturbed node of this color within reach
        off = (c - rows) % stride
        off = np.where(off > _COUPLING, off - stride, off)
        src = rows + off
        ok = (src >= 0) & (src < n)
        for k in range(6):
            d = np.zeros((n, 6))
            d[cols, k] = _JAC_STEP
            rp = fun(*_update(a, R, d.ravel(), 1.0))
            rm = fun(*_update(a, R, d.ravel(), -1.0))
            diff = (rp - rm) / (2.0 * _JAC_STEP)
            for i in rows[ok]:
                J[6 * i : 6 * i + 6, 6 * src[i] + k] = diff[i]
    return J


def solve_rod(
    law: ConstitutiveLaw,
    bc: RodBoundary,
    grid: ParameterGrid,
    body_force: np.ndarray | None = None,
    body_couple: np.ndarray | None = None,
    initial: DisplacementField | None = None,
    tol: float = SOLVE_TOL,
    max_iter: int = MAX_ITER,
) -> RodSolution:
    """Damped Newton iteration on the stacked node residuals.

    Returns the best iterate with ``converged=False`` if the residual does
    not reach ``tol`` (infinity norm) within ``max_iter`` steps; raises
    :class:`SolverError` if the Newton system is singular.
    """
    if grid.p != 1:
        raise ValueError(f"the rod solver needs a 1D grid, got p = {grid.p}")
    n = grid.shape[0]
    for name, load in (("body force", body_force), ("body couple", body_couple)):
        if load is not None and np.shape(load) != (n, 3):
            raise ValueError(f"{name} must have shape {(n, 3)}")
    if initial is None:
        initial = DisplacementField.identity(grid)
    a, R = np.array(initial.a), np.array(initial.r)

    def fun(a_, R_):
        return rod_residual(law, grid, bc, a_, R_, body_force, body_couple)

    r = fun(a, R)
    norm = float(np.max(np.abs(r)))
    trace = [{"iteration": 0, "residual_inf": norm, "step": 0.0}]
    best = (norm, a, R)
    it = 0
    while norm > tol and it < max_iter:
        it += 1
        J = _jacobian(fun, a, R)
        try:
            d = np.linalg.solve(J, -r.ravel())
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Newton system at iteration {it}") from exc
        if not np.all(np.isfinite(d)) or np.linalg.norm(J @ d + r.ravel()) > 1e-6 * max(np.linalg.norm(r), 1e-300):
            raise SolverError(f"singular Newton system at iteration {it}")
        t = 1.0
        while True:
            a_t, R_t = _update(a, R, d, t)
            r_t = fun(a_t, R_t)
            n_t = float(np.max(np.abs(r_t)))
            if n_t < norm or t <= _MIN_STEP:
                break
            t *= 0.5
        a, R, r, norm = a_t, R_t, r_t, n_t
        trace.append({"iteration": it, "residual_inf": norm, "step": t})
        if norm < best[0]:
            best = (norm, a, R)
        if t <= _MIN_STEP and n_t >= best[0] and norm > tol:
            break
    norm, a, R = best
    chi = DisplacementField(grid, a, R)
    return RodSolution(chi, rod_state(grid, a, R), it, norm, norm <= tol, trace)


# Eighth-order central first-derivative weights.
_FD8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def _d8(fn: Callable[[np.ndarray], np.ndarray], rho: np.ndarray, h: float) -> np.ndarray:
    return sum(w * fn(rho + (k - 4) * h) for k, w in enumerate(_FD8) if w != 0.0) / h


def manufactured_loads(
    law: ConstitutiveLaw,
    grid: ParameterGrid,
    translation: Callable[[np.ndarray], np.ndarray],
    rotvec: Callable[[np.ndarray], np.ndarray],
    h: float = 1e-3,
) -> tuple[DisplacementField, np.ndarray, np.ndarray]:
    """Exact field and the distributed loads that make it an equilibrium.

    ``translation`` and ``rotvec`` map parameter values (shape ``(n,)``) to
    ``(n, 3)`` arrays.  Continuum derivatives are taken with an
    eighth-order stencil of step ``h``, accurate far below any grid error.
    """
    rho = grid.axis(0)

    def frames(s):
        return rotation_exp(rotvec(s))

    def positions(s):
        x0 = np.zeros(s.shape + (3,))
        x0[..., 0] = s
        return translation(s) + np.einsum("...ij,...j->...i", frames(s), x0)

    def wrench(s):
        x = positions(s)
        e = frames(s)
        x_d = _d8(positions, s, h)[..., None, :]
        e_d = _d8(frames, s, h)[..., None, :, :]
        _, _, sigma, mu = law.evaluate(s[..., None], x, e, x_d, e_d)
        m = vee(mu[..., 0, :, :] @ np.swapaxes(e, -1, -2) - e @ np.swapaxes(mu[..., 0, :, :], -1, -2))
        return np.concatenate([sigma[..., 0, :], m, x_d[..., 0, :]], axis=-1)

    w = wrench(rho)
    dw = _d8(wrench, rho, h)
    f = -dw[:, :3]
    c = -(dw[:, 3:6] + np.cross(w[:, 6:9], w[:, :3]))
    chi = DisplacementField(grid, translation(rho), frames(rho))
    return chi, f, c


def field_error(chi: DisplacementField, exact: DisplacementField) -> float:
    """Largest node distance ``|a - a*| + |log(R R*^T)|``."""
    da = np.linalg.norm(chi.a - exact.a, axis=-1)
    dr = np.linalg.norm(rotation_log(chi.r @ np.swapaxes(exact.r, -1, -2)), axis=-1)
    return float(np.max(da + dr))


def tip_rotation_angle(solution: RodSolution) -> float:
    return float(np.linalg.norm(rotation_log(solution.field.r[-1])))

