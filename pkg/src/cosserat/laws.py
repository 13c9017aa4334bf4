"""Constitutive laws: maps from kinematical states to fundamental 1-forms.

A law is anything with ``evaluate(rho, x, e, x_d, e_d) -> (F, M, sigma, mu)``
that works over arbitrary leading node dimensions.  Calling a law on a
:class:`KinematicalState` evaluates it on the whole grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kinematics import KinematicalState, StateNode
from .rigid_motion import hat, vee
from .statics import FundamentalOneForm

__all__ = ["ConstitutiveLaw", "CallableLaw", "LinearCosseratLaw", "make_law", "LAWS"]


class ConstitutiveLaw:
    """Base class; subclasses implement :meth:`evaluate`."""

    def evaluate(self, rho, x, e, x_d, e_d):
        raise NotImplementedError

    def __call__(self, state: KinematicalState) -> FundamentalOneForm:
        F, M, sigma, mu = self.evaluate(state.grid.coordinates, state.x, state.e, state.x_d, state.e_d)
        return FundamentalOneForm(state.grid, F, M, sigma, mu)

    def at_node(self, rho, s: StateNode):
        """Values ``(F, M, sigma, mu)`` at one node."""
        return self.evaluate(np.asarray(rho, dtype=float), s.x, s.e, s.x_d, s.e_d)


@dataclass(frozen=True)
class CallableLaw(ConstitutiveLaw):
    """Wrap a per-node function ``fn(rho, x, e, x_d, e_d) -> (F, M, sigma, mu)``."""

    fn: Callable

    def evaluate(self, rho, x, e, x_d, e_d):
        lead = x.shape[:-1]
        if not lead:
            return tuple(np.asarray(v, dtype=float) for v in self.fn(rho, x, e, x_d, e_d))
        p = x_d.shape[-2]
        F = np.empty(lead + (3,))
        M = np.empty(lead + (3, 3))
        sigma = np.empty(lead + (p, 3))
        mu = np.empty(lead + (p, 3, 3))
        for idx in np.ndindex(*lead):
            F[idx], M[idx], sigma[idx], mu[idx] = self.fn(rho[idx], x[idx], e[idx], x_d[idx], e_d[idx])
        return F, M, sigma, mu


@dataclass(frozen=True)
class LinearCosseratLaw(ConstitutiveLaw):
    """Isotropic linear law in material strains; Euclidian by construction.

    Material strains per slot ``a``: ``G_a = e^T x_a - G0_a`` and
    ``K_a = vee(e^T e_a) - K0_a``.  With ``P[a, i] = delta_ai``::

        t_a = lam tr(G) P_a + (mu + kappa) G_a + mu (G^T)_a      (p x p block)
        m_a = gamma K_a
        sigma_a = e t_a,   mu_a = 1/2 e hat(m_a)
        M = sum_a x_a t_a^T - 1/2 e_a hat(m_a),   F = 0

    For a rod (``p = 1``) the axial stiffness is ``lam + 2 mu + kappa``, the
    shear stiffness ``mu + kappa`` and the bending/torsion stiffness
    ``gamma``.  Moduli carry stress units (force per area for a solid,
    force for a rod) since the parameter spacing is dimensionless.
    """

    lam: float = 1.0
    mu: float = 1.0
    kappa: float = 0.0
    gamma: float = 1.0
    rest_strain: np.ndarray | None = field(default=None, compare=False)
    rest_curvature: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("lam", "mu", "kappa", "gamma"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"modulus {name} must be finite")
            object.__setattr__(self, name, v)

    def strains(self, x, e, x_d, e_d):
        p = x_d.shape[-2]
        et = np.swapaxes(e, -1, -2)[..., None, :, :]
        G = np.einsum("...aij,...aj->...ai", et, x_d)
        G0 = np.zeros((p, 3))
        G0[:, :p] = np.eye(p)
        if self.rest_strain is not None:
            G0 = np.asarray(self.rest_strain, dtype=float).reshape(p, 3)
        K = vee(et @ e_d)
        if self.rest_curvature is not None:
            K = K - np.asarray(self.rest_curvature, dtype=float).reshape(p, 3)
        return G - G0, K

    def evaluate(self, rho, x, e, x_d, e_d):
        x = np.asarray(x, dtype=float)
        e = np.asarray(e, dtype=float)
        x_d = np.asarray(x_d, dtype=float)
        e_d = np.asarray(e_d, dtype=float)
        p = x_d.shape[-2]
        G, K = self.strains(x, e, x_d, e_d)
        tr = np.trace(G[..., :, :p], axis1=-2, axis2=-1)
        t = (self.mu + self.kappa) * G
        t[..., :, :p] += self.mu * np.swapaxes(G[..., :, :p], -1, -2)
        for a in range(p):
            t[..., a, a] += self.lam * tr
        m = self.gamma * K
        en = e[..., None, :, :]
        sigma = np.einsum("...aij,...aj->...ai", en, t)
        hm = hat(m)
        mu = 0.5 * en @ hm
        M = np.einsum("...ai,...aj->...ij", x_d, t) - 0.5 * np.einsum("...aik,...akj->...ij", e_d, hm)
        F = np.zeros(x.shape)
        return F, M, sigma, mu


LAWS = {"linear-cosserat": LinearCosseratLaw}


def make_law(name: str, **params) -> ConstitutiveLaw:
    try:
        cls = LAWS[name]
    except KeyError:
        raise ValueError(f"unknown constitutive law {name!r}; known: {sorted(LAWS)}") from None
    return cls(**params)
