"""Uniform parameter grids and their finite-difference calculus.

Field arrays always carry the grid dimensions first: a vector field on a 2D
grid of extents ``(n1, n2)`` has shape ``(n1, n2, 3)``.  Derivative slots are
inserted right after the grid dimensions, so ``grid.gradient(f)`` of a
``(n1, n2, 3)`` field is ``(n1, n2, 2, 3)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class ParameterGrid:
    """Tensor-product node grid over a box in parameter space.

    ``extents`` are node counts (at least 3 per axis so every node has a
    second-order stencil), ``spacing`` the node distances and ``origin`` the
    lower corner.
    """

    extents: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...] | None = None

    def __post_init__(self):
        extents = tuple(int(n) for n in self.extents)
        spacing = tuple(float(h) for h in self.spacing)
        if not 1 <= len(extents) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(extents)}")
        if len(spacing) != len(extents):
            raise ValueError("spacing needs one entry per axis")
        if any(n < 3 for n in extents):
            raise ValueError(f"every axis needs at least 3 nodes, got {extents}")
        if any(not h > 0.0 for h in spacing):
            raise ValueError("spacing must be positive")
        origin = (0.0,) * len(extents) if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != len(extents):
            raise ValueError("origin needs one entry per axis")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def uniform(cls, p: int, n: int, length: float = 1.0, origin: float = 0.0) -> ParameterGrid:
        """Cube ``[origin, origin + length]^p`` with ``n`` nodes per axis."""
        return cls((n,) * p, (length / (n - 1),) * p, (origin,) * p)

    @property
    def p(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.extents

    @property
    def size(self) -> int:
        return int(np.prod(self.extents))

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple((n - 1) * h for n, h in zip(self.extents, self.spacing))

    def axis(self, a: int) -> np.ndarray:
        return self.origin[a] + self.spacing[a] * np.arange(self.extents[a])

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape ``(*shape, p)``."""
        mesh = np.meshgrid(*(self.axis(a) for a in range(self.p)), indexing="ij")
        coords = np.stack(mesh, axis=-1)
        coords.setflags(write=False)
        return coords

    @cached_property
    def boundary_flags(self) -> np.ndarray:
        """True on nodes lying on the boundary of the box."""
        flags = np.zeros(self.shape, dtype=bool)
        for a in range(self.p):
            idx = [slice(None)] * self.p
            idx[a] = 0
            flags[tuple(idx)] = True
            idx[a] = -1
            flags[tuple(idx)] = True
        flags.setflags(write=False)
        return flags

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights over the box."""
        w = np.ones(())
        for a in range(self.p):
            wa = np.full(self.extents[a], self.spacing[a])
            wa[0] = wa[-1] = 0.5 * self.spacing[a]
            w = np.multiply.outer(w, wa)
        w.setflags(write=False)
        return w

    def face_weights(self, axis: int) -> np.ndarray:
        """Trapezoidal weights on a face normal to ``axis`` (shape of the face)."""
        w = np.ones(())
        for a in range(self.p):
            if a == axis:
                continue
            wa = np.full(self.extents[a], self.spacing[a])
            wa[0] = wa[-1] = 0.5 * self.spacing[a]
            w = np.multiply.outer(w, wa)
        return w

    def refine(self) -> ParameterGrid:
        """Same box with the spacing halved."""
        return ParameterGrid(
            tuple(2 * (n - 1) + 1 for n in self.extents),
            tuple(h / 2.0 for h in self.spacing),
            self.origin,
        )

    def check_field(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[: self.p] != self.shape:
            raise ValueError(f"{name} has grid shape {f.shape[: self.p]}, expected {self.shape}")
        return f

    def diff(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Second-order derivative along ``axis``.

        Central differences inside, three-point one-sided differences on the
        two end layers.  Every stencil is written in difference form, so a
        constant field differentiates to exactly zero.
        """
        f = self.check_field(f)
        h = self.spacing[axis]
        g = np.moveaxis(f, axis, 0)
        fwd = g[1:] - g[:-1]
        out = np.empty_like(g)
        out[1:-1] = (g[2:] - g[:-2]) / (2.0 * h)
        out[0] = (3.0 * fwd[0] - fwd[1]) / (2.0 * h)
        out[-1] = (3.0 * fwd[-1] - fwd[-2]) / (2.0 * h)
        return np.moveaxis(out, 0, axis)

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """All parameter derivatives, stacked on a new axis after the grid dims."""
        f = self.check_field(f)
        return np.stack([self.diff(f, a) for a in range(self.p)], axis=self.p)

    def divergence(self, f: np.ndarray) -> np.ndarray:
        """``sum_a d_a f[..., a, ...]`` for a field carrying a slot axis."""
        f = self.check_field(f)
        return sum(self.diff(np.take(f, a, axis=self.p), a) for a in range(self.p))

    def integrate(self, f: np.ndarray) -> np.ndarray:
        f = self.check_field(f)
        w = self.weights.reshape(self.shape + (1,) * (f.ndim - self.p))
        return np.sum(w * f, axis=tuple(range(self.p)))

    def face(self, f: np.ndarray, axis: int, side: int) -> np.ndarray:
        """Restriction of a field to the face ``axis = min`` (side 0) or max (side 1)."""
        f = self.check_field(f)
        return np.take(f, 0 if side == 0 else -1, axis=axis)

    def refinement_index(self, levels: int) -> tuple[slice, ...]:
        """Slice picking the nodes of this grid out of its ``levels``-times refined grid."""
        step = 2**levels
        return tuple(slice(None, None, step) for _ in range(self.p))


def node_norms(f: np.ndarray, grid: ParameterGrid) -> np.ndarray:
    """Euclidean norm of the per-node component block."""
    f = grid.check_field(f)
    if f.size == 0:
        return np.zeros(grid.shape)
    flat = f.reshape(grid.shape + (-1,))
    return np.sqrt(np.sum(flat * flat, axis=-1))


def field_norms(f: np.ndarray, grid: ParameterGrid) -> tuple[float, float]:
    """Maximum and quadrature-L2 norms of the per-node magnitudes."""
    n = node_norms(f, grid)
    inf = float(np.max(n)) if n.size else 0.0
    l2 = float(np.sqrt(np.sum(grid.weights * n * n)))
    return inf, l2
