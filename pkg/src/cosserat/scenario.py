"""Scenario files: TOML documents describing one check run.

Common keys::

    name = "helix"
    kind = "deformation-check"   # or compatibility, equilibrium, rod-solve, convergence-study

    [grid]
    extents = [33]               # nodes per axis
    spacing = [0.03125]          # or: lengths = [1.0]
    origin = [0.0]

    [checks]
    symmetric_residue = 1e-12    # check name = tolerance

Fields are lists of expression strings over ``rho1..rho3`` (see
:mod:`cosserat.expressions`) or tabulated node values.  The kind-specific
sections are documented in the README.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .expressions import ExpressionError, evaluate_list
from .grid import ParameterGrid

__all__ = ["ScenarioError", "Scenario", "load_scenario", "parse_scenario", "KINDS", "KIND_CHECKS"]

KIND_CHECKS = {
    "deformation-check": ("symmetric_residue", "expected_xi", "expected_omega", "spencer", "rigid_kernel"),
    "compatibility": ("dislocation", "disclination", "incompatibility"),
    "equilibrium": (
        "euclidian_force",
        "euclidian_moment",
        "rigid_nullity",
        "lagrangian_force",
        "lagrangian_moment",
        "eulerian_force",
        "eulerian_moment",
        "cosserat3d_force",
        "cosserat3d_moment",
        "integration_by_parts",
    ),
    "rod-solve": ("newton_residual", "newton_iterations", "manufactured_error", "tip_rotation"),
}
KINDS = tuple(KIND_CHECKS) + ("convergence-study",)


class ScenarioError(ValueError):
    """Invalid scenario input; the message names the offending field."""


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ScenarioError(f"{path}: missing required field {key!r}")
    return table[key]


def _real_list(value, path: str, length: int | None = None) -> list[float]:
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise ScenarioError(f"{path}: expected a list of numbers")
    if length is not None and len(value) != length:
        raise ScenarioError(f"{path}: expected {length} numbers, got {len(value)}")
    out = [float(v) for v in value]
    if not all(np.isfinite(out)):
        raise ScenarioError(f"{path}: numbers must be finite")
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    kind: str
    data: dict
    source: str = ""
    checks: dict = field(default_factory=dict)
    base_kind: str = ""

    # ----- grid -------------------------------------------------------------

    def grid(self, level: int = 0) -> ParameterGrid:
        g = _require(self.data, "grid", "scenario")
        if not isinstance(g, dict):
            raise ScenarioError("grid: expected a table")
        ext = _require(g, "extents", "grid")
        if not isinstance(ext, list) or not all(isinstance(n, int) and not isinstance(n, bool) for n in ext):
            raise ScenarioError("grid.extents: expected a list of integers")
        p = len(ext)
        if "spacing" in g:
            spacing = _real_list(g["spacing"], "grid.spacing", p)
        elif "lengths" in g:
            lengths = _real_list(g["lengths"], "grid.lengths", p)
            spacing = [L / (n - 1) if n > 1 else L for L, n in zip(lengths, ext)]
        else:
            spacing = [1.0 / (n - 1) if n > 1 else 1.0 for n in ext]
        origin = _real_list(g.get("origin", [0.0] * p), "grid.origin", p)
        try:
            grid = ParameterGrid(tuple(ext), tuple(spacing), tuple(origin))
        except ValueError as exc:
            raise ScenarioError(f"grid: {exc}") from None
        for _ in range(level):
            grid = grid.refine()
        return grid

    # ----- field helpers ----------------------------------------------------

    def section(self, name: str, required: bool = False) -> dict:
        node = self.data
        for part in name.split("."):
            if not isinstance(node, dict) or part not in node:
                if required:
                    raise ScenarioError(f"{name}: missing required section")
                return {}
            node = node[part]
        if not isinstance(node, dict):
            raise ScenarioError(f"{name}: expected a table")
        return node

    def has(self, name: str) -> bool:
        try:
            return bool(self.section(name))
        except ScenarioError:
            return False

    def vector(self, section: str, key: str, grid: ParameterGrid, default=None) -> np.ndarray:
        """Expression list of 3 entries (or constant numbers) sampled on the grid."""
        sec = self.section(section)
        path = f"{section}.{key}"
        if key not in sec:
            if default is None:
                raise ScenarioError(f"{path}: missing required field")
            return np.broadcast_to(np.asarray(default, dtype=float), grid.shape + (3,)).copy()
        return evaluate_list(sec[key], path, grid.coordinates, 3)

    def matrix_rows(self, section: str, key: str, grid: ParameterGrid, rows: int, width: int) -> np.ndarray | None:
        """``rows`` lists of ``width`` expressions, sampled to shape ``(*shape, rows, width)``."""
        sec = self.section(section)
        if key not in sec:
            return None
        path = f"{section}.{key}"
        value = sec[key]
        if not isinstance(value, list) or len(value) != rows:
            raise ScenarioError(f"{path}: expected {rows} rows of {width} expressions")
        return np.stack(
            [evaluate_list(row, f"{path}[{r}]", grid.coordinates, width) for r, row in enumerate(value)],
            axis=grid.p,
        )

    def table(self, section: str, key: str, grid: ParameterGrid) -> np.ndarray | None:
        """Tabulated node values: a list of 3-lists, one per node in C order."""
        sec = self.section(section)
        if key not in sec:
            return None
        path = f"{section}.{key}"
        rows = sec[key]
        if not isinstance(rows, list) or len(rows) != grid.size:
            raise ScenarioError(f"{path}: expected {grid.size} node rows (one per grid node)")
        arr = np.array([_real_list(r, f"{path}[{k}]", 3) for k, r in enumerate(rows)])
        return arr.reshape(grid.shape + (3,))

    def number(self, section: str, key: str, default=None) -> float:
        sec = self.section(section)
        if key not in sec:
            if default is None:
                raise ScenarioError(f"{section}.{key}: missing required field")
            return float(default)
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ScenarioError(f"{section}.{key}: expected a finite number")
        return float(v)

    def constant_vector(self, section: str, key: str, default=(0.0, 0.0, 0.0)) -> np.ndarray:
        sec = self.section(section)
        if key not in sec:
            return np.asarray(default, dtype=float)
        return np.asarray(_real_list(sec[key], f"{section}.{key}", 3))

    def echo(self) -> dict:
        """Deterministic summary of the inputs for the report header."""
        g = self.grid()
        out = {
            "name": self.name,
            "kind": self.kind,
            "extents": list(g.extents),
            "spacing": list(g.spacing),
            "origin": list(g.origin),
        }
        if self.base_kind:
            out["base_kind"] = self.base_kind
        return out


def _parse_checks(data: dict, kind: str, base: str) -> dict:
    checks = data.get("checks", {})
    if not isinstance(checks, dict) or not checks:
        raise ScenarioError("checks: at least one check with a tolerance is required")
    allowed = KIND_CHECKS[base if kind == "convergence-study" else kind]
    out = {}
    for name, tol in checks.items():
        if name not in allowed:
            raise ScenarioError(f"checks.{name}: unknown check for kind {base or kind!r}; known: {list(allowed)}")
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol >= 0 or not np.isfinite(tol):
            raise ScenarioError(f"checks.{name}: tolerance must be a finite non-negative number")
        out[name] = float(tol)
    return out


def parse_scenario(data: dict, source: str = "") -> Scenario:
    """Validate the top-level structure of a decoded scenario document."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a table at top level")
    kind = _require(data, "kind", "scenario")
    if kind not in KINDS:
        raise ScenarioError(f"kind: unknown kind {kind!r}; expected one of {list(KINDS)}")
    name = data.get("name", Path(source).stem if source else "scenario")
    if not isinstance(name, str):
        raise ScenarioError("name: expected a string")
    base = ""
    if kind == "convergence-study":
        study = data.get("study")
        if not isinstance(study, dict):
            raise ScenarioError("study: missing required section")
        base = _require(study, "base", "study")
        if base not in KIND_CHECKS:
            raise ScenarioError(f"study.base: expected one of {list(KIND_CHECKS)}, got {base!r}")
        levels = study.get("levels", 3)
        if isinstance(levels, bool) or not isinstance(levels, int) or levels < 3:
            raise ScenarioError("study.levels: expected an integer >= 3")
    checks = _parse_checks(data, kind, base)
    sc = Scenario(name, kind, data, source, checks, base)
    sc.grid()
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario file ({exc.strerror})") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path.name}: parse error: {exc}") from None
    try:
        return parse_scenario(data, str(path))
    except ExpressionError as exc:
        raise ScenarioError(str(exc)) from None
