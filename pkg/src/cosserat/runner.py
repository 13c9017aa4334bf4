"""Evaluate scenarios: build fields, run the checks, assemble reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .expressions import ExpressionError, evaluate_list
from .fundamental_sequence import nabla_wedge_1, nabla_wedge_2
from .grid import ParameterGrid, field_norms
from .jet_groupoid import fundamental_variation_field, prolong_variation
from .kinematics import (
    DeformationForm,
    DisplacementField,
    KinematicalState,
    deformation_of,
    displace_state,
    spencer_residual,
)
from .laws import make_law
from .report import CheckResult, Report, observed_orders
from .rigid_motion import hat, rotation_log
from .rod import EndCondition, RodBoundary, field_error, manufactured_loads, solve_rod
from .scenario import Scenario, ScenarioError
from .statics import (
    FundamentalOneForm,
    equilibrium_residual_cosserat3d,
    equilibrium_residual_eulerian,
    equilibrium_residual_lagrangian,
    euclidian_check,
    euclidian_project,
    total_virtual_work,
    virtual_work,
)

__all__ = ["Measurement", "measure", "prepare", "run_scenario", "convergence_study"]

ORDER_MIN = 1.7
ORDER_MAX = 2.3

# Checks whose tolerance is a count rather than a residual, so --tol-scale
# leaves them alone.
_UNSCALED = {"newton_iterations"}


@dataclass
class Measurement:
    values: dict  # check name -> (inf, l2)
    columns: dict
    trace: list = field(default_factory=list)


# ----- field builders ---------------------------------------------------------


def build_chi(sc: Scenario, grid: ParameterGrid) -> DisplacementField:
    if sc.has("chi.table"):
        a = sc.table("chi.table", "translation", grid)
        w = sc.table("chi.table", "rotation", grid)
        if a is None and w is None:
            raise ScenarioError("chi.table: needs 'translation' and/or 'rotation' node rows")
        a = np.zeros(grid.shape + (3,)) if a is None else a
        w = np.zeros(grid.shape + (3,)) if w is None else w
        if sc.section("chi").get("translation") or sc.section("chi").get("rotation"):
            raise ScenarioError("chi: give either expressions or a table, not both")
        return DisplacementField.from_rotvec(grid, a, w)
    a = sc.vector("chi", "translation", grid, default=(0.0, 0.0, 0.0))
    w = sc.vector("chi", "rotation", grid, default=(0.0, 0.0, 0.0))
    return DisplacementField.from_rotvec(grid, a, w)


def _slot_rows(sc: Scenario, section: str, key: str, grid: ParameterGrid, required: bool):
    rows = sc.matrix_rows(section, key, grid, grid.p, 3)
    if rows is None and required:
        raise ScenarioError(f"{section}.{key}: missing required field ({grid.p} rows of 3 expressions)")
    return rows


def build_deformation(sc: Scenario, grid: ParameterGrid) -> DeformationForm:
    if sc.has("deformation"):
        xi = _slot_rows(sc, "deformation", "xi", grid, False)
        om = _slot_rows(sc, "deformation", "omega", grid, False)
        z = np.zeros(grid.shape + (grid.p, 3))
        return DeformationForm(grid, z if xi is None else xi, z if om is None else om)
    return deformation_of(build_chi(sc, grid))


def build_state(sc: Scenario, grid: ParameterGrid) -> KinematicalState:
    """Prolonged deformed state of the reference embedding under ``chi``."""
    moved = displace_state(KinematicalState.reference(grid), build_chi(sc, grid))
    return KinematicalState.prolong(grid, moved.x, moved.e)


def _law(sc: Scenario):
    sec = sc.section("law", required=True)
    name = sec.get("name", "linear-cosserat")
    params = {k: v for k, v in sec.items() if k != "name"}
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioError(f"law.{k}: expected a number")
    try:
        return make_law(name, **params)
    except TypeError as exc:
        raise ScenarioError(f"law: {exc}") from None
    except ValueError as exc:
        raise ScenarioError(f"law: {exc}") from None


def build_phi(sc: Scenario, grid: ParameterGrid, state: KinematicalState) -> FundamentalOneForm:
    if sc.has("law"):
        phi = _law(sc)(state)
    else:
        sec = sc.section("phi")
        p = grid.p
        F = sc.vector("phi", "F", grid, default=(0.0, 0.0, 0.0))
        M = sc.matrix_rows("phi", "M", grid, 3, 3)
        sigma = sc.matrix_rows("phi", "sigma", grid, p, 3)
        mu = None
        if "mu" in sec:
            blocks = sec["mu"]
            if not isinstance(blocks, list) or len(blocks) != p:
                raise ScenarioError(f"phi.mu: expected {p} blocks of 3 rows of 3 expressions")
            mats = []
            for a, block in enumerate(blocks):
                if not isinstance(block, list) or len(block) != 3:
                    raise ScenarioError(f"phi.mu[{a}]: expected 3 rows of 3 expressions")
                mats.append(
                    np.stack(
                        [evaluate_list(r, f"phi.mu[{a}][{i}]", grid.coordinates, 3) for i, r in enumerate(block)],
                        axis=grid.p,
                    )
                )
            mu = np.stack(mats, axis=grid.p)
        phi = FundamentalOneForm(
            grid,
            F,
            np.zeros(grid.shape + (3, 3)) if M is None else M,
            np.zeros(grid.shape + (p, 3)) if sigma is None else sigma,
            np.zeros(grid.shape + (p, 3, 3)) if mu is None else mu,
        )
    if sc.section("phi").get("project", False) is True:
        phi = euclidian_project(phi, state)
    return phi


def _callable(sc: Scenario, section: str, key: str):
    items = sc.section(section).get(key, ["0", "0", "0"])

    def fn(s):
        return evaluate_list(items, f"{section}.{key}", np.asarray(s, dtype=float)[..., None], 3)

    return fn


# ----- measurements per kind --------------------------------------------------


def _deformation_check(sc: Scenario, grid: ParameterGrid, wanted) -> Measurement:
    chi = build_chi(sc, grid)
    E = deformation_of(chi)
    vals = {}
    if "symmetric_residue" in wanted:
        vals["symmetric_residue"] = field_norms(E.symmetric_residue, grid)
    if "expected_xi" in wanted:
        exp = _slot_rows(sc, "expected", "xi", grid, True)
        vals["expected_xi"] = field_norms(E.xi - exp, grid)
    if "expected_omega" in wanted:
        exp = _slot_rows(sc, "expected", "omega", grid, True)
        vals["expected_omega"] = field_norms(E.omega - exp, grid)
    if "spencer" in wanted:
        s = displace_state(KinematicalState.reference(grid), chi)
        vals["spencer"] = field_norms(spencer_residual(s), grid)
    if "rigid_kernel" in wanted:
        vals["rigid_kernel"] = field_norms(np.concatenate([E.xi, E.omega], axis=-1), grid)
    cols = {}
    if grid.p == 1:
        cols["rho"] = grid.axis(0)
        for i, c in enumerate("xyz"):
            cols[f"xi_{c}"] = E.xi[:, 0, i]
        for i, c in enumerate("xyz"):
            cols[f"omega_{c}"] = E.omega[:, 0, i]
    return Measurement(vals, cols)


def _compatibility(sc: Scenario, grid: ParameterGrid, wanted) -> Measurement:
    E = build_deformation(sc, grid)
    F = nabla_wedge_1(E)
    vals = {}
    if "dislocation" in wanted:
        vals["dislocation"] = field_norms(F.theta, grid)
    if "disclination" in wanted:
        vals["disclination"] = field_norms(F.omega, grid)
    if "incompatibility" in wanted:
        if grid.p != 3:
            raise ScenarioError("checks.incompatibility: needs a 3D grid")
        T = nabla_wedge_2(F, E)
        vals["incompatibility"] = field_norms(np.concatenate([T.theta, T.omega], axis=-1), grid)
    return Measurement(vals, {})


def _equilibrium(sc: Scenario, grid: ParameterGrid, wanted) -> Measurement:
    state = build_state(sc, grid)
    phi = build_phi(sc, grid, state)
    vals = {}
    if "euclidian_force" in wanted or "euclidian_moment" in wanted:
        rf, rm = euclidian_check(phi, state)
        vals["euclidian_force"] = (rf, rf)
        vals["euclidian_moment"] = (rm, rm)
    if "rigid_nullity" in wanted:
        zeta = sc.constant_vector("variation", "rigid_translation", (1.0, 0.0, 0.0))
        iota = sc.constant_vector("variation", "rigid_rotation", (0.0, 0.0, 1.0))
        zero = np.zeros(grid.shape + (grid.p, 3))
        ds = fundamental_variation_field(state, zeta, iota, zero, zero)
        total = abs(float(np.sum(grid.weights * virtual_work(phi, ds))))
        vals["rigid_nullity"] = (total, total)
    if "lagrangian_force" in wanted or "lagrangian_moment" in wanted:
        r = equilibrium_residual_lagrangian(phi, state)
        vals["lagrangian_force"] = field_norms(r.force, grid)
        vals["lagrangian_moment"] = field_norms(r.moment, grid)
    if "eulerian_force" in wanted or "eulerian_moment" in wanted:
        f = sc.vector("loads", "force", grid, default=(0.0, 0.0, 0.0))
        c = sc.vector("loads", "couple", grid, default=(0.0, 0.0, 0.0))
        r = equilibrium_residual_eulerian(phi, state, f, c)
        vals["eulerian_force"] = field_norms(r.force, grid)
        vals["eulerian_moment"] = field_norms(r.moment, grid)
    if "cosserat3d_force" in wanted or "cosserat3d_moment" in wanted:
        if grid.p != 3:
            raise ScenarioError("checks.cosserat3d_*: needs a 3D grid")
        r = equilibrium_residual_cosserat3d(phi, state)
        vals["cosserat3d_force"] = field_norms(r.force, grid)
        vals["cosserat3d_moment"] = field_norms(r.moment, grid)
    if "integration_by_parts" in wanted:
        dx = sc.vector("variation", "dx", grid, default=(0.0, 0.0, 0.0))
        rot = sc.vector("variation", "rotation", grid, default=(0.0, 0.0, 0.0))
        ds = prolong_variation(grid, dx, hat(rot) @ state.e)
        interior, boundary = total_virtual_work(phi, ds, state)
        direct = float(np.sum(grid.weights * virtual_work(phi, ds)))
        gap = abs(direct - (interior + boundary))
        vals["integration_by_parts"] = (gap, gap)
    return Measurement(vals, {})


def _rod(sc: Scenario, grid: ParameterGrid, wanted) -> Measurement:
    if grid.p != 1:
        raise ScenarioError("grid: the rod solver needs a 1D grid")
    law = _law(sc)
    exact = None
    f = c = None
    if sc.has("manufactured"):
        tr = _callable(sc, "manufactured", "translation")
        rv = _callable(sc, "manufactured", "rotation")
        exact, f, c = manufactured_loads(law, grid, tr, rv)
        bc = RodBoundary(
            EndCondition.fixed(exact.a[0], rotation_log(exact.r[0])),
            EndCondition.fixed(exact.a[-1], rotation_log(exact.r[-1])),
        )
    else:
        bc = RodBoundary(_end(sc, "start"), _end(sc, "end"))
        if sc.has("loads"):
            f = sc.vector("loads", "force", grid, default=(0.0, 0.0, 0.0))
            c = sc.vector("loads", "couple", grid, default=(0.0, 0.0, 0.0))
    sol = solve_rod(law, bc, grid, f, c)
    vals = {
        "newton_residual": (sol.residual_norm, sol.residual_norm),
        "newton_iterations": (float(sol.iterations), float(sol.iterations)),
    }
    if "manufactured_error" in wanted:
        if exact is None:
            raise ScenarioError("checks.manufactured_error: needs a [manufactured] section")
        err = field_error(sol.field, exact)
        vals["manufactured_error"] = (err, err)
    if "tip_rotation" in wanted:
        target = sc.number("expected", "tip_rotation")
        angle = float(np.linalg.norm(rotation_log(sol.field.r[-1])))
        gap = abs(angle - target)
        vals["tip_rotation"] = (gap, gap)
    rv = rotation_log(sol.field.r)
    x = sol.state.x
    cols = {"rho": grid.axis(0)}
    for i, n in enumerate("xyz"):
        cols[n] = x[:, i]
    for i, n in enumerate("xyz"):
        cols[f"rot_{n}"] = rv[:, i]
    return Measurement(vals, cols, sol.trace)


def _end(sc: Scenario, which: str) -> EndCondition:
    path = f"bc.{which}"
    sec = sc.section(path, required=True)
    kind = sec.get("kind")
    if kind not in ("fixed", "free"):
        raise ScenarioError(f"{path}.kind: expected 'fixed' or 'free'")
    return EndCondition(
        kind,
        translation=sc.constant_vector(path, "translation"),
        rotation=sc.constant_vector(path, "rotation"),
        force=sc.constant_vector(path, "force"),
        couple=sc.constant_vector(path, "couple"),
    )


_MEASURE = {
    "deformation-check": _deformation_check,
    "compatibility": _compatibility,
    "equilibrium": _equilibrium,
    "rod-solve": _rod,
}


def measure(sc: Scenario, level: int = 0, kind: str | None = None, wanted=None) -> Measurement:
    kind = kind or (sc.base_kind if sc.kind == "convergence-study" else sc.kind)
    wanted = tuple(sc.checks) if wanted is None else tuple(wanted)
    grid = sc.grid(level)
    try:
        return _MEASURE[kind](sc, grid, wanted)
    except ExpressionError as exc:
        raise ScenarioError(str(exc)) from None


def prepare(sc: Scenario) -> None:
    """Build every input of the scenario without running the expensive parts.

    Raises :class:`ScenarioError` for anything a run would reject as input.
    """
    kind = sc.base_kind or sc.kind
    grid = sc.grid()
    try:
        if kind in ("deformation-check", "compatibility"):
            sources = ("chi", "deformation") if kind == "compatibility" else ("chi",)
            if not any(sc.has(name) for name in sources):
                raise ScenarioError(f"{' or '.join(sources)}: missing required section")
            if kind == "compatibility":
                build_deformation(sc, grid)
            else:
                build_chi(sc, grid)
            for key in ("xi", "omega"):
                if f"expected_{key}" in sc.checks:
                    _slot_rows(sc, "expected", key, grid, True)
        elif kind == "equilibrium":
            state = build_state(sc, grid)
            build_phi(sc, grid, state)
            sc.vector("variation", "dx", grid, default=(0.0, 0.0, 0.0))
            sc.vector("variation", "rotation", grid, default=(0.0, 0.0, 0.0))
        elif kind == "rod-solve":
            if grid.p != 1:
                raise ScenarioError("grid: the rod solver needs a 1D grid")
            _law(sc)
            if sc.has("manufactured"):
                for key in ("translation", "rotation"):
                    _callable(sc, "manufactured", key)(grid.axis(0))
            else:
                _end(sc, "start")
                _end(sc, "end")
            if "tip_rotation" in sc.checks:
                sc.number("expected", "tip_rotation")
    except ExpressionError as exc:
        raise ScenarioError(str(exc)) from None
    if "incompatibility" in sc.checks and grid.p != 3:
        raise ScenarioError("checks.incompatibility: needs a 3D grid")
    if any(k.startswith("cosserat3d") for k in sc.checks) and grid.p != 3:
        raise ScenarioError("checks.cosserat3d_*: needs a 3D grid")


# ----- reports ----------------------------------------------------------------


def _tol(name: str, tol: float, scale: float) -> float:
    return tol if name in _UNSCALED else tol * scale


def run_scenario(sc: Scenario, tol_scale: float = 1.0) -> Report:
    if sc.kind == "convergence-study":
        return convergence_study(sc, int(sc.section("study").get("levels", 3)), tol_scale)
    start = time.perf_counter()
    prepare(sc)
    m = measure(sc)
    report = Report(
        sc.echo(),
        columns={k: [float(v) for v in col] for k, col in m.columns.items()},
        trace=[dict(t) for t in m.trace],
    )
    for name, tol in sc.checks.items():
        inf, l2 = m.values[name]
        t = _tol(name, tol, tol_scale)
        report.checks.append(CheckResult(name, float(inf), float(l2), t, bool(inf <= t)))
    report.elapsed = time.perf_counter() - start
    return report


def convergence_study(sc: Scenario, levels: int, tol_scale: float = 1.0) -> Report:
    """Run the scenario at ``h, h/2, ...`` and estimate orders of each check."""
    if levels < 3:
        raise ScenarioError("study levels: expected an integer >= 3")
    start = time.perf_counter()
    prepare(sc)
    study = sc.section("study")
    lo = float(study.get("order_min", ORDER_MIN))
    hi = float(study.get("order_max", ORDER_MAX))
    names = list(sc.checks)
    per_level = []
    hs = []
    for level in range(levels):
        m = measure(sc, level)
        per_level.append(m.values)
        hs.append(sc.grid(level).spacing[0])
    echo = sc.echo()
    echo["levels"] = levels
    echo["order_min"] = lo
    echo["order_max"] = hi
    report = Report(echo)
    report.columns["level"] = [float(k) for k in range(levels)]
    report.columns["h"] = [float(h) for h in hs]
    for name in names:
        infs = [float(v[name][0]) for v in per_level]
        report.columns[name] = infs
        orders = observed_orders(infs)
        t = _tol(name, sc.checks[name], tol_scale)
        numeric = [o for o in orders if not isinstance(o, str)]
        note = ""
        if all(o == "exact" for o in orders):
            ok = True
            note = "exact"
        elif any(b > a for a, b in zip(infs[:-1], infs[1:])):
            ok = False
            note = "non-monotone"
        else:
            ok = len(numeric) == len(orders) and all(lo <= o <= hi for o in numeric)
            if not ok:
                note = "order out of range"
        if infs[-1] > t:
            ok = False
            note = note or "finest level above tolerance"
        report.checks.append(
            CheckResult(name, infs[-1], float(per_level[-1][name][1]), t, ok, orders, note)
        )
    report.elapsed = time.perf_counter() - start
    return report
