import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosserat.grid import ParameterGrid
from cosserat.kinematics import KinematicalState
from cosserat.laws import LAWS, CallableLaw, LinearCosseratLaw, make_law
from cosserat.rigid_motion import rotation_exp
from cosserat.rod import (
    EndCondition,
    RodBoundary,
    SolverError,
    field_error,
    manufactured_loads,
    solve_rod,
    tip_rotation_angle,
)
from cosserat.statics import euclidian_check

seeds = st.integers(0, 2**32 - 1)
LAW = LinearCosseratLaw(lam=1.0, mu=2.0, kappa=0.5, gamma=1.5)


def random_state(grid, rng):
    p = grid.p
    return KinematicalState(
        grid,
        rng.normal(size=grid.shape + (3,)),
        rotation_exp(rng.normal(size=grid.shape + (3,))),
        rng.normal(size=grid.shape + (p, 3)),
        rng.normal(size=grid.shape + (p, 3, 3)),
    )


# ----- constitutive law -------------------------------------------------------


@settings(max_examples=25)
@given(seeds, st.integers(1, 3))
def test_linear_law_is_euclidian(seed, p):
    rng = np.random.default_rng(seed)
    g = ParameterGrid.uniform(p, 3)
    state = random_state(g, rng)
    phi = LAW(state)
    rf, rm = euclidian_check(phi, state)
    assert rf == 0.0
    assert rm < 1e-12 * max(1.0, phi.scale())


def test_law_is_deterministic():
    g = ParameterGrid.uniform(2, 4)
    state = random_state(g, np.random.default_rng(0))
    a, b = LAW(state), LAW(state)
    for name in ("F", "M", "sigma", "mu"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


@pytest.mark.parametrize("p", [1, 2, 3])
def test_reference_state_is_stress_free(p):
    g = ParameterGrid.uniform(p, 4)
    phi = LAW(KinematicalState.reference(g))
    assert phi.scale() == 0.0


def test_law_is_frame_indifferent():
    g = ParameterGrid.uniform(2, 3)
    s = random_state(g, np.random.default_rng(1))
    Q = rotation_exp([0.3, -0.7, 1.1])
    moved = KinematicalState(
        g, s.x @ Q.T + 5.0, Q @ s.e, s.x_d @ Q.T, Q @ s.e_d
    )
    a, b = LAW(s), LAW(moved)
    assert np.allclose(b.sigma, a.sigma @ Q.T, atol=1e-12)
    assert np.allclose(b.mu, Q @ a.mu, atol=1e-12)


def test_node_evaluation_matches_grid():
    g = ParameterGrid.uniform(2, 3)
    s = random_state(g, np.random.default_rng(2))
    phi = LAW(s)
    F, M, sigma, mu = LAW.at_node(g.coordinates[1, 2], s.node((1, 2)))
    assert np.allclose(sigma, phi.sigma[1, 2]) and np.allclose(M, phi.M[1, 2])
    wrapped = CallableLaw(lambda rho, x, e, x_d, e_d: LAW.evaluate(rho, x, e, x_d, e_d))
    assert np.allclose(wrapped(s).mu, phi.mu, atol=0.0)


def test_make_law():
    assert "linear-cosserat" in LAWS
    law = make_law("linear-cosserat", lam=0.0, mu=3.0)
    assert law.mu == 3.0 and law.lam == 0.0
    with pytest.raises(ValueError, match="unknown constitutive law"):
        make_law("neo-hookean")
    with pytest.raises(ValueError):
        make_law("linear-cosserat", gamma=float("inf"))


# ----- rod solver -------------------------------------------------------------

CANTILEVER = LinearCosseratLaw(lam=0.0, mu=10.0, kappa=0.0, gamma=2.0)


def cantilever(couple, n=21):
    g = ParameterGrid.uniform(1, n)
    bc = RodBoundary(EndCondition.fixed(), EndCondition.free(couple=couple))
    return solve_rod(CANTILEVER, bc, g)


def test_zero_load_needs_no_iterations():
    sol = cantilever((0.0, 0.0, 0.0))
    assert sol.converged and sol.iterations == 0
    assert np.all(sol.field.a == 0.0)
    assert np.array_equal(sol.field.r, np.broadcast_to(np.eye(3), (21, 3, 3)))
    # only the initial evaluation; its residual is coordinate round-off
    assert len(sol.trace) == 1 and sol.trace[0]["residual_inf"] < 1e-12


def test_end_couple_bends_into_arc():
    sol = cantilever((0.0, 0.0, 0.5))
    assert sol.converged and sol.residual_norm <= 1e-8
    # uniform curvature c / gamma over unit length
    assert abs(tip_rotation_angle(sol) - 0.25) < 1e-3
    assert np.all(np.diff([t["residual_inf"] for t in sol.trace[1:]]) < 0)


def test_tip_rotation_linear_in_small_couple():
    loads = np.array([1e-3, 2e-3, 3e-3, 4e-3])
    angles = np.array([tip_rotation_angle(cantilever((0.0, 0.0, c))) for c in loads])
    slope = np.sum(angles * loads) / np.sum(loads * loads)
    assert np.max(np.abs(angles - slope * loads) / (slope * loads)) < 0.01
    assert abs(slope - 0.5) < 0.01 * 0.5


def test_manufactured_solution_second_order():
    law = LinearCosseratLaw(lam=1.0, mu=3.0, kappa=1.0, gamma=2.0)

    def translation(s):
        return np.stack([0.05 * np.sin(s), 0.1 * s * s, 0.05 * np.cos(2 * s) - 0.05], axis=-1)

    def rotvec(s):
        return np.stack([0.2 * s, 0.1 * np.sin(s), 0.3 * s * s], axis=-1)

    errs = []
    for n in (9, 17, 33):
        g = ParameterGrid.uniform(1, n)
        chi, f, c = manufactured_loads(law, g, translation, rotvec)
        bc = RodBoundary(
            EndCondition.fixed(chi.a[0], rotvec(g.axis(0)[:1])[0]),
            EndCondition.fixed(chi.a[-1], rotvec(g.axis(0)[-1:])[0]),
        )
        sol = solve_rod(law, bc, g, f, c)
        assert sol.converged and sol.iterations <= 10
        errs.append(field_error(sol.field, chi))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all((orders > 1.7) & (orders < 2.3))


def test_singular_system_raises():
    law = LinearCosseratLaw(lam=0.0, mu=0.0, kappa=0.0, gamma=0.0)
    g = ParameterGrid.uniform(1, 5)
    bc = RodBoundary(EndCondition.fixed(), EndCondition.free())
    with pytest.raises(SolverError, match="singular"):
        solve_rod(law, bc, g, body_force=np.ones((5, 3)))


def test_non_convergence_returns_best_iterate():
    g = ParameterGrid.uniform(1, 21)
    bc = RodBoundary(EndCondition.fixed(), EndCondition.free(couple=(0.0, 0.0, 0.5)))
    sol = solve_rod(CANTILEVER, bc, g, max_iter=1)
    assert not sol.converged
    assert sol.iterations == 1
    assert sol.residual_norm == min(t["residual_inf"] for t in sol.trace)
    assert sol.residual_norm < sol.trace[0]["residual_inf"]


def test_solver_input_validation():
    with pytest.raises(ValueError):
        solve_rod(CANTILEVER, RodBoundary(EndCondition.fixed(), EndCondition.free()), ParameterGrid.uniform(2, 3))
    g = ParameterGrid.uniform(1, 5)
    with pytest.raises(ValueError):
        solve_rod(CANTILEVER, RodBoundary(EndCondition.fixed(), EndCondition.free()), g, body_force=np.ones((4, 3)))
    with pytest.raises(ValueError):
        EndCondition("clamped")
    with pytest.raises(ValueError):
        EndCondition.free(force=(1.0, np.nan, 0.0))
