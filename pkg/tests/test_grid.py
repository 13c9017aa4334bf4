import numpy as np
import pytest

from cosserat.grid import ParameterGrid, field_norms, node_norms


def test_grid_validation():
    with pytest.raises(ValueError):
        ParameterGrid((2,), (0.1,))
    with pytest.raises(ValueError):
        ParameterGrid((5, 5, 5, 5), (0.1,) * 4)
    with pytest.raises(ValueError):
        ParameterGrid((5,), (0.0,))
    with pytest.raises(ValueError):
        ParameterGrid((5, 5), (0.1,))


def test_coordinates_and_refine():
    g = ParameterGrid((3, 5), (0.5, 0.25), (1.0, -1.0))
    assert g.coordinates.shape == (3, 5, 2)
    assert np.allclose(g.coordinates[-1, -1], [2.0, 0.0])
    f = g.refine()
    assert f.extents == (5, 9)
    assert np.array_equal(f.coordinates[f.refinement_index(0)], f.coordinates)
    assert np.allclose(g.refine().refine().coordinates[g.refinement_index(2)], g.coordinates)


def test_boundary_flags():
    g = ParameterGrid.uniform(2, 4)
    flags = g.boundary_flags
    assert flags.sum() == 16 - 4
    assert not flags[1, 1]


def test_weights_integrate_polynomials():
    g = ParameterGrid.uniform(3, 9, length=2.0)
    assert np.isclose(g.weights.sum(), 8.0)
    x = g.coordinates
    # trapezoid rule is exact for multilinear functions
    assert np.isclose(g.integrate(x[..., 0] * x[..., 1] * x[..., 2]), 8.0)


def test_diff_exact_on_quadratics():
    g = ParameterGrid((7, 6), (0.3, 0.2), (0.5, 1.0))
    x, y = g.coordinates[..., 0], g.coordinates[..., 1]
    f = 2 * x * x - 3 * x * y + y * y + 4
    d = g.gradient(f)
    assert np.allclose(d[..., 0], 4 * x - 3 * y, atol=1e-12)
    assert np.allclose(d[..., 1], -3 * x + 2 * y, atol=1e-12)


def test_constants_differentiate_to_exact_zero():
    g = ParameterGrid.uniform(2, 5)
    f = np.full(g.shape + (3,), np.pi)
    assert np.all(g.gradient(f) == 0.0)


def test_diff_order_two_everywhere():
    errs = []
    for n in (9, 17, 33):
        g = ParameterGrid.uniform(1, n)
        x = g.axis(0)
        errs.append(np.max(np.abs(g.diff(np.sin(3 * x), 0) - 3 * np.cos(3 * x))))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all((orders > 1.8) & (orders < 2.2))


def test_divergence_sums_slots():
    g = ParameterGrid.uniform(2, 5)
    x = g.coordinates
    f = np.stack([x[..., 0] ** 2, x[..., 1] * 3], axis=-1)
    assert np.allclose(g.divergence(f), 2 * x[..., 0] + 3, atol=1e-12)


def test_shape_mismatch_rejected():
    g = ParameterGrid.uniform(2, 5)
    with pytest.raises(ValueError):
        g.gradient(np.zeros((4, 5)))


def test_norms():
    g = ParameterGrid.uniform(1, 3)
    f = np.array([[3.0, 4.0], [0.0, 0.0], [0.0, 1.0]])
    assert np.allclose(node_norms(f, g), [5.0, 0.0, 1.0])
    inf, l2 = field_norms(f, g)
    assert inf == 5.0
    assert np.isclose(l2, np.sqrt(0.25 * 25 + 0.25 * 1))
