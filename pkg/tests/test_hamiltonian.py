import io
import math
import warnings

import numpy as np
import pytest

from qes.errors import DimensionMismatch, OverflowingGrid, SingularPotential
from qes.hamiltonian import (
    DECAY_THRESHOLD, GridSpec, SparseOperator, boundary_decay, build_grid, discretize, kinetic, laplacian_1d,
)

from conftest import ex1_model, singular_model


def test_grid_is_exactly_symmetric():
    g = build_grid(GridSpec.uniform(2, 7.0, 201))
    for a in g.axes:
        np.testing.assert_array_equal(a, -a[::-1])
        assert a[0] == -7.0 and a[-1] == 7.0
    assert g.shape == (199, 199) and g.m == 199 ** 2


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec((1.0,), (2,))
    with pytest.raises(ValueError):
        GridSpec((1.0, -1.0), (5, 5))
    with pytest.raises(OverflowingGrid):
        build_grid(GridSpec.uniform(3, 1.0, 1400))


def test_node_order_is_c_order_last_axis_fastest():
    g = build_grid(GridSpec((1.0, 2.0), (5, 7)))
    xs, ys = g.interior_axes
    assert g.point(0) == (xs[0], ys[0])
    assert g.point(1) == (xs[0], ys[1])
    assert g.point(len(ys)) == (xs[1], ys[0])
    sampled = g.sample(lambda p: p[0] * 10 + p[1])
    assert sampled[1] == xs[0] * 10 + ys[1]


def test_1d_laplacian_spectrum_closed_form():
    m, h = 40, 0.1
    values = np.linalg.eigvalsh(laplacian_1d(m, h).toarray())
    j = np.arange(1, m + 1)
    np.testing.assert_allclose(values, (1 - np.cos(j * np.pi / (m + 1))) / h ** 2, rtol=0, atol=1e-12)


def test_kinetic_is_kronecker_sum():
    g = build_grid(GridSpec((1.0, 1.5), (6, 7)))
    K = kinetic(g).toarray()
    Tx = laplacian_1d(g.shape[0], g.spacing[0]).toarray()
    Ty = laplacian_1d(g.shape[1], g.spacing[1]).toarray()
    expected = np.kron(Tx, np.eye(g.shape[1])) + np.kron(np.eye(g.shape[0]), Ty)
    np.testing.assert_allclose(K, expected, atol=1e-12)
    np.testing.assert_array_equal(K, K.T)


def test_discretize_adds_potential_on_diagonal():
    m = ex1_model()
    g = build_grid(GridSpec.uniform(2, 7.0, 21))
    A = discretize(m, g)
    diag = A.matrix.diagonal() - kinetic(g).diagonal()
    np.testing.assert_allclose(diag, g.sample(m.potential), atol=1e-12)
    assert A.norm_bound() >= np.max(np.abs(np.linalg.eigvalsh(A.dense()))) - 1e-9


def test_matvec_checks_dimension():
    A = discretize(ex1_model(), build_grid(GridSpec.uniform(2, 7.0, 11)))
    with pytest.raises(DimensionMismatch):
        A.matvec(np.ones(5))
    np.testing.assert_allclose(A @ np.ones(A.m), A.matrix @ np.ones(A.m))


def test_singular_potential_on_grid_line():
    # odd grid puts nodes on x = 0 where the tie gradient blows up
    with pytest.raises(SingularPotential):
        discretize(singular_model(), build_grid(GridSpec.uniform(2, 8.0, 21)))


def test_truncation_warning_and_decay():
    m = ex1_model(L=3.0)
    g = build_grid(GridSpec.uniform(2, 3.0, 21))
    assert boundary_decay(m, g) == pytest.approx(0.5 * 9.0)
    with pytest.warns(RuntimeWarning, match="Dirichlet"):
        discretize(m, g)
    g7 = build_grid(GridSpec.uniform(2, 7.0, 21))
    assert boundary_decay(m, g7) > DECAY_THRESHOLD
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        discretize(ex1_model(), g7)


def test_triplet_export():
    A = SparseOperator(__import__("scipy.sparse", fromlist=["csr_matrix"]).csr_matrix(
        np.array([[2.0, -1.0], [-1.0, 3.0]])))
    out = io.StringIO()
    A.to_triplets(out)
    assert out.getvalue().splitlines() == ["0 0 2.0", "0 1 -1.0", "1 0 -1.0", "1 1 3.0"]
