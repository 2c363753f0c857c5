import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from qes.errors import EmptyWindow, TooLarge
from qes.hamiltonian import GridSpec, build_grid, discretize
from qes.spectral import (
    EigenPair, LanczosSolver, clusters, dense_eigen_oracle, dense_eigenpairs, lcg_vector, lowest_eigenpairs,
    subspace_overlap,
)

from conftest import ex1_model, ex2_model


def test_dense_oracle_2x2():
    np.testing.assert_allclose(dense_eigen_oracle(sp.csr_matrix(np.diag([2.0, 3.0]))), [2.0, 3.0])


def test_dense_oracle_refuses_large():
    with pytest.raises(TooLarge):
        dense_eigen_oracle(sp.identity(3001, format="csr"))


def test_lcg_is_deterministic_and_bounded():
    a, b = lcg_vector(1000, 7), lcg_vector(1000, 7)
    np.testing.assert_array_equal(a, b)
    assert np.all(a >= -0.5) and np.all(a < 0.5)
    assert not np.array_equal(a, lcg_vector(1000, 8))


def _operators():
    yield "ex1 beta=0.5 30x30", discretize(ex1_model(beta=0.5, L=4.0), build_grid(GridSpec.uniform(2, 4.0, 32)))
    yield "ex1 oscillator 20x20", discretize(ex1_model(L=5.0), build_grid(GridSpec.uniform(2, 5.0, 22)))
    yield "ex2 alpha=0.02 9^3", discretize(ex2_model(alpha=0.02, L=4.0), build_grid(GridSpec.uniform(3, 4.0, 11)))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@pytest.mark.parametrize("degree", [1, 6])
def test_lanczos_agrees_with_dense_oracle(degree):
    for name, A in _operators():
        assert A.m <= 900, name
        exact = dense_eigen_oracle(A)
        for k in (1, 8):
            pairs = lowest_eigenpairs(A, k, tol=1e-12, degree=degree)
            values = np.array([p.value for p in pairs])
            np.testing.assert_allclose(values, exact[:k], rtol=0, atol=1e-10, err_msg=name)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_eigenpair_invariants():
    A = discretize(ex1_model(L=5.0), build_grid(GridSpec.uniform(2, 5.0, 26)))
    solver = LanczosSolver(A, 6, tol=1e-10, seed=3)
    pairs = solver.run()
    values = [p.value for p in pairs]
    assert values == sorted(values)
    V = np.column_stack([p.vector for p in pairs])
    assert np.max(np.abs(V.T @ V - np.eye(6))) <= 1e-8
    for p in pairs:
        assert abs(np.linalg.norm(p.vector) - 1) <= 1e-12
        assert p.residual <= 1e-10 * solver.norm
        assert p.residual == pytest.approx(np.linalg.norm(A.matrix @ p.vector - p.value * p.vector), abs=1e-12)
    # degenerate oscillator levels are all found
    assert len(clusters(values, rel=0.05)) == 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_bitwise_determinism():
    A = discretize(ex1_model(beta=0.5, L=4.0), build_grid(GridSpec.uniform(2, 4.0, 40)))
    a = [p.value for p in lowest_eigenpairs(A, 4, tol=1e-10, seed=5)]
    b = [p.value for p in lowest_eigenpairs(A, 4, tol=1e-10, seed=5)]
    assert a == b


def test_history_is_logged():
    A = sp.diags(np.arange(1.0, 201.0), format="csr")
    solver = LanczosSolver(A, 3, tol=1e-10)
    pairs = solver.run()
    assert [p.value for p in pairs] == pytest.approx([1.0, 2.0, 3.0], abs=1e-10)
    # the first pass refines the lowest Ritz value downwards
    first = solver.history[:3]
    assert first == sorted(first, reverse=True) and first[-1] == pytest.approx(1.0, abs=1e-8)


def test_parameter_checks():
    A = sp.identity(10, format="csr")
    with pytest.raises(ValueError):
        LanczosSolver(A, 0)
    with pytest.raises(ValueError):
        LanczosSolver(A, 11)
    with pytest.raises(ValueError):
        LanczosSolver(A, 2, tol=1e-13)


def test_dense_eigenpairs_returns_vectors():
    values, vectors = dense_eigenpairs(sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]])))
    np.testing.assert_allclose(values, [1.0, 3.0])
    assert abs(vectors[:, 0] @ np.array([1.0, -1.0])) == pytest.approx(np.sqrt(2))


# -- subspace overlap ------------------------------------------------------------

def _basis_pairs(values):
    eye = np.eye(len(values))
    return [EigenPair(v, eye[:, i], 0.0) for i, v in enumerate(values)]


def test_overlap_of_member_and_orthogonal_vectors():
    pairs = _basis_pairs([0.0, 1.0, 1.0, 2.0])
    assert subspace_overlap(np.eye(4)[:, 1], pairs, (0.9, 1.1)) == pytest.approx(1.0)
    assert subspace_overlap(np.eye(4)[:, 0], pairs, (0.9, 1.1)) == 0.0
    assert subspace_overlap(np.array([0, 1.0, 1.0, 0]), pairs, (0.9, 1.1)) == pytest.approx(1.0)
    with pytest.raises(EmptyWindow):
        subspace_overlap(np.ones(4), pairs, (5, 6))
    with pytest.raises(ValueError):
        subspace_overlap(np.zeros(4), pairs, (0, 1))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=5, max_size=5).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_overlap_grows_with_the_window(target, a, b):
    pairs = _basis_pairs([0.0, 0.5, 1.0, 1.5, 2.0])
    lo, hi = sorted((a, b))
    inner = (lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo))
    target = np.array(target)
    try:
        small = subspace_overlap(target, pairs, inner)
    except EmptyWindow:
        small = 0.0
    try:
        large = subspace_overlap(target, pairs, (lo, hi))
    except EmptyWindow:
        return
    assert large >= small - 1e-12


def test_clusters():
    assert clusters([2.0, 1.0, 1.0 + 1e-9, 3.0]) == [[1.0, 1.0 + 1e-9], [2.0], [3.0]]
