import numpy as np
import pytest

from qes import expr as ex
from qes.errors import PhiWithoutNode, SingularTie, TieNotOrthogonal
from qes.generators import GeneratingSet
from qes.model import TieFunction, build_model, sample_points
from qes.verification import check_separability

from conftest import ex1_model, ex2_model, random_points, singular_model


def printed_V_ex1(x, y, beta, eps):
    # tie f(u) = beta u^2 with u = xy
    u = x * y
    fp, fpp = 2 * beta * u, 2 * beta
    return 0.5 * (fp ** 2 - fpp + eps ** 2 / 4) * (x ** 2 + y ** 2) + eps * u * fp - eps / 2


def printed_V_ex2(x, y, z, alpha, eps):
    g = 2 * x ** 2 - y ** 2 - z ** 2
    return ((eps ** 2 / 18 - 16 * alpha) * x ** 2 + (eps ** 2 / 18 - 4 * alpha) * (y ** 2 + z ** 2)
            + 4 * alpha * g ** 2 * (2 * alpha * (4 * x ** 2 + y ** 2 + z ** 2) + eps / 3) - eps / 2)


def rational_model(anchors=None):
    # phi' = 1 + x^2 never vanishes, f' is rational: F has no closed form here
    gs = GeneratingSet.from_sources("sum", ["x + x^3/3", "-y^2/2"], "auto", 1.0)
    return build_model(gs, None, [3, 3], anchors=anchors)


def test_example1_values():
    m = ex1_model(beta=0.5)
    p = [np.array(1.0), np.array(1.0)]
    assert m.F(p) == pytest.approx(1.5, abs=1e-14)
    assert m.grad_F(p) == pytest.approx([2.0, 2.0], abs=1e-14)
    assert m.potential(p) == pytest.approx(2.0, abs=1e-13)
    assert m.E0 == 0.0 and m.E1 == 2.0


def test_example1_without_tie_is_the_oscillator():
    m = ex1_model()
    assert m.potential([0.0, 0.0]) == -1.0
    assert m.psi0([0.0, 0.0]) == 1.0
    x, y = random_points(2, 50, 5.0)
    np.testing.assert_allclose(m.potential([x, y]), 0.5 * (x ** 2 + y ** 2) - 1.0, atol=1e-12)
    np.testing.assert_allclose(m.psi1([x, y]), 0.5 * (x ** 2 - y ** 2) * np.exp(-(x ** 2 + y ** 2) / 2),
                               atol=1e-14)


@pytest.mark.parametrize("beta, eps", [(0.5, 2.0), (0.1, 1.0), (1.3, 3.5)])
def test_example1_matches_printed_potential(beta, eps):
    m = ex1_model(beta=beta, epsilon=eps)
    x, y = random_points(2, 100, 3.0, seed=1)
    v = m.potential([x, y])
    np.testing.assert_allclose(v, printed_V_ex1(x, y, beta, eps), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("alpha, eps", [(0.02, 3.0), (0.5, 1.0)])
def test_example2_matches_printed_potential(alpha, eps):
    m = ex2_model(alpha=alpha, epsilon=eps)
    x, y, z = random_points(3, 100, 3.0, seed=2)
    np.testing.assert_allclose(m.potential([x, y, z]), printed_V_ex2(x, y, z, alpha, eps), rtol=1e-10,
                               atol=1e-10)


def test_example2_phase_function():
    m = ex2_model(alpha=0.01)
    assert m.F([1.0, 0.0, 0.0]) == pytest.approx(0.5 + 0.04, abs=1e-14)
    assert m.potential([0.0, 0.0, 0.0]) == pytest.approx(-1.5, abs=1e-14)


def test_singular_tie_gives_shifted_oscillator():
    m = singular_model()
    x, y = random_points(2, 100, 4.0, seed=3)
    np.testing.assert_allclose(m.potential([x, y]), 0.5 * (x ** 2 + y ** 2) - 3.0, atol=1e-10)
    np.testing.assert_allclose(m.psi0([x, y]), x * y * np.exp(-(x ** 2 + y ** 2) / 2), rtol=1e-12,
                               atol=1e-300)
    assert ex.to_string(m.tie_weight) == "x*y"


def test_anchor_shift_only_moves_F_by_a_constant():
    base, shifted = rational_model(), rational_model(anchors=[0.7, -1.1])
    pts = sample_points(base.box, 100)
    np.testing.assert_allclose(shifted.potential(pts), base.potential(pts), rtol=1e-9, atol=1e-9)
    diff = np.asarray(shifted.F(pts)) - np.asarray(base.F(pts))
    assert np.ptp(diff) <= 1e-9


def _fd_gradient(fn, pts, i, h=1e-5):
    up = list(pts)
    down = list(pts)
    up[i] = pts[i] + h
    down[i] = pts[i] - h
    return (np.asarray(fn(up)) - np.asarray(fn(down))) / (2 * h)


@pytest.mark.parametrize("make", [lambda: ex1_model(beta=0.5), lambda: ex2_model(alpha=0.02),
                                  rational_model, singular_model])
def test_symbolic_gradient_matches_finite_differences(make):
    m = make()
    pts = random_points(m.n, 100, 2.5, seed=4)
    if m.allow_singular_tie:
        pts = [np.abs(c) + 0.2 for c in pts]  # F = -ln(xy) is real for xy > 0
    for fn, grad in ((m.F, m.grad_F), (m.phi, m.grad_phi)):
        exact = grad(pts)
        for i in range(m.n):
            numeric = _fd_gradient(fn, pts, i)
            scale = np.maximum(1.0, np.abs(exact[i]))
            assert np.max(np.abs(numeric - exact[i]) / scale) <= 1e-6


def test_laplacian_matches_finite_differences():
    m = ex1_model(beta=0.5)
    pts = random_points(2, 100, 2.0, seed=5)
    numeric = sum(_fd_gradient(lambda p, i=i: m.grad_F(p)[i], pts, i) for i in range(2))
    exact = m.laplacian_F(pts)
    assert np.max(np.abs(numeric - exact) / np.maximum(1.0, np.abs(exact))) <= 1e-6


@pytest.mark.parametrize("make", [ex1_model, ex2_model, rational_model])
def test_no_tie_means_separable_potential(make):
    m = make()
    assert check_separability(m, sample_points(m.box, 100)) <= 1e-6


def test_tie_makes_potential_nonseparable():
    m = ex1_model(beta=0.5)
    assert check_separability(m, sample_points(m.box, 100)) > 1.0


def test_tie_must_be_orthogonal():
    gs = GeneratingSet.from_sources("sum", ["x^2/2", "-y^2/2"], "auto", 2.0)
    with pytest.raises(TieNotOrthogonal):
        build_model(gs, TieFunction.parse("x^2", gs.variables), [5, 5])


def test_singular_tie_needs_flag():
    gs = GeneratingSet.from_sources("sum", ["x^2/2", "-y^2/2"], "auto", 2.0)
    with pytest.raises(SingularTie):
        build_model(gs, TieFunction.parse("-ln(x*y)", gs.variables), [5, 5])


def test_phi_without_node_rejected():
    gs = GeneratingSet.from_sources("sum", ["x + 10", "y"], "auto", 1.0)
    with pytest.raises(PhiWithoutNode):
        build_model(gs, None, [2, 2])


def test_open_mesh_evaluation_broadcasts():
    m = ex1_model(beta=0.5)
    x = np.linspace(-1, 1, 5).reshape(5, 1)
    y = np.linspace(-2, 2, 3).reshape(1, 3)
    v = m.potential([x, y])
    assert v.shape == (5, 3)
    assert v[2, 1] == pytest.approx(-1.0)
