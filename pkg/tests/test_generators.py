import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qes import expr as ex
from qes.errors import (
    ConstraintViolated, InconsistentZeros, LambdaSumNonzero, MultivariatePhi, NonintegrableSingularity,
    NonpositiveEpsilon, NonsimpleZero, UnknownZeros,
)
from qes.generators import (
    Case, GeneratingSet, antiderivative, chi, companion_roots, default_anchor, f_prime, real_roots,
    regularize_lambdas, validate,
)
from qes.quadrature import integrate, integrate_many


def ex1(lambdas="auto", epsilon=2.0):
    return GeneratingSet.from_sources("sum", ["x^2/2", "-y^2/2"], lambdas, epsilon)


def test_example1_regularization():
    gs = ex1()
    assert gs.lambdas == (-1.0, 1.0)
    assert ex.to_string(chi(gs, 0).f_closed) == "0.5*x^2"
    assert ex.to_string(chi(gs, 1).f_closed) == "0.5*y^2"


def test_example1_chi_is_log():
    gs = ex1()
    assert ex.to_string(chi(gs, 0).chi) == "ln(x)"
    assert ex.to_string(chi(gs, 1).chi) == "-ln(y)"


def test_example2_product_case():
    gs = GeneratingSet.from_sources("product", ["x", "y", "z"], "auto", 3.0)
    assert gs.lambdas == (0.0, 0.0, 0.0)
    assert ex.to_string(f_prime(gs, 0)) == "x"
    assert ex.evaluate(chi(gs, 0).chi, {"x": 3.0}) == 4.5


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-9, 9).filter(bool), min_size=1, max_size=4), st.floats(0.1, 5.0))
def test_quadratic_sources_get_minus_a(coeffs, epsilon):
    # phi_i = a_i x^2/2 needs lambda_i = -a_i; the last axis balances the sum
    a = [float(c) for c in coeffs] + [-float(sum(coeffs))]
    if a[-1] == 0:
        a[-1] = -1.0
        a.append(1.0)
    n = len(a)
    names = [f"x{i + 1}" for i in range(n)] if n > 3 else None
    gs = GeneratingSet.from_sources("sum", [f"{v!r}*{(names or ['x', 'y', 'z'])[i]}^2/2"
                                            for i, v in enumerate(a)], "auto", epsilon, names)
    assert gs.lambdas == tuple(-v for v in a)


@pytest.mark.parametrize("a", [(1.0, 1.0), (2.0, -1.0), (1.0, 2.0, 3.0)])
def test_quadratic_sources_with_nonzero_sum_rejected(a):
    names = ["x", "y", "z"][: len(a)]
    with pytest.raises(ConstraintViolated):
        GeneratingSet.from_sources("sum", [f"{v}*{n}^2/2" for v, n in zip(a, names)], "auto", 1.0)


def test_validation_errors():
    with pytest.raises(LambdaSumNonzero):
        validate(ex1(lambdas=(1.0, 1.0)))
    with pytest.raises(NonpositiveEpsilon):
        validate(ex1(lambdas=(-1.0, 1.0), epsilon=0.0))
    gs = GeneratingSet(Case.SUM, (ex.parse("x*y", ["x", "y"]), ex.parse("y", ["x", "y"])),
                       (0.0, 0.0), 1.0, ("x", "y"))
    with pytest.raises(MultivariatePhi):
        validate(gs)


def test_free_axis_absorbs_slack():
    # phi_1 = x^2/2 pins lambda_1 = -1, phi_2 = y has no critical point
    gs = GeneratingSet.from_sources("sum", ["x^2/2", "y"], "auto", 1.0)
    assert gs.lambdas == (-1.0, 1.0)


def test_inconsistent_zeros():
    # sin has phi'' + 2 eps phi = (2 eps - 1) sin x, which differs between x = pi/2 and -pi/2
    gs = GeneratingSet(Case.SUM, tuple(ex.parse(s, ["x", "y"]) for s in ("sin(x)", "y")), (0.0, 0.0), 2.0,
                       ("x", "y"))
    with pytest.raises(InconsistentZeros):
        regularize_lambdas(gs, zeros={0: [math.pi / 2, -math.pi / 2]})
    with pytest.raises(UnknownZeros):
        regularize_lambdas(gs)


@pytest.mark.parametrize("source", ["x^3/3", "(x-1)^3"])
def test_nonsimple_zero(source):
    with pytest.raises(NonsimpleZero):
        GeneratingSet.from_sources("sum", [source, "-y^2/2"], "auto", 1.0)


def test_default_anchor_avoids_poles():
    assert default_anchor([]) == 0.0
    assert default_anchor([1.0]) == 0.0
    anchor = default_anchor([0.0])
    assert anchor != 0.0 and anchor > 0


def test_companion_roots():
    np.testing.assert_allclose(sorted(companion_roots([-6, 11, -6, 1]).real), [1, 2, 3], atol=1e-12)
    assert real_roots([1, 0, 1]) == []
    assert sorted(real_roots([0, -1, 0, 1])) == pytest.approx([-1, 0, 1], abs=1e-12)


# -- quadrature ----------------------------------------------------------------

def test_sinc_integral_matches_series():
    # int_0^1 sin(x)/x dx = sum (-1)^k / ((2k+1) (2k+1)!)
    series = sum((-1) ** k / ((2 * k + 1) * math.factorial(2 * k + 1)) for k in range(12))
    value, _ = integrate(lambda x: np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x)), 0.0, 1.0)
    assert value == pytest.approx(series, abs=1e-13)


def test_integrate_many_is_vectorised():
    values, errors = integrate_many(np.exp, [0.0, 0.0, 1.0], [1.0, 2.0, 1.0])
    np.testing.assert_allclose(values, [math.e - 1, math.e ** 2 - 1, 0.0], rtol=1e-12)
    assert np.all(errors < 1e-9)


def test_log_integral():
    value, _ = integrate(lambda x: 1 / x, 1.0, 2.0)
    assert value == pytest.approx(math.log(2), rel=1e-13)


def test_pole_is_not_integrable():
    with np.errstate(all="ignore"):
        with pytest.raises(NonintegrableSingularity):
            integrate(lambda x: 1 / x, -1.0, 1.0)


def test_antiderivative_of_removable_singularity():
    e = ex.parse("sin(x)/x", ["x"])
    assert antiderivative(e, 0.0, 1.0) == pytest.approx(0.9460830703671831, abs=1e-12)
