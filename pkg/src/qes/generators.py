"""Construction inputs and the per-axis closed forms derived from them.

A generating set fixes the shape of the ratio ``phi = psi1/psi0`` (a sum or a
product of one-variable functions), the separation constants ``lambda_i``
and the gap ``epsilon``.  From it we derive, per axis,

* the integrand of the particular solution, ``f_i'``,
* the derivative of the characteristic coordinate, ``chi_i'``,
* a closed-form ``chi_i`` for monomials,

and the lambda values that cancel the poles of ``f_i'`` at zeros of
``phi_i'``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import expr as ex
from .errors import (
    ConstraintViolated, DegeneratePhi, InconsistentZeros, LambdaSumNonzero, MultivariatePhi,
    NonintegrableSingularity, NonpositiveEpsilon, NonsimpleZero, UnknownZeros,
)
from .expr import Expression
from .quadrature import integrate_many

LAMBDA_SUM_TOL = 1e-12
MAX_ROOT_DEGREE = 16
REAL_ROOT_TOL = 1e-9


class Case(enum.Enum):
    SUM = "sum"
    PRODUCT = "product"


def default_variables(n: int) -> list:
    if n <= 3:
        return ["x", "y", "z"][:n]
    return [f"x{i + 1}" for i in range(n)]


@dataclass(frozen=True)
class GeneratingSet:
    case: Case
    phi: tuple
    lambdas: tuple
    epsilon: float
    variables: tuple

    @property
    def n(self) -> int:
        return len(self.phi)

    @classmethod
    def from_sources(cls, case, sources: Sequence[str], lambdas, epsilon, variables=None):
        """Parse one phi source per axis.  ``lambdas`` may be "auto"."""
        case = Case(case) if not isinstance(case, Case) else case
        variables = tuple(variables or default_variables(len(sources)))
        phi = tuple(ex.parse(src, variables) for src in sources)
        if isinstance(lambdas, str):
            if lambdas != "auto":
                raise ValueError(f"lambdas must be numbers or 'auto', got {lambdas!r}")
            provisional = cls(case, phi, tuple(0.0 for _ in phi), float(epsilon), variables)
            lambdas = regularize_lambdas(provisional)
        return cls(case, phi, tuple(float(v) for v in lambdas), float(epsilon), variables)

    def with_lambdas(self, lambdas) -> "GeneratingSet":
        return GeneratingSet(self.case, self.phi, tuple(float(v) for v in lambdas), self.epsilon, self.variables)


@dataclass(frozen=True)
class AxisClosedForms:
    f_prime: Expression
    chi_prime: Expression
    chi: Optional[Expression]
    anchor: float
    f_closed: Optional[Expression] = None  # antiderivative of f_prime, zero at anchor
    zeros: tuple = ()  # real zeros of phi' (removable points of f_prime)
    poles: tuple = ()  # zeros of phi' that remain poles of f_prime
    variable: str = "x"
    f_prime_derivative: Expression = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate(gs: GeneratingSet) -> None:
    total = math.fsum(gs.lambdas)
    if len(gs.lambdas) != gs.n or len(gs.variables) != gs.n:
        raise ValueError("phi, lambdas and variables must all have length n")
    if gs.n < 2:
        raise ValueError("dimension must be at least 2")
    if abs(total) > LAMBDA_SUM_TOL:
        raise LambdaSumNonzero(total)
    if not gs.epsilon > 0:
        raise NonpositiveEpsilon(gs.epsilon)
    for i, phi in enumerate(gs.phi):
        extra = ex.free_variables(phi) - {gs.variables[i]}
        if extra:
            raise MultivariatePhi(i, extra)


def _derivatives(gs: GeneratingSet, i: int):
    x = gs.variables[i]
    d1 = ex.differentiate(gs.phi[i], x)
    d2 = ex.differentiate(d1, x)
    return d1, d2


def _is_identically_zero(e: Expression, var: str) -> bool:
    if e == ex.ZERO:
        return True
    poly = ex.as_polynomial(e, var)
    if poly is not None:
        return not np.any(poly)
    probe = np.linspace(-2.7, 3.1, 17)
    values = ex.evaluate(e, {var: probe}, strict=False)
    return bool(np.all(np.broadcast_to(values, probe.shape) == 0))


def f_prime(gs: GeneratingSet, i: int) -> Expression:
    """Integrand of the axis-i particular solution, as an exact quotient.

    Sum case: (phi'' + 2 eps phi + lambda) / (2 phi').
    Product case: (phi'' + (2 eps / n + lambda) phi) / (2 phi').
    """
    d1, d2 = _derivatives(gs, i)
    if _is_identically_zero(d1, gs.variables[i]):
        raise DegeneratePhi(i)
    lam = ex.Const(gs.lambdas[i])
    if gs.case is Case.SUM:
        numerator = d2 + ex.Const(2.0 * gs.epsilon) * gs.phi[i] + lam
    else:
        numerator = d2 + ex.Const(2.0 * gs.epsilon / gs.n + gs.lambdas[i]) * gs.phi[i]
    return ex.simplify(ex.simplify(numerator) / ex.simplify(ex.Const(2.0) * d1))


def _monomial(poly):
    if poly is None:
        return None
    nz = np.flatnonzero(poly)
    if nz.size != 1 or nz[0] == 0:
        return None
    return float(poly[nz[0]]), int(nz[0])


def chi(gs: GeneratingSet, i: int, anchor: Optional[float] = None) -> AxisClosedForms:
    """Closed forms for axis i: f', chi' and (for monomial phi) chi itself."""
    x = gs.variables[i]
    d1, _ = _derivatives(gs, i)
    fp = f_prime(gs, i)
    if gs.case is Case.SUM:
        chi_prime = ex.Const(1.0) / d1
    else:
        chi_prime = gs.phi[i] / d1

    closed = None
    mono = _monomial(ex.as_polynomial(gs.phi[i], x))
    if mono is not None:
        c, k = mono
        X = ex.Var(x)
        if gs.case is Case.PRODUCT:
            closed = ex.Const(1.0 / (2 * k)) * ex.Pow(X, 2)
        elif k == 1:
            closed = ex.Const(1.0 / c) * X
        elif k == 2:
            closed = ex.Const(1.0 / (2 * c)) * ex.Unary("ln", X)
        else:
            closed = ex.Const(1.0 / (c * k * (2 - k))) * ex.Pow(X, 2 - k)
        closed = ex.simplify(closed)

    zeros = ()
    poly_d1 = ex.as_polynomial(d1, x)
    if poly_d1 is not None:
        zeros = tuple(sorted(set(real_roots(poly_d1))))
    poles = tuple(z for z in zeros if is_pole(fp, x, z))
    if anchor is None:
        anchor = default_anchor(poles)
    f_closed = closed_antiderivative(fp, x, anchor)
    return AxisClosedForms(
        f_prime=fp, chi_prime=ex.simplify(chi_prime), chi=closed, anchor=float(anchor),
        f_closed=f_closed, zeros=zeros, poles=poles, variable=x,
        f_prime_derivative=ex.differentiate(fp, x),
    )


def default_anchor(poles: Sequence[float]) -> float:
    """0 unless it is a pole of f'; then 0.5*(1+|nearest pole|), stepped off further poles."""
    def hits(a):
        return any(abs(a - p) <= 1e-9 * (1 + abs(p)) for p in poles)

    if not hits(0.0):
        return 0.0
    nearest = min(poles, key=abs)
    anchor = 0.5 * (1.0 + abs(nearest))
    while hits(anchor):
        anchor += 0.5
    return anchor


# ---------------------------------------------------------------------------
# roots and lambda regularisation
# ---------------------------------------------------------------------------

def companion_roots(coeffs) -> np.ndarray:
    """All complex roots of an ascending-coefficient polynomial (companion eigenvalues)."""
    p = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    degree = p.size - 1
    if degree < 1:
        return np.zeros(0, dtype=complex)
    if degree > MAX_ROOT_DEGREE:
        raise ValueError(f"root finding limited to degree {MAX_ROOT_DEGREE}, got {degree}")
    companion = np.zeros((degree, degree))
    companion[1:, :-1] = np.eye(degree - 1)
    companion[:, -1] = -p[:-1] / p[-1]
    return np.linalg.eigvals(companion)


def real_roots(coeffs, imag_tol=REAL_ROOT_TOL) -> list:
    """Sorted real roots, repeated roots listed once per multiplicity."""
    eig = companion_roots(coeffs)
    keep = np.abs(eig.imag) <= imag_tol * (1 + np.abs(eig))
    return [0.0 if abs(z) < 1e-14 else float(z) for z in sorted(eig.real[keep])]


def regularize_lambdas(gs: GeneratingSet, zeros: Optional[Mapping[int, Sequence[float]]] = None) -> list:
    """Choose lambda_i so that f_i' has no pole at any simple real zero of phi_i'.

    Axes whose phi' has no real zero are free; they absorb the remaining
    slack of sum(lambda) = 0 in equal shares.  ``zeros`` supplies real zeros
    for axes whose phi' is not a polynomial.
    """
    zeros = dict(zeros or {})
    forced = {}
    for i in range(gs.n):
        x = gs.variables[i]
        d1, d2 = _derivatives(gs, i)
        if _is_identically_zero(d1, x):
            raise DegeneratePhi(i)
        if i in zeros:
            axis_zeros = [float(z) for z in zeros[i]]
        else:
            poly = ex.as_polynomial(d1, x)
            if poly is None:
                raise UnknownZeros(i)
            # a double root may come back as a pair with a tiny imaginary part
            for z in real_roots(poly, imag_tol=1e-6):
                if abs(ex.evaluate(d2, {x: z})) <= 1e-6 * (1 + abs(z)):
                    raise NonsimpleZero(i, z)
            axis_zeros = real_roots(poly)
        demanded = []
        for k, z in enumerate(axis_zeros):
            if k and abs(z - axis_zeros[k - 1]) <= 1e-7 * (1 + abs(z)):
                raise NonsimpleZero(i, z)
            second = ex.evaluate(d2, {x: z})
            if abs(second) <= 1e-9:
                raise NonsimpleZero(i, z)
            phi_z = ex.evaluate(gs.phi[i], {x: z})
            if gs.case is Case.SUM:
                demanded.append(-(second + 2.0 * gs.epsilon * phi_z))
            else:
                if abs(phi_z) <= 1e-12:
                    raise InconsistentZeros(i, [z])
                demanded.append(-second / phi_z - 2.0 * gs.epsilon / gs.n)
        if demanded:
            ref = demanded[0]
            if any(abs(d - ref) > 1e-9 * (1 + abs(ref)) for d in demanded):
                raise InconsistentZeros(i, demanded)
            forced[i] = ref
    free = [i for i in range(gs.n) if i not in forced]
    slack = -math.fsum(forced.values())
    if not free:
        if abs(slack) > LAMBDA_SUM_TOL:
            raise ConstraintViolated(-slack)
        lambdas = [forced[i] for i in range(gs.n)]
    else:
        share = slack / len(free) + 0.0  # no negative zeros
        lambdas = [forced.get(i, share) for i in range(gs.n)]
    validate(gs.with_lambdas(lambdas))
    return lambdas


# ---------------------------------------------------------------------------
# removable singularities and antiderivatives
# ---------------------------------------------------------------------------

def regularized_evaluate(e: Expression, point: Mapping[str, object]):
    """Evaluate, replacing values at removable singularities by a symmetric limit.

    Where direct evaluation is not finite, the value is (e(p - h) + e(p + h))/2
    with every coordinate shifted by h = 1e-6 (1 + |x|).  Points where the two
    sides disagree (a genuine pole) stay nan.
    """
    names = sorted(point)
    arrays = np.broadcast_arrays(*[np.asarray(point[k], dtype=float) for k in names]) if names else []
    shape = arrays[0].shape if arrays else ()
    value = np.broadcast_to(np.asarray(ex.evaluate(e, point, strict=False), dtype=float), shape).copy()
    bad = ~np.isfinite(value)
    if not bad.any():
        return float(value) if value.ndim == 0 else value
    sub = [a[bad] for a in arrays]
    minus = {k: a - 1e-6 * (1 + np.abs(a)) for k, a in zip(names, sub)}
    plus = {k: a + 1e-6 * (1 + np.abs(a)) for k, a in zip(names, sub)}
    lo = np.asarray(ex.evaluate(e, minus, strict=False), dtype=float)
    hi = np.asarray(ex.evaluate(e, plus, strict=False), dtype=float)
    avg = 0.5 * (lo + hi)
    with np.errstate(all="ignore"):
        agree = np.isfinite(avg) & (np.abs(hi - lo) <= 1e-3 * (1 + np.abs(avg)))
    value[bad] = np.where(agree, avg, np.nan)
    return float(value) if value.ndim == 0 else value


def is_pole(e: Expression, var: str, z: float) -> bool:
    value = regularized_evaluate(e, {var: np.array([z])})
    return not np.isfinite(value[0])


def antiderivative(e: Expression, anchor: float, x: float) -> float:
    """Integral of a one-variable expression from ``anchor`` to ``x``."""
    return float(antiderivative_many(e, anchor, np.array([x]))[0])


def antiderivative_many(e: Expression, anchor: float, xs) -> np.ndarray:
    names = sorted(ex.free_variables(e))
    if len(names) > 1:
        raise ValueError(f"antiderivative needs a one-variable integrand, got {names}")
    xs = np.asarray(xs, dtype=float)
    if not names:
        return float(ex.evaluate(e, {})) * (xs - anchor)
    var = names[0]

    def integrand(t):
        return regularized_evaluate(e, {var: t})

    flat = xs.ravel()
    unique, inverse = np.unique(flat, return_inverse=True)
    values, _ = integrate_many(integrand, np.full(unique.shape, float(anchor)), unique)
    return values[inverse].reshape(xs.shape)


def closed_antiderivative(fp: Expression, var: str, anchor: float) -> Optional[Expression]:
    """Polynomial antiderivative of f' when f' reduces to a polynomial, else None.

    Handles quotients P/Q whose division leaves no remainder, which covers
    monomial generating functions once lambda has been regularised.
    """
    r = ex.as_rational(fp, var)
    if r is None:
        return None
    num, den = r
    if not np.any(num):
        return ex.ZERO
    # np.polydiv wants descending coefficients
    q, rem = np.polydiv(num[::-1], den[::-1])
    if np.any(np.abs(rem) > 1e-12 * max(1.0, np.max(np.abs(num)))):
        return None
    q = q[::-1]
    q = np.where(np.abs(q) <= 1e-13 * max(1.0, np.max(np.abs(q))), 0.0, q)
    integral = np.concatenate([[0.0], q / np.arange(1, q.size + 1)])
    integral[0] = -np.polynomial.polynomial.polyval(anchor, integral)
    return ex.polynomial(integral, var)
