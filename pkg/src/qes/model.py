"""Assembled QES model: phase function F, potential V and the two known states.

``F = sum_i int_{anchor_i}^{x_i} f_i' + tie(x)`` where the tie function is any
solution of ``(grad tie, grad phi) = 0``.  With ``E0 = 0``:

    V    = (|grad F|^2 - lap F) / 2
    psi0 = exp(-F)
    psi1 = phi * exp(-F),   E1 = epsilon

All evaluators accept a point given as a sequence of n coordinates, each a
float or an array; arrays broadcast, so an open mesh evaluates on a grid
while the per-axis pieces are only computed on the 1-D axis coordinates.
"""

from __future__ import annotations

import math
from functools import cached_property
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from . import expr as ex
from .errors import (
    NonintegrableSingularity, PhiWithoutNode, SingularF, SingularTie, TieNotOrthogonal,
)
from .expr import Expression
from .generators import (
    AxisClosedForms, Case, GeneratingSet, antiderivative_many, chi, regularized_evaluate, validate,
)

TIE_TOL = 1e-9


@dataclass(frozen=True)
class TieFunction:
    expr: Expression
    grad: tuple
    hessian_diag: tuple
    variables: tuple

    @classmethod
    def from_expression(cls, e: Expression, variables: Sequence[str]) -> "TieFunction":
        variables = tuple(variables)
        unknown = ex.free_variables(e) - set(variables)
        if unknown:
            raise ValueError(f"tie function uses undeclared variables {sorted(unknown)}")
        e = ex.simplify(e)
        grad = tuple(ex.differentiate(e, v) for v in variables)
        hess = tuple(ex.differentiate(g, v) for g, v in zip(grad, variables))
        return cls(e, grad, hess, variables)

    @classmethod
    def parse(cls, source: Optional[str], variables: Sequence[str]) -> "TieFunction":
        if source is None or source.strip().lower() in ("", "none", "0"):
            return cls.zero(variables)
        return cls.from_expression(ex.parse(source, variables), variables)

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "TieFunction":
        return cls.from_expression(ex.ZERO, variables)

    @property
    def is_zero(self) -> bool:
        return self.expr == ex.ZERO


def compose_tie(outer: Expression, axes: Sequence[AxisClosedForms], variables: Sequence[str],
                arg_names: Optional[Sequence[str]] = None) -> TieFunction:
    """Tie function outer(u_1, ..., u_{n-1}) with u_j = chi_1 - chi_{j+1}.

    Every axis needs a closed-form chi.  The result is expressed in the
    Cartesian variables, ready for ``build_model``.
    """
    n = len(axes)
    arg_names = list(arg_names or [f"u{j + 1}" for j in range(n - 1)])
    if any(a.chi is None for a in axes):
        raise ValueError("compose_tie needs a closed-form chi on every axis")
    mapping = {arg_names[j]: axes[0].chi - axes[j + 1].chi for j in range(n - 1)}
    return TieFunction.from_expression(ex.substitute(outer, mapping), variables)


def _exp_rewrite(e: Expression) -> Expression:
    """Expression equal to exp(e) with exp(ln u) collapsed to u.

    Used for singular ties such as -ln(x*y): exp(-tie) becomes x*y, which is
    defined on the whole box (its analytic continuation).
    """
    if isinstance(e, ex.Unary) and e.op == "ln":
        return e.arg
    if isinstance(e, ex.Unary) and e.op == "neg":
        return ex.Const(1.0) / _exp_rewrite(e.arg)
    if isinstance(e, ex.Binary) and e.op == "+":
        return _exp_rewrite(e.left) * _exp_rewrite(e.right)
    if isinstance(e, ex.Binary) and e.op == "-":
        return _exp_rewrite(e.left) / _exp_rewrite(e.right)
    if isinstance(e, ex.Binary) and e.op == "*" and isinstance(e.left, ex.Const) \
            and isinstance(e.right, ex.Unary) and e.right.op == "ln" and float(e.left.value).is_integer():
        return ex.Pow(e.right.arg, int(e.left.value))
    if isinstance(e, ex.Const):
        return ex.Const(math.exp(e.value))
    return ex.Unary("exp", e)


def _coords(point, n):
    coords = [np.asarray(c, dtype=float) for c in point]
    if len(coords) != n:
        raise ValueError(f"point needs {n} coordinates, got {len(coords)}")
    return coords


def _out(value, shape):
    value = np.broadcast_to(np.asarray(value, dtype=float), shape)
    return float(value) if value.ndim == 0 else np.array(value)


@dataclass(frozen=True, eq=False)
class QESModel:
    gs: GeneratingSet
    tie: TieFunction
    axes: tuple
    box: tuple
    allow_singular_tie: bool = False
    tie_violation: float = 0.0
    tie_weight: Optional[Expression] = field(default=None, repr=False)

    E0 = 0.0

    @property
    def n(self) -> int:
        return self.gs.n

    @property
    def epsilon(self) -> float:
        return self.gs.epsilon

    @property
    def E1(self) -> float:
        return self.E0 + self.gs.epsilon

    @property
    def variables(self) -> tuple:
        return self.gs.variables

    @property
    def anchor_point(self) -> tuple:
        return tuple(a.anchor for a in self.axes)

    @property
    def singular_loci(self) -> tuple:
        """Per-axis coordinates where f' needs the removable-singularity rule."""
        return tuple(a.zeros for a in self.axes)

    # -- pieces ---------------------------------------------------------------

    def _shape(self, coords):
        return np.broadcast_shapes(*[c.shape for c in coords])

    def _env(self, coords):
        return dict(zip(self.variables, coords))

    def _tie_eval(self, e, coords):
        if self.allow_singular_tie:
            # singular ties keep their poles: inf/nan there, no smoothing
            with np.errstate(all="ignore"):
                return ex.evaluate(e, self._env(coords), strict=False)
        return ex.evaluate(e, self._env(coords))

    def _axis_eval(self, e, i, x):
        return regularized_evaluate(e, {self.variables[i]: x})

    def _axis_F(self, i, x):
        axis = self.axes[i]
        if axis.f_closed is not None:
            return ex.evaluate(axis.f_closed, {axis.variable: x})
        return antiderivative_many(axis.f_prime, axis.anchor, x)

    @cached_property
    def _phi_derivatives(self):
        out = []
        for phi, v in zip(self.gs.phi, self.variables):
            d1 = ex.differentiate(phi, v)
            out.append((d1, ex.differentiate(d1, v)))
        return out

    def _phi_parts(self, coords):
        values, first, second = [], [], []
        for i, c in enumerate(coords):
            phi = self.gs.phi[i]
            v = self.variables[i]
            d1, d2 = self._phi_derivatives[i]
            values.append(ex.evaluate(phi, {v: c}, strict=False))
            first.append(ex.evaluate(d1, {v: c}, strict=False))
            second.append(ex.evaluate(d2, {v: c}, strict=False))
        return values, first, second

    # -- phi ------------------------------------------------------------------

    def phi(self, point):
        coords = _coords(point, self.n)
        values, _, _ = self._phi_parts(coords)
        total = sum(values) if self.gs.case is Case.SUM else math.prod(values)
        return _out(total, self._shape(coords))

    def grad_phi(self, point):
        coords = _coords(point, self.n)
        shape = self._shape(coords)
        values, first, _ = self._phi_parts(coords)
        if self.gs.case is Case.SUM:
            return [_out(d, shape) for d in first]
        out = []
        for i in range(self.n):
            others = math.prod(values[j] for j in range(self.n) if j != i)
            out.append(_out(first[i] * others, shape))
        return out

    def laplacian_phi(self, point):
        coords = _coords(point, self.n)
        values, _, second = self._phi_parts(coords)
        if self.gs.case is Case.SUM:
            return _out(sum(second), self._shape(coords))
        total = 0.0
        for i in range(self.n):
            total = total + second[i] * math.prod(values[j] for j in range(self.n) if j != i)
        return _out(total, self._shape(coords))

    # -- F and its derivatives ------------------------------------------------

    def separable_F(self, point):
        coords = _coords(point, self.n)
        total = sum(self._axis_F(i, c) for i, c in enumerate(coords))
        return _out(total, self._shape(coords))

    def F(self, point):
        coords = _coords(point, self.n)
        total = self.separable_F(coords) + self._tie_eval(self.tie.expr, coords)
        return _out(total, self._shape(coords))

    def grad_F(self, point):
        coords = _coords(point, self.n)
        shape = self._shape(coords)
        return [
            _out(self._axis_eval(self.axes[i].f_prime, i, c) + self._tie_eval(self.tie.grad[i], coords), shape)
            for i, c in enumerate(coords)
        ]

    def laplacian_F(self, point):
        coords = _coords(point, self.n)
        total = 0.0
        for i, c in enumerate(coords):
            total = total + self._axis_eval(self.axes[i].f_prime_derivative, i, c)
            total = total + self._tie_eval(self.tie.hessian_diag[i], coords)
        return _out(total, self._shape(coords))

    def potential(self, point):
        coords = _coords(point, self.n)
        grad = self.grad_F(coords)
        squared = sum(np.square(g) for g in grad)
        return _out(self.E0 + 0.5 * (squared - self.laplacian_F(coords)), self._shape(coords))

    # -- states ---------------------------------------------------------------

    def log_psi0(self, point):
        """ln|psi0|; equals -F for nonsingular ties."""
        coords = _coords(point, self.n)
        if self.tie_weight is None:
            return _out(-self.F(coords), self._shape(coords))
        weight = regularized_evaluate(self.tie_weight, self._env(coords))
        with np.errstate(divide="ignore"):
            return _out(-self.separable_F(coords) + np.log(np.abs(weight)), self._shape(coords))

    def psi0(self, point):
        coords = _coords(point, self.n)
        if self.tie_weight is None:
            return _out(np.exp(-self.F(coords)), self._shape(coords))
        weight = regularized_evaluate(self.tie_weight, self._env(coords))
        return _out(np.exp(-self.separable_F(coords)) * weight, self._shape(coords))

    def psi1(self, point):
        coords = _coords(point, self.n)
        return _out(self.phi(coords) * self.psi0(coords), self._shape(coords))

    def F_expression(self) -> Optional[Expression]:
        """Closed form of F when every axis antiderivative has one."""
        if any(a.f_closed is None for a in self.axes):
            return None
        total = self.tie.expr
        for a in reversed(self.axes):
            total = a.f_closed + total
        return ex.simplify(total)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def sample_points(box, count, exclude=None, skip=1):
    """Deterministic Halton points in the box, as a list of n coordinate arrays.

    Points within 1e-6 of a per-axis excluded coordinate are dropped.
    """
    n = len(box)
    halton = qmc.Halton(d=n, scramble=False)
    if skip:
        halton.fast_forward(skip)
    unit = halton.random(count)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    pts = lo + unit * (hi - lo)
    keep = np.ones(count, dtype=bool)
    for i, loci in enumerate(exclude or ()):
        for z in loci:
            keep &= np.abs(pts[:, i] - z) > 1e-6 * (1 + abs(z))
    pts = pts[keep]
    return [pts[:, i].copy() for i in range(n)]


def _normalize_box(box, n):
    out = []
    for b in box:
        if np.ndim(b) == 0:
            out.append((-float(b), float(b)))
        else:
            lo, hi = b
            out.append((float(lo), float(hi)))
    if len(out) != n:
        raise ValueError(f"domain box needs {n} intervals, got {len(out)}")
    if any(not lo < hi for lo, hi in out):
        raise ValueError("every box interval needs lo < hi")
    return tuple(out)


def tie_orthogonality(model: QESModel, samples):
    """Max of |(grad tie, grad phi)| / (1 + |grad tie||grad phi|) and where it occurs."""
    coords = _coords(samples, model.n)
    shape = model._shape(coords)
    gt = [np.broadcast_to(np.asarray(model._tie_eval(g, coords), dtype=float), shape) for g in model.tie.grad]
    gp = [np.broadcast_to(np.asarray(g, dtype=float), shape) for g in model.grad_phi(coords)]
    dot = sum(a * b for a, b in zip(gt, gp))
    norms = np.sqrt(sum(a * a for a in gt)) * np.sqrt(sum(b * b for b in gp))
    ratio = np.abs(dot) / (1.0 + norms)
    ratio = np.where(np.isfinite(ratio), ratio, -1.0) if model.allow_singular_tie else ratio
    ratio = np.atleast_1d(ratio)
    if ratio.size == 0:
        return 0.0, None
    k = int(np.argmax(ratio))
    where = tuple(float(np.broadcast_to(c, shape).ravel()[k]) for c in coords)
    return max(float(ratio.ravel()[k]), 0.0), where


def build_model(gs: GeneratingSet, tie: Optional[TieFunction], box, *, allow_singular_tie=False,
                anchors=None, check=True, samples=200) -> QESModel:
    """Wire up a model and validate the tie function on the domain box.

    ``box`` is a sequence of n intervals (or half-extents L_i meaning [-L_i, L_i]).
    ``check=False`` skips every validation, which is only useful for
    building deliberately broken models in tests.
    """
    if check:
        validate(gs)
    box = _normalize_box(box, gs.n)
    tie = tie or TieFunction.zero(gs.variables)
    if tuple(tie.variables) != tuple(gs.variables):
        tie = TieFunction.from_expression(tie.expr, gs.variables)
    axes = tuple(chi(gs, i, anchor=None if anchors is None else anchors[i]) for i in range(gs.n))
    weight = ex.simplify(_exp_rewrite(ex.simplify(-tie.expr))) if allow_singular_tie else None
    model = QESModel(gs, tie, axes, box, allow_singular_tie, 0.0, weight)
    if not check:
        return model

    pts = sample_points(box, samples, exclude=model.singular_loci)
    tie_values = np.broadcast_to(
        np.asarray(ex.evaluate(tie.expr, model._env(pts), strict=False), dtype=float), pts[0].shape)
    bad = ~np.isfinite(tie_values)
    if bad.any() and not allow_singular_tie:
        k = int(np.flatnonzero(bad)[0])
        raise SingularTie(tuple(float(p[k]) for p in pts))

    violation, where = tie_orthogonality(model, pts)
    if violation > TIE_TOL:
        raise TieNotOrthogonal(violation, where)

    for i, axis in enumerate(axes):
        if axis.f_closed is not None:
            continue
        try:
            antiderivative_many(axis.f_prime, axis.anchor, np.array(box[i]))
        except NonintegrableSingularity as err:
            raise SingularF(err.location) from None

    corners = np.array(np.meshgrid(*box, indexing="ij")).reshape(gs.n, -1)
    phi_values = np.concatenate([
        np.atleast_1d(model.phi(pts)),
        np.atleast_1d(model.phi(list(corners))),
        np.atleast_1d(model.phi([np.array([0.5 * (lo + hi)]) for lo, hi in box])),
    ])
    phi_values = phi_values[np.isfinite(phi_values)]
    if phi_values.size and (phi_values.min() > 0 or phi_values.max() < 0):
        raise PhiWithoutNode()
    return QESModel(gs, tie, axes, box, allow_singular_tie, violation, weight)
