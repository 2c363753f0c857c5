"""Numerical checks that a constructed model really has the two promised states.

The master-equation and tie checks use the exact symbolic derivatives; the
finite-difference residual samples the closed-form states on the grid and
applies the discrete Laplacian, so it shares no code path with them.  The
spectral check diagonalises the grid Hamiltonian and projects the sampled
states onto eigenvalue windows around 0 and epsilon.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .expr import evaluate
from .errors import EmptyWindow, MissingLevel, NoConvergence, QESError
from .hamiltonian import DECAY_THRESHOLD, Grid, GridSpec, discretize
from .model import TIE_TOL, QESModel, sample_points, tie_orthogonality
from .spectral import lowest_eigenpairs, subspace_overlap

log = logging.getLogger(__name__)


@dataclass
class Settings:
    """Thresholds and solver knobs for ``full_report``."""

    samples: int = 200
    k: int = 8
    tol: float = 1e-10
    seed: int = 0
    master_tol: float = 1e-9
    tie_tol: float = TIE_TOL
    decay_min: float = DECAY_THRESHOLD
    fd_tol: float = 5e-2
    two_grid: bool = True
    ratio_band: tuple = (3.0, 5.0)
    orth_tol: float = 1e-4
    level_tol: float = 5e-2
    overlap_min: float = 0.99
    window: Optional[float] = None  # eigenvalue window half-width; None picks one


@dataclass
class VerificationReport:
    masterEqResidual: Optional[float] = None
    tieOrthogonalityResidual: Optional[float] = None
    fdResidual0: Optional[float] = None
    fdResidual1: Optional[float] = None
    orthogonality01: Optional[float] = None
    boundaryDecay: Optional[float] = None
    nodeless0: Optional[bool] = None
    spectralE0: Optional[float] = None
    spectralE1: Optional[float] = None
    overlap0: Optional[float] = None
    overlap1: Optional[float] = None
    verdict: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["status"] in ("pass", "n/a") for v in self.verdict.values())

    @property
    def failed_checks(self) -> list:
        return [name for name, v in self.verdict.items() if v["status"] == "fail"]

    def record(self, name, status, value=None, threshold=None, note=None):
        entry = {"status": status, "value": value, "threshold": threshold}
        if note:
            entry["note"] = note
        self.verdict[name] = entry

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


# ---------------------------------------------------------------------------
# individual checks
# ---------------------------------------------------------------------------

def default_samples(model: QESModel, count: int = 200):
    """Halton points in the model box, off the removable points of f'."""
    return sample_points(model.box, count, exclude=model.singular_loci)


def check_master_equation(model: QESModel, samples) -> float:
    """max |2 grad F . grad phi - Lap phi - 2 eps phi| / (1 + |2 eps phi|)."""
    grad_F = model.grad_F(samples)
    grad_phi = model.grad_phi(samples)
    dot = sum(np.asarray(a) * np.asarray(b) for a, b in zip(grad_F, grad_phi))
    source = 2.0 * model.epsilon * np.asarray(model.phi(samples))
    residual = np.abs(2.0 * dot - np.asarray(model.laplacian_phi(samples)) - source)
    residual = np.atleast_1d(residual / (1.0 + np.abs(source)))
    if model.allow_singular_tie:
        residual = residual[np.isfinite(residual)]
    if residual.size == 0:
        return 0.0
    return float(np.max(residual))


def check_tie_orthogonality(model: QESModel, samples) -> float:
    violation, _ = tie_orthogonality(model, samples)
    return violation


def check_separability(model: QESModel, samples, h: float = 1e-3) -> float:
    """max over samples and axis pairs of |d^2 V / dx_i dx_j| by central differences."""
    coords = [np.asarray(c, dtype=float) for c in samples]
    worst = 0.0
    for i in range(model.n):
        for j in range(i + 1, model.n):
            total = 0.0
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                shifted = list(coords)
                shifted[i] = coords[i] + si * h
                shifted[j] = coords[j] + sj * h
                total = total + si * sj * np.asarray(model.potential(shifted))
            mixed = np.abs(total) / (4.0 * h * h)
            mixed = mixed[np.isfinite(mixed)] if np.ndim(mixed) else mixed
            if np.size(mixed):
                worst = max(worst, float(np.max(mixed)))
    return worst


def _grid_laplacian(values: np.ndarray, spacing) -> np.ndarray:
    """Second-order Laplacian of a full-grid array, evaluated at interior nodes."""
    n = values.ndim
    inner = tuple(slice(1, -1) for _ in range(n))
    total = np.zeros(tuple(s - 2 for s in values.shape))
    for i, h in enumerate(spacing):
        up = list(inner)
        down = list(inner)
        up[i] = slice(2, None)
        down[i] = slice(None, -2)
        total += (values[tuple(up)] - 2.0 * values[inner] + values[tuple(down)]) / h ** 2
    return total


def check_fd_residual(model: QESModel, grid: Grid, state: int) -> float:
    """||(-1/2 Lap_h + V) psi - E psi||_inf / ||psi||_inf over interior nodes.

    The stencil uses the sampled closed-form state on the whole grid, so the
    boundary ring contributes its true (tiny) values rather than zeros.
    """
    if state not in (0, 1):
        raise ValueError("state must be 0 or 1")
    fn = model.psi0 if state == 0 else model.psi1
    energy = model.E0 if state == 0 else model.E1
    mesh = grid.open_mesh(interior=False)
    psi = np.broadcast_to(np.asarray(fn(mesh), dtype=float), grid.counts)
    potential = np.broadcast_to(np.asarray(model.potential(grid.open_mesh()), dtype=float), grid.shape)
    inner = psi[tuple(slice(1, -1) for _ in range(grid.n))]
    residual = -0.5 * _grid_laplacian(psi, grid.spacing) + (potential - energy) * inner
    scale = np.max(np.abs(inner))
    if not scale > 0:
        raise ValueError("sampled state vanishes on the grid interior")
    return float(np.max(np.abs(residual)) / scale)


def refine(grid: Grid) -> Grid:
    """Same box with about half the spacing.

    Odd counts refine to nested grids (N -> 2N - 1).  Even counts go to 2N so
    the centre line, where singular ties live, stays off the grid.
    """
    counts = tuple(2 * N - 1 if N % 2 else 2 * N for N in grid.counts)
    return Grid(GridSpec(grid.spec.half_extents, counts))


def check_orthogonality(model: QESModel, grid: Grid) -> float:
    """|<psi0, psi1>| / (||psi0|| ||psi1||) by grid quadrature."""
    psi0 = grid.sample(model.psi0)
    psi1 = grid.sample(model.psi1)
    denom = np.linalg.norm(psi0) * np.linalg.norm(psi1)
    if not denom > 0:
        raise ValueError("a sampled state vanishes on the grid")
    return float(abs(psi0 @ psi1) / denom)


def check_normalizability(model: QESModel, grid: Grid) -> float:
    """min over the box boundary of F minus its smallest value on the grid.

    For nonsingular ties whose minimum sits on the grid this is
    min_boundary F - F(anchor); it stays meaningful for singular ties, where
    F(anchor) itself may be infinite.
    """
    minus_log = -np.broadcast_to(np.asarray(model.log_psi0(grid.open_mesh(interior=False))), grid.counts)
    mask = grid.boundary_mask()
    finite = minus_log[np.isfinite(minus_log)]
    if finite.size == 0:
        return -math.inf
    reference = float(np.min(finite))
    boundary = minus_log[mask]
    return float(np.min(boundary) - reference)


def check_nodeless(model: QESModel, grid: Grid) -> Optional[bool]:
    """True iff sampled psi0 > 0 on every interior node; None for singular ties.

    The sign test runs on ln|psi0| so that exp(-F) underflowing to 0.0 far
    out in the box is not mistaken for a node.
    """
    if model.allow_singular_tie and not model.tie.is_zero:
        with np.errstate(all="ignore"):
            tie = grid.sample(lambda p: evaluate(model.tie.expr, dict(zip(model.variables, p)), strict=False))
        if not np.all(np.isfinite(tie)):
            return None
    with np.errstate(all="ignore"):
        log_psi = grid.sample(model.log_psi0)
        sign = grid.sample(model.psi0) if model.tie_weight is not None else np.ones(1)
    return bool(np.all(np.isfinite(log_psi)) and np.all(sign >= 0))


@dataclass
class SpectralResult:
    spectralE0: float
    spectralE1: float
    overlap0: float
    overlap1: float
    values: list
    level0: int  # number of distinct computed levels below E0
    level1: int
    window: float
    residual: float


def window_half_width(tol: float) -> float:
    """Eigenvalue window around 0 and epsilon; never narrower than 0.05."""
    return max(5.0 * tol, 0.05)


def spectral_verify(model: QESModel, grid: Grid, k: int, tol: float, seed: int = 0,
                    operator=None, window: Optional[float] = None) -> SpectralResult:
    """Lowest k grid eigenpairs compared with the levels 0 and epsilon.

    Raises MissingLevel when no computed value lies within the window of a
    known level.
    """
    A = operator if operator is not None else discretize(model, grid)
    pairs = lowest_eigenpairs(A, k, tol=tol, seed=seed)
    values = np.array([p.value for p in pairs])
    half = window if window is not None else window_half_width(tol)
    found = []
    for level in (model.E0, model.E1):
        near = np.abs(values - level)
        if near.min() > half:
            raise MissingLevel(level)
        found.append(float(values[np.argmin(near)]))
    overlaps = []
    for fn, level in ((model.psi0, model.E0), (model.psi1, model.E1)):
        try:
            overlaps.append(subspace_overlap(grid.sample(fn), pairs, (level - half, level + half)))
        except EmptyWindow:
            raise MissingLevel(level) from None
    # grid levels split by less than the window count as one physical level
    level_index = [int(np.sum(np.diff(values[values < e - half]) > half)) + int(np.any(values < e - half))
                   for e in found]
    return SpectralResult(found[0], found[1], overlaps[0], overlaps[1], values.tolist(),
                          level_index[0], level_index[1], half, max(p.residual for p in pairs))


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------

def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def full_report(model: QESModel, grid: Grid, settings: Settings = None) -> VerificationReport:
    """Run every check in order, skipping the costly ones after a structural failure.

    Order: master equation, tie orthogonality, normalizability, FD
    residuals (with orthogonality and nodeless), spectral.  Check failures
    and numerical errors are recorded, never raised.
    """
    s = settings or Settings()
    report = VerificationReport()
    samples = default_samples(model, s.samples)

    def skip(*names, note="earlier structural check failed"):
        for name in names:
            report.record(name, "skipped", note=note)

    later = ["tieOrthogonality", "normalizability", "fdResidual0", "fdResidual1",
             "orthogonality01", "nodeless0", "spectral"]

    value = check_master_equation(model, samples)
    report.masterEqResidual = value
    report.record("masterEquation", _status(value <= s.master_tol), value, s.master_tol)
    if value > s.master_tol:
        skip(*later)
        return report

    value = check_tie_orthogonality(model, samples)
    report.tieOrthogonalityResidual = value
    report.record("tieOrthogonality", _status(value <= s.tie_tol), value, s.tie_tol)
    if value > s.tie_tol:
        skip(*later[1:])
        return report

    value = check_normalizability(model, grid)
    report.boundaryDecay = value if math.isfinite(value) else None
    report.record("normalizability", _status(value >= s.decay_min), value if math.isfinite(value) else None,
                  s.decay_min)
    if not value >= s.decay_min:
        skip(*later[2:], note="psi0 is not normalizable on this box")
        return report

    fine = refine(grid) if s.two_grid else None
    for state in (0, 1):
        name = f"fdResidual{state}"
        try:
            value = check_fd_residual(model, grid, state)
        except (QESError, ValueError) as err:
            report.record(name, "fail", note=str(err))
            continue
        setattr(report, name, value)
        report.record(name, _status(value <= s.fd_tol), value, s.fd_tol)
        if fine is not None:
            try:
                finer = check_fd_residual(model, fine, state)
            except (QESError, ValueError) as err:
                report.record(f"fdRatio{state}", "fail", note=str(err))
                continue
            ratio = value / finer if finer > 0 else math.inf
            report.extras[f"fdResidual{state}Fine"] = finer
            report.extras[f"fdRatio{state}"] = ratio if math.isfinite(ratio) else None
            lo, hi = s.ratio_band
            report.record(f"fdRatio{state}", _status(lo <= ratio <= hi),
                          ratio if math.isfinite(ratio) else None, list(s.ratio_band))

    value = check_orthogonality(model, grid)
    report.orthogonality01 = value
    report.record("orthogonality01", _status(value <= s.orth_tol), value, s.orth_tol)

    nodeless = check_nodeless(model, grid)
    report.nodeless0 = nodeless
    if nodeless is None:
        report.record("nodeless0", "n/a", note="singular tie: psi0 has nodes by construction")
    else:
        report.record("nodeless0", _status(nodeless), nodeless, True)

    try:
        result = spectral_verify(model, grid, s.k, s.tol, seed=s.seed, window=s.window)
    except (MissingLevel, NoConvergence) as err:
        report.record("spectral", "fail", note=str(err))
        return report
    report.spectralE0 = result.spectralE0
    report.spectralE1 = result.spectralE1
    report.overlap0 = result.overlap0
    report.overlap1 = result.overlap1
    report.extras.update(levels=result.values, levelIndexE0=result.level0, levelIndexE1=result.level1,
                         window=result.window, maxEigenResidual=result.residual)
    report.record("spectralE0", _status(abs(result.spectralE0 - model.E0) <= s.level_tol),
                  result.spectralE0, s.level_tol)
    report.record("spectralE1", _status(abs(result.spectralE1 - model.E1) <= s.level_tol),
                  result.spectralE1, s.level_tol)
    report.record("overlap0", _status(result.overlap0 >= s.overlap_min), result.overlap0, s.overlap_min)
    report.record("overlap1", _status(result.overlap1 >= s.overlap_min), result.overlap1, s.overlap_min)
    if nodeless:
        lowest = min(result.values)
        report.record("groundIsLowest", _status(result.spectralE0 == lowest), lowest,
                      note="nodeless psi0 must be the ground state")
    return report
