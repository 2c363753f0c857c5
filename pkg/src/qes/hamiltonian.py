"""Finite-difference Hamiltonian -1/2 Lap + V on a tensor grid, Dirichlet walls.

Interior nodes are numbered lexicographically with the last axis fastest,
i.e. numpy C order on the interior array.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, OverflowingGrid, SingularPotential

log = logging.getLogger(__name__)

DECAY_THRESHOLD = math.log(1e10)


@dataclass(frozen=True)
class GridSpec:
    half_extents: tuple
    counts: tuple

    def __post_init__(self):
        if len(self.half_extents) != len(self.counts) or not self.counts:
            raise ValueError("half_extents and counts need the same nonzero length")
        if any(not L > 0 for L in self.half_extents):
            raise ValueError("half extents must be positive")
        if any(int(N) != N or N < 3 for N in self.counts):
            raise ValueError("each axis needs an integer count >= 3 (boundary included)")

    @classmethod
    def uniform(cls, n, L, N) -> "GridSpec":
        return cls(tuple(float(L) for _ in range(n)), tuple(int(N) for _ in range(n)))


class Grid:
    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.n = len(spec.counts)
        self.counts = tuple(int(N) for N in spec.counts)
        self.spacing = tuple(2.0 * L / (N - 1) for L, N in zip(spec.half_extents, self.counts))
        # symmetric by construction: x_{N-1-i} == -x_i and x_0 == -L exactly
        self.axes = tuple(
            L * (2.0 * np.arange(N) - (N - 1)) / (N - 1) for L, N in zip(spec.half_extents, self.counts)
        )
        self.shape = tuple(N - 2 for N in self.counts)
        self.m = math.prod(self.shape)
        if self.m > 2 ** 31:
            raise OverflowingGrid(self.m)
        if min(self.counts) < 8:
            log.debug("grid with fewer than 8 points per axis: %s", self.counts)

    @property
    def interior_axes(self):
        return tuple(a[1:-1] for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    def open_mesh(self, interior=True):
        axes = self.interior_axes if interior else self.axes
        return [a.reshape([-1 if j == i else 1 for j in range(self.n)]) for i, a in enumerate(axes)]

    def point(self, k: int) -> tuple:
        """Coordinates of interior node k."""
        idx = np.unravel_index(k, self.shape)
        return tuple(float(a[i]) for a, i in zip(self.interior_axes, idx))

    def sample(self, fn, interior=True) -> np.ndarray:
        """Evaluate a model-style function on the grid, flattened in node order."""
        mesh = self.open_mesh(interior)
        shape = self.shape if interior else self.counts
        return np.broadcast_to(np.asarray(fn(mesh), dtype=float), shape).ravel().copy()

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.counts, dtype=bool)
        for i in range(self.n):
            index = [slice(None)] * self.n
            index[i] = 0
            mask[tuple(index)] = True
            index[i] = -1
            mask[tuple(index)] = True
        return mask


def build_grid(spec: GridSpec) -> Grid:
    return Grid(spec)


class SparseOperator:
    """Symmetric CSR matrix -1/2 Lap_h + diag(V) on the interior nodes."""

    def __init__(self, matrix: sp.csr_matrix, grid: Grid = None, potential: np.ndarray = None):
        self.matrix = matrix.tocsr()
        self.grid = grid
        self.potential = potential

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self):
        return self.matrix.shape

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.m:
            raise DimensionMismatch(self.m, v.shape[0])
        return self.matrix @ v

    __matmul__ = matvec

    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        return float(np.max(np.asarray(abs(self.matrix).sum(axis=1)).ravel()))

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def to_triplets(self, stream) -> None:
        """Write ``row col value`` lines (0-based, row-major) for inspection."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            stream.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def laplacian_1d(count: int, h: float) -> sp.csr_matrix:
    """-1/2 d^2/dx^2 on ``count`` interior points with Dirichlet ends."""
    main = np.full(count, 1.0 / h ** 2)
    off = np.full(count - 1, -0.5 / h ** 2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def kinetic(grid: Grid) -> sp.csr_matrix:
    """Kronecker sum of the per-axis kinetic operators."""
    eyes = [sp.identity(m, format="csr") for m in grid.shape]
    total = None
    for i, (m, h) in enumerate(zip(grid.shape, grid.spacing)):
        factors = list(eyes)
        factors[i] = laplacian_1d(m, h)
        term = reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)
        total = term if total is None else total + term
    return total.tocsr()


def discretize(model, grid: Grid, potential: np.ndarray = None) -> SparseOperator:
    """Assemble -1/2 Lap_h + V for a model (anything with ``potential(point)``)."""
    if potential is None:
        potential = grid.sample(model.potential)
    bad = ~np.isfinite(potential)
    if bad.any():
        raise SingularPotential(grid.point(int(np.flatnonzero(bad)[0])))
    matrix = kinetic(grid) + sp.diags(potential, 0, format="csr")
    if hasattr(model, "log_psi0"):
        decay = boundary_decay(model, grid)
        if decay < DECAY_THRESHOLD:
            warnings.warn(
                f"psi0 decays only to exp(-{decay:.1f}) of its peak on the box boundary; "
                "Dirichlet truncation may be visible", RuntimeWarning, stacklevel=2)
    return SparseOperator(matrix.tocsr(), grid, potential)


def boundary_decay(model, grid: Grid) -> float:
    """min over the boundary of -ln|psi0| relative to its interior peak."""
    log_psi = np.broadcast_to(model.log_psi0(grid.open_mesh(interior=False)), grid.counts)
    mask = grid.boundary_mask()
    peak = np.max(log_psi[~mask]) if (~mask).any() else np.max(log_psi)
    return float(np.min(peak - log_psi[mask]))
