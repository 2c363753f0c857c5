"""Lowest eigenpairs of symmetric sparse operators.

The iterative solver is a thick-restart Lanczos method with full
reorthogonalisation.  A single Krylov sequence sees only one direction of
an exactly degenerate eigenspace, so the solver locks converged pairs and
restarts from fresh start vectors (deflating the locked ones) until a new
pass finds nothing below the current k-th value.  ``dense_eigen_oracle``
is an independent full diagonalisation for small problems.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyWindow, NoConvergence, TooLarge

log = logging.getLogger(__name__)

MAX_K = 50
DENSE_LIMIT = 3000


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray = field(repr=False)
    residual: float


def lcg_vector(m: int, seed: int) -> np.ndarray:
    """Start vector from a 64-bit linear congruential stream, entries in [-0.5, 0.5)."""
    a, c, mask = 6364136223846793005, 1442695040888963407, (1 << 64) - 1
    state = (seed * 0x9E3779B97F4A7C15 + 1) & mask
    out = np.empty(m)
    for i in range(m):
        state = (a * state + c) & mask
        out[i] = (state >> 11) * (1.0 / (1 << 53)) - 0.5
    return out


def _operator(A):
    if hasattr(A, "matrix"):
        return A.matrix
    return A


def _norm_bound(M) -> float:
    if hasattr(M, "tocsr"):
        return float(np.max(np.asarray(abs(M).sum(axis=1)).ravel()))
    return float(np.max(np.sum(np.abs(M), axis=1)))


def _gershgorin(M):
    """(lower, upper) bounds on the spectrum of a symmetric matrix."""
    if hasattr(M, "tocsr"):
        diag = M.diagonal()
        radius = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(diag)
    else:
        M = np.asarray(M, dtype=float)
        diag = np.diag(M)
        radius = np.sum(np.abs(M), axis=1) - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def _orthogonalize(w, blocks):
    # two rounds of classical Gram-Schmidt against every block
    for _ in range(2):
        for B in blocks:
            if B.shape[1]:
                w -= B @ (B.T @ w)
    return w


class ChebyshevFilter:
    """v -> -T_d((A - c) / e) v, which damps the spectrum on [cut, upper].

    Eigenvalues below ``cut`` map to values below -1, monotonically, so the
    lowest eigenvalues of A stay the lowest of the filtered operator while
    the rest of the spectrum is squeezed into [-1, 1].
    """

    def __init__(self, M, cut, upper, degree):
        self.M = M
        self.c = 0.5 * (upper + cut)
        self.e = 0.5 * (upper - cut)
        self.degree = degree

    def __call__(self, v):
        M, c, e = self.M, self.c, self.e
        previous = v
        current = (M @ v - c * v) / e
        for _ in range(1, self.degree):
            previous, current = current, 2.0 * (M @ current - c * current) / e - previous
        return -current


class LanczosSolver:
    """Single-use solver; holds the Krylov workspace for one run.

    With ``degree > 1`` the Krylov sequence is built from a Chebyshev
    polynomial in A instead of A itself.  Each basis vector then carries
    ``degree`` matrix products but only one reorthogonalisation, which is the
    expensive part for stiff grid operators.  Convergence is always judged
    on the true residual ||A x - theta x|| of the Ritz pairs.
    """

    def __init__(self, A, k, tol=1e-10, seed=0, max_restarts=400, max_passes=24, degree=None):
        self.M = _operator(A)
        self.m = self.M.shape[0]
        if not 1 <= k <= min(self.m, MAX_K):
            raise ValueError(f"k must be in [1, min(m, {MAX_K})], got {k}")
        if tol < 1e-12:
            raise ValueError("tol must be >= 1e-12")
        self.k = k
        self.tol = tol
        self.seed = seed
        self.max_restarts = max_restarts
        self.max_passes = max_passes
        self.norm = _norm_bound(self.M)
        self.lower, self.upper = _gershgorin(self.M)
        self.degree = degree if degree is not None else (1 if self.m <= 4000 else 12)
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        self.history = []  # lowest Ritz value after every restart cycle
        self.matvecs = 0
        self._filter = None

    def _apply(self, v):
        if self._filter is None:
            self.matvecs += 1
            return self.M @ v
        self.matvecs += self.degree
        return self._filter(v)

    def _calibrate(self, v0):
        """Pick the filter cut from the Ritz values of one short Krylov run."""
        steps = min(self.m, 60)
        V = np.zeros((self.m, steps))
        V[:, 0] = v0 / np.linalg.norm(v0)
        for j in range(steps - 1):
            w = _orthogonalize(self.M @ V[:, j], [V[:, : j + 1]])
            self.matvecs += 1
            b = np.linalg.norm(w)
            if b <= 1e-14 * self.norm:
                steps = j + 1
                break
            V[:, j + 1] = w / b
        basis = V[:, :steps]
        theta = np.linalg.eigvalsh(basis.T @ (self.M @ basis))
        self.matvecs += steps
        # Ritz values bound the eigenvalues from above, index by index
        return float(theta[min(2 * self.k + 4, steps - 1)])

    def _thick_restart(self, want, locked, v0):
        """Lowest ``want`` eigenpairs of A deflated by the columns of ``locked``."""
        m = self.m
        free = m - locked.shape[1]
        want = min(want, free)
        p = min(max(4 * want, 60), free)
        keep = min(p - 1, want + (p - want) // 2) if p > want else want
        V = np.zeros((m, p))
        T = np.zeros((p, p))
        threshold = self.tol * self.norm
        stream = self.seed + 7919

        v = _orthogonalize(v0.copy(), [locked])
        V[:, 0] = v / np.linalg.norm(v)
        start = 0
        history = []
        for restart in range(self.max_restarts):
            beta = 0.0
            residual = None
            for j in range(start, p):
                w = self._apply(V[:, j])
                basis = V[:, : j + 1]
                if locked.shape[1]:
                    w -= locked @ (locked.T @ w)
                h = basis.T @ w
                w -= basis @ h
                correction = basis.T @ w
                w -= basis @ correction
                h += correction
                if locked.shape[1]:
                    w -= locked @ (locked.T @ w)
                T[: j + 1, j] = h
                beta = np.linalg.norm(w)
                if beta <= 1e-14 * max(1.0, np.abs(h).max()):
                    # invariant subspace: continue from a fresh direction
                    stream += 1
                    w = _orthogonalize(lcg_vector(m, stream), [locked, V[:, : j + 1]])
                    w /= np.linalg.norm(w)
                    beta = 0.0
                else:
                    w /= beta
                if j + 1 < p:
                    T[j + 1, j] = beta
                    V[:, j + 1] = w
                else:
                    residual = w
            S = 0.5 * (T + T.T)
            theta, Y = np.linalg.eigh(S)
            X = V @ Y[:, :want]
            AX = self.M @ X
            self.matvecs += want
            values = np.einsum("ij,ij->j", X, AX)
            bounds = np.linalg.norm(AX - X * values, axis=0)
            history.append(float(values.min()))
            log.debug("restart %d: lowest Ritz %.12g, worst residual %.3g",
                      restart, values.min(), bounds.max())
            if np.all(bounds <= threshold) or p == free:
                self.history.extend(history)
                order = np.argsort(values)
                return values[order], X[:, order]
            # thick restart: keep the lowest Ritz vectors plus the residual direction
            V[:, :keep] = V @ Y[:, :keep]
            T[:] = 0.0
            T[np.arange(keep), np.arange(keep)] = theta[:keep]
            T[keep, :keep] = beta * Y[-1, :keep]
            V[:, keep] = residual
            V[:, keep + 1:] = 0.0
            start = keep
        raise NoConvergence(self.matvecs)

    def run(self):
        if self.degree > 1:
            cut = self._calibrate(lcg_vector(self.m, self.seed + 104729))
            if cut < self.upper:
                self._filter = ChebyshevFilter(self.M, cut, self.upper, self.degree)
            log.debug("filter cut %.6g, upper %.6g, degree %d", cut, self.upper, self.degree)
        locked = np.zeros((self.m, 0))
        values = np.zeros(0)
        want = self.k
        for npass in range(self.max_passes):
            want = min(want, self.m - locked.shape[1])
            if want == 0:
                break
            theta, vectors = self._thick_restart(want, locked, lcg_vector(self.m, self.seed + npass))
            if values.size >= self.k:
                current_kth = np.sort(values)[self.k - 1]
                slack = 10 * self.tol * self.norm + 1e-12 * (1 + abs(current_kth))
                new = theta < current_kth - slack
            else:
                current_kth = np.inf
                new = np.ones(theta.shape, dtype=bool)
            log.debug("pass %d: %d new values below %.6g", npass, int(new.sum()), current_kth)
            if not new.any():
                break
            # later passes only hunt for missing partners; size them by the last haul
            want = min(self.k, max(2, int(new.sum()))) if npass else self.k
            values = np.concatenate([values, theta[new]])
            locked = np.concatenate([locked, vectors[:, new]], axis=1)
            if locked.shape[1] >= self.m:
                break
        else:
            raise NoConvergence(self.matvecs)

        # Rayleigh-Ritz over the locked basis tidies rounding in near-degenerate sets
        Q, _ = np.linalg.qr(locked)
        AQ = self.M @ Q
        theta, Y = np.linalg.eigh(0.5 * (Q.T @ AQ + (Q.T @ AQ).T))
        order = np.argsort(theta)[: self.k]
        pairs = []
        for j in order:
            vec = Q @ Y[:, j]
            vec /= np.linalg.norm(vec)
            res = float(np.linalg.norm(self.M @ vec - theta[j] * vec))
            pairs.append(EigenPair(float(theta[j]), vec, res))
        return pairs


def lowest_eigenpairs(A, k: int, tol: float = 1e-10, seed: int = 0, degree=None):
    """k lowest eigenpairs, ascending; residuals are <= tol * ||A||_est."""
    return LanczosSolver(A, k, tol=tol, seed=seed, degree=degree).run()


def dense_eigen_oracle(A) -> np.ndarray:
    """All eigenvalues by dense symmetric diagonalisation (m <= 3000)."""
    M = _operator(A)
    m = M.shape[0]
    if m > DENSE_LIMIT:
        raise TooLarge(m)
    dense = M.toarray() if hasattr(M, "toarray") else np.asarray(M, dtype=float)
    return np.linalg.eigvalsh(dense)


def dense_eigenpairs(A):
    M = _operator(A)
    if M.shape[0] > DENSE_LIMIT:
        raise TooLarge(M.shape[0])
    dense = M.toarray() if hasattr(M, "toarray") else np.asarray(M, dtype=float)
    return np.linalg.eigh(dense)


def subspace_overlap(target, pairs, window) -> float:
    """||P target|| / ||target|| with P the projector on eigenvectors in ``window``."""
    lo, hi = window
    target = np.asarray(target, dtype=float)
    norm = np.linalg.norm(target)
    if norm == 0:
        raise ValueError("target must be nonzero")
    inside = [p.vector for p in pairs if lo <= p.value <= hi]
    if not inside:
        raise EmptyWindow(window)
    Q, _ = np.linalg.qr(np.column_stack(inside))
    return float(min(1.0, np.linalg.norm(Q.T @ target) / norm))


def clusters(values, rel=1e-6):
    """Group ascending eigenvalues closer than rel*(1+|value|)."""
    groups = []
    for v in sorted(values):
        if groups and abs(v - groups[-1][-1]) <= rel * (1 + abs(v)):
            groups[-1].append(v)
        else:
            groups.append([v])
    return groups
