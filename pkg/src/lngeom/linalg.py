"""Small dense real linear algebra on float64 numpy arrays.

Vectors are 1-D arrays and matrices are 2-D arrays. The constructors
:func:`vector` and :func:`sym_matrix` validate their input and return
read-only copies; the kernels below only check shapes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    InvalidDimensionError,
    NonFiniteError,
    ShapeError,
)

#: |g_n| <= GAIN_ZERO_RTOL * max|g| counts as a zero gain.
GAIN_ZERO_RTOL = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
SYMMETRY_RTOL = 1e-10


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def vector(values) -> np.ndarray:
    """Validated read-only copy of ``values`` as a float64 vector of length >= 2."""
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {v.shape}")
    if v.size < 2:
        raise InvalidDimensionError(f"vector length must be >= 2, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("vector has non-finite entries")
    return _freeze(v)


def sym_matrix(entries, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validated read-only symmetric matrix.

    Entries that are symmetric up to rounding (relative ``rtol``) are
    averaged with their transpose so the result is exactly symmetric.
    """
    m = np.array(entries, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.T).max(initial=0.0) > rtol * scale:
        raise ShapeError("matrix is not symmetric")
    return _freeze(0.5 * (m + m.T))


def _same_length(x: np.ndarray, y: np.ndarray) -> None:
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ShapeError(f"dimension mismatch: {x.shape} vs {y.shape}")


def dot(x, y) -> float:
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    _same_length(x, y)
    return float(np.dot(x, y))


def norm(x) -> float:
    """Euclidean length."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {x.shape}")
    return float(np.linalg.norm(x))


def scale(c: float, x) -> np.ndarray:
    return float(c) * np.asarray(x, dtype=np.float64)


def add(x, y) -> np.ndarray:
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    _same_length(x, y)
    return x + y


def matvec(a, v) -> np.ndarray:
    a, v = np.asarray(a, dtype=np.float64), np.asarray(v, dtype=np.float64)
    if a.ndim != 2 or v.ndim != 1 or a.shape[1] != v.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} matrix by {v.shape} vector")
    return a @ v


def matmul(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def identity(n: int) -> np.ndarray:
    return _freeze(np.eye(n))


def diag(v) -> np.ndarray:
    return _freeze(np.diag(np.asarray(v, dtype=np.float64)))


@lru_cache(maxsize=32)
def _mean_projector(n: int) -> np.ndarray:
    return _freeze(np.eye(n) - np.full((n, n), 1.0 / n))


def mean_projector(n: int) -> np.ndarray:
    """Projector ``I - 1 1^T / n`` onto the zero-mean hyperplane.

    The result is cached per dimension and returned read-only.
    """
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {n!r}")
    return _mean_projector(int(n))


def alpha_projector(alpha) -> np.ndarray:
    """Projector ``I - alpha alpha^T / (alpha^T alpha)`` removing the ``alpha`` direction."""
    alpha = vector(alpha)
    nn = float(np.dot(alpha, alpha))
    if nn == 0.0:
        raise DegenerateInputError("alpha must be nonzero")
    return sym_matrix(np.eye(alpha.size) - np.outer(alpha, alpha) / nn)


def zero_gain_mask(g) -> np.ndarray:
    """Boolean mask of gains treated as zero (relative to the largest gain)."""
    g = np.asarray(g, dtype=np.float64)
    biggest = float(np.abs(g).max(initial=0.0))
    if biggest == 0.0:
        return np.ones(g.shape, dtype=bool)
    return np.abs(g) <= GAIN_ZERO_RTOL * biggest


def reciprocal_gains(g) -> np.ndarray:
    """Elementwise 1/g_n, with 0 where the gain counts as zero."""
    g = np.asarray(g, dtype=np.float64)
    mask = zero_gain_mask(g)
    out = np.zeros_like(g)
    out[~mask] = 1.0 / g[~mask]
    return out


def drazin_inverse_diag(g) -> np.ndarray:
    """Drazin inverse of ``diag(g)``: reciprocals of the nonzero entries, zero elsewhere."""
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1:
        raise ShapeError(f"expected a 1-D gain vector, got shape {g.shape}")
    return diag(reciprocal_gains(g))


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order; column k of ``eigenvectors`` pairs with ``eigenvalues[k]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0
    off_norm: float = 0.0

    def orthonormality_defect(self) -> float:
        v = self.eigenvectors
        return float(np.abs(v.T @ v - np.eye(v.shape[1])).max(initial=0.0))

    def residual(self, a) -> float:
        """Frobenius norm of ``A V - V diag(lambda)``."""
        a = np.asarray(a, dtype=np.float64)
        v = self.eigenvectors
        return frobenius(a @ v - v * self.eigenvalues)


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    # Circle-method tournament: every pair (p, q) meets once per sweep and
    # the pairs of a round are disjoint, so a round is one orthogonal update.
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        if pairs:
            ps, qs = zip(*pairs)
            rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1], *players[1:-1]]
    return tuple(rounds)


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _sign_normalize(vecs: np.ndarray) -> np.ndarray:
    # Make the first component of (near-)maximal magnitude non-negative.
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        mags = np.abs(col)
        idx = int(np.argmax(mags >= mags.max() * (1.0 - 1e-12)))
        if col[idx] < 0:
            out[:, k] = -col
    return out


def symmetric_eigen(
    a,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in round-robin order so
    that the rotations of one round act on disjoint index pairs and can be
    applied together. Iteration stops once the off-diagonal Frobenius norm
    is at most ``tol * ||A||_F``.

    Raises
    ------
    ConvergenceError
        If the tolerance is not met within ``max_sweeps`` sweeps.
    """
    work = np.array(sym_matrix(a))
    n = work.shape[0]
    vecs = np.eye(n)
    if n == 1:
        return EigenDecomposition(work.diagonal().copy(), vecs)

    target = tol * frobenius(work)
    rounds = _round_robin(n)
    sweeps = 0
    off = _off_diagonal_norm(work)
    while off > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError("Jacobi eigensolver did not converge", off, sweeps)
        for p, q in rounds:
            apq = work[p, q]
            app = work[p, p]
            aqq = work[q, q]
            active = apq != 0.0
            safe = np.where(active, apq, 1.0)
            with np.errstate(over="ignore"):
                # a subnormal apq gives theta = inf, hence t = 0
                theta = (aqq - app) / (2.0 * safe)
                t = np.copysign(1.0, theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.hypot(t, 1.0)
            s = t * c

            rp, rq = work[p, :], work[q, :]
            work[p, :] = c[:, None] * rp - s[:, None] * rq
            work[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = work[:, p], work[:, q]
            work[:, p] = cp * c - cq * s
            work[:, q] = cp * s + cq * c
            work[p, q] = 0.0
            work[q, p] = 0.0
            work[p, p] = app - t * apq
            work[q, q] = aqq + t * apq

            vp, vq = vecs[:, p], vecs[:, q]
            vecs[:, p] = vp * c - vq * s
            vecs[:, q] = vp * s + vq * c
        work = 0.5 * (work + work.T)
        sweeps += 1
        off = _off_diagonal_norm(work)

    values = work.diagonal().copy()
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(
        eigenvalues=values[order],
        eigenvectors=_sign_normalize(vecs[:, order]),
        sweeps=sweeps,
        off_norm=off,
    )
