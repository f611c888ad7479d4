"""Geometry of the LayerNorm image.

With bias removed, LayerNorm outputs lie in the set
``{sqrt(N) G u : u . 1 = 0, |u| <= 1}`` where ``G = diag(g)``. For nonzero
gains this is a solid (N-1)-dimensional ellipsoid inside the hyperplane
orthogonal to ``alpha = (1/g_1, ..., 1/g_N)``.

Two routes to the semi-axes are provided. :func:`principal_axes`
diagonalizes ``Pi2 G^-2 Pi2`` (``Pi2`` removes the ``alpha`` direction) and
reads lengths as ``sqrt(N / lambda)``. :func:`semi_axis_lengths_alt`
diagonalizes ``Pi G^2 Pi`` and reads lengths as ``sqrt(N * zeta)``, but it
gives no directions. :func:`brute_force_axes` is an independent sampling
oracle used to cross-check both.

Zero gains
----------
If ``z >= 1`` gains vanish, the image collapses onto the coordinates with
nonzero gain (set S), and there it is no longer confined to a hyperplane.
Its quadratic form is ``D^2 + alpha alpha^T / z``, where ``D`` is the
Drazin inverse of ``G`` and ``alpha = D 1``. The extra rank-one term
appears because the zero-gain coordinates of ``u`` take up the
zero-sum constraint. The body is (N - z)-dimensional, so N - z semi-axes
are returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DegenerateGainError, ResolutionError
from .layernorm import LayerNormParams

#: an eigenvalue counts as zero when |x| <= ZERO_EIG_RTOL * max|spectrum|.
ZERO_EIG_RTOL = 1e-10
#: eigenvectors of Pi G^2 Pi whose overlap with 1-hat reaches this are dropped.
ONES_OVERLAP_MIN = 1.0 - 1e-8
TIE_RTOL = 1e-9

RECIPROCAL_GAIN = "reciprocal-gain"
ZERO_GAIN_SPAN = "zero-gain-span"


@dataclass(frozen=True)
class OrthogonalSubspace:
    """Orthonormal basis (rows) of the directions orthogonal to every
    bias-subtracted LayerNorm output."""

    basis: np.ndarray
    kind: str

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])


@dataclass(frozen=True)
class EllipsoidModel:
    """Center, principal axes (rows, unit length) and semi-axis lengths
    (descending) of the image ellipsoid."""

    center: np.ndarray
    axis_directions: np.ndarray
    semi_axis_lengths: np.ndarray
    orthogonal_direction: np.ndarray
    lambda_spectrum: np.ndarray
    orthogonal_basis: np.ndarray | None = None
    collapsed_directions: tuple[int, ...] = ()
    degenerate_groups: tuple[tuple[int, ...], ...] = ()
    zero_mode_residual: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return any(len(grp) > 1 for grp in self.degenerate_groups)

    def coordinates(self, y) -> np.ndarray:
        """Components of ``y - center`` along the principal axes."""
        return self.axis_directions @ (np.asarray(y, dtype=np.float64) - self.center)

    def normalized_radius_sq(self, y) -> float:
        """Sum of (c_k / s_k)^2; 1 on the surface, < 1 inside."""
        c = self.coordinates(y)
        return float(np.sum((c / self.semi_axis_lengths) ** 2))


def left_nullspace_residual(v, g) -> float:
    """``|v^T (diag(g) - g 1^T / N)|``."""
    g = np.asarray(g, dtype=np.float64)
    n = g.size
    m = np.diag(g) - np.outer(g, np.ones(n)) / n
    return linalg.norm(np.asarray(v, dtype=np.float64) @ m)


def orthogonal_subspace(p: LayerNormParams) -> OrthogonalSubspace:
    """Directions orthogonal to the image of LayerNorm after subtracting the bias.

    For nonzero gains this is the line through the reciprocal gains; with
    zero gains it is spanned by the zero-gain coordinate axes.
    """
    mask = linalg.zero_gain_mask(p.gain)
    if mask.any():
        basis = np.eye(p.n)[mask]
        return OrthogonalSubspace(basis=basis, kind=ZERO_GAIN_SPAN)
    alpha = 1.0 / p.gain
    return OrthogonalSubspace(basis=(alpha / linalg.norm(alpha))[None, :], kind=RECIPROCAL_GAIN)


def _order_axes(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Indices ordering axes by ascending ``values`` (descending length),
    ties broken lexicographically on the eigenvectors."""
    order = list(np.argsort(values, kind="stable"))
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        ref = abs(values[order[i]])
        while j < len(order) and abs(values[order[j]] - values[order[i]]) <= TIE_RTOL * max(ref, 1e-300):
            j += 1
        group = sorted(order[i:j], key=lambda k: tuple(vectors[:, k]))
        out.extend(group)
        i = j
    return np.array(out, dtype=int)


def _tie_groups(lengths: np.ndarray) -> tuple[tuple[int, ...], ...]:
    groups: list[list[int]] = []
    for k, s in enumerate(lengths):
        if groups and abs(lengths[groups[-1][0]] - s) <= TIE_RTOL * lengths[groups[-1][0]]:
            groups[-1].append(k)
        else:
            groups.append([k])
    return tuple(tuple(g) for g in groups)


def axis_matrix(p: LayerNormParams) -> np.ndarray:
    """The symmetric matrix whose nonzero eigenpairs give the principal axes.

    ``Pi2 G^-2 Pi2`` for nonzero gains; ``D^2 + alpha alpha^T / z`` when
    ``z`` gains vanish (see module docstring).
    """
    mask = linalg.zero_gain_mask(p.gain)
    d = linalg.drazin_inverse_diag(p.gain)
    d2 = linalg.matmul(d, d)
    alpha = linalg.reciprocal_gains(p.gain)
    z = int(mask.sum())
    if z == 0:
        pi2 = linalg.alpha_projector(alpha)
        return linalg.sym_matrix(linalg.matmul(linalg.matmul(pi2, d2), pi2))
    return linalg.sym_matrix(d2 + np.outer(alpha, alpha) / z)


def principal_axes(p: LayerNormParams) -> EllipsoidModel:
    """Principal axes and semi-axis lengths ``sqrt(N / lambda)`` of the image."""
    n = p.n
    mask = linalg.zero_gain_mask(p.gain)
    z = int(mask.sum())
    sub = orthogonal_subspace(p)
    m = axis_matrix(p)
    eig = linalg.symmetric_eigen(m)
    values, vectors = eig.eigenvalues, eig.eigenvectors

    if z == 0:
        alpha_hat = sub.basis[0]
        overlaps = np.abs(vectors.T @ alpha_hat)
        drop = [int(np.argmax(overlaps))]
        zero_mode_residual = linalg.norm(linalg.matvec(m, alpha_hat))
    else:
        # the zero-gain block of m is identically zero
        drop = [int(k) for k in np.argsort(values, kind="stable")[:z]]
        zero_mode_residual = float(np.abs(m[mask]).max(initial=0.0))

    keep = np.array([k for k in range(n) if k not in drop], dtype=int)
    kept_vals = values[keep]
    kept_vecs = vectors[:, keep]
    order = _order_axes(kept_vals, kept_vecs)
    kept_vals = kept_vals[order]
    kept_vecs = kept_vecs[:, order]
    lengths = np.sqrt(n / kept_vals) if kept_vals.size else np.zeros(0)

    return EllipsoidModel(
        center=p.bias.copy(),
        axis_directions=kept_vecs.T.copy(),
        semi_axis_lengths=lengths,
        orthogonal_direction=sub.basis[0].copy(),
        lambda_spectrum=kept_vals,
        orthogonal_basis=sub.basis.copy(),
        collapsed_directions=tuple(int(i) for i in np.flatnonzero(mask)),
        degenerate_groups=_tie_groups(lengths),
        zero_mode_residual=zero_mode_residual,
        extras={
            "dropped_eigenvalues": values[drop].tolist(),
            "dropped_are_zero": bool(
                np.all(np.abs(values[drop]) <= ZERO_EIG_RTOL * np.abs(values).max(initial=0.0))
            ),
            "sweeps": eig.sweeps,
        },
    )


def semi_axis_lengths_alt(p: LayerNormParams) -> np.ndarray:
    """Semi-axis lengths ``sqrt(N * zeta)`` from the eigenvalues of ``Pi G^2 Pi``.

    The eigenvector along 1-hat (eigenvalue zero) is discarded, as are the
    extra zero modes when some gains vanish. Lengths are descending.
    """
    n = p.n
    z = int(linalg.zero_gain_mask(p.gain).sum())
    expected = n - 1 if z == 0 else n - z
    pi = linalg.mean_projector(n)
    g2 = linalg.diag(p.gain * p.gain)
    m = linalg.sym_matrix(linalg.matmul(linalg.matmul(pi, g2), pi))
    eig = linalg.symmetric_eigen(m)
    ones_hat = np.ones(n) / math.sqrt(n)
    overlaps = np.abs(eig.eigenvectors.T @ ones_hat)
    candidates = list(range(n))
    best = int(np.argmax(overlaps))
    if overlaps[best] >= ONES_OVERLAP_MIN:
        candidates.remove(best)
    zetas = np.sort(eig.eigenvalues[candidates])[::-1][:expected]
    return np.sqrt(n * np.clip(zetas, 0.0, None))


def quadratic_form(y, p: LayerNormParams) -> float:
    """``sum_n ((y_n - b_n) / g_n)^2``; at most N for every LayerNorm output."""
    if linalg.zero_gain_mask(p.gain).any():
        raise DegenerateGainError(
            "quadratic form needs nonzero gains; check y_n == b_n on zero-gain coordinates instead"
        )
    y = linalg.vector(y)
    if y.size != p.n:
        raise linalg.ShapeError(f"point has length {y.size}, params expect {p.n}")
    w = (y - p.bias) / p.gain
    return float(np.dot(w, w))


def surface_proximity(y, p: LayerNormParams) -> float:
    """Quadratic form divided by N, clipped to [0, 1]; 1 means on the surface."""
    return min(1.0, quadratic_form(y, p) / p.n)


# ---------------------------------------------------------------------------
# sampling oracle
# ---------------------------------------------------------------------------

MIN_SAMPLES = 16
GOLDEN_TOL = 1e-10
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def helmert_basis(n: int) -> np.ndarray:
    """Explicit orthonormal basis (rows) of the hyperplane orthogonal to 1."""
    rows = []
    for k in range(1, n):
        h = np.zeros(n)
        h[:k] = 1.0
        h[k] = -float(k)
        rows.append(h / math.sqrt(k * (k + 1)))
    return np.array(rows)


def _golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _circle_extrema(e1, e2, radius, samples: int):
    """Max and min of ``radius(u)`` on the unit circle spanned by e1, e2.

    ``radius`` must accept a stack of vectors (last axis).

    Returns ``(u_max, u_min, flat)``.
    """
    thetas = np.arange(samples) * (math.pi / samples)
    us = np.cos(thetas)[:, None] * e1 + np.sin(thetas)[:, None] * e2
    r = radius(us)
    if r.max() - r.min() <= 1e-12 * r.max():
        return e1, e2, True

    step = math.pi / samples
    prev, nxt = np.roll(r, 1), np.roll(r, -1)
    maxima = np.flatnonzero((r >= prev) & (r > nxt))
    minima = np.flatnonzero((r <= prev) & (r < nxt))
    if len(maxima) != 1 or len(minima) != 1:
        raise ResolutionError(
            f"expected one maximum and one minimum on the half circle, found "
            f"{len(maxima)} and {len(minima)}; increase samples"
        )

    def at(theta):
        return math.cos(theta) * e1 + math.sin(theta) * e2

    t_max = _golden_max(lambda t: radius(at(t)), thetas[maxima[0]] - step, thetas[maxima[0]] + step)
    t_min = _golden_max(lambda t: -radius(at(t)), thetas[minima[0]] - step, thetas[minima[0]] + step)
    return at(t_max), at(t_min), False


def _sphere_max(basis: np.ndarray, radius, samples: int) -> np.ndarray:
    """Unit vector in span(basis) maximizing ``radius``: grid seed, then
    golden-section line searches along great circles until stable."""
    k = basis.shape[0]
    if k == 3:
        m = max(4, int(math.sqrt(samples / 2)))
        th = (np.arange(m) + 0.5) * (math.pi / m)
        ph = np.arange(2 * m) * (math.pi / m)
        coeffs = np.stack(
            [
                np.outer(np.sin(th), np.cos(ph)).ravel(),
                np.outer(np.sin(th), np.sin(ph)).ravel(),
                np.repeat(np.cos(th), 2 * m),
            ],
            axis=1,
        )
    else:
        eye = np.eye(k)
        pairs = [(eye[i] + s * eye[j]) / math.sqrt(2) for i in range(k) for j in range(i + 1, k) for s in (1, -1)]
        coeffs = np.vstack([eye, *pairs]) if pairs else eye
    cands = coeffs @ basis
    u = cands[int(np.argmax(radius(cands)))]

    grid = np.linspace(-math.pi / 2, math.pi / 2, 64, endpoint=False)
    step = grid[1] - grid[0]
    for _ in range(200):
        start = radius(u)
        for j in range(k):
            w = basis[j] - np.dot(basis[j], u) * u
            wn = np.linalg.norm(w)
            if wn < 1e-8:
                continue
            w /= wn
            vals = radius(np.cos(grid)[:, None] * u + np.sin(grid)[:, None] * w)
            t0 = grid[int(np.argmax(vals))]
            t = _golden_max(lambda s: radius(math.cos(s) * u + math.sin(s) * w), t0 - step, t0 + step)
            cand = math.cos(t) * u + math.sin(t) * w
            if radius(cand) >= radius(u):
                u = cand / np.linalg.norm(cand)
        if radius(u) - start <= 1e-15 * start:
            break
    return u


def _complement(basis: np.ndarray, u: np.ndarray) -> np.ndarray:
    rows = []
    for b in basis:
        w = b - np.dot(b, u) * u
        for r in rows:
            w = w - np.dot(w, r) * r
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            rows.append(w / nw)
    return np.array(rows[: basis.shape[0] - 1])


def brute_force_axes(p: LayerNormParams, samples: int = 100_000) -> EllipsoidModel:
    """Semi-axes of the exact-surface image found by sampling.

    Searches stationary radii of ``|sqrt(N) G u|`` over unit ``u`` orthogonal
    to 1, refining each extremum by golden-section search. Independent of
    the eigensolver; intended for N <= 4. A circular cross-section is
    reported through ``extras["flat"]``.
    """
    if linalg.zero_gain_mask(p.gain).any():
        raise DegenerateGainError("brute-force oracle requires nonzero gains")
    if samples < MIN_SAMPLES:
        raise ResolutionError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    n = p.n
    g = p.gain
    root_n = math.sqrt(n)

    def radius(u):
        r = root_n * np.linalg.norm(g * u, axis=-1)
        return float(r) if np.ndim(r) == 0 else r

    preimages: list[np.ndarray] = []
    flat = False
    basis = helmert_basis(n)
    while basis.shape[0] > 2:
        u = _sphere_max(basis, radius, samples)
        preimages.append(u)
        basis = _complement(basis, u)
    if basis.shape[0] == 2:
        u_max, u_min, flat = _circle_extrema(basis[0], basis[1], radius, samples)
        preimages.extend([u_max, u_min])
    else:
        preimages.append(basis[0])

    radii = np.array([radius(u) for u in preimages])
    dirs = []
    for u in preimages:
        x = g * u
        x = x / np.linalg.norm(x)
        idx = int(np.argmax(np.abs(x) >= np.abs(x).max() * (1.0 - 1e-12)))
        dirs.append(-x if x[idx] < 0 else x)
    order = np.argsort(-radii, kind="stable")
    radii = radii[order]
    dirs = np.array(dirs)[order]
    alpha = 1.0 / g
    return EllipsoidModel(
        center=p.bias.copy(),
        axis_directions=dirs,
        semi_axis_lengths=radii,
        orthogonal_direction=alpha / np.linalg.norm(alpha),
        lambda_spectrum=n / radii**2,
        degenerate_groups=_tie_groups(radii),
        extras={"flat": flat, "samples": samples},
    )
