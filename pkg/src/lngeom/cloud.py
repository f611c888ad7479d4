"""Deterministic point clouds and surface-concentration statistics.

Random streams come from the Philox4x64-10 counter-based generator keyed
directly by the seed (counter starting at zero), so a cloud is fully
determined by ``(sampler, n, count, seed)``. Raw 64-bit words become
uniforms via their top 53 bits; normals use Box-Muller on consecutive
word pairs, emitting the cosine then the sine variate, filled row-major.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidDimensionError
from .geometry import surface_proximity
from .layernorm import LayerNormParams, layer_norm_decomposed

GAUSSIAN = "gaussian"
SPHERE_UNIFORM = "sphere-uniform"
CUBE_GRID = "cube-grid"
SAMPLERS = (GAUSSIAN, SPHERE_UNIFORM, CUBE_GRID)

DEFAULT_BINS = 50
DEFAULT_THRESHOLDS = (0.9, 0.99, 0.999)
_TWO_POW_M53 = 2.0**-53


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (count, n)
    sampler: str
    seed: int
    n: int
    count: int

    def metadata(self) -> dict:
        return {"sampler": self.sampler, "seed": self.seed, "n": self.n, "count": self.count}


@dataclass(frozen=True)
class ConcentrationReport:
    epsilon: float
    bin_edges: np.ndarray
    counts: np.ndarray
    fraction_above: dict[float, float]
    mean_proximity: float
    proximities: np.ndarray
    sampler: str | None = None

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "sampler": self.sampler,
            "mean_proximity": self.mean_proximity,
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "fraction_above": {repr(k): v for k, v in self.fraction_above.items()},
        }


def _raw_words(seed: int, count: int) -> np.ndarray:
    return np.random.Philox(key=int(seed)).random_raw(count)


def standard_normals(seed: int, count: int) -> np.ndarray:
    """``count`` standard normal variates from the seeded stream."""
    pairs = (count + 1) // 2
    raw = _raw_words(seed, 2 * pairs)
    top = (raw >> np.uint64(11)).astype(np.float64)
    u1 = (top[0::2] + 1.0) * _TWO_POW_M53  # (0, 1]
    u2 = top[1::2] * _TWO_POW_M53  # [0, 1)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * math.pi * u2)
    z[1::2] = r * np.sin(2.0 * math.pi * u2)
    return z[:count]


def cube_lattice(n: int, count: int) -> np.ndarray:
    """First ``count`` points, in lexicographic order, of the smallest
    regular k^n lattice on [-1, 1]^n (k >= 2) with at least ``count`` points."""
    k = 2
    while k**n < count:
        k += 1
    ticks = np.linspace(-1.0, 1.0, k)
    pts = list(itertools.islice(itertools.product(ticks, repeat=n), count))
    return np.array(pts, dtype=np.float64).reshape(count, n)


def sample(sampler: str, n: int, count: int, seed: int = 0, radius: float = 1.0) -> PointCloud:
    """Generate a point cloud.

    ``gaussian`` draws independent standard normals, ``sphere-uniform``
    rescales each gaussian point to length ``radius`` and ``cube-grid`` is
    a regular lattice on [-1, 1]^n (the seed is ignored).
    """
    if sampler not in SAMPLERS:
        raise ConfigurationError(f"unknown sampler {sampler!r}; choose one of {', '.join(SAMPLERS)}")
    if n < 2:
        raise InvalidDimensionError(f"dimension must be >= 2, got {n}")
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    if seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {seed}")

    if sampler == CUBE_GRID:
        pts = cube_lattice(n, count)
    else:
        pts = standard_normals(seed, n * count).reshape(count, n)
        if sampler == SPHERE_UNIFORM:
            norms = np.linalg.norm(pts, axis=1, keepdims=True)
            pts = radius * pts / norms
    pts.flags.writeable = False
    return PointCloud(points=pts, sampler=sampler, seed=int(seed), n=int(n), count=int(count))


def proximities(points, p: LayerNormParams) -> np.ndarray:
    return np.array([surface_proximity(layer_norm_decomposed(a, p), p) for a in points])


def concentration(
    cloud: PointCloud,
    p: LayerNormParams,
    thresholds=DEFAULT_THRESHOLDS,
    bins: int = DEFAULT_BINS,
) -> ConcentrationReport:
    """Histogram of surface proximity for the LayerNorm image of ``cloud``."""
    prox = proximities(cloud.points, p)
    counts, edges = np.histogram(prox, bins=bins, range=(0.0, 1.0))
    fractions = {float(t): float(np.mean(prox >= t)) for t in sorted(thresholds)}
    return ConcentrationReport(
        epsilon=p.epsilon,
        bin_edges=edges,
        counts=counts,
        fraction_above=fractions,
        mean_proximity=float(np.mean(prox)),
        proximities=prox,
        sampler=cloud.sampler,
    )
