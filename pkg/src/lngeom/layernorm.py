"""LayerNorm in elementwise, matrix and projector-decomposed form.

All three formulations compute

    y = g * (a - mean(a)) / sqrt(var(a) + eps) + b

for a single activation vector ``a``. They differ only in how the
arithmetic is organized, which is what makes them useful as mutual
checks. :func:`trace_stages` exposes the intermediate values of the
projector form: centering, normalization, gain and bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigurationError, LayerNormDomainError, ShapeError

DEFAULT_EPSILON = 1e-5
#: a is treated as proportional to the ones vector when
#: |Pi a|^2 <= PROPORTIONAL_RTOL * max(1, |a|^2).
PROPORTIONAL_RTOL = 1e-28


@dataclass(frozen=True)
class LayerNormParams:
    """Gain, bias and epsilon of a LayerNorm acting on ``n``-dimensional vectors."""

    gain: np.ndarray
    bias: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        gain = linalg.vector(self.gain)
        bias = linalg.vector(self.bias)
        if gain.shape != bias.shape:
            raise ShapeError(f"gain has length {gain.size} but bias has length {bias.size}")
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps < 0:
            raise ConfigurationError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "epsilon", eps)

    @property
    def n(self) -> int:
        return int(self.gain.size)

    @classmethod
    def initial(cls, n: int, epsilon: float = DEFAULT_EPSILON) -> "LayerNormParams":
        """Parameters at initialization: unit gain, zero bias."""
        return cls(np.ones(n), np.zeros(n), epsilon)

    def with_epsilon(self, epsilon: float) -> "LayerNormParams":
        return LayerNormParams(self.gain, self.bias, epsilon)


@dataclass(frozen=True)
class StageTrace:
    """Intermediate values of the four LayerNorm sub-steps for one input."""

    input: np.ndarray
    mu: float
    centered: np.ndarray
    sigma2: float
    normalized: np.ndarray
    scaled: np.ndarray
    output: np.ndarray


def _checked_input(a, p: LayerNormParams) -> np.ndarray:
    a = linalg.vector(a)
    if a.size != p.n:
        raise ShapeError(f"input has length {a.size}, params expect {p.n}")
    return a


def _is_proportional_to_ones(a: np.ndarray, centered_sq: float) -> bool:
    return centered_sq <= PROPORTIONAL_RTOL * max(1.0, float(np.dot(a, a)))


def _constant_input_output(p: LayerNormParams) -> np.ndarray:
    # Rounding in the mean leaves O(ulp) residue in a - mean(a) for constant
    # inputs; dividing it by sqrt(eps) would give noise instead of exactly b.
    if p.epsilon == 0.0:
        raise LayerNormDomainError("zero variance with epsilon == 0")
    return p.bias.copy()


def layer_norm_reference(a, p: LayerNormParams) -> np.ndarray:
    """Elementwise LayerNorm formula.

    Inputs proportional to the ones vector map to ``b``; when ``epsilon == 0``
    they raise :class:`LayerNormDomainError` instead. Use
    :func:`layer_norm_decomposed` for a total function.
    """
    a = _checked_input(a, p)
    n = a.size
    mu = float(np.sum(a)) / n
    centered = a - mu
    sigma2 = float(np.dot(centered, centered)) / n
    if _is_proportional_to_ones(a, sigma2 * n):
        return _constant_input_output(p)
    return p.gain * centered / math.sqrt(sigma2 + p.epsilon) + p.bias


def layer_norm_matrix_form(a, p: LayerNormParams) -> np.ndarray:
    """LayerNorm with the gain applied as the matrix ``diag(g)``."""
    a = _checked_input(a, p)
    n = a.size
    ones = np.ones(n)
    mu = linalg.dot(a, ones) / n
    centered = linalg.add(a, linalg.scale(-mu, ones))
    sigma2 = linalg.dot(centered, centered) / n
    if _is_proportional_to_ones(a, sigma2 * n):
        return _constant_input_output(p)
    z = linalg.scale(1.0 / math.sqrt(sigma2 + p.epsilon), centered)
    return linalg.add(linalg.matvec(linalg.diag(p.gain), z), p.bias)


def _project_normalize(a: np.ndarray, eps: float) -> tuple[np.ndarray, float, np.ndarray]:
    n = a.size
    centered = linalg.matvec(linalg.mean_projector(n), a)
    sq = float(np.dot(centered, centered))
    if _is_proportional_to_ones(a, sq):
        return np.zeros(n), 0.0, np.zeros(n)
    return centered, sq, math.sqrt(n) * centered / math.sqrt(sq + n * eps)


def project_and_normalize(a, p: LayerNormParams) -> np.ndarray:
    """Sub-steps (i) and (ii): project onto the zero-mean hyperplane, then
    rescale into the ball of radius sqrt(N).

    Returns the zero vector when ``a`` is proportional to the ones vector.
    """
    a = _checked_input(a, p)
    return _project_normalize(a, p.epsilon)[2]


def layer_norm_decomposed(a, p: LayerNormParams) -> np.ndarray:
    """LayerNorm as ``sqrt(N) g * Pi a / sqrt(|Pi a|^2 + N eps) + b``.

    Total: inputs proportional to the ones vector map to ``b`` for every
    epsilon, including zero.
    """
    a = _checked_input(a, p)
    normalized = _project_normalize(a, p.epsilon)[2]
    return p.gain * normalized + p.bias


def trace_stages(a, p: LayerNormParams) -> StageTrace:
    a = _checked_input(a, p)
    n = a.size
    centered, sq, normalized = _project_normalize(a, p.epsilon)
    scaled = p.gain * normalized
    return StageTrace(
        input=a,
        mu=float(np.dot(a, np.ones(n))) / n,
        centered=centered,
        sigma2=sq / n,
        normalized=normalized,
        scaled=scaled,
        output=scaled + p.bias,
    )
