"""Invariant suite run by ``lngeom verify``.

Each check records how many points it examined, the worst residual seen
and whether every residual stayed within tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__, linalg
from .errors import LayerNormDomainError
from .fileio import params_to_dict
from .geometry import (
    left_nullspace_residual,
    orthogonal_subspace,
    principal_axes,
    semi_axis_lengths_alt,
)
from .layernorm import (
    LayerNormParams,
    layer_norm_decomposed,
    layer_norm_matrix_form,
    layer_norm_reference,
    project_and_normalize,
    trace_stages,
)

EQUIVALENCE_RTOL = 1e-10
AGREEMENT_RTOL = 1e-9
HYPERPLANE_TOL = 1e-9
NORMALIZED_HYPERPLANE_TOL = 1e-10
BALL_RTOL = 1e-12
SURFACE_TOL = 1e-9
IDENTITY_RTOL = 1e-10
LENGTH_RTOL = 1e-9
MAX_REPORTED_FAILURES = 10


@dataclass
class Check:
    name: str
    tolerance: float
    checked: int = 0
    skipped: int = 0
    max_residual: float = 0.0
    failures: list = field(default_factory=list)
    note: str = ""

    def record(self, residual: float, ok: bool, where=None) -> None:
        self.checked += 1
        if residual > self.max_residual or math.isnan(residual):
            self.max_residual = residual
        if not ok:
            self.failures.append(where)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        out = {
            "passed": self.passed,
            "checked": self.checked,
            "skipped": self.skipped,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "failures": len(self.failures),
            "first_failures": self.failures[:MAX_REPORTED_FAILURES],
        }
        if self.note:
            out["note"] = self.note
        return out


def rel_diff(x, y) -> float:
    x, y = np.asarray(x), np.asarray(y)
    scale = max(float(np.abs(x).max(initial=0.0)), float(np.abs(y).max(initial=0.0)))
    diff = float(np.abs(x - y).max(initial=0.0))
    return 0.0 if diff == 0.0 else diff / scale


def bias_rounding_bound(w, y, p: LayerNormParams) -> float:
    """Bound on the error of ``sum(w**2)`` with ``w = (y - b) / g`` caused by
    ``y`` being rounded at the scale of ``b``; matters when ``|y - b| << |b|``."""
    dw = 4.0 * np.finfo(np.float64).eps * (np.abs(y) + np.abs(p.bias)) / np.abs(p.gain)
    return float(2.0 * np.dot(np.abs(w), dw) + np.dot(dw, dw))


def verify(p: LayerNormParams, inputs, applied=None) -> dict:
    """Run every invariant on ``inputs`` (rows) and, when given, on the
    ``applied`` outputs read back from ``lngeom apply``."""
    inputs = np.asarray(inputs, dtype=np.float64).reshape(-1, p.n)
    if applied is not None:
        applied = np.asarray(applied, dtype=np.float64)
        if applied.shape != inputs.shape:
            raise linalg.ShapeError(f"applied outputs have shape {applied.shape}, inputs {inputs.shape}")

    n, eps = p.n, p.epsilon
    root_n = math.sqrt(n)
    zero_mask = linalg.zero_gain_mask(p.gain)
    has_zero = bool(zero_mask.any())
    sub = orthogonal_subspace(p)
    model = principal_axes(p)
    alt = semi_axis_lengths_alt(p)

    checks = {
        name: Check(name, tol)
        for name, tol in [
            ("equivalence", EQUIVALENCE_RTOL),
            ("agreement", AGREEMENT_RTOL),
            ("hyperplane", HYPERPLANE_TOL),
            ("normalized_hyperplane", NORMALIZED_HYPERPLANE_TOL),
            ("ball", BALL_RTOL),
            ("containment", SURFACE_TOL),
            ("quadratic_form_identity", IDENTITY_RTOL),
            ("centering_idempotence", 1e-12),
            ("axis_residence", SURFACE_TOL),
            ("left_nullspace", 1e-10),
            ("axis_duality", LENGTH_RTOL),
            ("zero_mode", 1e-10),
        ]
    }

    # parameter-level geometry
    gnorm = linalg.norm(p.gain)
    for v in sub.basis:
        res = left_nullspace_residual(v, p.gain)
        checks["left_nullspace"].record(res, res <= 1e-10 * max(gnorm, 1e-300))
    if alt.shape == model.semi_axis_lengths.shape:
        res = rel_diff(model.semi_axis_lengths, alt) if alt.size else 0.0
        checks["axis_duality"].record(res, res <= LENGTH_RTOL)
    else:
        checks["axis_duality"].record(math.inf, False, "length-count mismatch")
    if has_zero:
        checks["zero_mode"].skipped += 1
        checks["zero_mode"].note = "zero gains: no reciprocal-gain zero mode"
    else:
        res = model.zero_mode_residual
        tol = 1e-10 * max(1.0, float(np.abs(1.0 / p.gain).max()) ** 2)
        checks["zero_mode"].record(res, res <= tol)

    if eps == 0.0:
        checks["containment"].note = "eps == 0: outputs must lie on the surface"
    else:
        checks["containment"].note = "eps > 0: outputs must lie strictly inside"

    for i, a in enumerate(inputs):
        tr = trace_stages(a, p)
        y = tr.output
        sq = tr.sigma2 * n
        proportional = not tr.normalized.any()

        # three formulations
        try:
            ref = layer_norm_reference(a, p)
            mat = layer_norm_matrix_form(a, p)
        except LayerNormDomainError:
            checks["equivalence"].skipped += 1
        else:
            dec = layer_norm_decomposed(a, p)
            res = max(rel_diff(ref, mat), rel_diff(ref, dec), rel_diff(mat, dec))
            checks["equivalence"].record(res, res <= EQUIVALENCE_RTOL, i)

        target = y
        if applied is not None:
            target = applied[i]
            res = rel_diff(target, y)
            checks["agreement"].record(res, res <= AGREEMENT_RTOL, i)

        # image orthogonal to the orthogonal subspace after removing bias
        d = target - p.bias
        dn = linalg.norm(d)
        if dn > 1e-6:
            res = float(np.abs(sub.basis @ d).max()) / dn
            checks["hyperplane"].record(res, res <= HYPERPLANE_TOL, i)
        else:
            checks["hyperplane"].skipped += 1

        v = project_and_normalize(a, p)
        res = abs(float(np.sum(v)))
        checks["normalized_hyperplane"].record(res, res <= NORMALIZED_HYPERPLANE_TOL * root_n, i)
        vn = linalg.norm(v)
        res = vn / root_n - 1.0
        ok = vn < root_n if eps > 0 else vn <= root_n * (1 + BALL_RTOL)
        checks["ball"].record(max(res, 0.0), ok, i)

        # hyperellipsoid membership
        if has_zero:
            collapsed = float(np.abs(d[zero_mask]).max())
            w = d[~zero_mask] / p.gain[~zero_mask]
            q = float(np.dot(w, w)) / n
            ok = collapsed <= 1e-12 * (1.0 + float(np.abs(p.bias).max())) and q <= 1 + SURFACE_TOL
            checks["containment"].record(max(collapsed, q - 1.0, 0.0), ok, i)
        else:
            w = d / p.gain
            q = float(np.dot(w, w)) / n
            if eps > 0:
                checks["containment"].record(max(q - 1.0, 0.0), q < 1.0, i)
            elif proportional:
                checks["containment"].skipped += 1
            else:
                checks["containment"].record(abs(q - 1.0), abs(q - 1.0) <= SURFACE_TOL, i)

            w = (y - p.bias) / p.gain
            q_hat = float(np.dot(w, w))
            expected = n * sq / (sq + n * eps) if not proportional else 0.0
            res = abs(q_hat - expected)
            allowed = IDENTITY_RTOL * expected + bias_rounding_bound(w, y, p)
            checks["quadratic_form_identity"].record(res / max(expected, 1e-300), res <= allowed, i)

        again = trace_stages(tr.centered, p).centered
        res = float(np.abs(again - tr.centered).max())
        checks["centering_idempotence"].record(res, res <= 1e-12 * max(1.0, linalg.norm(tr.centered)), i)

        # principal-axis coordinates reproduce the point and its radius
        if model.semi_axis_lengths.size:
            c = model.coordinates(y)
            recon = model.axis_directions.T @ c
            yd = y - p.bias
            r_recon = linalg.norm(recon - yd) / max(1.0, linalg.norm(yd))
            radius_sq = float(np.sum((c / model.semi_axis_lengths) ** 2))
            if has_zero:
                r_rad = max(radius_sq - 1.0, 0.0)
            else:
                r_rad = abs(radius_sq - q_hat / n)
            res = max(r_recon, r_rad)
            checks["axis_residence"].record(res, res <= SURFACE_TOL, i)
        else:
            checks["axis_residence"].skipped += 1

    if applied is None:
        checks["agreement"].note = "no applied outputs supplied"

    failed = [name for name, c in checks.items() if not c.passed]
    return {
        "schema": 1,
        "version": __version__,
        "params": params_to_dict(p),
        "points": int(inputs.shape[0]),
        "passed": not failed,
        "failed": failed,
        "invariants": {name: c.to_dict() for name, c in checks.items()},
    }
