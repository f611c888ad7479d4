"""CSV and SVG data for the N = 3 step-by-step and epsilon-comparison figures.

Panels are orthographic projections of the 3-D points onto a plane. The
projected-out direction (1-hat or alpha-hat) is drawn as a circled dot,
the usual mark for a vector pointing out of the page.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__, linalg
from .cloud import PointCloud, proximities
from .errors import ConfigurationError
from .fileio import atomic_write_text, params_to_dict, write_json, write_rows
from .geometry import orthogonal_subspace, principal_axes
from .layernorm import LayerNormParams, trace_stages

SIZE = 600
MARGIN = 0.05
POINT_RADIUS = 2.5
STEP_PANELS = ("input", "projection", "normalization", "linear", "shift")
EPSILONS = (1e-1, 1e-3, 1e-5)
INPUT_VIEW = np.array([3.0, 2.0, 1.0]) / math.sqrt(14.0)


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal (e, f) spanning the plane orthogonal to ``normal`` in 3-D."""
    w = np.asarray(normal, dtype=np.float64)
    w = w / np.linalg.norm(w)
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(w)))] = 1.0
    e = ref - np.dot(ref, w) * w
    e /= np.linalg.norm(e)
    return e, np.cross(w, e)


def activation_colors(points: np.ndarray) -> list[tuple[int, int, int]]:
    """(R, G, B) from neurons 1-3, each min-max scaled to 0..255 over the cloud."""
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    scaled = np.where(span > 0, (points - lo) / np.where(span > 0, span, 1.0), 0.5)
    return [tuple(int(round(255 * c)) for c in row) for row in scaled]


class Panel:
    """A 2-D scatter with overlays, rendered to a fixed 600x600 SVG."""

    def __init__(self, title: str, normal):
        self.title = title
        self.e, self.f = plane_basis(normal)
        self.points: np.ndarray = np.zeros((0, 2))
        self.colors: list = []
        self.shapes: list[tuple] = []

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.stack([x @ self.e, x @ self.f], axis=-1)

    def scatter(self, points3, colors) -> None:
        self.points = self.project(points3)
        self.colors = list(colors)

    def arrow(self, start3, end3, color="black") -> None:
        self.shapes.append(("arrow", self.project(start3), self.project(end3), color))

    def out_of_page(self, at3, color="black") -> None:
        self.shapes.append(("dot", self.project(at3), None, color))

    def dashed(self, start3, end3, color="blue") -> None:
        self.shapes.append(("dashed", self.project(start3), self.project(end3), color))

    def outline(self, curve3, color="gray") -> None:
        self.shapes.append(("outline", self.project(curve3), None, color))

    def _extent(self):
        pts = [self.points] if len(self.points) else []
        for kind, a, b, _ in self.shapes:
            pts.append(np.atleast_2d(a))
            if b is not None:
                pts.append(np.atleast_2d(b))
        allpts = np.vstack(pts) if pts else np.zeros((1, 2))
        lo, hi = allpts.min(axis=0), allpts.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        return (lo + hi) / 2.0, span

    def to_svg(self) -> str:
        mid, span = self._extent()
        usable = SIZE * (1 - 2 * MARGIN)
        k = usable / span

        def xy(p):
            return SIZE / 2 + k * (p[0] - mid[0]), SIZE / 2 - k * (p[1] - mid[1])

        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
            f'viewBox="0 0 {SIZE} {SIZE}">',
            f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
            f'<text x="{SIZE / 2:.1f}" y="20" text-anchor="middle" font-size="16">{escape(self.title)}</text>',
        ]
        for kind, a, b, color in self.shapes:
            if kind == "outline":
                coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(xy, a))
                out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1"/>')
        out.append('<g class="points">')
        for (px, py), (r, g, b_) in zip(map(xy, self.points), self.colors):
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{POINT_RADIUS}" fill="rgb({r},{g},{b_})"/>')
        out.append("</g>")
        for kind, a, b, color in self.shapes:
            if kind in ("arrow", "dashed"):
                (x1, y1), (x2, y2) = xy(a), xy(b)
                style = ' stroke-dasharray="6,4"' if kind == "dashed" else ""
                out.append(
                    f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                    f'stroke="{color}" stroke-width="2"{style}/>'
                )
                if kind == "arrow":
                    out.append(_arrow_head(x1, y1, x2, y2, color))
            elif kind == "dot":
                x, y = xy(a)
                # arc paths, not <circle>, so only data points are circles
                out.append(
                    f'<path d="M {x - 8:.2f},{y:.2f} a 8,8 0 1,0 16,0 a 8,8 0 1,0 -16,0" '
                    f'fill="none" stroke="{color}" stroke-width="2"/>'
                )
                out.append(
                    f'<path d="M {x - 2:.2f},{y:.2f} a 2,2 0 1,0 4,0 a 2,2 0 1,0 -4,0" fill="{color}"/>'
                )
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _arrow_head(x1, y1, x2, y2, color) -> str:
    ang = math.atan2(y2 - y1, x2 - x1)
    pts = []
    for da in (math.pi - 0.4, math.pi + 0.4):
        pts.append(f"{x2 + 10 * math.cos(ang + da):.2f},{y2 + 10 * math.sin(ang + da):.2f}")
    return f'<polygon points="{x2:.2f},{y2:.2f} {pts[0]} {pts[1]}" fill="{color}"/>'


def _ellipse_curve(center, axes, lengths, samples: int = 181) -> np.ndarray:
    t = np.linspace(0.0, 2 * math.pi, samples)
    return center + np.outer(np.cos(t) * lengths[0], axes[0]) + np.outer(np.sin(t) * lengths[1], axes[1])


def _decorate_image(panel: Panel, p: LayerNormParams, center) -> None:
    model = principal_axes(p)
    center = np.asarray(center, dtype=np.float64)
    panel.out_of_page(center, "black")
    if model.semi_axis_lengths.size >= 2:
        panel.outline(_ellipse_curve(center, model.axis_directions, model.semi_axis_lengths))
    for axis, length in zip(model.axis_directions, model.semi_axis_lengths):
        panel.dashed(center, center + length * axis)


def step_stages(cloud: PointCloud, p: LayerNormParams) -> dict[str, np.ndarray]:
    traces = [trace_stages(a, p) for a in cloud.points]
    return {
        "input": cloud.points.copy(),
        "projection": np.array([t.centered for t in traces]),
        "normalization": np.array([t.normalized for t in traces]),
        "linear": np.array([t.scaled for t in traces]),
        "shift": np.array([t.output for t in traces]),
    }


def _check_three(p: LayerNormParams, cloud: PointCloud) -> None:
    if p.n != 3 or cloud.n != 3:
        raise ConfigurationError("figures are drawn for N = 3 only")


def steps_figure(cloud: PointCloud, p: LayerNormParams, outdir) -> list[Path]:
    """Write one CSV and one SVG per sub-step panel; returns the written paths."""
    _check_three(p, cloud)
    outdir = Path(outdir)
    colors = activation_colors(cloud.points)
    stages = step_stages(cloud, p)
    ones_hat = np.ones(3) / math.sqrt(3.0)
    root_n = math.sqrt(3.0)
    written = []
    for k, name in enumerate(STEP_PANELS, start=1):
        pts = stages[name]
        if name == "input":
            panel = Panel("input activations", INPUT_VIEW)
            panel.arrow(np.zeros(3), ones_hat * max(1.0, float(np.abs(pts).max())), "black")
        elif name in ("projection", "normalization"):
            panel = Panel(f"({'i' if name == 'projection' else 'ii'}) {name}", ones_hat)
            panel.out_of_page(np.zeros(3))
            if name == "normalization":
                e, f = panel.e, panel.f
                t = np.linspace(0.0, 2 * math.pi, 181)
                panel.outline(root_n * (np.outer(np.cos(t), e) + np.outer(np.sin(t), f)))
        else:
            alpha = orthogonal_subspace(p).basis[0]
            panel = Panel("(iii) linear transformation" if name == "linear" else "(iv) global shift", alpha)
            _decorate_image(panel, p, np.zeros(3) if name == "linear" else p.bias)
        panel.scatter(pts, colors)
        stem = outdir / f"steps_{k}_{name}"
        write_rows(stem.with_suffix(".csv"), pts, exact=True)
        atomic_write_text(stem.with_suffix(".svg"), panel.to_svg())
        written += [stem.with_suffix(".csv"), stem.with_suffix(".svg")]
    meta = {"figure": "steps", "version": __version__, "params": params_to_dict(p), "cloud": cloud.metadata(),
            "panels": list(STEP_PANELS)}
    write_json(outdir / "figure_steps.json", meta)
    return written


def epsilon_figure(cloud: PointCloud, p: LayerNormParams, outdir, epsilons=EPSILONS) -> list[Path]:
    """LayerNorm outputs of one cloud at several epsilons, one CSV and SVG each."""
    _check_three(p, cloud)
    outdir = Path(outdir)
    colors = activation_colors(cloud.points)
    alpha = orthogonal_subspace(p).basis[0]
    zero_gains = bool(linalg.zero_gain_mask(p.gain).any())
    written = []
    summary = []
    for eps in epsilons:
        q = p.with_epsilon(eps)
        pts = np.array([trace_stages(a, q).output for a in cloud.points])
        panel = Panel(f"epsilon = {eps:g}", alpha)
        _decorate_image(panel, q, q.bias)
        panel.scatter(pts, colors)
        stem = outdir / f"epsilon_{eps:.0e}"
        write_rows(stem.with_suffix(".csv"), pts, exact=True)
        atomic_write_text(stem.with_suffix(".svg"), panel.to_svg())
        written += [stem.with_suffix(".csv"), stem.with_suffix(".svg")]
        entry = {"eps": eps}
        if not zero_gains:
            prox = proximities(cloud.points, q)
            entry["mean_proximity"] = float(prox.mean())
            entry["fraction_above_0.99"] = float(np.mean(prox >= 0.99))
        summary.append(entry)
    meta = {"figure": "epsilon", "version": __version__, "params": params_to_dict(p), "cloud": cloud.metadata(),
            "panels": summary}
    write_json(outdir / "figure_epsilon.json", meta)
    return written
