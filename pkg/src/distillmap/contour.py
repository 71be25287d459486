"""Iso-curve extraction of the student marginal by marching squares."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .model_core import StudentParams, student_marginal


@dataclass(frozen=True)
class ContourSet:
    """Polylines tracing one level of the student marginal density."""

    level: float
    polylines: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.level > 0:
            raise ValueError("contour level must be positive")
        polys = tuple(np.asarray(p, dtype=float) for p in self.polylines)
        for p in polys:
            if p.ndim != 2 or p.shape[1] != 2:
                raise ValueError("polylines must be M x 2 point arrays")
        object.__setattr__(self, "polylines", polys)


def trace_contour(
    params: StudentParams,
    level: float,
    bbox: Tuple[float, float, float, float],
    resolution: int = 200,
) -> ContourSet:
    """Marching-squares extraction of P_S(y) = level on a regular grid.

    ``bbox`` is (xmin, xmax, ymin, ymax) and must contain every class mean.
    """
    if level <= 0:
        raise ValueError("contour level must be positive")
    xmin, xmax, ymin, ymax = map(float, bbox)
    if not (xmin < xmax and ymin < ymax):
        raise ValueError("bbox must have positive extent")
    means = params.means
    if (
        means[:, 0].min() < xmin
        or means[:, 0].max() > xmax
        or means[:, 1].min() < ymin
        or means[:, 1].max() > ymax
    ):
        raise ValueError("bbox must contain all class means")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")

    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack((gx.reshape(-1), gy.reshape(-1)), axis=1)
    density = student_marginal(pts, params).reshape(resolution, resolution)
    if density.max() < level:
        warnings.warn("contour level exceeds the maximum density on the grid")
        return ContourSet(level=level, polylines=())

    segments = _marching_squares(xs, ys, density, level)
    polylines = _chain_segments(segments)
    return ContourSet(level=level, polylines=tuple(np.array(p) for p in polylines))


def _interp(p_lo, p_hi, f_lo, f_hi, level):
    t = (level - f_lo) / (f_hi - f_lo)
    return (p_lo[0] + t * (p_hi[0] - p_lo[0]), p_lo[1] + t * (p_hi[1] - p_lo[1]))


def _marching_squares(xs, ys, field, level):
    """Per-cell crossing segments of field == level, linear edge interpolation."""
    segments = []
    nx, ny = field.shape
    for i in range(nx - 1):
        for j in range(ny - 1):
            corners = (
                (xs[i], ys[j], field[i, j]),
                (xs[i + 1], ys[j], field[i + 1, j]),
                (xs[i + 1], ys[j + 1], field[i + 1, j + 1]),
                (xs[i], ys[j + 1], field[i, j + 1]),
            )
            code = 0
            for bit, (_, _, f) in enumerate(corners):
                if f >= level:
                    code |= 1 << bit
            if code in (0, 15):
                continue
            edges = []
            for e, (a, b) in enumerate(((0, 1), (1, 2), (2, 3), (3, 0))):
                fa, fb = corners[a][2], corners[b][2]
                if (fa >= level) != (fb >= level):
                    edges.append(
                        (e, _interp(corners[a][:2], corners[b][:2], fa, fb, level))
                    )
            if len(edges) == 2:
                segments.append((edges[0][1], edges[1][1]))
            elif len(edges) == 4:
                # saddle cell: split by the center value
                center = sum(c[2] for c in corners) / 4.0
                pts = {e: p for e, p in edges}
                if (center >= level) == (corners[0][2] >= level):
                    segments.append((pts[0], pts[1]))
                    segments.append((pts[2], pts[3]))
                else:
                    segments.append((pts[3], pts[0]))
                    segments.append((pts[1], pts[2]))
    return segments


def _chain_segments(segments, decimals: int = 9):
    """Join crossing segments into polylines by matching endpoints."""
    def key(p):
        return (round(p[0], decimals), round(p[1], decimals))

    adjacency = {}
    for idx, (a, b) in enumerate(segments):
        adjacency.setdefault(key(a), []).append((idx, True))
        adjacency.setdefault(key(b), []).append((idx, False))

    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        a, b = segments[start]
        chain = [a, b]
        # extend forward from the tail, then backward from the head
        for reverse in (False, True):
            while True:
                tip = chain[0] if reverse else chain[-1]
                hit = None
                for idx, at_start in adjacency.get(key(tip), ()):
                    if not used[idx]:
                        hit = (idx, at_start)
                        break
                if hit is None:
                    break
                idx, at_start = hit
                used[idx] = True
                nxt = segments[idx][1] if at_start else segments[idx][0]
                if reverse:
                    chain.insert(0, nxt)
                else:
                    chain.append(nxt)
        polylines.append(chain)
    return polylines
