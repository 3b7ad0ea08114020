"""Analytic shapes rasterized by inequality tests at pixel centers.

The raster of a shape IS its amodal ground truth: no anti-aliasing, no
estimation, identical for any evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SHAPE_KINDS = ("rectangle", "ellipse", "triangle")


@dataclass(frozen=True)
class ShapeSpec:
    """One placed shape: kind, color, and its geometric parameters.

    rectangle/ellipse: params = (cx, cy, half_w, half_h, angle_rad)
    triangle: params = (x0, y0, x1, y1, x2, y2)
    """

    kind: str
    color_name: str
    rgb: tuple[float, float, float]
    params: tuple[float, ...]

    def contains(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        if self.kind == "rectangle":
            cx, cy, hw, hh, ang = self.params
            dx, dy = xs - cx, ys - cy
            u = dx * math.cos(ang) + dy * math.sin(ang)
            v = -dx * math.sin(ang) + dy * math.cos(ang)
            return (np.abs(u) <= hw) & (np.abs(v) <= hh)
        if self.kind == "ellipse":
            cx, cy, a, b, ang = self.params
            dx, dy = xs - cx, ys - cy
            u = dx * math.cos(ang) + dy * math.sin(ang)
            v = -dx * math.sin(ang) + dy * math.cos(ang)
            return (u / a) ** 2 + (v / b) ** 2 <= 1.0
        if self.kind == "triangle":
            x0, y0, x1, y1, x2, y2 = self.params
            d0 = (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0)
            d1 = (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1)
            d2 = (x0 - x2) * (ys - y2) - (y0 - y2) * (xs - x2)
            return ((d0 >= 0) & (d1 >= 0) & (d2 >= 0)) | ((d0 <= 0) & (d1 <= 0) & (d2 <= 0))
        raise ValueError(f"unknown shape kind {self.kind!r}")


def raster(shape: ShapeSpec, height: int, width: int) -> np.ndarray:
    ys, xs = np.mgrid[0:height, 0:width]
    return shape.contains(xs + 0.5, ys + 0.5)


def random_shape(rng: np.random.Generator, kind: str, color_name: str, rgb, height: int, width: int) -> ShapeSpec:
    """Sample shape parameters sized relative to the canvas."""
    short = min(height, width)
    if kind == "triangle":
        cx = rng.uniform(0.2 * width, 0.8 * width)
        cy = rng.uniform(0.2 * height, 0.8 * height)
        pts = []
        for _ in range(3):
            radius = rng.uniform(0.15 * short, 0.38 * short)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            pts.extend([cx + radius * math.cos(theta), cy + radius * math.sin(theta)])
        return ShapeSpec(kind, color_name, rgb, tuple(pts))
    cx = rng.uniform(0.2 * width, 0.8 * width)
    cy = rng.uniform(0.2 * height, 0.8 * height)
    hw = rng.uniform(0.12 * short, 0.3 * short)
    hh = rng.uniform(0.12 * short, 0.3 * short)
    ang = rng.uniform(0.0, math.pi)
    return ShapeSpec(kind, color_name, rgb, (cx, cy, hw, hh, ang))
