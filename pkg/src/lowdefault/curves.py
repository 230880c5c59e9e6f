"""ROC and CAP curves: point sets, curve functions and interpolation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .distributions import DiscreteJoint, DistFn


@dataclass(frozen=True)
class CurvePoints:
    """Ordered curve vertices from (0, 0) to (1, 1)."""

    points: np.ndarray
    kind: Literal["ROC", "CAP"]

    @property
    def u(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.points[:, 1]

    def area(self) -> float:
        """Area under the polyline through the points (trapezoid rule)."""
        u, v = self.u, self.v
        return float(np.sum(np.diff(u) * (v[1:] + v[:-1])) / 2.0)


@dataclass(frozen=True)
class CurveFn:
    """A curve u -> v on [0, 1]; ``variant`` is 'standard' or 'modified'."""

    eval: Callable[[np.ndarray], np.ndarray]
    variant: Literal["standard", "modified"] = "standard"

    def __call__(self, u):
        return self.eval(u)


def _cumulative_points(x_mass: np.ndarray, y_mass: np.ndarray, kind) -> CurvePoints:
    cx = np.concatenate(([0.0], np.cumsum(x_mass)))
    cy = np.concatenate(([0.0], np.cumsum(y_mass)))
    cx[-1] = cy[-1] = 1.0
    cx, cy = np.minimum(cx, 1.0), np.minimum(cy, 1.0)
    pts = np.column_stack((cx, cy))
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return CurvePoints(pts[keep], kind)


def groc_points(d: DiscreteJoint) -> CurvePoints:
    """Cumulative (survivor, defaulter) masses in grade order."""
    return _cumulative_points(d.omega, d.pi, "ROC")


def gcap_points(d: DiscreteJoint) -> CurvePoints:
    """Cumulative (unconditional, defaulter) masses in grade order."""
    return _cumulative_points(d.p * d.pi + (1.0 - d.p) * d.omega, d.pi, "CAP")


def _composed(F_D: DistFn, G: DistFn, modified: bool) -> Callable:
    def fn(u):
        u = np.asarray(u, dtype=float)
        q = np.asarray(G.quantile(u), dtype=float)
        qf = np.where(np.isfinite(q), q, 0.0)
        v = np.asarray(F_D.cdf(qf), dtype=float)
        if modified:
            v = 0.5 * (v + np.asarray(F_D.cdf_left(qf), dtype=float))
        v = np.where(q == np.inf, 1.0, v)
        return np.where(u <= 0, 0.0, v)

    return fn


def roc_fn(F_D: DistFn, F_N: DistFn) -> CurveFn:
    """u -> F_D(F_N^{-1}(u)), with value 0 at u = 0."""
    return CurveFn(_composed(F_D, F_N, False), "standard")


def cap_fn(F_D: DistFn, F: DistFn) -> CurveFn:
    """u -> F_D(F^{-1}(u)), with value 0 at u = 0."""
    return CurveFn(_composed(F_D, F, False), "standard")


def roc_star_fn(F_D: DistFn, F_N: DistFn) -> CurveFn:
    """u -> P[S_D < q] + P[S_D = q] / 2 at q = F_N^{-1}(u)."""
    return CurveFn(_composed(F_D, F_N, True), "modified")


def cap_star_fn(F_D: DistFn, F: DistFn) -> CurveFn:
    """u -> P[S_D < q] + P[S_D = q] / 2 at q = F^{-1}(u)."""
    return CurveFn(_composed(F_D, F, True), "modified")


def interpolate_points(pts: CurvePoints, u) -> np.ndarray:
    """Evaluate the polyline through ``pts`` at ``u``.

    On a vertical segment the upper end is returned.
    """
    u = np.asarray(u, dtype=float)
    xs, ys = pts.u, pts.v
    i = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, len(xs) - 1)
    j = np.minimum(i + 1, len(xs) - 1)
    dx = xs[j] - xs[i]
    at_vertex = (dx <= 0) | (u <= xs[i])
    w = np.where(at_vertex, 0.0, (u - xs[i]) / np.where(dx > 0, dx, 1.0))
    return np.where(at_vertex, ys[i], ys[i] + w * (ys[j] - ys[i]))


def interpolated_curve(pts: CurvePoints, grid: int) -> np.ndarray:
    """Polyline through ``pts`` evaluated on ``grid`` equally spaced u in [0, 1].

    Returns an array of shape (grid, 2) with columns u and v.
    """
    if int(grid) < 2:
        raise ValueError("grid must be at least 2")
    u = np.linspace(0.0, 1.0, int(grid))
    return np.column_stack((u, interpolate_points(pts, u)))
