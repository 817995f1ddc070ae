"""Compact convex action spaces.

Three shapes are supported: axis-aligned boxes, Euclidean balls and convex
hulls of a finite vertex list. Each exposes Euclidean projection, linear
maximization with deterministic tie-breaking, membership and the distance
to the boundary.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Union

import numpy as np

MEMBERSHIP_RTOL = 1e-9


def membership_tol(p) -> float:
    return MEMBERSHIP_RTOL * (1.0 + float(np.linalg.norm(p)))


class GeometryError(ValueError):
    pass


def _vec(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise GeometryError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise GeometryError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo, "box.lo"), _vec(self.hi, "box.hi")
        if lo.shape != hi.shape:
            raise GeometryError("box.lo and box.hi differ in dimension")
        if np.any(lo > hi):
            raise GeometryError("box requires lo <= hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def bounding_box(self):
        return self.lo, self.hi

    def project(self, p) -> np.ndarray:
        return np.clip(np.asarray(p, dtype=float), self.lo, self.hi)

    project_rows = project

    def linear_maximize(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        mid = 0.5 * (self.lo + self.hi)
        return np.where(c > 0, self.hi, np.where(c < 0, self.lo, mid))

    def tied_coordinates(self, c) -> list[int]:
        """Coordinates left free on the optimal face of ``linear_maximize``."""
        c = np.asarray(c, dtype=float)
        return [k for k in range(self.dim) if c[k] == 0 and self.lo[k] < self.hi[k]]

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        tol = membership_tol(p)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def interior_distance(self, p) -> float:
        p = _require_member(self, p)
        return max(0.0, float(np.min(np.minimum(p - self.lo, self.hi - p))))

    def sample(self, rng, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(size, self.dim))

    def to_dict(self) -> dict:
        return {"box": {"lo": self.lo.tolist(), "hi": self.hi.tolist()}}


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "ball.center"))
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0):
            raise GeometryError("ball.radius must be a positive finite number")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.size

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def project(self, p) -> np.ndarray:
        v = np.asarray(p, dtype=float) - self.center
        dist = np.linalg.norm(v)
        if dist <= self.radius:
            return self.center + v
        return self.center + v * (self.radius / dist)

    def project_rows(self, P) -> np.ndarray:
        V = np.asarray(P, dtype=float) - self.center
        dist = np.linalg.norm(V, axis=-1, keepdims=True)
        scale = np.where(dist > self.radius, self.radius / np.maximum(dist, 1e-300), 1.0)
        return self.center + V * scale

    def linear_maximize(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        norm = np.linalg.norm(c)
        if norm == 0:
            return self.center.copy()
        return self.center + self.radius * c / norm

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.linalg.norm(p - self.center) <= self.radius + membership_tol(p))

    def interior_distance(self, p) -> float:
        p = _require_member(self, p)
        return max(0.0, self.radius - float(np.linalg.norm(p - self.center)))

    def sample(self, rng, size: int) -> np.ndarray:
        g = rng.standard_normal((size, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(size, 1)) ** (1.0 / self.dim)
        return self.center + r * g

    def to_dict(self) -> dict:
        return {"ball": {"center": self.center.tolist(), "radius": self.radius}}


@dataclass(frozen=True, eq=False)
class VertexPolytope:
    """Convex hull of ``vertices`` (an ``(m, d)`` array)."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
            raise GeometryError("polytope.vertices must be a non-empty list of points")
        if not np.all(np.isfinite(V)):
            raise GeometryError("polytope.vertices must be finite")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @functools.cached_property
    def _affine_rank(self) -> int:
        if len(self.vertices) == 1:
            return 0
        return int(np.linalg.matrix_rank(self.vertices[1:] - self.vertices[0]))

    @functools.cached_property
    def _facets(self) -> np.ndarray | None:
        # rows (normal, offset) with normal . x + offset <= 0 inside; None if no interior
        if self._affine_rank < self.dim or self.dim == 1:
            return None
        from scipy.spatial import ConvexHull

        return ConvexHull(self.vertices).equations

    def project(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.dim == 1:
            lo, hi = self.bounding_box()
            return np.clip(p, lo, hi)
        if len(self.vertices) == 1:
            return self.vertices[0].copy()
        support, lam = min_norm_point(self.vertices - p)
        return lam @ self.vertices[support]

    def project_rows(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        return np.array([self.project(p) for p in P]).reshape(P.shape)

    def linear_maximize(self, c) -> np.ndarray:
        vals = self.vertices @ np.asarray(c, dtype=float)
        top = vals.max()
        opt = vals >= top - 1e-9 * np.abs(vals).max()
        return self.vertices[opt].mean(axis=0)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.linalg.norm(self.project(p) - p) <= membership_tol(p))

    def interior_distance(self, p) -> float:
        p = _require_member(self, p)
        if self.dim == 1:
            lo, hi = self.bounding_box()
            return max(0.0, float(min(p[0] - lo[0], hi[0] - p[0])))
        facets = self._facets
        if facets is None:
            return 0.0
        return max(0.0, float(np.min(-(facets[:, :-1] @ p + facets[:, -1]))))

    def sample(self, rng, size: int) -> np.ndarray:
        # Dirichlet(1) mixtures of vertices: covers the hull, not uniform on it
        lam = rng.dirichlet(np.ones(len(self.vertices)), size=size)
        return lam @ self.vertices

    def to_dict(self) -> dict:
        return {"polytope": {"vertices": self.vertices.tolist()}}


ActionSpace = Union[Box, Ball, VertexPolytope]


def _require_member(space, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (space.dim,):
        raise GeometryError(f"point has shape {p.shape}, expected ({space.dim},)")
    if not space.contains(p):
        raise GeometryError("point lies outside the action space")
    return p


def min_norm_point(P: np.ndarray, max_iter: int = 1000, rtol: float = 1e-13):
    """Wolfe's algorithm for the minimum-norm point of ``conv(P)``.

    Returns ``(support, weights)``: indices into the rows of ``P`` and
    convex-combination weights on them. The iterate is always an exact
    convex combination, so the resulting point lies inside the hull.
    """
    P = np.asarray(P, dtype=float)
    sq = np.einsum("ij,ij->i", P, P)
    scale = max(float(sq.max()), 1e-300)
    j = int(np.argmin(sq))
    support = [j]
    lam = np.array([1.0])
    x = P[j].copy()
    for _ in range(max_iter):
        dots = P @ x
        k = int(np.argmin(dots))
        if x @ x - dots[k] <= rtol * scale or k in support:
            break
        support.append(k)
        lam = np.append(lam, 0.0)
        while True:
            Q = P[support]
            # affine minimizer over aff(Q): Q[0] + sum_j beta_j (Q[j] - Q[0])
            D = (Q[1:] - Q[0]).T
            beta = np.linalg.lstsq(D, -Q[0], rcond=None)[0]
            alpha = np.concatenate([[1.0 - beta.sum()], beta])
            if np.all(alpha > 1e-15):
                lam = alpha
                x = alpha @ Q
                break
            neg = alpha <= 1e-15
            denom = lam[neg] - alpha[neg]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, lam[neg] / denom, 0.0)
            theta = float(np.clip(ratios.min(), 0.0, 1.0))
            lam = lam + theta * (alpha - lam)
            keep = lam > 1e-15
            if keep.all():
                # degenerate step; drop the smallest weight to guarantee progress
                keep[int(np.argmin(lam))] = False
            support = [s for s, kp in zip(support, keep) if kp]
            lam = lam[keep] / lam[keep].sum()
            x = lam @ P[support]
            if len(support) == 1:
                break
    return support, lam


def space_from_dict(obj: dict) -> ActionSpace:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise GeometryError('space must be an object with exactly one of "box", "ball", "polytope"')
    (kind, body), = obj.items()
    if not isinstance(body, dict):
        raise GeometryError(f"space.{kind} must be an object")
    try:
        if kind == "box":
            return Box(body["lo"], body["hi"])
        if kind == "ball":
            return Ball(body["center"], body["radius"])
        if kind == "polytope":
            return VertexPolytope(body["vertices"])
    except KeyError as e:
        raise GeometryError(f"space.{kind} is missing field {e.args[0]!r}") from None
    raise GeometryError(f"unknown space kind {kind!r}")


def diameter_proxy(space: ActionSpace) -> float:
    lo, hi = space.bounding_box()
    return float(np.linalg.norm(hi - lo))
