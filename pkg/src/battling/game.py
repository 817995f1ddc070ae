"""Continuous game instances and joint-action profiles."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import ActionSpace, GeometryError, membership_tol, space_from_dict


class SpecError(ValueError):
    """Malformed game instance. ``location`` names the offending field."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A continuous influencer game.

    The receiver is ``w0 * x0 + sum_i w[i] * x_i`` and player ``i`` wants it
    to land on ``t[i]``. Arrays are coerced to float and frozen; validation
    happens at construction time, so every instance is a validated one.
    """

    space: ActionSpace
    w0: float
    x0: np.ndarray
    w: np.ndarray
    t: np.ndarray
    warnings: tuple[str, ...] = field(default=(), init=False)

    def __post_init__(self):
        d = self.space.dim
        try:
            w = np.array(self.w, dtype=float).reshape(-1)
        except (TypeError, ValueError):
            raise SpecError("weights must be real numbers", "w") from None
        n = w.size
        if n == 0:
            raise SpecError("a game needs at least one player", "w")
        try:
            t = np.array(self.t, dtype=float)
        except (TypeError, ValueError):
            raise SpecError("targets must be points", "t") from None
        if d == 1 and t.ndim == 1:
            t = t.reshape(-1, 1)
        if t.ndim != 2 or t.shape[0] != n:
            raise SpecError(f"expected {n} targets (one per weight)", "t")
        if t.shape[1] != d:
            raise SpecError(f"targets must have dimension {d}", "t")
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.size != d:
            raise SpecError(f"x0 must have dimension {d}", "x0")
        w0 = float(self.w0)
        for name, arr in (("w0", np.array([w0])), ("w", w), ("t", t), ("x0", x0)):
            if not np.all(np.isfinite(arr)):
                raise SpecError("values must be finite", name)
        if not self.space.contains(x0):
            raise SpecError("background point x0 lies outside the action space", "x0")
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "x0", _frozen(x0))
        object.__setattr__(self, "w", _frozen(w))
        object.__setattr__(self, "t", _frozen(t))
        notes = tuple(f"player {i} has zero weight; its best response is indeterminate"
                      for i in np.flatnonzero(w == 0))
        object.__setattr__(self, "warnings", notes)

    @property
    def n(self) -> int:
        return self.w.size

    @property
    def d(self) -> int:
        return self.space.dim

    @property
    def targets_distinct(self) -> bool:
        return all(np.linalg.norm(a - b) > 0 for a, b in itertools.combinations(self.t, 2))

    @property
    def zero_weight_players(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.w == 0)]

    @property
    def background(self) -> np.ndarray:
        return self.w0 * self.x0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "space": self.space.to_dict(),
            "w0": self.w0,
            "x0": self.x0.tolist(),
            "w": self.w.tolist(),
            "t": self.t.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GameSpec":
        if not isinstance(obj, dict):
            raise SpecError("game section must be an object")
        missing = [k for k in ("space", "w0", "x0", "w", "t") if k not in obj]
        if missing:
            raise SpecError(f"missing field(s) {missing}")
        try:
            space = space_from_dict(obj["space"])
        except GeometryError as e:
            raise SpecError(str(e), "space") from None
        spec = cls(space=space, w0=obj["w0"], x0=obj["x0"], w=obj["w"], t=obj["t"])
        if "n" in obj and obj["n"] != spec.n:
            raise SpecError(f"n={obj['n']} but {spec.n} weights given", "n")
        if "d" in obj and obj["d"] != spec.d:
            raise SpecError(f"d={obj['d']} but the space has dimension {spec.d}", "d")
        return spec


def validate_spec(spec) -> GameSpec:
    """Return a validated ``GameSpec`` from a spec or its dict form.

    Zero-weight players are accepted and reported through ``spec.warnings``
    (also emitted as Python warnings).
    """
    if isinstance(spec, dict):
        spec = GameSpec.from_dict(spec)
    elif isinstance(spec, GameSpec):
        spec = GameSpec(space=spec.space, w0=spec.w0, x0=spec.x0, w=spec.w, t=spec.t)
    else:
        raise SpecError(f"cannot validate object of type {type(spec).__name__}")
    for note in spec.warnings:
        warnings.warn(note, stacklevel=2)
    return spec


def as_profile(spec: GameSpec, x, check: bool = True) -> np.ndarray:
    """Coerce ``x`` to an ``(n, d)`` profile array, optionally checking membership."""
    arr = np.array(x, dtype=float)
    if spec.d == 1 and arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.shape != (spec.n, spec.d):
        raise SpecError(f"profile has shape {arr.shape}, expected {(spec.n, spec.d)}")
    if check:
        for i, xi in enumerate(arr):
            if not spec.space.contains(xi):
                raise SpecError(f"action of player {i} lies outside the action space "
                                f"(tolerance {membership_tol(xi):.1e})", f"x[{i}]")
    return arr


def random_profile(spec: GameSpec, rng) -> np.ndarray:
    """Uniform draw on the space's bounding box, then projected.

    Draw order is player-major, coordinate-minor.
    """
    lo, hi = spec.space.bounding_box()
    raw = rng.uniform(size=(spec.n, spec.d)) * (hi - lo) + lo
    return spec.space.project_rows(raw)
