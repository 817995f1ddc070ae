"""Weakly dominant strategies under the negative inner product loss.

With loss ``-t_i . xhat`` a player's best response maximizes the linear
function ``w_i t_i . x_i`` and does not depend on anybody else, so each
player solves its own problem from ``(space, w_i, t_i)`` alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .game import GameSpec, as_profile
from .geometry import ActionSpace, Box
from .potential import receiver_aggregate

DOMINANCE_TOL = 1e-9


class DominanceViolation(AssertionError):
    def __init__(self, message: str, witness: dict):
        super().__init__(message)
        self.witness = witness


@dataclass
class DominantAction:
    point: np.ndarray
    # coordinates free on the optimal face; only tracked for boxes
    free_coordinates: Optional[list] = None


@dataclass
class WDSEResult:
    profile: np.ndarray
    actions: list

    def to_dict(self) -> dict:
        return {
            "profile": self.profile.tolist(),
            "tie_faces": [
                {"player": i, "point": a.point.tolist(), "free_coordinates": a.free_coordinates}
                for i, a in enumerate(self.actions)
            ],
        }


def inner_product_loss(spec: GameSpec, x, i: int) -> float:
    return -float(spec.t[i] @ receiver_aggregate(spec, x))


def dominant_action(space: ActionSpace, w_i: float, t_i) -> DominantAction:
    """Canonical maximizer of ``w_i t_i . x`` over ``space`` (per-player view)."""
    c = float(w_i) * np.asarray(t_i, dtype=float)
    free = space.tied_coordinates(c) if isinstance(space, Box) else None
    return DominantAction(space.linear_maximize(c), free)


def wdse_solve(spec: GameSpec) -> WDSEResult:
    acts = [dominant_action(spec.space, spec.w[i], spec.t[i]) for i in range(spec.n)]
    return WDSEResult(np.array([a.point for a in acts]), acts)


def inner_product_best_response(spec: GameSpec, x, i: int) -> np.ndarray:
    """Best response of player ``i`` to ``x_-i``.

    The loss is ``-w_i t_i . x_i - t_i . z`` where ``z`` collects the
    opponents; ``z`` only shifts the loss, so the argmin comes from the
    ``x_i`` coefficient.
    """
    np.asarray(x, dtype=float).reshape(spec.n, spec.d)
    return spec.space.linear_maximize(spec.w[i] * spec.t[i])


@dataclass
class WDSEVerification:
    passed: bool
    samples: int
    max_excess: float
    best_response_identical: bool

    def to_dict(self) -> dict:
        return {"passed": self.passed, "samples": self.samples, "max_excess": self.max_excess,
                "best_response_identical": self.best_response_identical}


def wdse_verify(spec: GameSpec, x, samples: int = 1000, seed: int = 0) -> WDSEVerification:
    """Sampled check that every row of ``x`` is dominant.

    For each sample, draws a fresh opponent profile and a deviation ``y``
    for every player and requires ``loss_i(x_i, .) <= loss_i(y, .) + 1e-9``.
    Also requires the best response to be bit-identical across draws.
    Raises ``DominanceViolation`` with a witness on the first failure.
    """
    x = as_profile(spec, x)
    rng = np.random.default_rng(seed)
    space = spec.space
    max_excess = -np.inf
    first_br = [None] * spec.n
    for s in range(samples):
        opp = space.sample(rng, spec.n)
        ys = space.sample(rng, spec.n)
        for i in range(spec.n):
            prof = opp.copy()
            prof[i] = x[i]
            here = inner_product_loss(spec, prof, i)
            prof[i] = ys[i]
            there = inner_product_loss(spec, prof, i)
            excess = here - there
            max_excess = max(max_excess, excess)
            if excess > DOMINANCE_TOL:
                raise DominanceViolation(
                    f"player {i} gains {excess:.3e} by deviating",
                    {"player": i, "sample": s, "opponents": opp.tolist(),
                     "deviation": ys[i].tolist(), "gain": excess})
            br = inner_product_best_response(spec, opp, i)
            if first_br[i] is None:
                first_br[i] = br
            elif not np.array_equal(br, first_br[i]):
                raise DominanceViolation(
                    f"best response of player {i} depends on the opponents",
                    {"player": i, "sample": s, "best_response": br.tolist(),
                     "first_best_response": first_br[i].tolist()})
    return WDSEVerification(True, samples, float(max_excess), True)
