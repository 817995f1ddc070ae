"""Pure Nash equilibria of the continuous game.

Equilibria are exactly the minimizers of the potential over the joint
action space, so they are computed by projected gradient descent on the
potential or by cyclic exact best responses (coordinate descent).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .game import GameSpec, as_profile, random_profile
from .geometry import diameter_proxy
from .potential import (
    lipschitz_constant,
    player_loss,
    player_losses,
    potential,
    potential_gradient,
    receiver_aggregate,
)

logger = logging.getLogger(__name__)

DISTINCT_NE_THRESHOLD = 1e-4


class SolverError(RuntimeError):
    pass


class ZeroWeightPlayer(SolverError):
    """Every action is a best response for a player with zero weight."""


class NonConvergence(SolverError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class AuditViolation(SolverError):
    """An equilibrium contradicts the at-most-one-interior-player property."""


@dataclass
class SolveReport:
    profile: np.ndarray
    phi_value: float
    iterations: int
    converged: bool
    method: str = ""
    trajectory: Optional[list] = None

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "profile": self.profile.tolist(),
            "phi": self.phi_value,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        return out


@dataclass
class VerificationReport:
    passed: bool
    gains: list
    losses: list
    eps: float

    def to_dict(self) -> dict:
        return {"passed": self.passed, "gains": list(self.gains), "losses": list(self.losses),
                "eps": self.eps}


@dataclass
class ExaggerationAudit:
    interior_players: list
    receiver_point: np.ndarray
    winner: Optional[int] = None
    interior_distances: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "interior_players": list(self.interior_players),
            "receiver": self.receiver_point.tolist(),
            "winner": self.winner,
            "interior_distances": list(self.interior_distances),
        }


@dataclass
class CardinalityReport:
    cardinality: str  # "unique" or "infinite"
    profile: Optional[np.ndarray] = None
    witnesses: Optional[tuple] = None
    midpoint_verified: Optional[bool] = None
    solutions: list = field(default_factory=list)
    note: str = ("probe only: distinct equilibria from random restarts prove an infinite "
                 "set; agreement of all restarts is evidence of, not proof of, uniqueness")

    def to_dict(self) -> dict:
        out = {"cardinality": self.cardinality, "note": self.note,
               "restarts": len(self.solutions)}
        if self.profile is not None:
            out["profile"] = self.profile.tolist()
        if self.witnesses is not None:
            out["witnesses"] = [w.tolist() for w in self.witnesses]
            out["midpoint_verified"] = self.midpoint_verified
        return out


def best_response(spec: GameSpec, x, i: int) -> np.ndarray:
    """Exact best response of player ``i`` to the other rows of ``x``.

    The loss is ``w_i^2 ||x_i - (t_i - z) / w_i||^2`` with ``z`` the
    opponents' contribution, so the minimizer is a projection. ``x[i]`` is
    ignored.
    """
    wi = spec.w[i]
    if wi == 0:
        raise ZeroWeightPlayer(f"player {i} has zero weight")
    x = np.asarray(x, dtype=float).reshape(spec.n, spec.d)
    z = spec.background + spec.w @ x - wi * x[i]
    return spec.space.project((spec.t[i] - z) / wi)


def _active_players(spec: GameSpec) -> list[int]:
    return [i for i in range(spec.n) if spec.w[i] != 0]


def br_dynamics(spec: GameSpec, x0, max_rounds: int = 10_000, tol: float = 1e-9,
                record: bool = False) -> SolveReport:
    """Cyclic best-response dynamics from ``x0``.

    Zero-weight players stay frozen. A move is applied only if it exceeds
    ``tol`` and does not raise the potential; the run stops after a round in
    which no move was applied. ``iterations`` counts productive rounds.
    """
    x = as_profile(spec, x0).copy()
    phi = potential(spec, x)
    traj = [(0, phi, x.copy())] if record else None
    players = _active_players(spec)
    step = 0
    for rnd in range(max_rounds):
        moved = False
        for i in players:
            br = best_response(spec, x, i)
            if np.linalg.norm(br - x[i]) <= tol:
                continue
            trial = x.copy()
            trial[i] = br
            phi_new = potential(spec, trial)
            if phi_new > phi:
                continue
            x, phi, moved = trial, phi_new, True
            step += 1
            if record:
                traj.append((step, phi, x.copy()))
        if not moved:
            return SolveReport(x, phi, rnd, True, "best_response", traj)
    logger.warning("best-response dynamics hit max_rounds=%d", max_rounds)
    return SolveReport(x, phi, max_rounds, False, "best_response", traj)


def pgd_solve(spec: GameSpec, x0=None, step: float | None = None, max_iters: int = 200_000,
              tol: float = 1e-9, record: bool = False) -> SolveReport:
    """Projected gradient descent on the potential over the joint space.

    Default step is ``1 / (2 ||w||^2)``, the inverse Lipschitz constant of the
    gradient. Stops when the gradient-mapping norm ``||x - P(x - s g)|| / s``
    is at most ``tol``.
    """
    space = spec.space
    if x0 is None:
        x0 = space.project_rows(np.broadcast_to(spec.x0, (spec.n, spec.d)))
    x = space.project_rows(as_profile(spec, x0, check=False))
    L = lipschitz_constant(spec)
    phi = potential(spec, x)
    traj = [(0, phi, x.copy())] if record else None
    if L == 0:
        return SolveReport(x, phi, 0, True, "pgd", traj)
    s = 1.0 / L if step is None else float(step)
    for it in range(1, max_iters + 1):
        g = potential_gradient(spec, x)
        x_new = space.project_rows(x - s * g)
        gm = np.linalg.norm(x - x_new) / s
        x = x_new
        phi = potential(spec, x)
        if record:
            traj.append((it, phi, x.copy()))
        if gm <= tol:
            return SolveReport(x, phi, it, True, "pgd", traj)
    logger.warning("pgd hit max_iters=%d", max_iters)
    return SolveReport(x, phi, max_iters, False, "pgd", traj)


def verify_pure_ne(spec: GameSpec, x, eps: float = 1e-6) -> VerificationReport:
    """Check the equilibrium condition through each player's exact best response.

    The gain of player ``i`` is ``loss_i(x) - loss_i(BR_i, x_-i)``; the check
    passes iff every gain is at most ``eps * (1 + loss_i(x))``.
    """
    x = as_profile(spec, x)
    losses = player_losses(spec, x)
    gains = []
    ok = True
    for i in range(spec.n):
        if spec.w[i] == 0:
            gains.append(0.0)
            continue
        dev = x.copy()
        dev[i] = best_response(spec, x, i)
        gain = float(losses[i] - player_loss(spec, dev, i))
        gains.append(gain)
        if gain > eps * (1.0 + abs(losses[i])):
            ok = False
    return VerificationReport(ok, gains, losses.tolist(), eps)


def classify_cardinality(spec: GameSpec, restarts: int = 8, seed: int = 0,
                         tol: float = 1e-9, eps: float = 1e-6) -> CardinalityReport:
    """Probe whether the equilibrium set is a single point.

    Runs ``pgd_solve`` from seeded random starts. Two verified equilibria
    more than ``1e-4`` apart prove the set is infinite (it is convex, so
    their midpoint must also verify).
    """
    if restarts < 2:
        raise ValueError("restarts must be at least 2")
    rng = np.random.default_rng(seed)
    sols = []
    for r in range(restarts):
        rep = pgd_solve(spec, random_profile(spec, rng), tol=tol)
        if not rep.converged:
            raise NonConvergence(f"restart {r} did not converge", rep)
        if not verify_pure_ne(spec, rep.profile, eps).passed:
            raise NonConvergence(f"restart {r} converged to a point failing verification", rep)
        sols.append(rep.profile)
    best, pair = 0.0, None
    for a in range(len(sols)):
        for b in range(a + 1, len(sols)):
            dist = float(np.linalg.norm(sols[a] - sols[b]))
            if dist > best:
                best, pair = dist, (sols[a], sols[b])
    if best > DISTINCT_NE_THRESHOLD:
        mid = 0.5 * (pair[0] + pair[1])
        return CardinalityReport("infinite", witnesses=pair,
                                 midpoint_verified=verify_pure_ne(spec, mid, eps).passed,
                                 solutions=sols)
    consensus = spec.space.project_rows(np.mean(sols, axis=0))
    return CardinalityReport("unique", profile=consensus, solutions=sols)


def exaggeration_audit(spec: GameSpec, x, eps_int: float | None = None,
                       eps_win: float | None = None, eps_ne: float = 1e-6) -> ExaggerationAudit:
    """Find players strictly inside the action space at an equilibrium.

    With distinct targets at most one player can be interior, and if one is,
    the receiver sits on that player's target. Anything else raises
    ``AuditViolation``.
    """
    if not spec.targets_distinct:
        raise ValueError("exaggeration audit requires pairwise distinct targets")
    x = as_profile(spec, x)
    if not verify_pure_ne(spec, x, eps_ne).passed:
        raise ValueError("exaggeration audit requires a verified pure equilibrium")
    if eps_int is None:
        eps_int = 1e-6 * (1.0 + diameter_proxy(spec.space))
    xhat = receiver_aggregate(spec, x)
    dists = [spec.space.interior_distance(xi) for xi in x]
    interior = [i for i in _active_players(spec) if dists[i] > eps_int]
    if len(interior) > 1:
        raise AuditViolation(f"players {interior} are all interior at an equilibrium")
    audit = ExaggerationAudit(interior, xhat, None, dists)
    if interior:
        win = interior[0]
        tol = 1e-6 * (1.0 + np.linalg.norm(spec.t[win])) if eps_win is None else eps_win
        miss = float(np.linalg.norm(xhat - spec.t[win]))
        if miss > tol:
            raise AuditViolation(f"interior player {win} misses its target by {miss:.3e}")
        audit.winner = win
    return audit


def write_trajectory_csv(report: SolveReport, path) -> None:
    """Columns: iteration, phi, then actions player-major, coordinate-minor."""
    if report.trajectory is None:
        raise ValueError("report has no trajectory; solve with record=True")
    n, d = report.profile.shape
    header = ["iteration", "phi"] + [f"x{i}_{k}" for i in range(n) for k in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for it, phi, prof in report.trajectory:
            w.writerow([it, repr(float(phi))] + [repr(float(v)) for v in prof.reshape(-1)])
