"""The finite-action game: each player picks a size-k subset of a ground set.

A subset action is a sorted tuple of indices into the ground set (a sorted
multiset when repeats are allowed). Choosing ``k_i`` items with weight
``w_i`` is equivalent to one meta item ``mean(items)`` with weight
``w_i * k_i``, which gives the potential below.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .game import SpecError

ENUMERATION_CAP = 10**6
PROFILE_CAP = 10**7
MITM_HALF_CAP = 2**22


class InstanceTooLarge(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGameSpec:
    ground_set: np.ndarray
    k: tuple
    w0: float
    x0: np.ndarray
    w: np.ndarray
    t: np.ndarray
    repeats_allowed: bool = False

    def __post_init__(self):
        G = np.array(self.ground_set, dtype=float)
        if G.ndim == 1:
            G = G.reshape(-1, 1)
        if G.ndim != 2 or G.shape[0] == 0:
            raise SpecError("ground set must be a non-empty list of points", "ground_set")
        M, d = G.shape
        if len({tuple(row) for row in G}) != M:
            raise SpecError("ground set points must be pairwise distinct", "ground_set")
        w = np.array(self.w, dtype=float).reshape(-1)
        n = w.size
        if n == 0:
            raise SpecError("a game needs at least one player", "w")
        k = tuple(int(v) for v in np.atleast_1d(self.k))
        if len(k) != n:
            raise SpecError(f"expected {n} subset sizes", "k")
        for i, ki in enumerate(k):
            if ki < 1 or (not self.repeats_allowed and ki > M):
                raise SpecError(f"subset size {ki} infeasible for a ground set of {M}", f"k[{i}]")
        t = np.array(self.t, dtype=float)
        if d == 1 and t.ndim == 1:
            t = t.reshape(-1, 1)
        if t.shape != (n, d):
            raise SpecError(f"targets must have shape {(n, d)}", "t")
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if x0.size != d:
            raise SpecError(f"x0 must have dimension {d}", "x0")
        for a in (G, w, t, x0):
            a.setflags(write=False)
        object.__setattr__(self, "ground_set", G)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "w0", float(self.w0))
        object.__setattr__(self, "repeats_allowed", bool(self.repeats_allowed))

    @property
    def n(self) -> int:
        return self.w.size

    @property
    def d(self) -> int:
        return self.ground_set.shape[1]

    @property
    def M(self) -> int:
        return self.ground_set.shape[0]

    @property
    def background(self) -> np.ndarray:
        return self.w0 * self.x0

    def action_count(self, i: int) -> int:
        if self.repeats_allowed:
            return math.comb(self.M + self.k[i] - 1, self.k[i])
        return math.comb(self.M, self.k[i])

    def actions(self, i: int):
        gen = itertools.combinations_with_replacement if self.repeats_allowed else itertools.combinations
        return gen(range(self.M), self.k[i])

    def to_dict(self) -> dict:
        return {
            "ground_set": self.ground_set.tolist(),
            "k": list(self.k),
            "repeats_allowed": self.repeats_allowed,
            "w0": self.w0,
            "x0": self.x0.tolist(),
            "w": self.w.tolist(),
            "t": self.t.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FiniteGameSpec":
        if not isinstance(obj, dict):
            raise SpecError("finite section must be an object")
        missing = [f for f in ("ground_set", "k", "w", "t") if f not in obj]
        if missing:
            raise SpecError(f"missing field(s) {missing}")
        d = np.array(obj["ground_set"], dtype=float).reshape(len(obj["ground_set"]), -1).shape[1]
        return cls(ground_set=obj["ground_set"], k=obj["k"], w0=obj.get("w0", 0.0),
                   x0=obj.get("x0", [0.0] * d), w=obj["w"], t=obj["t"],
                   repeats_allowed=obj.get("repeats_allowed", False))


def canonical(action) -> tuple:
    return tuple(sorted(int(a) for a in action))


def check_action(spec: FiniteGameSpec, action, i: int) -> tuple:
    a = canonical(action)
    if len(a) != spec.k[i]:
        raise SpecError(f"player {i} must choose exactly {spec.k[i]} items, got {len(a)}")
    if any(j < 0 or j >= spec.M for j in a):
        raise SpecError(f"player {i} chose an index outside the ground set")
    if not spec.repeats_allowed and len(set(a)) != len(a):
        raise SpecError(f"player {i} repeated an item but repeats are not allowed")
    return a


def _check_profile(spec: FiniteGameSpec, actions) -> tuple:
    if len(actions) != spec.n:
        raise SpecError(f"expected {spec.n} actions, got {len(actions)}")
    return tuple(check_action(spec, a, i) for i, a in enumerate(actions))


def _item_sum(spec: FiniteGameSpec, action) -> np.ndarray:
    return spec.ground_set[list(action)].sum(axis=0)


def finite_receiver(spec: FiniteGameSpec, actions) -> np.ndarray:
    actions = _check_profile(spec, actions)
    out = spec.background.copy()
    for i, a in enumerate(actions):
        out = out + spec.w[i] * _item_sum(spec, a)
    return out


def meta_reduce(spec: FiniteGameSpec, action, i: int):
    """Meta weight ``w_i k_i`` and meta item (mean of the chosen items)."""
    a = check_action(spec, action, i)
    return spec.w[i] * spec.k[i], spec.ground_set[list(a)].mean(axis=0)


def finite_loss(spec: FiniteGameSpec, actions, i: int) -> float:
    r = finite_receiver(spec, actions) - spec.t[i]
    return float(r @ r)


def finite_potential(spec: FiniteGameSpec, actions) -> float:
    actions = _check_profile(spec, actions)
    agg = spec.background.copy()
    lin = 0.0
    for i, a in enumerate(actions):
        wm, xm = meta_reduce(spec, a, i)
        agg = agg + wm * xm
        lin += wm * float(spec.t[i] @ xm)
    return float(agg @ agg - 2.0 * lin)


def _opponent_part(spec: FiniteGameSpec, actions, i: int) -> np.ndarray:
    z = spec.background.copy()
    for j, a in enumerate(actions):
        if j != i:
            z = z + spec.w[j] * _item_sum(spec, a)
    return z


def _exact_loss(spec, z, i, action) -> float:
    # correctly rounded sums so that ties compare identically across search paths
    s = [math.fsum(spec.ground_set[list(action), k]) for k in range(spec.d)]
    r = [z[k] + spec.w[i] * s[k] - spec.t[i][k] for k in range(spec.d)]
    return math.fsum(v * v for v in r)


def _pick(spec, z, i, candidates) -> tuple:
    return min((_exact_loss(spec, z, i, c), c) for c in candidates)[1]


def finite_best_response(spec: FiniteGameSpec, actions, i: int,
                         enumeration_cap: int = ENUMERATION_CAP) -> tuple:
    """A size-``k_i`` subset minimizing player ``i``'s loss.

    Exhaustive when there are at most ``enumeration_cap`` candidate subsets;
    otherwise meet-in-the-middle over two halves of the ground set (one
    dimension, no repeats). Ties go to the lexicographically smallest index
    tuple.
    """
    actions = _check_profile(spec, actions)
    if spec.w[i] == 0:
        from .solvers import ZeroWeightPlayer

        raise ZeroWeightPlayer(f"player {i} has zero weight")
    z = _opponent_part(spec, actions, i)
    if spec.action_count(i) <= enumeration_cap:
        return _enumerate_best(spec, z, i)
    if spec.d == 1 and not spec.repeats_allowed:
        return _mitm_best(spec, z, i)
    raise InstanceTooLarge(
        f"player {i} has {spec.action_count(i)} candidate subsets (cap {enumeration_cap}) "
        "and meet-in-the-middle needs d = 1 without repeats")


def _enumerate_best(spec, z, i) -> tuple:
    idx = np.array(list(spec.actions(i)), dtype=np.intp)
    sums = spec.ground_set[idx].sum(axis=1)
    r = z + spec.w[i] * sums - spec.t[i]
    loss = np.einsum("ij,ij->i", r, r)
    best = loss.min()
    near = np.flatnonzero(loss <= best + 1e-12 * (1.0 + best))
    return _pick(spec, z, i, [tuple(int(v) for v in idx[j]) for j in near])


def _half_sums(values, indices, size):
    combos = list(itertools.combinations(indices, size))
    sums = [math.fsum(values[list(c)]) for c in combos]
    return combos, sums


def _mitm_best(spec, z, i) -> tuple:
    g = spec.ground_set[:, 0]
    k = spec.k[i]
    wi = spec.w[i]
    goal = (spec.t[i][0] - z[0]) / wi
    half = spec.M // 2
    left, right = list(range(half)), list(range(half, spec.M))
    if 2 ** max(len(left), len(right)) > MITM_HALF_CAP:
        raise InstanceTooLarge(f"meet-in-the-middle over {spec.M} items is too large")
    splits = []
    best = math.inf
    for j in range(max(0, k - len(right)), min(k, len(left)) + 1):
        lc, ls = _half_sums(g, left, j)
        rc, rs = _half_sums(g, right, k - j)
        order = sorted(range(len(rs)), key=rs.__getitem__)
        rc = [rc[o] for o in order]
        rs = [rs[o] for o in order]
        splits.append((lc, ls, rc, rs))
        for a in ls:
            pos = bisect.bisect_left(rs, goal - a)
            for q in (pos - 1, pos):
                if 0 <= q < len(rs):
                    best = min(best, abs(a + rs[q] - goal))
    slack = best + 1e-9 * (1.0 + abs(goal))
    cands = []
    for lc, ls, rc, rs in splits:
        for c, a in zip(lc, ls):
            lo = bisect.bisect_left(rs, goal - a - slack)
            hi = bisect.bisect_right(rs, goal - a + slack)
            cands.extend(tuple(sorted(c + rc[q])) for q in range(lo, hi))
    return _pick(spec, z, i, cands)


@dataclass
class FiniteDynamicsReport:
    profile: tuple
    rounds: int
    steps: int
    converged: bool
    potentials: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"profile": [list(a) for a in self.profile], "rounds": self.rounds,
                "steps": self.steps, "converged": self.converged,
                "potentials": list(self.potentials)}


def finite_br_dynamics(spec: FiniteGameSpec, start, max_rounds: int = 1000,
                       enumeration_cap: int = ENUMERATION_CAP) -> FiniteDynamicsReport:
    """Cyclic best responses until a full round changes nothing.

    A player switches only when the best response strictly lowers its loss,
    so the potential strictly decreases on every step and the run cannot
    cycle.
    """
    prof = list(_check_profile(spec, start))
    phi = finite_potential(spec, prof)
    pots = [phi]
    steps = 0
    for rnd in range(max_rounds):
        moved = False
        for i in range(spec.n):
            if spec.w[i] == 0:
                continue
            br = finite_best_response(spec, prof, i, enumeration_cap)
            cur = finite_loss(spec, prof, i)
            trial = list(prof)
            trial[i] = br
            new = finite_loss(spec, trial, i)
            if new >= cur - 1e-12 * (1.0 + cur):
                continue
            phi_new = finite_potential(spec, trial)
            assert phi_new < phi, "potential failed to decrease on a productive step"
            prof, phi, moved = trial, phi_new, True
            steps += 1
            pots.append(phi)
        if not moved:
            return FiniteDynamicsReport(tuple(prof), rnd, steps, True, pots)
    return FiniteDynamicsReport(tuple(prof), max_rounds, steps, False, pots)


def is_pure_ne(spec: FiniteGameSpec, actions, tol: float = 1e-12) -> bool:
    """Direct check of every unilateral deviation."""
    actions = _check_profile(spec, actions)
    for i in range(spec.n):
        cur = finite_loss(spec, actions, i)
        z = _opponent_part(spec, actions, i)
        for c in spec.actions(i):
            r = z + spec.w[i] * _item_sum(spec, c) - spec.t[i]
            if float(r @ r) < cur - tol * (1.0 + cur):
                return False
    return True


def enumerate_pure_ne(spec: FiniteGameSpec, cap: int = PROFILE_CAP) -> list:
    """Every pure equilibrium, by testing all joint profiles.

    Returned as a canonically sorted list of tuples of index tuples.
    """
    total = math.prod(spec.action_count(i) for i in range(spec.n))
    if total > cap:
        raise InstanceTooLarge(f"{total} joint profiles exceed cap {cap}")
    acts = [list(spec.actions(i)) for i in range(spec.n)]
    contrib = [spec.w[i] * spec.ground_set[np.array(acts[i], dtype=np.intp)].sum(axis=1)
               for i in range(spec.n)]
    out = []
    for combo in itertools.product(*(range(len(a)) for a in acts)):
        xhat = spec.background + sum(contrib[i][c] for i, c in enumerate(combo))
        ok = True
        for i, c in enumerate(combo):
            r = xhat - spec.t[i]
            cur = float(r @ r)
            alt = xhat - contrib[i][c] + contrib[i] - spec.t[i]
            if np.einsum("ij,ij->i", alt, alt).min() < cur - 1e-12 * (1.0 + cur):
                ok = False
                break
        if ok:
            out.append(tuple(acts[i][c] for i, c in enumerate(combo)))
    return sorted(out)


def build_expne_instance(M: int, k: int) -> FiniteGameSpec:
    """Two-player instance with many equilibria.

    Ground set ``{-2k 2^j} + {2k 2^j}`` for ``j < M/2`` (negative half first),
    targets -1/4 and 1/4, both players pick ``k`` items, receiver is the
    plain average of the ``2k`` chosen items.
    """
    if k < 1 or M < 2 * k or M % 2:
        raise ValueError("need k >= 1 and an even M >= 2k")
    half = [2 * k * 2**j for j in range(M // 2)]
    ground = [-v for v in half] + half
    return FiniteGameSpec(ground_set=ground, k=(k, k), w0=0.0, x0=[0.0],
                          w=[1 / (2 * k)] * 2, t=[-0.25, 0.25], repeats_allowed=False)


def random_start(spec: FiniteGameSpec, rng) -> tuple:
    out = []
    for i in range(spec.n):
        if spec.repeats_allowed:
            out.append(canonical(rng.integers(0, spec.M, size=spec.k[i])))
        else:
            out.append(canonical(rng.choice(spec.M, size=spec.k[i], replace=False)))
    return tuple(out)
