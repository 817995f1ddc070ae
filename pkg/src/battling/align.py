"""Strategic preference labelling against a maximum-likelihood ideal point.

Each player labels a fixed set of response pairs ``(y, y')`` with a
Bradley-Terry-Luce model around a (possibly fake) ideal point. The
receiver fits one global ideal point to the pooled labels by maximum
likelihood. Players then take turns searching for the fake ideal point
that pulls the fit onto their true ideal point.

Randomness: player ``i`` draws from ``default_rng(seed + i)``, first all
pairs as one ``(N, 2, d)`` uniform array, then one uniform per pair. A label
is ``+1`` iff that uniform is below the BTL probability of ``y`` winning, so
relabelling with a new ideal point reuses the same uniforms.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .game import GameSpec
from .geometry import Box
from .solvers import NonConvergence, pgd_solve

logger = logging.getLogger(__name__)


class MonotonicityViolation(RuntimeError):
    pass


@dataclass
class AlignmentScenario:
    true_ideal: np.ndarray  # (n, d)
    action_interval: tuple = (-1.0, 1.0)
    N: tuple = (10_000, 10_000)
    response_box: tuple = (-10.0, 10.0)
    seed: int = 0
    search_steps: int = 20
    change_tol: float = 0.01
    mle_tol: float = 1e-8

    def __post_init__(self):
        t = np.array(self.true_ideal, dtype=float)
        if t.ndim == 1:
            t = t.reshape(-1, 1)
        self.true_ideal = t
        N = np.atleast_1d(np.asarray(self.N, dtype=int))
        if N.size == 1:
            N = np.repeat(N, self.n)
        if N.size != self.n or np.any(N < 1):
            raise ValueError("N needs one positive pair count per player")
        self.N = tuple(int(v) for v in N)
        lo, hi = (float(v) for v in self.action_interval)
        if not lo < hi:
            raise ValueError("action interval must be non-degenerate")
        self.action_interval = (lo, hi)
        rlo, rhi = (float(v) for v in self.response_box)
        if not rlo < rhi:
            raise ValueError("response box must be non-degenerate")
        self.response_box = (rlo, rhi)

    @property
    def n(self) -> int:
        return self.true_ideal.shape[0]

    @property
    def d(self) -> int:
        return self.true_ideal.shape[1]

    @classmethod
    def from_dict(cls, obj: dict) -> "AlignmentScenario":
        known = {"true_ideal", "action_interval", "N", "response_box", "seed",
                 "search_steps", "change_tol", "mle_tol"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown alignment field(s) {sorted(extra)}")
        if "true_ideal" not in obj:
            raise ValueError("alignment section needs true_ideal")
        return cls(**obj)

    def to_dict(self) -> dict:
        return {"true_ideal": self.true_ideal.tolist(), "action_interval": list(self.action_interval),
                "N": list(self.N), "response_box": list(self.response_box), "seed": self.seed,
                "search_steps": self.search_steps, "change_tol": self.change_tol,
                "mle_tol": self.mle_tol}


@dataclass(frozen=True)
class PreferenceTuple:
    y: np.ndarray
    y_prime: np.ndarray
    z: int

    def __post_init__(self):
        if self.z not in (-1, 1):
            raise ValueError("label must be -1 or +1")


@dataclass
class PreferenceDataset:
    y: np.ndarray        # (N, d)
    y_prime: np.ndarray  # (N, d)
    z: np.ndarray        # (N,) in {-1, +1}
    player: np.ndarray   # (N,)
    fake_ideal: np.ndarray  # (N, d)

    def __len__(self) -> int:
        return self.z.size

    def tuples(self):
        for a, b, c in zip(self.y, self.y_prime, self.z):
            yield PreferenceTuple(a, b, int(c))

    @classmethod
    def concat(cls, parts) -> "PreferenceDataset":
        parts = list(parts)
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("y", "y_prime", "z", "player", "fake_ideal")))

    def write_csv(self, path) -> None:
        d = self.y.shape[1]
        ycols = ["y"] if d == 1 else [f"y_{k}" for k in range(d)]
        pcols = ["y_prime"] if d == 1 else [f"y_prime_{k}" for k in range(d)]
        fcols = ["fake_ideal"] if d == 1 else [f"fake_ideal_{k}" for k in range(d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(ycols + pcols + ["z", "player"] + fcols)
            for a, b, c, p, f in zip(self.y, self.y_prime, self.z, self.player, self.fake_ideal):
                w.writerow([repr(float(v)) for v in a] + [repr(float(v)) for v in b]
                           + [int(c), int(p)] + [repr(float(v)) for v in f])


def reward(theta, y) -> float:
    diff = np.asarray(y, dtype=float) - np.asarray(theta, dtype=float)
    return -float(diff @ diff) if diff.ndim else -float(diff * diff)


def _logit(theta, y, y_prime):
    # r(y) - r(y') = ||y'||^2 - ||y||^2 + 2 theta . (y - y'), affine in theta
    y = np.atleast_2d(y)
    yp = np.atleast_2d(y_prime)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return np.einsum("ij,ij->i", yp, yp) - np.einsum("ij,ij->i", y, y) + 2.0 * (y - yp) @ theta


def btl_prob(theta, y, y_prime, z) -> float:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    y = np.asarray(y, dtype=float).reshape(1, -1)
    yp = np.asarray(y_prime, dtype=float).reshape(1, -1)
    if z not in (-1, 1):
        raise ValueError("label must be -1 or +1")
    return float(expit(z * _logit(theta, y, yp))[0])


@dataclass
class PairPool:
    """A player's fixed response pairs and labelling uniforms."""

    player: int
    y: np.ndarray
    y_prime: np.ndarray
    u: np.ndarray


def draw_pairs(scenario: AlignmentScenario, i: int, seed: int | None = None) -> PairPool:
    rng = np.random.default_rng((scenario.seed if seed is None else seed) + i)
    lo, hi = scenario.response_box
    pairs = rng.uniform(lo, hi, size=(scenario.N[i], 2, scenario.d))
    u = rng.uniform(size=scenario.N[i])
    return PairPool(i, pairs[:, 0], pairs[:, 1], u)


def sample_labels(scenario: AlignmentScenario, i: int, fake_ideal, pool: PairPool | None = None
                  ) -> PreferenceDataset:
    """Label player ``i``'s pairs with BTL probabilities at ``fake_ideal``."""
    fake = np.atleast_1d(np.asarray(fake_ideal, dtype=float))
    lo, hi = scenario.action_interval
    if np.any(fake < lo - 1e-12) or np.any(fake > hi + 1e-12):
        raise ValueError(f"fake ideal point {fake} outside the action interval")
    if pool is None:
        pool = draw_pairs(scenario, i)
    p = expit(_logit(fake, pool.y, pool.y_prime))
    z = np.where(pool.u < p, 1, -1)
    m = z.size
    return PreferenceDataset(pool.y, pool.y_prime, z, np.full(m, i), np.tile(fake, (m, 1)))


def log_likelihood(dataset: PreferenceDataset, theta) -> float:
    m = dataset.z * _logit(theta, dataset.y, dataset.y_prime)
    return -float(np.sum(np.logaddexp(0.0, -m)))


def log_likelihood_gradient(dataset: PreferenceDataset, theta) -> np.ndarray:
    m = dataset.z * _logit(theta, dataset.y, dataset.y_prime)
    coef = dataset.z * expit(-m)
    return 2.0 * (dataset.y - dataset.y_prime).T @ coef


def mle_fit(dataset: PreferenceDataset, init=None, tol: float = 1e-8, max_iter: int = 10_000
            ) -> np.ndarray:
    """Global ideal point maximizing the pooled BTL log-likelihood.

    Gradient ascent with backtracking (shrink 0.5, sufficient increase
    1e-4) on the mean log-likelihood, which has the same maximizer as the
    sum. The first trial step is 1.0, later ones are Barzilai-Borwein. The
    objective is concave because the logit is affine in theta. Stops when the mean gradient norm is below ``tol``.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    N = len(dataset)
    d = dataset.y.shape[1]
    a = dataset.z * (np.einsum("ij,ij->i", dataset.y_prime, dataset.y_prime)
                     - np.einsum("ij,ij->i", dataset.y, dataset.y))
    B = (2.0 * dataset.z)[:, None] * (dataset.y - dataset.y_prime)

    def f(th):
        return -np.mean(np.logaddexp(0.0, -(a + B @ th)))

    def grad(th):
        return B.T @ expit(-(a + B @ th)) / N

    theta = np.zeros(d) if init is None else np.atleast_1d(np.asarray(init, dtype=float)).copy()
    fv = f(theta)
    g = grad(theta)
    s0 = 1.0
    for _ in range(max_iter):
        gg = float(g @ g)
        if np.sqrt(gg) <= tol:
            return theta
        s = s0
        while True:
            cand = theta + s * g
            fc = f(cand)
            if fc >= fv + 1e-4 * s * gg:
                break
            s *= 0.5
            if s < 1e-20:
                raise NonConvergence("line search stalled in MLE fit")
        g_new = grad(cand)
        # Barzilai-Borwein trial step for the next line search
        dth, dg = cand - theta, g_new - g
        curv = -float(dth @ dg)
        s0 = float(dth @ dth) / curv if curv > 0 else 1.0
        theta, fv, g = cand, fc, g_new
    raise NonConvergence(f"MLE fit did not reach gradient norm {tol} in {max_iter} iterations")


def loglik_surface(dataset: PreferenceDataset, thetas) -> np.ndarray:
    return np.array([log_likelihood(dataset, th) for th in np.atleast_1d(thetas)])


class _Receiver:
    """Refits the MLE as one player relabels while the others stay frozen."""

    def __init__(self, scenario: AlignmentScenario, pools, actions):
        self.scenario = scenario
        self.pools = pools
        self.actions = [np.atleast_1d(np.asarray(a, dtype=float)) for a in actions]
        self.parts = [sample_labels(scenario, j, self.actions[j], pools[j])
                      for j in range(scenario.n)]

    def fit_with(self, i: int, x_i) -> float:
        parts = list(self.parts)
        parts[i] = sample_labels(self.scenario, i, [x_i], self.pools[i])
        return float(mle_fit(PreferenceDataset.concat(parts), tol=self.scenario.mle_tol)[0])

    def current(self) -> float:
        return float(mle_fit(PreferenceDataset.concat(self.parts), tol=self.scenario.mle_tol)[0])


def empirical_best_response(scenario: AlignmentScenario, i: int, actions, pools=None,
                            steps: int | None = None, probe_points: int = 5):
    """Binary search for the fake ideal point of player ``i`` whose MLE hits ``t_i``.

    The other players' labels are frozen at ``actions``. The MLE is assumed
    nondecreasing in ``x_i``; a probe on ``probe_points`` evenly spaced
    actions checks this first. Returns ``(x_i, mle)``; an endpoint comes back
    exactly when the target is out of reach.
    """
    if scenario.d != 1:
        raise ValueError("empirical best response is implemented for scalar actions only")
    steps = scenario.search_steps if steps is None else steps
    if steps < 1:
        raise ValueError("steps must be at least 1")
    pools = pools or [draw_pairs(scenario, j) for j in range(scenario.n)]
    rec = _Receiver(scenario, pools, actions)
    target = float(scenario.true_ideal[i][0])
    lo, hi = scenario.action_interval
    grid = np.linspace(lo, hi, probe_points)
    vals = [rec.fit_with(i, g) for g in grid]
    if np.any(np.diff(vals) < -1e-9):
        raise MonotonicityViolation(f"MLE not monotone in player {i}'s action: {vals}")
    if vals[0] >= target:
        return lo, vals[0]
    if vals[-1] <= target:
        return hi, vals[-1]
    a, b, fa, fb = lo, hi, vals[0], vals[-1]
    for _ in range(steps):
        mid = 0.5 * (a + b)
        fm = rec.fit_with(i, mid)
        if fm < target:
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return (a, fa) if abs(fa - target) <= abs(fb - target) else (b, fb)


@dataclass
class DynamicsRecord:
    iteration: int
    player: int | None  # None for the truthful start
    action: float | None
    actions: list
    mle: float


@dataclass
class AlignmentTrajectory:
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def final_actions(self) -> list:
        return self.records[-1].actions

    @property
    def final_mle(self) -> float:
        return self.records[-1].mle

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "final_actions": self.final_actions,
            "final_mle": self.final_mle,
            "records": [{"iteration": r.iteration, "player": r.player, "action": r.action,
                         "actions": r.actions, "mle": r.mle} for r in self.records],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "player", "action", "mle"])
            for r in self.records:
                w.writerow([r.iteration, "" if r.player is None else r.player,
                            "" if r.action is None else repr(r.action), repr(r.mle)])


def alignment_dynamics(scenario: AlignmentScenario, max_iters: int = 20) -> AlignmentTrajectory:
    """Truthful start, then players take turns at the empirical best response.

    Stops once ``n`` consecutive updates (a full round) each moved their
    player by at most ``change_tol``.
    """
    if scenario.d != 1:
        raise ValueError("alignment dynamics are implemented for scalar actions only")
    n = scenario.n
    pools = [draw_pairs(scenario, j) for j in range(n)]
    lo, hi = scenario.action_interval
    actions = [float(np.clip(t[0], lo, hi)) for t in scenario.true_ideal]
    traj = AlignmentTrajectory()
    mle0 = _Receiver(scenario, pools, [[a] for a in actions]).current()
    traj.records.append(DynamicsRecord(0, None, None, list(actions), mle0))
    quiet = 0
    for it in range(1, max_iters + 1):
        i = (it - 1) % n
        x_new, mle = empirical_best_response(scenario, i, [[a] for a in actions], pools)
        change = abs(x_new - actions[i])
        actions[i] = float(x_new)
        traj.records.append(DynamicsRecord(it, i, float(x_new), list(actions), float(mle)))
        logger.info("iteration %d: player %d -> %.6f, mle %.6f", it, i, x_new, mle)
        quiet = quiet + 1 if change <= scenario.change_tol else 0
        if quiet >= n:
            traj.converged = True
            break
    return traj


@dataclass
class AffineApproxReport:
    grid: list
    mle: list
    predicted: list
    per_seed_max_deviation: list
    max_deviation: float
    passed: bool
    threshold: float = 0.05

    def to_dict(self) -> dict:
        return {"grid": self.grid, "mle": self.mle, "predicted": self.predicted,
                "per_seed_max_deviation": self.per_seed_max_deviation,
                "max_deviation": self.max_deviation, "passed": self.passed,
                "threshold": self.threshold}


def affine_approx_check(scenario: AlignmentScenario, grid=None, seeds=None,
                        threshold: float = 0.05) -> AffineApproxReport:
    """Compare the MLE with the averaging receiver ``mean(x)`` over a profile grid.

    With several ``seeds`` the MLE at each grid profile is averaged over the
    seeds before comparing; per-seed deviations are reported as well.
    """
    if scenario.d != 1:
        raise ValueError("affine check is implemented for scalar actions only")
    if grid is None:
        lo, hi = scenario.action_interval
        axis = np.linspace(lo, hi, 5)
        grid = [tuple(p) for p in np.array(np.meshgrid(*[axis] * scenario.n, indexing="ij"))
                .reshape(scenario.n, -1).T]
    grid = [tuple(float(v) for v in g) for g in grid]
    seeds = [scenario.seed] if seeds is None else list(seeds)
    predicted = [float(np.mean(g)) for g in grid]
    fits = np.zeros((len(seeds), len(grid)))
    for s_idx, seed in enumerate(seeds):
        pools = [draw_pairs(scenario, j, seed=seed) for j in range(scenario.n)]
        for g_idx, prof in enumerate(grid):
            parts = [sample_labels(scenario, j, [prof[j]], pools[j]) for j in range(scenario.n)]
            fits[s_idx, g_idx] = mle_fit(PreferenceDataset.concat(parts), tol=scenario.mle_tol)[0]
    mean_fit = fits.mean(axis=0)
    dev = np.abs(mean_fit - predicted)
    per_seed = np.abs(fits - predicted).max(axis=1)
    return AffineApproxReport(grid=[list(g) for g in grid], mle=mean_fit.tolist(),
                              predicted=predicted, per_seed_max_deviation=per_seed.tolist(),
                              max_deviation=float(dev.max()),
                              passed=bool(dev.max() <= threshold), threshold=threshold)


def induced_game(scenario: AlignmentScenario) -> GameSpec:
    """The averaging-receiver game predicted for the MLE receiver."""
    lo, hi = scenario.action_interval
    d = scenario.d
    space = Box([lo] * d, [hi] * d)
    return GameSpec(space=space, w0=0.0, x0=[(lo + hi) / 2] * d,
                    w=[1.0 / scenario.n] * scenario.n, t=scenario.true_ideal)


def theoretical_ne_oracle(scenario: AlignmentScenario) -> np.ndarray:
    spec = induced_game(scenario)
    rep = pgd_solve(spec, spec.space.project_rows(spec.t))
    if not rep.converged:
        raise NonConvergence("induced game did not converge", rep)
    return rep.profile
