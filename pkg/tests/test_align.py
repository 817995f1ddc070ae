import csv
import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize, minimize_scalar

from battling.align import (AlignmentScenario, PreferenceDataset, affine_approx_check,
                            alignment_dynamics, btl_prob, draw_pairs, empirical_best_response,
                            induced_game, log_likelihood, log_likelihood_gradient, loglik_surface,
                            mle_fit, reward, sample_labels, theoretical_ne_oracle)
from battling.potential import central_difference


def scenario(**kw):
    base = dict(true_ideal=[[-0.1], [0.3]], N=(10_000, 10_000), seed=0)
    base.update(kw)
    return AlignmentScenario(**base)


def small_dataset(rng, N=60, d=1):
    scn = AlignmentScenario(true_ideal=np.zeros((1, d)), N=(N,), seed=int(rng.integers(1000)))
    return sample_labels(scn, 0, rng.uniform(-1, 1, d))


def test_reward_and_btl():
    assert reward([0.0], [2.0]) == -4.0
    p = btl_prob([0.0], [0.5], [3.0], 1)
    assert p > 0.5
    assert p + btl_prob([0.0], [0.5], [3.0], -1) == pytest.approx(1.0)
    # r(y) - r(y') = 9 - 0.25
    assert p == pytest.approx(1 / (1 + np.exp(-8.75)))
    with pytest.raises(ValueError):
        btl_prob([0.0], [0.5], [3.0], 0)


def test_pairs_are_seeded_per_player():
    scn = scenario(N=(50, 50))
    a, b = draw_pairs(scn, 0), draw_pairs(scn, 1)
    assert np.array_equal(a.y, draw_pairs(scn, 0).y)
    rng = np.random.default_rng(1)
    pairs = rng.uniform(-10, 10, (50, 2, 1))
    assert np.array_equal(b.y, pairs[:, 0]) and np.array_equal(b.u, rng.uniform(size=50))
    assert not np.array_equal(a.y, b.y)


def test_relabelling_is_monotone():
    scn = scenario(N=(2000, 2000))
    pool = draw_pairs(scn, 0)
    lo = sample_labels(scn, 0, [-0.5], pool)
    hi = sample_labels(scn, 0, [0.5], pool)
    up = (pool.y - pool.y_prime)[:, 0] > 0
    # a larger ideal point only helps the larger response of each pair
    assert np.all(hi.z[up] >= lo.z[up]) and np.all(hi.z[~up] <= lo.z[~up])
    with pytest.raises(ValueError):
        sample_labels(scn, 0, [2.0], pool)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_loglik_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 3))
    ds = small_dataset(rng, d=d)
    theta = rng.uniform(-1, 1, d)
    g = log_likelihood_gradient(ds, theta)
    fd = central_difference(lambda th: log_likelihood(ds, th), theta)
    assert np.max(np.abs(g - fd)) <= 1e-5 * (1 + np.max(np.abs(g)))


def test_mle_matches_scipy_oracle():
    rng = np.random.default_rng(0)
    for d in (1, 2):
        for _ in range(5):
            ds = small_dataset(rng, N=400, d=d)
            ours = mle_fit(ds)
            if d == 1:
                ref = minimize_scalar(lambda th: -log_likelihood(ds, [th]),
                                      bounds=(-20, 20), method="bounded",
                                      options={"xatol": 1e-10}).x
            else:
                ref = minimize(lambda th: -log_likelihood(ds, th), np.zeros(d),
                               jac=lambda th: -log_likelihood_gradient(ds, th), method="BFGS",
                               options={"gtol": 1e-10}).x
            assert np.allclose(ours, ref, atol=1e-5)
            assert np.linalg.norm(log_likelihood_gradient(ds, ours)) / len(ds) <= 1e-8


def test_mle_empty_dataset():
    empty = PreferenceDataset(np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0, int),
                              np.zeros(0, int), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        mle_fit(empty)


def test_surface_peaks_at_mle():
    ds = small_dataset(np.random.default_rng(3), N=500)
    thetas = np.linspace(-1, 1, 2001)
    surf = loglik_surface(ds, thetas)
    assert abs(thetas[np.argmax(surf)] - mle_fit(ds)[0]) <= 1e-3


def test_best_response_returns_endpoint_when_out_of_reach():
    scn = scenario(true_ideal=[[-5.0], [0.3]], N=(2000, 2000), action_interval=(-1, 1))
    x, _ = empirical_best_response(scn, 0, [[-1.0], [0.3]])
    assert x == -1.0


def test_best_response_lands_near_target():
    scn = scenario(N=(5000, 5000))
    x, mle = empirical_best_response(scn, 0, [[-0.1], [0.3]])
    assert -1 < x < 0
    assert abs(mle - (-0.1)) < 0.01


def test_theory_oracle_and_induced_game():
    scn = scenario()
    spec = induced_game(scn)
    assert spec.w.tolist() == [0.5, 0.5]
    assert np.allclose(theoretical_ne_oracle(scn).ravel(), [-1, 1])


def test_dynamics_deterministic_and_csv(tmp_path):
    scn = scenario(N=(3000, 3000))
    a, b = alignment_dynamics(scn), alignment_dynamics(scn)
    assert a.to_dict() == b.to_dict()
    path = tmp_path / "traj.csv"
    a.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["iteration", "player", "action", "mle"]
    assert len(rows) == len(a.records) + 1


def test_dynamics_need_scalar_actions():
    with pytest.raises(ValueError):
        alignment_dynamics(scenario(true_ideal=[[0.0, 0.0], [1.0, 1.0]]))


def test_scenario_validation():
    with pytest.raises(ValueError):
        scenario(N=(10, 10, 10))
    with pytest.raises(ValueError):
        scenario(action_interval=(1, -1))
    with pytest.raises(ValueError):
        AlignmentScenario.from_dict({"true_ideal": [[0.0]], "colour": "red"})
    scn = scenario(N=500)
    assert scn.N == (500, 500)
    assert AlignmentScenario.from_dict(scn.to_dict()).to_dict() == scn.to_dict()


def test_dataset_csv(tmp_path):
    ds = small_dataset(np.random.default_rng(0), N=5)
    path = tmp_path / "ds.csv"
    ds.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["y", "y_prime", "z", "player", "fake_ideal"]
    assert len(rows) == 6


def test_affine_report_shape():
    scn = scenario(N=(2000, 2000))
    rep = affine_approx_check(scn, grid=[(-1, 1), (0.5, 0.5)], seeds=[0, 1])
    assert rep.predicted == [0.0, 0.5]
    assert len(rep.per_seed_max_deviation) == 2
    assert rep.max_deviation <= max(rep.per_seed_max_deviation) + 1e-12


def test_seed_changes_data():
    a = draw_pairs(scenario(N=(10, 10)), 0)
    b = draw_pairs(dataclasses.replace(scenario(N=(10, 10)), seed=5), 0)
    assert not np.array_equal(a.u, b.u)
