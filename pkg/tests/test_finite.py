import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from battling.finite import (FiniteGameSpec, InstanceTooLarge, build_expne_instance,
                             enumerate_pure_ne, finite_best_response, finite_br_dynamics,
                             finite_loss, finite_potential, finite_receiver, is_pure_ne,
                             meta_reduce, random_start)
from battling.game import SpecError
from battling.solvers import ZeroWeightPlayer
from instances import random_finite, random_finite_action

seeds = st.integers(0, 2**32 - 1)


def brute_force_ne(G, k, w, t):
    """Pure-python oracle for two players in one dimension, no repeats."""
    acts = [list(itertools.combinations(range(len(G)), k[i])) for i in range(2)]
    out = []
    for a0 in acts[0]:
        for a1 in acts[1]:
            prof = (a0, a1)
            stable = True
            for i in range(2):
                other = w[1 - i] * sum(G[j] for j in prof[1 - i])
                cur = (other + w[i] * sum(G[j] for j in prof[i]) - t[i]) ** 2
                best = min((other + w[i] * sum(G[j] for j in c) - t[i]) ** 2 for c in acts[i])
                if best < cur - 1e-12 * (1 + cur):
                    stable = False
            if stable:
                out.append(prof)
    return sorted(out)


def test_hand_values():
    spec = build_expne_instance(8, 2)
    assert np.array_equal(spec.ground_set[:, 0], [-4, -8, -16, -32, 4, 8, 16, 32])
    prof = ((0, 1), (4, 5))
    assert finite_receiver(spec, prof)[0] == 0.0
    # 0 - 2 * (w k)(t . meta) summed: 2 * 0.5 * 0.25 * (-6) + ... = -3
    assert finite_potential(spec, prof) == -3.0
    assert finite_best_response(spec, prof, 0) == (0, 1)
    assert finite_best_response(spec, ((0, 1), (4, 6)), 0) == (0, 2)
    assert meta_reduce(spec, (4, 5), 1) == (pytest.approx(0.5), pytest.approx([6.0]))


def test_powers_of_two_matches_brute_force():
    spec = build_expne_instance(8, 2)
    ours = enumerate_pure_ne(spec)
    G = spec.ground_set[:, 0].tolist()
    oracle = brute_force_ne(G, spec.k, spec.w.tolist(), spec.t[:, 0].tolist())
    assert ours == oracle
    assert len(ours) == 48
    mirrored = [(a, tuple(j + 4 for j in a)) for a in itertools.combinations(range(4), 2)]
    assert all(p in ours for p in mirrored)
    assert all(abs(finite_receiver(spec, p)[0]) < 1e-12 for p in ours)


def test_enumeration_is_sorted_and_verified():
    spec = random_finite(np.random.default_rng(7), M=5, n=2, d=2)
    nes = enumerate_pure_ne(spec)
    assert nes == sorted(nes)
    assert all(is_pure_ne(spec, p) for p in nes)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_best_response_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    spec = random_finite(rng)
    prof = tuple(random_finite_action(rng, spec, i) for i in range(spec.n))
    i = int(rng.integers(spec.n))
    br = finite_best_response(spec, prof, i)
    losses = []
    for c in spec.actions(i):
        trial = list(prof)
        trial[i] = c
        losses.append(finite_loss(spec, trial, i))
    trial = list(prof)
    trial[i] = br
    assert finite_loss(spec, trial, i) <= min(losses) + 1e-12 * (1 + min(losses))


@pytest.mark.parametrize("seed", range(5))
def test_meet_in_the_middle_agrees_with_enumeration(seed):
    rng = np.random.default_rng(seed)
    spec = FiniteGameSpec(ground_set=rng.normal(size=16) * 3, k=(4, 5), w0=0.2, x0=[0.1],
                          w=[0.3, -0.7], t=[[0.4], [-1.1]])
    prof = random_start(spec, rng)
    for i in range(2):
        full = finite_best_response(spec, prof, i)
        mitm = finite_best_response(spec, prof, i, enumeration_cap=10)
        assert mitm == full


def test_too_large_without_mitm():
    spec = random_finite(np.random.default_rng(1), M=7, n=1, d=2)
    with pytest.raises(InstanceTooLarge):
        finite_best_response(spec, random_start(spec, np.random.default_rng(0)), 0,
                             enumeration_cap=1)
    with pytest.raises(InstanceTooLarge):
        enumerate_pure_ne(build_expne_instance(8, 2), cap=10)


def test_repeats_allowed():
    spec = FiniteGameSpec(ground_set=[0.0, 1.0], k=(3,), w0=0.0, x0=[0.0], w=[1.0], t=[3.0],
                          repeats_allowed=True)
    assert spec.action_count(0) == 4
    assert finite_best_response(spec, [(0, 0, 0)], 0) == (1, 1, 1)


@pytest.mark.parametrize("kwargs", [
    dict(ground_set=[1.0, 1.0]),
    dict(k=(3,)),
    dict(k=(0,)),
    dict(t=[[0.0, 1.0]]),
])
def test_invalid_finite_specs(kwargs):
    base = dict(ground_set=[0.0, 1.0], k=(1,), w0=0.0, x0=[0.0], w=[1.0], t=[0.5])
    base.update(kwargs)
    with pytest.raises(SpecError):
        FiniteGameSpec(**base)


def test_action_validation():
    spec = build_expne_instance(8, 2)
    with pytest.raises(SpecError):
        finite_receiver(spec, ((0, 0), (4, 5)))
    with pytest.raises(SpecError):
        finite_receiver(spec, ((0, 9), (4, 5)))
    assert finite_receiver(spec, ((1, 0), (5, 4)))[0] == 0.0


def test_zero_weight_best_response():
    spec = FiniteGameSpec(ground_set=[0.0, 1.0], k=(1, 1), w0=0.0, x0=[0.0], w=[1.0, 0.0],
                          t=[0.5, 0.5])
    with pytest.raises(ZeroWeightPlayer):
        finite_best_response(spec, [(0,), (0,)], 1)
    assert finite_br_dynamics(spec, [(0,), (1,)]).converged


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_dynamics_reach_verified_equilibrium(seed):
    rng = np.random.default_rng(seed)
    spec = random_finite(rng, M=int(rng.integers(3, 7)))
    rep = finite_br_dynamics(spec, random_start(spec, rng))
    assert rep.converged and is_pure_ne(spec, rep.profile)
    assert all(b < a for a, b in zip(rep.potentials, rep.potentials[1:]))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_finite_potential_identity(seed):
    rng = np.random.default_rng(seed)
    spec = random_finite(rng)
    prof = [random_finite_action(rng, spec, i) for i in range(spec.n)]
    i = int(rng.integers(spec.n))
    dev = list(prof)
    dev[i] = random_finite_action(rng, spec, i)
    d_loss = finite_loss(spec, prof, i) - finite_loss(spec, dev, i)
    d_phi = finite_potential(spec, prof) - finite_potential(spec, dev)
    assert abs(d_loss - d_phi) <= 1e-9 * max(1.0, abs(d_loss), abs(d_phi))


def test_dict_round_trip():
    spec = build_expne_instance(8, 2)
    again = FiniteGameSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()
