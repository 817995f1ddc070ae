"""Receiver, player losses and the exact potential of the game.

Profiles are ``(n, d)`` arrays with one row per player.
"""

from __future__ import annotations

import numpy as np

from .game import GameSpec


def receiver_aggregate(spec: GameSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(spec.n, spec.d)
    return spec.background + spec.w @ x


def player_loss(spec: GameSpec, x, i: int) -> float:
    if not 0 <= i < spec.n:
        raise IndexError(f"player index {i} out of range for {spec.n} players")
    r = receiver_aggregate(spec, x) - spec.t[i]
    return float(r @ r)


def player_losses(spec: GameSpec, x) -> np.ndarray:
    r = receiver_aggregate(spec, x) - spec.t
    return np.einsum("ij,ij->i", r, r)


def potential(spec: GameSpec, x) -> float:
    """``||w0 x0 + sum_i w_i x_i||^2 - 2 sum_i w_i t_i . x_i``."""
    x = np.asarray(x, dtype=float).reshape(spec.n, spec.d)
    agg = spec.background + spec.w @ x
    return float(agg @ agg - 2.0 * np.sum(spec.w * np.einsum("ij,ij->i", spec.t, x)))


def potential_gradient(spec: GameSpec, x) -> np.ndarray:
    """Per-player blocks ``2 w_i (xhat - t_i)``, shape ``(n, d)``."""
    xhat = receiver_aggregate(spec, x)
    return 2.0 * spec.w[:, None] * (xhat - spec.t)


def loss_gradient(spec: GameSpec, x, i: int) -> np.ndarray:
    """Gradient of player ``i``'s loss with respect to its own action."""
    return 2.0 * spec.w[i] * (receiver_aggregate(spec, x) - spec.t[i])


def lipschitz_constant(spec: GameSpec) -> float:
    # Hessian of the potential is 2 w w^T (kron) I_d
    return 2.0 * float(spec.w @ spec.w)


def deviation_identity_check(spec: GameSpec, x, i: int, y):
    """Return ``(loss change, potential change)`` when player ``i`` moves to ``y``.

    Both are ``value(x) - value(y, x_-i)``; in an exact potential game they agree.
    """
    x = np.asarray(x, dtype=float).reshape(spec.n, spec.d)
    dev = x.copy()
    dev[i] = y
    d_loss = player_loss(spec, x, i) - player_loss(spec, dev, i)
    d_phi = potential(spec, x) - potential(spec, dev)
    return d_loss, d_phi


def central_difference(f, x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    flat = g.reshape(-1)
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        e = e.reshape(x.shape)
        flat[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g
