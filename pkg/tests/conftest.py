"""Shared fixtures: random stable systems and small canonical examples."""

from __future__ import annotations

import numpy as np
import pytest

from goosc.model import CanonicalParams, ModeParams


def random_modes(rng, K, gap_min=0.15, rho_range=(0.55, 0.97)):
    """Strictly ascending mode frequencies with a guaranteed minimum gap."""
    while True:
        omegas = np.sort(rng.uniform(0.1, np.pi - 0.1, size=K))
        if K == 1 or np.min(np.diff(omegas)) > gap_min:
            break
    rhos = rng.uniform(*rho_range, size=K)
    return tuple(ModeParams(float(w), float(r)) for w, r in zip(omegas, rhos))


def random_spd(rng, n, scale=1.0):
    W = rng.standard_normal((n, n))
    return scale * (W @ W.T / n + 0.2 * np.eye(n))


def random_system(rng, K=None, p=None, **mode_kw):
    """A random stable oscillatory system (no gauge convention imposed)."""
    K = int(K if K is not None else rng.integers(1, 3))
    p = int(p if p is not None else rng.integers(1, 3))
    modes = random_modes(rng, K, **mode_kw)
    C = rng.standard_normal((p, 2 * K))
    Q = random_spd(rng, 2 * K)
    R = random_spd(rng, p, scale=0.5)
    return CanonicalParams(modes, C, Q, R)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def two_mode_params():
    """The desk-scale default system used throughout the experiments."""
    modes = (ModeParams(0.7, 0.96), ModeParams(1.9, 0.93))
    C = np.array([[1.0, 0.0, 1.0, 0.0]])
    Q = np.diag([0.0784, 0.0784, 0.1081, 0.1081])
    R = np.array([[0.018]])
    return CanonicalParams(modes, C, Q, R)
