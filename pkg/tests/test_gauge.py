"""Canonicalization: orbit invariance, idempotence, law preservation,
residual symmetries, and the parameter distance."""

import numpy as np
import pytest

from goosc.exceptions import (
    InstabilityError,
    InvalidParameterError,
    ModalDegeneracyError,
    NearCollisionError,
)
from goosc.gauge import RawParams, apply_sign_flip, canonicalize, gauge_distance
from goosc.model import CanonicalParams, ModeParams, check_canonical_gauge, spectral_density

from conftest import random_system


def _conjugate(params, T):
    Ti = np.linalg.inv(T)
    return RawParams(
        T @ params.transition @ Ti,
        params.obs_matrix @ Ti,
        T @ params.state_noise @ T.T,
        params.obs_noise,
    )


def _well_conditioned(rng, dim, cond_max=100.0):
    while True:
        T = rng.standard_normal((dim, dim))
        if np.linalg.cond(T) < cond_max:
            return T


class TestCanonicalize:
    def test_idempotent(self, rng):
        for _ in range(30):
            params = random_system(rng)
            can = canonicalize(params)
            again = canonicalize(can)
            assert gauge_distance(can, again) < 1e-12

    def test_recovers_conjugated_system(self, rng):
        for _ in range(30):
            params = random_system(rng)
            can = canonicalize(params)
            T = _well_conditioned(rng, params.state_dim)
            recovered = canonicalize(_conjugate(params, T))
            assert gauge_distance(can, recovered) < 1e-6

    def test_orbit_members_map_to_same_point(self, rng):
        params = random_system(rng, K=2, p=2)
        outs = []
        for _ in range(4):
            T = _well_conditioned(rng, params.state_dim)
            outs.append(canonicalize(_conjugate(params, T)))
        for o in outs[1:]:
            assert gauge_distance(outs[0], o) < 1e-6

    def test_preserves_spectral_density(self, rng):
        grid = np.linspace(0.0, np.pi, 256)
        for _ in range(10):
            params = random_system(rng)
            can = canonicalize(params)
            S0 = spectral_density(params, grid)
            S1 = spectral_density(can, grid)
            assert np.max(np.abs(S0 - S1)) < 1e-8

    def test_output_satisfies_gauge_convention(self, rng):
        for _ in range(10):
            can = canonicalize(random_system(rng))
            check_canonical_gauge(can)
            assert np.all(np.diff(can.omegas) > 0)
            assert np.all(np.sin(can.omegas) > 0)

    def test_real_eigenvalue_rejected(self):
        A = np.diag([0.5, -0.3, 0.2, 0.1])
        raw = RawParams(A, np.ones((1, 4)), np.eye(4), np.eye(1))
        with pytest.raises(ModalDegeneracyError):
            canonicalize(raw)

    def test_near_collision_rejected(self):
        modes = (ModeParams(1.0, 0.9), ModeParams(1.02, 0.9))
        params = CanonicalParams(modes, np.array([[1.0, 0.0, 1.0, 0.0]]),
                                 np.eye(4), np.eye(1))
        with pytest.raises(NearCollisionError):
            canonicalize(params, delta_min=0.05)

    def test_unstable_rejected(self):
        with pytest.raises(InstabilityError):
            RawParams(np.array([[0.0, 1.1], [-1.1, 0.0]]),
                      np.array([[1.0, 0.0]]), np.eye(2), np.eye(1))


class TestSignFlip:
    def test_identity_mask(self, rng):
        can = canonicalize(random_system(rng, K=2))
        same = apply_sign_flip(can, [False, False])
        assert np.array_equal(same.obs_matrix, can.obs_matrix)
        assert np.array_equal(same.state_noise, can.state_noise)

    def test_involution(self, rng):
        can = canonicalize(random_system(rng, K=2))
        twice = apply_sign_flip(apply_sign_flip(can, [True, False]), [True, False])
        assert np.array_equal(twice.obs_matrix, can.obs_matrix)
        assert np.array_equal(twice.state_noise, can.state_noise)

    def test_spectral_density_invariant(self, rng):
        can = canonicalize(random_system(rng, K=2, p=2))
        grid = np.linspace(0.0, np.pi, 64)
        S0 = spectral_density(can, grid)
        for mask in ([True, False], [False, True], [True, True]):
            S1 = spectral_density(apply_sign_flip(can, mask), grid)
            assert np.max(np.abs(S0 - S1)) < 1e-12

    def test_wrong_mask_length(self, rng):
        can = canonicalize(random_system(rng, K=2))
        with pytest.raises(InvalidParameterError):
            apply_sign_flip(can, [True])


class TestGaugeDistance:
    def test_zero_iff_equal(self, rng):
        can = canonicalize(random_system(rng))
        assert gauge_distance(can, can) == 0.0

    def test_single_omega_perturbation(self):
        a = CanonicalParams((ModeParams(0.5, 0.9), ModeParams(1.5, 0.8)),
                            np.array([[1.0, 0.0, 1.0, 0.0]]), np.eye(4), np.eye(1))
        b = CanonicalParams((ModeParams(0.51, 0.9), ModeParams(1.5, 0.8)),
                            np.array([[1.0, 0.0, 1.0, 0.0]]), np.eye(4), np.eye(1))
        assert abs(gauge_distance(a, b) - 0.01) < 1e-12

    def test_symmetry_and_triangle(self, rng):
        triples = []
        for _ in range(200):
            sys0 = random_system(rng, K=2, p=1)
            triples.append(canonicalize(sys0))
        for _ in range(1000):
            a, b, c = (triples[rng.integers(len(triples))] for _ in range(3))
            dab = gauge_distance(a, b)
            assert abs(dab - gauge_distance(b, a)) < 1e-12
            assert dab <= gauge_distance(a, c) + gauge_distance(c, b) + 1e-12

    def test_dimension_mismatch(self, rng):
        a = canonicalize(random_system(rng, K=1, p=1))
        b = canonicalize(random_system(rng, K=2, p=1))
        with pytest.raises(InvalidParameterError):
            gauge_distance(a, b)
