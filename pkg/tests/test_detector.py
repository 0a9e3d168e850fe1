"""Optimal linear probe, AUROC, and the first-order response tool."""

import numpy as np
import pytest

from goosc.detector import (
    auroc,
    evaluate,
    first_order_response,
    fit_probe,
    score,
)
from goosc.exceptions import ConditioningError, EvaluationError, InvalidParameterError
from goosc.indicators import IndicatorVector

from oracles import best_random_deflection, brute_force_auroc


class TestFitProbe:
    def test_identity_covariance_weights_proportional_to_delta(self, rng):
        delta = np.array([1.0, -2.0, 0.5, 0.0, 0.3, 1.5])
        healthy = rng.standard_normal((4000, 6))
        degraded = rng.standard_normal((4000, 6)) + delta
        probe = fit_probe(healthy, degraded, ridge=0.0)
        direction = probe.weights / np.linalg.norm(probe.weights)
        expected = delta / np.linalg.norm(delta)
        assert np.linalg.norm(direction - expected) < 0.05

    def test_weights_solve_sigma_delta(self, rng):
        healthy = rng.standard_normal((300, 4)) @ rng.standard_normal((4, 4))
        degraded = healthy + [0.5, 0.0, -0.2, 0.1]
        probe = fit_probe(healthy, degraded)
        w_unnorm = np.linalg.solve(probe.sigma, probe.delta)
        w_unnorm /= np.linalg.norm(w_unnorm)
        assert np.allclose(probe.weights, w_unnorm, atol=1e-10)

    def test_deflection_beats_random_directions(self, rng):
        for _ in range(5):
            d = int(rng.integers(2, 7))
            L = rng.standard_normal((d, d))
            healthy = rng.standard_normal((500, d)) @ L.T
            degraded = rng.standard_normal((500, d)) @ L.T + rng.standard_normal(d)
            probe = fit_probe(healthy, degraded)
            w = probe.weights
            defl = float((w @ probe.delta) ** 2 / (w @ probe.sigma @ w))
            best = best_random_deflection(probe.delta, probe.sigma, 10_000, rng)
            assert defl >= best - 1e-9

    def test_null_case_auroc_near_half(self, rng):
        healthy = rng.standard_normal((400, 6))
        degraded = rng.standard_normal((400, 6))
        probe = fit_probe(healthy, degraded)
        pool = np.vstack([rng.standard_normal((500, 6)),
                          rng.standard_normal((500, 6))])
        labels = np.arange(1000) >= 500
        a = auroc(score(probe, pool), labels)
        assert abs(a - 0.5) < 0.05

    def test_singular_without_ridge(self):
        healthy = np.zeros((10, 3))
        healthy[:, 0] = np.arange(10)
        degraded = healthy + [1.0, 0.0, 0.0]
        with pytest.raises(ConditioningError):
            fit_probe(healthy, degraded, ridge=0.0)
        probe = fit_probe(healthy, degraded)  # default ridge succeeds
        assert np.isfinite(probe.weights).all()

    def test_too_few_rows(self, rng):
        with pytest.raises(InvalidParameterError):
            fit_probe(rng.standard_normal((1, 3)), rng.standard_normal((5, 3)))


class TestScore:
    def test_zero_vector_scores_zero(self, rng):
        probe = fit_probe(rng.standard_normal((50, 6)),
                          rng.standard_normal((50, 6)) + 1.0)
        vec = IndicatorVector(0, 0, 0, 0, 0, 0, window_id=0)
        assert score(probe, vec) == 0.0

    def test_weights_score_to_unit_norm(self, rng):
        probe = fit_probe(rng.standard_normal((50, 6)),
                          rng.standard_normal((50, 6)) + 1.0)
        assert abs(score(probe, probe.weights) - 1.0) < 1e-12

    def test_batch_equals_per_row(self, rng):
        probe = fit_probe(rng.standard_normal((50, 4)),
                          rng.standard_normal((50, 4)) + 0.5)
        batch = rng.standard_normal((20, 4))
        batch_scores = score(probe, batch)
        for i in range(20):
            assert abs(batch_scores[i] - score(probe, batch[i])) < 1e-12

    def test_affine_shift_along_weights(self, rng):
        probe = fit_probe(rng.standard_normal((50, 6)),
                          rng.standard_normal((50, 6)) + 1.0)
        s = rng.standard_normal(6)
        c = 1.7
        assert abs(score(probe, s + c * probe.weights)
                   - score(probe, s) - c) < 1e-10


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([1, 2, 3, 10, 11, 12], [0, 0, 0, 1, 1, 1]) == 1.0

    def test_all_ties(self):
        assert auroc([5.0] * 8, [0, 1] * 4) == 0.5

    def test_matches_brute_force(self, rng):
        for _ in range(5):
            n = int(rng.integers(20, 200))
            scores = np.round(rng.standard_normal(n), 1)  # force ties
            labels = rng.integers(0, 2, size=n).astype(bool)
            if labels.all() or not labels.any():
                continue
            assert abs(auroc(scores, labels)
                       - brute_force_auroc(scores, labels)) < 1e-12

    def test_single_class_rejected(self):
        with pytest.raises(EvaluationError):
            auroc([1.0, 2.0], [True, True])

    def test_evaluate_report(self):
        rep = evaluate([0.1, 0.9, 0.2, 0.8], [False, True, False, True])
        assert rep.auroc == 1.0
        assert rep.n_positive == 2 and rep.n_negative == 2


class TestFirstOrderResponse:
    def test_constant_statistic_slope_zero(self):
        resp = first_order_response(
            statistic=lambda x: 1.0,
            perturbation_family=lambda h, s: np.zeros(4),
            strengths=[0.0, 0.1, 0.2],
            n_seeds=10,
        )
        assert abs(resp.slope) < 1e-12
        assert resp.ci_low <= 1e-12 and resp.ci_high >= -1e-12

    def test_linear_statistic_recovers_slope(self):
        def family(h, s):
            rng = np.random.default_rng(1000 + s)
            return np.array([2.0 * h + 0.05 * rng.standard_normal()])

        resp = first_order_response(
            statistic=lambda x: float(x[0]),
            perturbation_family=family,
            strengths=np.linspace(0.0, 0.3, 7),
            n_seeds=100,
        )
        assert 1.8 <= resp.slope <= 2.2
        assert resp.excludes_zero()

    def test_degenerate_grid_rejected(self):
        with pytest.raises(InvalidParameterError):
            first_order_response(lambda x: 0.0, lambda h, s: np.zeros(1),
                                 strengths=[0.1, 0.2], n_seeds=10)
        with pytest.raises(InvalidParameterError):
            first_order_response(lambda x: 0.0, lambda h, s: np.zeros(1),
                                 strengths=[0.0], n_seeds=10)

    def test_deterministic(self):
        def family(h, s):
            rng = np.random.default_rng(10 + s)
            return np.array([h + rng.standard_normal()])

        kw = dict(statistic=lambda x: float(x[0]), perturbation_family=family,
                  strengths=[0.0, 0.1, 0.2], n_seeds=12)
        a = first_order_response(**kw)
        b = first_order_response(**kw)
        assert a.slope == b.slope and a.ci_low == b.ci_low
