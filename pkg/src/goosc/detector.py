"""Optimal linear aggregation of indicator vectors and detection metrics.

For Gaussian feature vectors with class mean shift delta and shared
covariance Sigma, the linear statistic with maximal deflection is
w* proportional to Sigma^-1 delta; AUROC is the threshold-free quality
measure used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .exceptions import ConditioningError, EvaluationError, InvalidParameterError
from .indicators import IndicatorVector
from .model import rng_for

__all__ = [
    "LinearProbe",
    "DetectionReport",
    "FirstOrderResponse",
    "fit_probe",
    "score",
    "auroc",
    "first_order_response",
]


@dataclass(frozen=True)
class LinearProbe:
    """Fitted linear readout over a feature vector."""

    weights: np.ndarray    # unit-norm direction proportional to Sigma^-1 delta
    delta: np.ndarray      # class mean shift
    sigma: np.ndarray      # pooled covariance (ridge-regularized)
    threshold: float       # midpoint of the class score means

    @property
    def dim(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class DetectionReport:
    """Scores, labels, and ranking quality for one evaluation run."""

    scores: np.ndarray
    labels: np.ndarray
    auroc: float
    n_positive: int
    n_negative: int


@dataclass(frozen=True)
class FirstOrderResponse:
    """Least-squares response slope of a statistic to a perturbation
    strength, with a bootstrap confidence interval."""

    slope: float
    ci_low: float
    ci_high: float
    strengths: np.ndarray
    means: np.ndarray

    def excludes_zero(self) -> bool:
        return self.ci_low > 0.0 or self.ci_high < 0.0


def _features(rows) -> np.ndarray:
    rows = list(rows)
    if rows and isinstance(rows[0], IndicatorVector):
        return np.stack([r.as_array() for r in rows])
    return np.atleast_2d(np.asarray(rows, dtype=float))


def fit_probe(healthy, degraded, ridge: float | None = None) -> LinearProbe:
    """Fit the optimal linear statistic from labeled feature rows.

    delta is the degraded-minus-healthy mean, Sigma the pooled sample
    covariance plus ridge * I (default ridge trace(Sigma)/dim * 1e-6), and
    the weights are Sigma^-1 delta normalized to unit length.
    """
    H = _features(healthy)
    D = _features(degraded)
    if H.shape[0] < 2 or D.shape[0] < 2:
        raise InvalidParameterError("each class needs at least 2 rows")
    if H.shape[1] != D.shape[1]:
        raise InvalidParameterError("feature dimensions differ between classes")
    delta = D.mean(axis=0) - H.mean(axis=0)
    n_h, n_d = H.shape[0], D.shape[0]
    pooled = ((n_h - 1) * np.cov(H, rowvar=False) + (n_d - 1) * np.cov(D, rowvar=False)) / (
        n_h + n_d - 2
    )
    pooled = np.atleast_2d(pooled)
    dim = pooled.shape[0]
    if ridge is None:
        ridge = 1e-6 * np.trace(pooled) / dim
    if ridge < 0:
        raise InvalidParameterError("ridge must be >= 0")
    sigma = pooled + ridge * np.eye(dim)
    try:
        w = np.linalg.solve(sigma, delta)
    except np.linalg.LinAlgError:
        raise ConditioningError(
            "pooled covariance is singular; refit with ridge > 0"
        ) from None
    if not np.all(np.isfinite(w)):
        raise ConditioningError("pooled covariance is singular; refit with ridge > 0")
    norm = np.linalg.norm(w)
    if norm == 0.0:
        w = np.zeros_like(delta)
        w[0] = 1.0
    else:
        w = w / norm
    thr = 0.5 * (float(w @ H.mean(axis=0)) + float(w @ D.mean(axis=0)))
    return LinearProbe(weights=w, delta=delta, sigma=sigma, threshold=thr)


def score(probe: LinearProbe, indicators) -> float | np.ndarray:
    """w^T S for one indicator vector or row-wise for a batch."""
    feats = _features([indicators]) if isinstance(indicators, IndicatorVector) else _features(indicators)
    out = feats @ probe.weights
    return float(out[0]) if out.shape[0] == 1 and (
        isinstance(indicators, IndicatorVector) or np.asarray(indicators).ndim == 1
    ) else out


def auroc(scores: Sequence[float], labels) -> float:
    """Mann-Whitney AUROC: the fraction of (positive, negative) pairs the
    positive wins, ties counted one half.  Computed from average ranks."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("AUROC requires both classes present")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(scores, labels) -> DetectionReport:
    """Bundle scores and labels with their AUROC."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    return DetectionReport(
        scores=s,
        labels=y,
        auroc=auroc(s, y),
        n_positive=int(y.sum()),
        n_negative=int((~y).sum()),
    )


def first_order_response(
    statistic: Callable[[np.ndarray], float],
    perturbation_family: Callable[[float, int], np.ndarray],
    strengths,
    n_seeds: int,
    n_boot: int = 500,
    seed: int = 0,
) -> FirstOrderResponse:
    """Local response slope of a window statistic to a perturbation.

    Evaluates statistic(perturbation_family(h, seed)) over the strength
    grid and a deterministic seed set, regresses the per-strength Monte
    Carlo mean on h by least squares, and bootstraps the seed dimension
    for a 95% interval.  Statistics that depend only on marginal energy
    should produce an interval containing zero under variance-preserving
    phase perturbations; phase-geometry statistics should not.
    """
    h = np.asarray(list(strengths), dtype=float)
    if len(h) < 2 or np.ptp(h) == 0.0:
        raise InvalidParameterError("strength grid must contain >= 2 distinct values")
    if 0.0 not in h:
        raise InvalidParameterError("strength grid must include 0")
    if n_seeds < 10:
        raise InvalidParameterError("n_seeds must be >= 10")
    values = np.empty((len(h), n_seeds))
    for i, hi in enumerate(h):
        for s in range(n_seeds):
            values[i, s] = statistic(perturbation_family(float(hi), s))

    def slope_of(cols: np.ndarray) -> float:
        means = values[:, cols].mean(axis=1)
        A = np.stack([h, np.ones_like(h)], axis=1)
        coef, *_ = np.linalg.lstsq(A, means, rcond=None)
        return float(coef[0])

    point = slope_of(np.arange(n_seeds))
    rng = rng_for(seed, 0xB007)
    boots = np.array([
        slope_of(rng.integers(0, n_seeds, size=n_seeds)) for _ in range(n_boot)
    ])
    lo, hi_ci = np.percentile(boots, [2.5, 97.5])
    return FirstOrderResponse(
        slope=point, ci_low=float(lo), ci_high=float(hi_ci),
        strengths=h, means=values.mean(axis=1),
    )
