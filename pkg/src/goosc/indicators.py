"""The six gauge-invariant window indicators and their healthy baseline.

Per window the vector is (gsi, pcc, ddi, fwr, mll, lqf):

* gsi  - geometric loss standardized against the healthy baseline
* pcc  - phase-coherence collapse: one minus the circular resultant
         length of the smoothed per-mode phase increments
* ddi  - cumulative damping deficit below the baseline damping
* fwr  - L1 frequency change against the previous window
* mll  - variance of the pairwise frequency ratios (mode locking)
* lqf  - frequency norm over the damping margin

All six are invariant under blockwise sign flips of the latent
coordinates, and pcc is computed from coordinate products so the
invariance holds bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import WindowEstimate
from .exceptions import CalibrationError, DegenerateBaselineError, InvalidParameterError
from .kalman import SmoothedTrajectory, phase_increments

__all__ = [
    "Baseline",
    "IndicatorVector",
    "calibrate_baseline",
    "compute_indicators",
    "indicator_series",
    "INDICATOR_FIELDS",
]

INDICATOR_FIELDS = ("gsi", "pcc", "ddi", "fwr", "mll", "lqf")


@dataclass(frozen=True)
class Baseline:
    """Healthy-operation reference moments."""

    mu0: float      # mean geometric loss over healthy windows
    sigma0: float   # standard deviation (n-1 denominator) of the same
    d0: float       # mean damping factor over healthy windows
    n_windows: int

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise DegenerateBaselineError("sigma0 must be positive")
        if not (0.0 < self.d0 <= 1.0):
            raise InvalidParameterError("d0 must lie in (0, 1]")
        if self.n_windows < 2:
            raise CalibrationError("baseline needs at least 2 windows")


@dataclass(frozen=True)
class IndicatorVector:
    """One window's indicator values."""

    gsi: float
    pcc: float
    ddi: float
    fwr: float
    mll: float
    lqf: float
    window_id: int
    pcc_reliable: bool = True

    def as_array(self) -> np.ndarray:
        return np.array([self.gsi, self.pcc, self.ddi, self.fwr, self.mll, self.lqf])


def _damping_stat(rhos: np.ndarray, how: str) -> float:
    if how == "mean":
        return float(np.mean(rhos))
    if how == "min":
        return float(np.min(rhos))
    raise InvalidParameterError(f"unknown damping statistic {how!r}")


def calibrate_baseline(estimates, damping_stat: str = "mean") -> Baseline:
    """Baseline loss moments and damping level from healthy estimates.

    mu0/sigma0 are the sample mean and standard deviation (n-1
    denominator) of the per-window losses; d0 averages the per-window
    damping statistic.  Raises on fewer than two windows or on a
    zero-variance loss sample.
    """
    estimates = list(estimates)
    if len(estimates) < 2:
        raise CalibrationError(
            f"baseline calibration needs >= 2 windows, got {len(estimates)}"
        )
    losses = np.array([e.loss for e in estimates], dtype=float)
    sigma0 = float(losses.std(ddof=1))
    if sigma0 == 0.0:
        raise DegenerateBaselineError("healthy losses have zero variance")
    d0 = float(np.mean([_damping_stat(e.params.rhos, damping_stat) for e in estimates]))
    return Baseline(
        mu0=float(losses.mean()), sigma0=sigma0, d0=d0, n_windows=len(estimates)
    )


def compute_indicators(
    est: WindowEstimate,
    trajectory: SmoothedTrajectory,
    prev: tuple[WindowEstimate, IndicatorVector] | None,
    baseline: Baseline,
    epsilon: float = 1e-3,
    damping_stat: str = "mean",
    window_id: int = 0,
) -> IndicatorVector:
    """Indicator vector of one window.

    ``prev`` carries the previous window's (estimate, indicators) for the
    cumulative damping deficit and the frequency-change rate; pass None
    for the first window of a stream.  ``epsilon`` regularizes the
    damping margin in lqf.
    """
    if epsilon <= 0:
        raise InvalidParameterError("epsilon must be positive")
    omegas = est.params.omegas
    rhos = est.params.rhos
    K = len(omegas)

    gsi = (est.loss - baseline.mu0) / baseline.sigma0

    _, units, valid = phase_increments(trajectory)
    per_mode = np.zeros(K, dtype=complex)
    modes_used = 0
    for k in range(K):
        ok = valid[:, k]
        if np.any(ok):
            per_mode[modes_used] = np.mean(units[ok, k])
            modes_used += 1
    if modes_used:
        pcc = 1.0 - abs(np.sum(per_mode[:modes_used]) / modes_used)
    else:
        pcc = np.nan
    pcc_reliable = bool(valid.mean() > 0.5)

    d_hat = _damping_stat(rhos, damping_stat)
    deficit = max(0.0, baseline.d0 - d_hat)
    ddi = (prev[1].ddi if prev is not None else 0.0) + deficit

    fwr = float(np.abs(omegas - prev[0].params.omegas).sum()) if prev is not None else 0.0

    if K >= 2:
        ratios = [omegas[i] / omegas[j] for i in range(K) for j in range(i + 1, K)]
        mll = float(np.var(ratios))  # population variance: the pair count may be 1
    else:
        mll = 0.0

    lqf = float(np.linalg.norm(omegas) / ((1.0 - d_hat) + epsilon))

    return IndicatorVector(
        gsi=float(gsi), pcc=float(pcc), ddi=float(ddi), fwr=fwr, mll=mll,
        lqf=lqf, window_id=window_id, pcc_reliable=pcc_reliable,
    )


def indicator_series(estimates, trajectories, baseline: Baseline,
                     epsilon: float = 1e-3,
                     damping_stat: str = "mean") -> list[IndicatorVector]:
    """Fold :func:`compute_indicators` along one stream of windows."""
    out: list[IndicatorVector] = []
    prev = None
    for i, (est, traj) in enumerate(zip(estimates, trajectories)):
        vec = compute_indicators(
            est, traj, prev, baseline, epsilon=epsilon,
            damping_stat=damping_stat, window_id=i,
        )
        out.append(vec)
        prev = (est, vec)
    return out
