"""Synthetic degradation lab: labeled streams with controlled geometric
degradations and energy nuisances, plus latent-plane portraits.

Degradation kinds, applied from ``onset_sample`` onward:

* phase_jitter   - each latent mode block is rotated by an i.i.d. random
                   angle N(0, h^2) every step.  Rotations are isometries,
                   so latent energy is preserved exactly.  With
                   ``slip_period`` set, the rotations fire only at evenly
                   spaced instants (discrete phase slips) instead of
                   every sample.
* freq_wander    - mode frequencies drift linearly at h rad/sample^2,
                   clipped away from 0 and pi.
* damping_drift  - damping factors decay linearly at h per sample,
                   floored at 0.5.
* amplitude_shock- observations of each post-onset window are multiplied
                   by a factor drawn from {1, 1+h} with probability 1/2:
                   a pure-energy nuisance with unchanged phase geometry.

A zero-strength scenario reproduces the plain simulation bit for bit
under the same seed: degradation randomness lives on a separate stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError
from .kalman import smooth
from .model import (
    CanonicalParams,
    Window,
    _draw_initial_state,
    _modal_trajectory,
    rng_for,
    simulate,
    split_into_windows,
)

__all__ = [
    "DegradationScenario",
    "LabeledStream",
    "generate",
    "latent_portrait",
    "SCENARIO_KINDS",
]

SCENARIO_KINDS = ("phase_jitter", "freq_wander", "damping_drift", "amplitude_shock")

# frequencies are clipped to [margin, pi - margin]; damping floors at 0.5
_FREQ_CLIP_MARGIN = 0.05
_RHO_FLOOR = 0.5

# sub-stream tags for degradation and nuisance randomness
_DEG_STREAM = 0xDE6
_NUISANCE_STREAM = 0xA11


@dataclass(frozen=True)
class DegradationScenario:
    """One controlled degradation: what, when, and how strongly.

    ``strength`` units depend on kind: radians of jitter std,
    rad/sample^2 drift rate, damping decay per sample, or multiplicative
    shock amplitude.  ``slip_period`` switches phase_jitter from sustained
    per-sample jitter to discrete slips every that many samples.
    """

    kind: str
    onset_sample: int
    strength: float
    base_params: CanonicalParams
    slip_period: int | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise InvalidParameterError(f"unknown degradation kind {self.kind!r}")
        if self.strength < 0:
            raise InvalidParameterError("strength must be >= 0")
        if self.onset_sample < 0:
            raise InvalidParameterError("onset_sample must be >= 0")
        if self.slip_period is not None and self.slip_period < 1:
            raise InvalidParameterError("slip_period must be >= 1")


@dataclass(frozen=True)
class LabeledStream:
    """A generated observation stream with per-window degradation labels."""

    observations: np.ndarray      # T x p
    window_labels: np.ndarray     # bool, one per non-overlapping window
    scenario: DegradationScenario
    seed: int
    window_len: int
    clipped: bool = False
    nuisance: DegradationScenario | None = None

    def windows(self) -> list[Window]:
        return split_into_windows(self.observations, self.window_len)


def _window_labels(total: int, window_len: int, onset: int) -> np.ndarray:
    n_windows = total // window_len
    ends = (np.arange(n_windows) + 1) * window_len
    return ends > onset  # any sample index >= onset falls inside


def _apply_shocks(obs: np.ndarray, onset: int, strength: float,
                  window_len: int, rng: np.random.Generator) -> np.ndarray:
    n_windows = obs.shape[0] // window_len
    factors = 1.0 + strength * rng.integers(0, 2, size=n_windows)
    out = obs.copy()
    for i in range(n_windows):
        a, b = i * window_len, (i + 1) * window_len
        lo = max(a, onset)
        if lo < b:
            out[lo:b] *= factors[i]
    return out


def generate(scenario: DegradationScenario, total_samples: int,
             window_len: int, seed: int,
             nuisance: DegradationScenario | None = None) -> LabeledStream:
    """Generate one labeled stream.

    ``nuisance`` optionally overlays amplitude shocks (and only those) on
    top of the primary scenario; window labels always follow the primary
    scenario's onset.
    """
    if total_samples < 2 * window_len:
        raise InvalidParameterError("total_samples must be >= 2 * window_len")
    if nuisance is not None and nuisance.kind != "amplitude_shock":
        raise InvalidParameterError("only amplitude_shock can be a nuisance overlay")
    params = scenario.base_params
    n = total_samples
    onset = scenario.onset_sample
    h = scenario.strength
    clipped = False

    if h == 0.0 or scenario.kind == "amplitude_shock":
        _, x = simulate(params, n, seed)
        obs = np.ascontiguousarray(x.T)
        if scenario.kind == "amplitude_shock" and h > 0.0:
            obs = _apply_shocks(obs, onset, h, window_len,
                                rng_for(seed, _DEG_STREAM))
    else:
        # replicate the simulator's draw order exactly so the pre-onset
        # samples coincide with the healthy stream of the same seed
        rng = rng_for(seed)
        z0 = _draw_initial_state(params, rng)
        K = params.n_modes
        Lq = np.linalg.cholesky(params.state_noise)
        Lr = np.linalg.cholesky(params.obs_noise)
        w = Lq @ rng.standard_normal((params.state_dim, max(n - 1, 1)))
        v = Lr @ rng.standard_normal((params.obs_dim, n))
        deg = rng_for(seed, _DEG_STREAM)

        omega_steps = np.tile(params.omegas, (n - 1, 1))
        extra = None
        rho_series = None
        t_rel = np.arange(n - 1) - onset  # step t propagates sample t -> t+1

        if scenario.kind == "phase_jitter":
            extra = np.zeros((n - 1, K))
            if scenario.slip_period is None:
                active = t_rel >= 0
                extra[active] = h * deg.standard_normal((int(active.sum()), K))
            else:
                idx = np.arange(max(onset, 0), n - 1, scenario.slip_period)
                extra[idx] = h * deg.standard_normal((len(idx), K))
        elif scenario.kind == "freq_wander":
            drift = h * np.maximum(t_rel, 0)[:, None]
            wandered = params.omegas[None, :] + drift
            lo, hi = _FREQ_CLIP_MARGIN, np.pi - _FREQ_CLIP_MARGIN
            clipped = bool(np.any(wandered < lo) or np.any(wandered > hi))
            omega_steps = np.clip(wandered, lo, hi)
        elif scenario.kind == "damping_drift":
            decay = h * np.maximum(t_rel, 0)[:, None]
            drifted = params.rhos[None, :] - decay
            clipped = bool(np.any(drifted < _RHO_FLOOR))
            rho_series = np.maximum(drifted, _RHO_FLOOR)

        z = _modal_trajectory(z0, params.rhos, omega_steps, extra,
                              w[:, : n - 1], rho_series)
        obs = np.ascontiguousarray((params.obs_matrix @ z + v).T)

    if nuisance is not None and nuisance.strength > 0.0:
        obs = _apply_shocks(obs, nuisance.onset_sample, nuisance.strength,
                            window_len, rng_for(seed, _NUISANCE_STREAM))

    return LabeledStream(
        observations=obs,
        window_labels=_window_labels(n, window_len, onset),
        scenario=scenario,
        seed=seed,
        window_len=window_len,
        clipped=clipped,
        nuisance=nuisance,
    )


# portrait smoothing allows at least this per-step phase freedom,
# expressed as state noise relative to the stationary mode variance
_PORTRAIT_PHASE_BUDGET = 0.1


def _portrait_params(params: CanonicalParams) -> CanonicalParams:
    """The portrait smoothing model: base parameters with each mode's
    state-noise block floored at a fraction of its stationary variance.

    A nearly deterministic prior would average away out-of-model phase
    motion and shrink the plotted radius; portraits should follow the
    data instead, so rigid modes get their noise budget inflated."""
    from .model import stationary_covariance

    sigma = stationary_covariance(params)
    K = params.n_modes
    D = np.eye(2 * K)
    boosted = False
    for k in range(K):
        sl = slice(2 * k, 2 * k + 2)
        v = 0.5 * np.trace(sigma[sl, sl])
        q = 0.5 * np.trace(params.state_noise[sl, sl])
        if q < _PORTRAIT_PHASE_BUDGET * v:
            D[sl, sl] *= np.sqrt(_PORTRAIT_PHASE_BUDGET * v / q)
            boosted = True
    if not boosted:
        return params
    return CanonicalParams(
        params.modes, params.obs_matrix,
        D @ params.state_noise @ D, params.obs_noise,
    )


def latent_portrait(stream: LabeledStream, mode_index: int, segment) -> np.ndarray:
    """Smoothed latent-plane coordinates (z1, z2) of one mode over a
    sample range, for phase-portrait plots.

    ``segment`` is a (start, stop) pair in sample indices.  Healthy
    segments trace a tight annulus; phase-jittered segments spread in
    angle at similar radius.
    """
    params = stream.scenario.base_params
    if not (0 <= mode_index < params.n_modes):
        raise InvalidParameterError(f"mode_index {mode_index} out of range")
    start, stop = int(segment[0]), int(segment[1])
    if stop <= start:
        return np.empty((0, 2))
    seg = stream.observations[start:stop]
    traj = smooth(_portrait_params(params), Window(seg, start_index=start, window_id=0),
                  want_covariances=False)
    return traj.means[:, 2 * mode_index : 2 * mode_index + 2].copy()
