"""Exact Gaussian inference for the oscillatory model: Kalman filter,
RTS smoother, innovations log-likelihood, and per-mode phase extraction.

The filter is initialized from the stationary law (mean 0, covariance
Sigma), so filtered/smoothed moments coincide with the conditional
moments of the dense joint Gaussian of the window.  Covariance updates
use the Joseph form to preserve symmetry over long windows.

For time-invariant systems the covariance recursion converges
geometrically; once successive prediction covariances agree to near
machine precision the gains are frozen, which turns the remaining steps
into cheap mean updates without changing results beyond roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConditioningError, InvalidParameterError
from .model import CanonicalParams, Window, solve_stationary

__all__ = [
    "FilterResult",
    "SmoothedTrajectory",
    "kalman_filter",
    "smooth",
    "smooth_matrices",
    "mode_phases",
    "phase_increments",
]

# Latent block norms below this are treated as phase-undefined.
PHASE_NORM_TOL = 1e-12

# Relative covariance change under which the gain is declared steady.
_FREEZE_TOL = 1e-15


@dataclass(frozen=True)
class FilterResult:
    """Forward-pass output: one row per sample."""

    means: np.ndarray            # N x 2K filtered means
    covariances: np.ndarray      # N x 2K x 2K filtered covariances
    innovations: np.ndarray      # N x p one-step prediction residuals
    innovation_covs: np.ndarray  # N x p x p
    loglik: float
    predicted_means: np.ndarray  # N x 2K prior means (before update)
    predicted_covs: np.ndarray   # N x 2K x 2K


@dataclass(frozen=True)
class SmoothedTrajectory:
    """RTS smoother output for one window."""

    means: np.ndarray        # N x 2K smoothed latent means
    covariances: np.ndarray | None  # N x 2K x 2K, None when not requested
    loglik: float            # innovations log-likelihood of the window
    fitted_obs: np.ndarray   # N x p conditional observation means C z_hat

    @property
    def n_modes(self) -> int:
        return self.means.shape[1] // 2


def _filter_core(A, C, Q, R, sigma0, x, compute_loglik=True):
    """Run the forward recursion on an N x p data matrix.

    All operations are dtype-agnostic (plain transposes, `solve`), so the
    same code path supports complex-step differentiation when
    ``compute_loglik`` is False.  Returns (m_filt, P_filt, innovations,
    innovation_covs, loglik-or-None, m_pred, P_pred, freeze_index).
    """
    N, p = x.shape
    dim = A.shape[0]
    dtype = np.result_type(A, C, Q, R, x)
    m_pred = np.zeros((N, dim), dtype=dtype)
    P_pred = np.zeros((N, dim, dim), dtype=dtype)
    m_filt = np.zeros((N, dim), dtype=dtype)
    P_filt = np.zeros((N, dim, dim), dtype=dtype)
    innov = np.zeros((N, p), dtype=dtype)
    F_all = np.zeros((N, p, p), dtype=dtype)
    eye = np.eye(dim, dtype=dtype)
    At = A.T
    loglik = 0.0
    log2pi = np.log(2.0 * np.pi)
    scalar_obs = p == 1
    C0 = C[0] if scalar_obs else None
    R00 = R[0, 0] if scalar_obs else None

    m = np.zeros(dim, dtype=dtype)
    P = sigma0.astype(dtype)
    frozen = False
    freeze_t = N
    K = F = Pf = logdetF = None
    for t in range(N):
        m_pred[t] = m
        P_pred[t] = P
        if not frozen:
            if scalar_obs:
                CP = C0 @ P
                F = CP @ C0 + R00
                if compute_loglik and not np.real(F) > 0:
                    raise ConditioningError(
                        f"innovation covariance not positive definite at index {t}"
                    )
                K = CP / F
                IKC = eye - np.outer(K, C0)
                Pf = IKC @ P @ IKC.T + np.outer(K, K) * R00
                if compute_loglik:
                    logdetF = np.log(F)
            else:
                CP = C @ P
                F = CP @ C.T + R
                if compute_loglik:
                    try:
                        L = np.linalg.cholesky(F)
                    except np.linalg.LinAlgError:
                        raise ConditioningError(
                            "innovation covariance not positive definite "
                            f"at index {t}"
                        ) from None
                    logdetF = 2.0 * np.log(np.diag(L)).sum()
                K = np.linalg.solve(F, CP).T
                IKC = eye - K @ C
                Pf = IKC @ P @ IKC.T + K @ R @ K.T
        P_filt[t] = Pf

        if scalar_obs:
            e = x[t, 0] - C0 @ m
            innov[t, 0] = e
            F_all[t, 0, 0] = F
            if compute_loglik:
                loglik = loglik - 0.5 * (log2pi + logdetF + e * e / F)
            m = m + K * e
        else:
            e = x[t] - C @ m
            innov[t] = e
            F_all[t] = F
            if compute_loglik:
                alpha = np.linalg.solve(F, e)
                loglik = loglik - 0.5 * (p * log2pi + logdetF + e @ alpha)
            m = m + K @ e
        m_filt[t] = m

        if t < N - 1:
            m = A @ m
            if not frozen:
                P_new = A @ Pf @ At + Q
                if np.max(np.abs(P_new - P)) <= _FREEZE_TOL * (
                    1.0 + np.max(np.abs(P_new))
                ):
                    frozen = True
                    freeze_t = t + 1
                P = P_new
    ll = float(np.real(loglik)) if compute_loglik else None
    return m_filt, P_filt, innov, F_all, ll, m_pred, P_pred, freeze_t


def _window_data(window: Window) -> np.ndarray:
    x = window.samples
    if x.shape[0] == 0:
        raise InvalidParameterError("window is empty")
    return x


def kalman_filter(params: CanonicalParams, window: Window) -> FilterResult:
    """Kalman filter over one window, initialized from the stationary law.

    Returns filtered moments, innovations with their covariances, and the
    innovations log-likelihood of the window.
    """
    x = _window_data(window)
    sigma0 = solve_stationary(params.transition, params.state_noise)
    m_f, P_f, e, F, ll, m_p, P_p, _ = _filter_core(
        params.transition, params.obs_matrix, params.state_noise,
        params.obs_noise, sigma0, x,
    )
    return FilterResult(m_f, P_f, e, F, ll, m_p, P_p)


def _smooth_core(A, m_filt, P_filt, m_pred, P_pred, freeze_t=None,
                 want_covariances=True):
    """RTS backward pass.  For t >= freeze_t the covariance pair is
    constant, so the smoother gain is computed once for that region."""
    N, dim = m_filt.shape
    if freeze_t is None:
        freeze_t = N
    ms = np.zeros_like(m_filt)
    ms[-1] = m_filt[-1]
    Ps = None
    if want_covariances:
        Ps = np.zeros_like(P_filt)
        Ps[-1] = P_filt[-1]
    At = A.T
    J_steady = None
    if freeze_t <= N - 2:
        J_steady = np.linalg.solve(
            P_pred[freeze_t + 1].T, (P_filt[freeze_t] @ At).T
        ).T
    for t in range(N - 2, -1, -1):
        if t >= freeze_t:
            J = J_steady
        else:
            J = np.linalg.solve(P_pred[t + 1].T, (P_filt[t] @ At).T).T
        ms[t] = m_filt[t] + J @ (ms[t + 1] - m_pred[t + 1])
        if want_covariances:
            Ps[t] = P_filt[t] + J @ (Ps[t + 1] - P_pred[t + 1]) @ J.T
    return ms, Ps


def smooth_matrices(A, C, Q, R, window: Window, compute_loglik: bool = True,
                    sigma0: np.ndarray | None = None,
                    want_covariances: bool = True) -> SmoothedTrajectory:
    """RTS smoother for arbitrary (A, C, Q, R) matrices.

    Used directly by the unconstrained-coordinates estimation arm; the
    canonical entry point is :func:`smooth`.  ``sigma0`` overrides the
    initial state covariance (defaults to the stationary solution).
    """
    x = _window_data(window)
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    if sigma0 is None:
        sigma0 = solve_stationary(A, Q)
    m_f, P_f, _, _, ll, m_p, P_p, freeze_t = _filter_core(
        A, C, Q, R, sigma0, x, compute_loglik
    )
    ms, Ps = _smooth_core(A, m_f, P_f, m_p, P_p, freeze_t, want_covariances)
    fitted = ms @ C.T
    return SmoothedTrajectory(ms, Ps, ll if ll is not None else np.nan, fitted)


def smooth(params: CanonicalParams, window: Window,
           want_covariances: bool = True) -> SmoothedTrajectory:
    """Smoothed latent means/covariances, window log-likelihood, and the
    conditional observation means C z_hat for one window."""
    return smooth_matrices(
        params.transition, params.obs_matrix, params.state_noise,
        params.obs_noise, window, want_covariances=want_covariances,
    )


def mode_phases(trajectory: SmoothedTrajectory) -> np.ndarray:
    """Per-mode phases of the smoothed latent blocks, N x K in (-pi, pi].

    The phase of mode k is atan2(-z[2k+1], z[2k]), chosen so the noise-free
    canonical dynamics advance it by +omega_k per step.  Indices where the
    block norm underflows are NaN.
    """
    z = trajectory.means
    K = z.shape[1] // 2
    phases = np.empty((z.shape[0], K))
    for k in range(K):
        z1 = z[:, 2 * k]
        z2 = z[:, 2 * k + 1]
        ph = np.arctan2(-z2, z1)
        ph[ph == -np.pi] = np.pi
        ph[np.hypot(z1, z2) < PHASE_NORM_TOL] = np.nan
        phases[:, k] = ph
    return phases


def phase_increments(trajectory: SmoothedTrajectory):
    """Wrapped per-step phase increments and their unit complex rotations.

    Returns (delta, units, valid): delta is (N-1) x K wrapped to (-pi, pi],
    units are the unit complex numbers exp(i delta) computed directly from
    latent coordinate products (never through atan2), and valid flags the
    increments whose endpoint block norms are both defined.

    Computing units from coordinate products keeps them bit-identical
    under blockwise sign flips of the latent coordinates.
    """
    z = trajectory.means
    N, twoK = z.shape
    K = twoK // 2
    delta = np.empty((N - 1, K))
    units = np.empty((N - 1, K), dtype=complex)
    valid = np.zeros((N - 1, K), dtype=bool)
    for k in range(K):
        z1 = z[:, 2 * k]
        z2 = z[:, 2 * k + 1]
        # zeta = z1 - i z2; increment rotation = zeta_{t+1} * conj(zeta_t)
        re = z1[1:] * z1[:-1] + z2[1:] * z2[:-1]
        im = z1[1:] * z2[:-1] - z2[1:] * z1[:-1]
        mag = np.hypot(re, im)
        ok = (np.hypot(z1[1:], z2[1:]) >= PHASE_NORM_TOL) & (
            np.hypot(z1[:-1], z2[:-1]) >= PHASE_NORM_TOL
        ) & (mag > 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            units[:, k] = (re + 1j * im) / mag
            d = np.arctan2(im, re)
        d[d == -np.pi] = np.pi
        delta[:, k] = np.where(ok, d, np.nan)
        units[~ok, k] = np.nan
        valid[:, k] = ok
    return delta, units, valid
