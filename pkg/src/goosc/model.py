"""Oscillatory state-space model: canonical parameters, stationary law,
seeded simulation, and spectral density.

The latent state is a stack of K two-dimensional modes.  Mode k advances
by the scaled rotation

    B_k = rho_k * [[cos w_k, sin w_k], [-sin w_k, cos w_k]],

so its eigenvalues are rho_k * exp(+/- i w_k).  The full transition
matrix is the block diagonal of the B_k, observations are x_t = C z_t + v_t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import solve_discrete_lyapunov
from scipy.signal import lfilter

from .exceptions import InstabilityError, InvalidParameterError

__all__ = [
    "ModeParams",
    "CanonicalParams",
    "Window",
    "build_transition",
    "solve_stationary",
    "stationary_covariance",
    "simulate",
    "spectral_density",
    "autocovariance",
    "split_into_windows",
    "rng_for",
    "check_canonical_gauge",
]

# Eigenvalue tolerance used when testing symmetric positive definiteness.
SPD_TOL = 1e-10


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Return a reproducible generator for a (seed, sub-stream) pair.

    Sub-streams derived with different ``path`` tuples are statistically
    independent, which lets per-window or per-cell randomness be drawn
    without perturbing the parent stream.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ModeParams:
    """Frequency/damping pair of one oscillatory mode.

    omega is in radians per sample and must lie strictly inside (0, pi);
    rho is the per-step amplitude decay in (0, 1).
    """

    omega: float
    rho: float

    def __post_init__(self):
        if not (0.0 < self.omega < np.pi):
            raise InvalidParameterError(f"omega={self.omega} outside (0, pi)")
        if not (0.0 < self.rho < 1.0):
            raise InvalidParameterError(f"rho={self.rho} outside (0, 1)")


def _as_readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def _check_spd(m: np.ndarray, name: str) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParameterError(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=1e-9, rtol=0.0):
        raise InvalidParameterError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(m).min() <= 0.0:
        raise InvalidParameterError(f"{name} is not positive definite")


@dataclass(frozen=True)
class CanonicalParams:
    """Gauge-fixed model parameters (omega, rho, C, Q, R).

    Construction checks structural invariants: modes strictly ascending in
    omega, SPD noise covariances, and consistent shapes.  The intra-block
    orientation convention (first observation row of each mode pair equal
    to (c, 0) with c > 0 and unit column-pair norm) is checked separately
    by :func:`check_canonical_gauge`, because sign-flipped fixtures and
    free-coordinate estimates legitimately violate it.
    """

    modes: tuple[ModeParams, ...]
    obs_matrix: np.ndarray
    state_noise: np.ndarray
    obs_noise: np.ndarray

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise InvalidParameterError("at least one mode is required")
        omegas = [m.omega for m in modes]
        if any(b <= a for a, b in zip(omegas, omegas[1:])):
            raise InvalidParameterError("mode frequencies must be strictly ascending")
        object.__setattr__(self, "modes", modes)
        C = _as_readonly(self.obs_matrix)
        Q = _as_readonly(self.state_noise)
        R = _as_readonly(self.obs_noise)
        if C.ndim != 2 or C.shape[1] != 2 * len(modes):
            raise InvalidParameterError(
                f"obs_matrix must be p x {2 * len(modes)}, got shape {C.shape}"
            )
        _check_spd(Q, "state_noise")
        _check_spd(R, "obs_noise")
        if Q.shape[0] != 2 * len(modes):
            raise InvalidParameterError("state_noise does not match the mode count")
        if R.shape[0] != C.shape[0]:
            raise InvalidParameterError("obs_noise does not match the observation dim")
        object.__setattr__(self, "obs_matrix", C)
        object.__setattr__(self, "state_noise", Q)
        object.__setattr__(self, "obs_noise", R)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def state_dim(self) -> int:
        return 2 * len(self.modes)

    @property
    def obs_dim(self) -> int:
        return self.obs_matrix.shape[0]

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes])

    @property
    def rhos(self) -> np.ndarray:
        return np.array([m.rho for m in self.modes])

    @property
    def transition(self) -> np.ndarray:
        return build_transition(self.modes)


def check_canonical_gauge(params: CanonicalParams, delta_min: float = 0.0,
                          tol: float = 1e-9) -> None:
    """Raise if ``params`` violates the full canonical-gauge convention.

    Checks frequency separation (> delta_min), full row rank of C, and the
    intra-block convention: C[0, 2k+1] == 0, C[0, 2k] > 0, and unit
    Frobenius norm of each column pair of C.
    """
    w = params.omegas
    if len(w) > 1 and np.min(np.diff(w)) <= delta_min:
        raise InvalidParameterError(
            f"mode gap {np.min(np.diff(w)):.4g} <= delta_min={delta_min}"
        )
    C = params.obs_matrix
    if np.linalg.matrix_rank(C) < C.shape[0]:
        raise InvalidParameterError("obs_matrix is row-rank deficient")
    for k in range(params.n_modes):
        pair = C[:, 2 * k : 2 * k + 2]
        if abs(C[0, 2 * k + 1]) > tol:
            raise InvalidParameterError(f"mode {k}: C[0,{2*k+1}] != 0")
        if C[0, 2 * k] <= 0:
            raise InvalidParameterError(f"mode {k}: C[0,{2*k}] <= 0")
        if abs(np.linalg.norm(pair) - 1.0) > tol:
            raise InvalidParameterError(f"mode {k}: column pair norm != 1")


@dataclass(frozen=True)
class Window:
    """A contiguous block of N observation vectors (N x p) with stream
    position metadata.  Windows of one stream are non-overlapping."""

    samples: np.ndarray
    start_index: int
    window_id: int

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if s.ndim != 2:
            raise InvalidParameterError("samples must be an N x p matrix")
        s = np.array(s)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.samples.shape[1]


def split_into_windows(observations: np.ndarray, window_len: int,
                       start_offset: int = 0) -> list[Window]:
    """Cut a T x p observation matrix into non-overlapping windows.

    A trailing remainder shorter than ``window_len`` is dropped.
    """
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    if obs.shape[0] < obs.shape[1]:  # accept p x T input from simulate()
        obs = obs.T
    n = obs.shape[0] // window_len
    return [
        Window(
            samples=obs[i * window_len : (i + 1) * window_len],
            start_index=start_offset + i * window_len,
            window_id=i,
        )
        for i in range(n)
    ]


def build_transition(modes: Sequence[ModeParams]) -> np.ndarray:
    """Assemble the block-diagonal transition matrix from mode parameters.

    Raises when modes are out of range or not strictly ascending in omega.
    """
    modes = tuple(modes)
    omegas = [m.omega for m in modes]
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise InvalidParameterError("mode frequencies must be strictly ascending")
    A = np.zeros((2 * len(modes), 2 * len(modes)))
    for k, m in enumerate(modes):
        c, s = np.cos(m.omega), np.sin(m.omega)
        A[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = m.rho * np.array([[c, s], [-s, c]])
    return A


def solve_stationary(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve Sigma = A Sigma A^T + Q for the stationary state covariance.

    Raises :class:`InstabilityError` when A has spectral radius >= 1,
    in which case no stationary law exists.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    radius = np.max(np.abs(np.linalg.eigvals(A))) if A.size else 0.0
    if radius >= 1.0:
        raise InstabilityError(f"spectral radius {radius:.6g} >= 1; no stationary law")
    sigma = solve_discrete_lyapunov(A, Q)
    return 0.5 * (sigma + sigma.T)


def stationary_covariance(params: CanonicalParams) -> np.ndarray:
    """Stationary latent covariance of the canonical model."""
    return solve_stationary(params.transition, params.state_noise)


def _modal_noise_to_complex(w: np.ndarray, k: int) -> np.ndarray:
    """Pair rows (2k, 2k+1) of state noise into the complex convention
    zeta = z1 - i z2, whose angle advances by +omega per step."""
    return w[2 * k] - 1j * w[2 * k + 1]


def _modal_trajectory(
    z0: np.ndarray,
    rhos: np.ndarray,
    omega_steps: np.ndarray,
    extra_angles: np.ndarray | None,
    state_noise: np.ndarray,
    rho_series: np.ndarray | None = None,
) -> np.ndarray:
    """Propagate all modes through n steps and return the latent 2K x n array.

    omega_steps is (n-1) x K: the rotation angle applied between sample t
    and t+1 for each mode.  extra_angles, when given, is an additional
    (n-1) x K rotation applied after the noise (phase jitter).
    rho_series, when given, is (n-1) x K time-varying damping; otherwise
    the constant ``rhos`` are used via a fast IIR filter.

    The recursion per mode, in complex form zeta = z1 - i z2, is

        zeta[t+1] = exp(i eta_t) * (rho_t * exp(i w_t) * zeta[t] + eps_t),

    which is evaluated by rotating the noise into a co-rotating frame so
    the remaining recursion has a real coefficient.
    """
    n_minus_1, K = omega_steps.shape
    n = n_minus_1 + 1
    if extra_angles is None:
        extra_angles = np.zeros_like(omega_steps)
    z = np.empty((2 * K, n))
    for k in range(K):
        zeta0 = z0[2 * k] - 1j * z0[2 * k + 1]
        eps = _modal_noise_to_complex(state_noise, k)  # length n-1
        total = omega_steps[:, k] + extra_angles[:, k]
        # psi[t] = accumulated rotation up to sample t (psi[0] = 0)
        psi = np.concatenate(([0.0], np.cumsum(total)))
        # noise enters after the omega rotation but before the jitter one
        noise_phase = psi[:-1] + omega_steps[:, k]
        u = np.empty(n, dtype=complex)
        u[0] = zeta0
        u[1:] = eps * np.exp(-1j * noise_phase)
        if rho_series is None:
            xi = lfilter([1.0], [1.0, -rhos[k]], u)
        else:
            xi = _varying_ar1(rho_series[:, k], u)
        zeta = xi * np.exp(1j * psi)
        z[2 * k] = zeta.real
        z[2 * k + 1] = -zeta.imag
    return z


def _varying_ar1(rho: np.ndarray, u: np.ndarray, block: int = 512) -> np.ndarray:
    """Evaluate xi[t+1] = rho[t] xi[t] + u[t+1], xi[0] = u[0], with a
    time-varying real coefficient, using blocked product-sum scans so the
    cumulative products never underflow."""
    n = len(u)
    xi = np.empty(n, dtype=u.dtype)
    xi[0] = u[0]
    start = 1
    state = u[0]
    while start < n:
        stop = min(start + block, n)
        r = rho[start - 1 : stop - 1]
        prod = np.cumprod(r)  # prod[j] = rho[start-1] ... rho[start-1+j]
        # xi[start+j] = prod[j] * state + sum_{m<=j} (prod[j]/prod[m]) u[start+m]
        scaled = u[start:stop] / prod
        xi[start:stop] = prod * (state + np.cumsum(scaled))
        state = xi[stop - 1]
        start = stop
    return xi


def _draw_initial_state(params: CanonicalParams, rng: np.random.Generator) -> np.ndarray:
    sigma = stationary_covariance(params)
    return np.linalg.cholesky(sigma) @ rng.standard_normal(params.state_dim)


def simulate(params: CanonicalParams, n_samples: int, seed: int):
    """Simulate the model for n_samples steps.

    Returns (z, x) with z of shape 2K x n and x of shape p x n.  The
    initial state is drawn from the stationary law, and identical
    (params, n_samples, seed) always yield bit-identical output.
    """
    if n_samples < 1:
        raise InvalidParameterError("n_samples must be >= 1")
    rng = rng_for(seed)
    z0 = _draw_initial_state(params, rng)
    K = params.n_modes
    Lq = np.linalg.cholesky(params.state_noise)
    Lr = np.linalg.cholesky(params.obs_noise)
    w = Lq @ rng.standard_normal((params.state_dim, max(n_samples - 1, 1)))
    if n_samples == 1:
        z = z0[:, None]
    else:
        omega_steps = np.tile(params.omegas, (n_samples - 1, 1))
        z = _modal_trajectory(z0, params.rhos, omega_steps, None, w[:, : n_samples - 1])
    v = Lr @ rng.standard_normal((params.obs_dim, n_samples))
    x = params.obs_matrix @ z + v
    return z, x


def spectral_density(params: CanonicalParams, lam) -> np.ndarray:
    """Observation spectral density S_x(e^{i lam}).

    S_x = C (e^{i lam} I - A)^-1 Q (e^{-i lam} I - A^T)^-1 C^T + R, a
    Hermitian positive semidefinite p x p matrix.  ``lam`` may be a scalar
    (returns p x p) or a 1-D grid (returns len(lam) x p x p).
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    A = params.transition
    C = params.obs_matrix
    Q = params.state_noise
    R = params.obs_noise
    dim = A.shape[0]
    E = np.exp(1j * lam_arr)[:, None, None] * np.eye(dim)
    # H(lam) = C (e^{i lam} I - A)^-1, computed via the transposed system.
    Ht = np.linalg.solve(
        np.swapaxes(E - A, 1, 2), np.tile(C.T.astype(complex), (len(lam_arr), 1, 1))
    )
    H = np.swapaxes(Ht, 1, 2)
    S = H @ Q @ np.conj(np.swapaxes(H, 1, 2)) + R
    if np.isscalar(lam) or np.asarray(lam).ndim == 0:
        return S[0]
    return S


def autocovariance(params: CanonicalParams, n_lags: int) -> np.ndarray:
    """Observation autocovariance Gamma_d = C A^d Sigma C^T + R 1{d=0}
    for d = 0 .. n_lags-1, returned as (n_lags, p, p).

    Uses the closed form A^d = blockdiag(rho^d Rot(d omega)) so no matrix
    powers are formed.
    """
    sigma = stationary_covariance(params)
    C = params.obs_matrix
    p = params.obs_dim
    d = np.arange(n_lags)
    out = np.zeros((n_lags, p, p))
    J = np.array([[0.0, 1.0], [-1.0, 0.0]])
    for k in range(params.n_modes):
        rho, om = params.modes[k].rho, params.modes[k].omega
        Ck = C[:, 2 * k : 2 * k + 2]
        Sk = sigma[2 * k : 2 * k + 2, :] @ C.T  # 2 x p
        E = Ck @ Sk
        F = Ck @ J @ Sk
        decay = rho ** d
        out += decay[:, None, None] * (
            np.cos(d * om)[:, None, None] * E + np.sin(d * om)[:, None, None] * F
        )
    out[0] += params.obs_noise
    return out
