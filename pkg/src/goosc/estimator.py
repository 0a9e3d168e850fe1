"""Per-window parameter estimation over the canonical gauge manifold.

The search space is reparameterized so ordinary unconstrained quasi-Newton
optimization stays inside the gauge: frequencies through a normalized
positive-gap construction (strictly ascending in (0, pi)), damping factors
through a logistic map, per-mode state-noise blocks and the observation
noise through Cholesky factors.  For single-channel data the gauge
convention pins the observation row of every mode to (1, 0), so the
observation matrix carries no free parameters.

The fitted objective is the penalized frequency-domain Gaussian (Whittle)
negative log-likelihood, evaluated from a closed-form rational spectrum;
gradients come from complex-step differentiation of that closed form and
are exact to machine precision.  The squared smoothing-residual loss (the
quantity the geometric state indicator standardizes) is evaluated at the
fitted parameters with the exact smoother.  Optimizing the residual loss
itself is degenerate: it decreases monotonically as the observation noise
shrinks or the state noise grows, for any data, so it cannot identify
parameters on its own.

A scalar observation channel determines only two functionals of each
2 x 2 state-noise block, leaving a one-dimensional unobservable direction
per mode.  That direction is resolved deterministically: a small isotropy
preference in the objective plus an exact post-fit projection along the
spectrum-preserving null direction onto the most isotropic representative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .exceptions import (
    EstimationError,
    GaugeDegeneracyError,
    InitializationError,
    InvalidParameterError,
)
from .gauge import fix_intra_block_gauge
from .kalman import SmoothedTrajectory, _filter_core, _smooth_core, smooth
from .model import CanonicalParams, ModeParams, Window, rng_for

__all__ = [
    "EstimatorConfig",
    "WindowEstimate",
    "geometric_loss",
    "initialize",
    "estimate_window",
    "estimate_window_free",
    "chain_estimates",
]

_CSTEP = 1e-20      # complex-step size; derivatives exact to machine precision
_RAW_BOUND = 30.0   # box on the unconstrained vector, prevents exp overflow
_ISO_WEIGHT = 1e-3  # strength of the isotropy tie-break on Q blocks


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs of the per-window estimator."""

    K: int
    lam: float = 0.1
    max_iters: int = 500
    grad_tol: float = 1e-6
    n_restarts: int = 3
    seed: int = 0
    delta_min: float = 0.05

    def __post_init__(self):
        if self.K < 1:
            raise InvalidParameterError("K must be >= 1")
        if self.lam < 0:
            raise InvalidParameterError("lambda must be >= 0")
        if self.max_iters < 1 or self.n_restarts < 1:
            raise InvalidParameterError("max_iters and n_restarts must be >= 1")


@dataclass(frozen=True)
class WindowEstimate:
    """One window's fitted parameters and diagnostics."""

    params: CanonicalParams
    loss: float
    loglik: float
    converged: bool
    restarts_used: int


# ---------------------------------------------------------------------------
# unconstrained reparameterization (single observation channel)
# ---------------------------------------------------------------------------

def _softplus(u):
    # complex-safe: branch on the real part, which is locally constant
    u = np.asarray(u)
    big = np.real(u) > 30.0
    safe = np.where(big, 0.0, u)
    return np.where(big, u, np.log(1.0 + np.exp(safe)))


def _softplus_inv(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 30.0, y, np.log(np.expm1(np.maximum(y, 1e-300))))


def _sigmoid(v):
    v = np.asarray(v)
    pos = np.real(v) >= 0
    safe_neg = np.where(pos, 0.0, v)
    safe_pos = np.where(pos, v, 0.0)
    return np.where(pos, 1.0 / (1.0 + np.exp(-safe_pos)),
                    np.exp(safe_neg) / (1.0 + np.exp(safe_neg)))


def raw_size(K: int) -> int:
    """Length of the unconstrained vector for a K-mode scalar-output model."""
    return (K + 1) + K + 3 * K + 1


def _unpack_raw(raw, K):
    """raw (..., n) -> omega (..., K), rho (..., K), q components
    (q11, q12, q22) each (..., K), and R (..., 1).  Dtype generic and
    batch-broadcasting, so one call serves both evaluation and the stacked
    complex-step gradient."""
    raw = np.asarray(raw)
    u = raw[..., : K + 1]
    v = raw[..., K + 1 : 2 * K + 1]
    gaps = _softplus(u)
    cum = np.cumsum(gaps, axis=-1)
    omega = np.pi * cum[..., :K] / cum[..., K : K + 1]
    rho = _sigmoid(v)
    base = 2 * K + 1
    l0 = raw[..., base : base + 3 * K : 3]
    l1 = raw[..., base + 1 : base + 3 * K : 3]
    l2 = raw[..., base + 2 : base + 3 * K : 3]
    e0, e2 = np.exp(l0), np.exp(l2)
    # diagonal shift keeps fitted state-noise blocks safely nonsingular
    q11 = e0 * e0 + 1e-10
    q12 = e0 * l1
    q22 = l1 * l1 + e2 * e2 + 1e-10
    R = np.exp(2.0 * raw[..., base + 3 * K : base + 3 * K + 1])
    return omega, rho, (q11, q12, q22), R


def _pack_raw(params: CanonicalParams) -> np.ndarray:
    """Invert the reparameterization (single-channel models only).

    A non-block-diagonal state noise is projected onto its block diagonal.
    """
    K = params.n_modes
    omega = params.omegas
    frac = np.concatenate((omega / np.pi, [1.0]))
    gaps = np.diff(np.concatenate(([0.0], frac)))
    if np.any(gaps <= 0):
        raise InvalidParameterError("frequencies not strictly inside (0, pi)")
    raw = np.empty(raw_size(K))
    raw[: K + 1] = _softplus_inv(gaps)
    rho = np.clip(params.rhos, 1e-12, 1 - 1e-12)
    raw[K + 1 : 2 * K + 1] = np.log(rho) - np.log1p(-rho)
    base = 2 * K + 1
    for k in range(K):
        Qk = params.state_noise[2 * k : 2 * k + 2, 2 * k : 2 * k + 2]
        L = np.linalg.cholesky(Qk)
        raw[base + 3 * k] = np.log(L[0, 0])
        raw[base + 3 * k + 1] = L[1, 0]
        raw[base + 3 * k + 2] = np.log(L[1, 1])
    raw[base + 3 * K] = 0.5 * np.log(params.obs_noise[0, 0])
    return np.clip(raw, -_RAW_BOUND, _RAW_BOUND)


def _params_from_raw(raw: np.ndarray, K: int) -> CanonicalParams:
    omega, rho, (q11, q12, q22), R = _unpack_raw(raw, K)
    modes = tuple(ModeParams(float(w), float(r)) for w, r in zip(omega, rho))
    Q = np.zeros((2 * K, 2 * K))
    for k in range(K):
        Q[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [
            [float(q11[k]), float(q12[k])],
            [float(q12[k]), float(q22[k])],
        ]
    C = np.zeros((1, 2 * K))
    C[0, ::2] = 1.0
    return CanonicalParams(modes, C, Q, np.array([[float(np.real(R[0]))]]))


# ---------------------------------------------------------------------------
# closed-form rational spectrum (single channel) and Whittle objective
# ---------------------------------------------------------------------------

def scalar_spectrum(raw, K, lam_grid, c_rows=None):
    """Model spectral density on a frequency grid from raw vectors.

    ``raw`` may be a single vector or a batch (..., n); the grid dimension
    is appended.  With E = e^{i lam} and B a scaled-rotation block, each
    mode contributes (c adj(EI-B)) Q (c adj(EI-B))^H / |det(EI-B)|^2,
    expanded here into real polynomials of cos/sin so the whole map is
    complex-step differentiable.  ``c_rows`` overrides the per-mode
    loadings; the canonical single-channel convention (1, 0) is the
    default.
    """
    omega, rho, (q11, q12, q22), R = _unpack_raw(raw, K)
    lam = np.asarray(lam_grid)
    cl, sl = np.cos(lam), np.sin(lam)
    c2l, s2l = np.cos(2.0 * lam), np.sin(2.0 * lam)
    S = R * np.ones_like(lam)  # (..., 1) x (M,) -> (..., M)
    for k in range(K):
        w = omega[..., k : k + 1]
        r = rho[..., k : k + 1]
        c1, c2 = (1.0, 0.0) if c_rows is None else c_rows[k]
        cw, sw = np.cos(w), np.sin(w)
        a = cl - r * cw
        b = sl
        u1r = a * c1 - r * sw * c2
        u1i = b * c1
        u2r = r * sw * c1 + a * c2
        u2i = b * c2
        num = (
            q11[..., k : k + 1] * (u1r * u1r + u1i * u1i)
            + q22[..., k : k + 1] * (u2r * u2r + u2i * u2i)
            + 2.0 * q12[..., k : k + 1] * (u1r * u2r + u1i * u2i)
        )
        dr = c2l - 2.0 * r * cw * cl + r * r
        di = s2l - 2.0 * r * cw * sl
        S = S + num / (dr * dr + di * di)
    return S


def _penalty(omega, rho, lam, prev_omega):
    """lam * R(theta): squared frequency change + damping barrier."""
    if lam == 0.0:
        return np.zeros(np.asarray(omega).shape[:-1])
    pen = -np.sum(np.log(1.0 - rho) + np.log(rho), axis=-1)
    if prev_omega is not None:
        diff = omega - np.asarray(prev_omega)
        pen = pen + np.sum(diff * diff, axis=-1)
    return lam * pen


def _iso_tiebreak(q11, q12, q22):
    """Dimensionless deviation of each Q block from isotropy; breaks the
    scalar-channel null direction during optimization."""
    tr_half = 0.5 * (q11 + q22)
    dev = (0.5 * (q11 - q22) ** 2 + 2.0 * q12 * q12) / (tr_half * tr_half)
    return _ISO_WEIGHT * np.sum(dev, axis=-1)


class _WhittleProblem:
    """Penalized frequency-domain negative log-likelihood of one window."""

    def __init__(self, window: Window, K: int, lam: float, prev_omega):
        x = window.samples[:, 0]
        N = len(x)
        M = (N - 1) // 2
        X = np.fft.rfft(x)
        self.I = (np.abs(X[1 : M + 1]) ** 2) / N
        self.lam_grid = 2.0 * np.pi * np.arange(1, M + 1) / N
        self.N = N
        self.K = K
        self.lam = lam
        self.prev_omega = prev_omega

    def _objective(self, raw_batch):
        """Batched objective; raw_batch has shape (..., n)."""
        S = scalar_spectrum(raw_batch, self.K, self.lam_grid)
        omega, rho, (q11, q12, q22), _ = _unpack_raw(raw_batch, self.K)
        nll = (2.0 / self.N) * np.sum(np.log(S) + self.I / S, axis=-1)
        return (nll + _penalty(omega, rho, self.lam, self.prev_omega)
                + _iso_tiebreak(q11, q12, q22))

    def value(self, raw):
        with np.errstate(all="ignore"):
            out = self._objective(np.asarray(raw))
        if np.isrealobj(out) and not np.isfinite(out):
            return np.inf
        return out if out.ndim == 0 else out

    def gradient(self, raw):
        n = len(raw)
        Z = np.asarray(raw, dtype=complex)[None, :] + 1j * _CSTEP * np.eye(n)
        with np.errstate(all="ignore"):
            vals = self._objective(Z)
        return np.asarray(vals).imag / _CSTEP

    def value_and_grad(self, raw):
        n = len(raw)
        Z = np.concatenate(
            (np.asarray(raw, dtype=complex)[None, :],
             np.asarray(raw, dtype=complex)[None, :] + 1j * _CSTEP * np.eye(n)),
            axis=0,
        )
        with np.errstate(all="ignore"):
            vals = self._objective(Z)
        f = float(vals[0].real)
        if not np.isfinite(f):
            return np.inf, np.zeros(n)
        return f, vals[1:].imag / _CSTEP


# ---------------------------------------------------------------------------
# spectral initialization
# ---------------------------------------------------------------------------

def initialize(window: Window, K: int, delta_min: float = 0.05) -> CanonicalParams:
    """Deterministic starting point from periodogram peaks.

    Frequencies come from the K largest periodogram ordinates of channel 0
    that are mutually separated by at least delta_min; loadings from a
    least-squares sinusoid fit at those frequencies; damping starts at
    0.95; the state noise starts isotropic and the observation noise at
    the residual variance.
    """
    x = window.samples
    N = x.shape[0]
    if N < 8 * K:
        raise InitializationError(f"window length {N} < 8K = {8 * K}")
    x0 = x[:, 0] - x[:, 0].mean()
    spec = np.abs(np.fft.rfft(x0)) ** 2
    freqs = 2.0 * np.pi * np.arange(len(spec)) / N
    usable = np.flatnonzero((freqs > 0) & (freqs < np.pi))
    # Smooth at the separation bandwidth: exponential periodogram ripple on
    # the shoulder of one broad peak then merges into that peak's single
    # bump instead of outranking a genuinely distinct peak.
    width = int(np.clip(np.ceil(delta_min * N / (2.0 * np.pi)), 3, max(3, len(spec) // 4)))
    kernel = np.ones(width) / width
    smoothed = np.convolve(spec, kernel, mode="same")
    interior = usable[1:-1] if len(usable) > 2 else usable
    is_peak = np.zeros(len(spec), dtype=bool)
    is_peak[interior] = (smoothed[interior] >= smoothed[interior - 1]) & (
        smoothed[interior] >= smoothed[interior + 1]
    )
    ranked = sorted(usable, key=lambda j: -smoothed[j])
    order = [j for j in ranked if is_peak[j]] + [j for j in ranked if not is_peak[j]]
    lo_bin, hi_bin = usable[0], usable[-1]
    # candidates must also clear twice the smoothing bandwidth, else two
    # ripples of one broadened peak can masquerade as separate modes
    sep = max(delta_min, 2.0 * width * 2.0 * np.pi / N)
    chosen: list[float] = []
    for j in order:
        # refine the bump apex on the raw periodogram so a clean tone is
        # located to within one bin despite the smoothing
        a = max(lo_bin, j - width)
        b = min(hi_bin, j + width)
        j_ref = a + int(np.argmax(spec[a : b + 1]))
        lam = freqs[j_ref]
        if all(abs(lam - c) >= sep for c in chosen):
            chosen.append(float(lam))
        if len(chosen) == K:
            break
    if len(chosen) < K:
        # relax to the configured separation before giving up
        for j in order:
            lam = freqs[j]
            if all(abs(lam - c) >= delta_min for c in chosen):
                chosen.append(float(lam))
            if len(chosen) == K:
                break
    if len(chosen) < K:
        raise InitializationError(
            f"only {len(chosen)} separated periodogram peaks found; "
            f"consider a smaller K than {K}"
        )
    omegas = np.sort(np.array(chosen))
    t = np.arange(N)
    regressors = np.empty((N, 2 * K))
    for k, w in enumerate(omegas):
        regressors[:, 2 * k] = np.cos(w * t)
        regressors[:, 2 * k + 1] = np.sin(w * t)
    coef, *_ = np.linalg.lstsq(regressors, x, rcond=None)
    C = np.empty((x.shape[1], 2 * K))
    C[:, ::2] = coef[::2].T
    C[:, 1::2] = -coef[1::2].T
    # observation-noise start: the periodogram log-mean tracks the flat
    # spectral floor; the sinusoid-fit residual variance would also count
    # all stochastic mode modulation and start an order of magnitude high
    total = float(np.var(x0)) if np.var(x0) > 0 else 1.0
    ordinates = spec[usable] / N
    floor_est = float(np.exp(np.mean(np.log(ordinates + 1e-300))))
    rvar = max(floor_est, 1e-8 * total, 1e-12)
    modes = tuple(ModeParams(float(w), 0.95) for w in omegas)
    Q = 0.1 * np.eye(2 * K)
    # guard a degenerate sinusoid fit before fixing the orientation
    for k in range(K):
        if np.linalg.norm(C[:, 2 * k : 2 * k + 2]) < 1e-8:
            C[0, 2 * k] = 1e-4
    try:
        Cf, Qf = fix_intra_block_gauge(modes, C, Q)
    except GaugeDegeneracyError:
        Cf = np.zeros_like(C)
        Cf[0, ::2] = 1.0
        Qf = Q
    return CanonicalParams(modes, Cf, Qf, rvar * np.eye(x.shape[1]))


# ---------------------------------------------------------------------------
# geometric loss (squared smoothing residual + penalty)
# ---------------------------------------------------------------------------

def geometric_loss(params: CanonicalParams, window: Window, lam: float = 0.0,
                   prev_omega=None) -> float:
    """Mean squared smoothing residual plus the lam-weighted penalty.

    The data term is (1/N) sum_s ||x_s - C zhat_{s|N}||^2 with the
    conditional means from the exact smoother; the penalty adds the
    squared frequency change against prev_omega (when given) and the
    damping barrier -log(1-rho) - log(rho) per mode.
    """
    traj = smooth(params, window)
    return loss_from_trajectory(traj, window, params, lam, prev_omega)


def loss_from_trajectory(traj: SmoothedTrajectory, window: Window,
                         params: CanonicalParams, lam: float,
                         prev_omega=None) -> float:
    resid = window.samples - traj.fitted_obs
    data = float(np.mean(np.sum(resid * resid, axis=1)))
    return data + float(np.real(_penalty(params.omegas, params.rhos, lam, prev_omega)))


def _loss_raw(raw, window: Window, K: int, lam: float, prev_omega=None):
    """Geometric loss as a function of the unconstrained vector.

    Dtype-generic: with a complex raw vector this analytically continues
    the loss, which is how :func:`geometric_loss_grad_raw` obtains exact
    derivatives through the smoother recursion.
    """
    raw = np.asarray(raw)
    omega, rho, (q11, q12, q22), R = _unpack_raw(raw, K)
    dtype = np.result_type(raw, float)
    dim = 2 * K
    A = np.zeros((dim, dim), dtype=dtype)
    Q = np.zeros((dim, dim), dtype=dtype)
    C = np.zeros((1, dim), dtype=dtype)
    C[0, ::2] = 1.0
    for k in range(K):
        c, s = np.cos(omega[k]), np.sin(omega[k])
        A[2 * k, 2 * k] = rho[k] * c
        A[2 * k, 2 * k + 1] = rho[k] * s
        A[2 * k + 1, 2 * k] = -rho[k] * s
        A[2 * k + 1, 2 * k + 1] = rho[k] * c
        Q[2 * k, 2 * k] = q11[k]
        Q[2 * k, 2 * k + 1] = q12[k]
        Q[2 * k + 1, 2 * k] = q12[k]
        Q[2 * k + 1, 2 * k + 1] = q22[k]
    Rm = R.reshape(1, 1)
    # stationary covariance by vectorization; dtype-generic unlike the
    # dedicated solver used on the real path
    lhs = np.eye(dim * dim, dtype=dtype) - np.kron(A, A)
    sigma0 = np.linalg.solve(lhs, Q.reshape(-1, order="F")).reshape((dim, dim), order="F")
    x = window.samples.astype(dtype)
    m_f, P_f, _, _, _, m_p, P_p, freeze_t = _filter_core(
        A, C, Q, Rm, sigma0, x, compute_loglik=False
    )
    ms, _ = _smooth_core(A, m_f, P_f, m_p, P_p, freeze_t, want_covariances=False)
    resid = x - ms @ C.T
    data = np.mean(np.sum(resid * resid, axis=1))
    return data + _penalty(omega, rho, lam, prev_omega)


def geometric_loss_grad_raw(raw: np.ndarray, window: Window, K: int,
                            lam: float, prev_omega=None) -> np.ndarray:
    """Exact gradient of the geometric loss in the unconstrained
    parameterization, by complex-step differentiation."""
    n = len(raw)
    g = np.empty(n)
    base = np.asarray(raw, dtype=complex)
    for i in range(n):
        z = base.copy()
        z[i] += 1j * _CSTEP
        g[i] = _loss_raw(z, window, K, lam, prev_omega).imag / _CSTEP
    return g


# ---------------------------------------------------------------------------
# window estimation
# ---------------------------------------------------------------------------

def _resolve_unobservable_q(params: CanonicalParams) -> CanonicalParams:
    """Apply the scalar-channel state-noise section (see
    :func:`goosc.gauge.most_isotropic_state_noise`)."""
    from .gauge import most_isotropic_state_noise

    Q = most_isotropic_state_noise(params.modes, params.state_noise)
    return CanonicalParams(params.modes, params.obs_matrix, Q, params.obs_noise)

def _lex_key(raw, K):
    omega, rho, _, _ = _unpack_raw(np.real(raw), K)
    return tuple(np.concatenate((omega, rho)))


def _minimize(problem, raw0, config: EstimatorConfig):
    n = len(raw0)
    res = minimize(
        problem.value_and_grad,
        np.clip(raw0, -_RAW_BOUND, _RAW_BOUND),
        jac=True,
        method="L-BFGS-B",
        bounds=[(-_RAW_BOUND, _RAW_BOUND)] * n,
        options={
            "maxiter": config.max_iters,
            "gtol": config.grad_tol,
            "ftol": 1e-13,
            "maxcor": 20,
        },
    )
    grad_norm = float(np.max(np.abs(res.jac))) if res.jac is not None else np.inf
    return res.x, float(res.fun), grad_norm


def estimate_window(window: Window, config: EstimatorConfig,
                    prev: WindowEstimate | None = None) -> WindowEstimate:
    """Fit one window by penalized frequency-domain likelihood.

    Runs n_restarts deterministic restarts (restart r perturbs the
    spectral initialization with the stream seeded by config.seed XOR r;
    restart 1 warm-starts from ``prev`` when given).  The restart with the
    smallest objective wins; exact ties break lexicographically on
    (omega, rho).  The returned loss is the geometric loss at the fitted
    parameters and loglik the exact innovations log-likelihood.
    """
    if window.obs_dim != 1:
        raise InvalidParameterError(
            "estimation currently supports single-channel windows"
        )
    init = initialize(window, config.K, config.delta_min)
    raw_init = _pack_raw(init)
    prev_omega = prev.params.omegas if prev is not None else None
    problem = _WhittleProblem(window, config.K, config.lam, prev_omega)

    # start points: the spectral initialization, then the warm start when
    # available, then seeded perturbations of the initialization
    starts = [raw_init]
    if prev is not None:
        starts.append(_pack_raw(prev.params))

    attempts = []
    for r in range(config.n_restarts):
        if r < len(starts):
            raw0 = starts[r]
        else:
            jitter = rng_for(config.seed ^ r).standard_normal(len(raw_init))
            raw0 = raw_init + 0.25 * jitter
        try:
            raw_opt, fun, grad_norm = _minimize(problem, raw0, config)
        except (np.linalg.LinAlgError, FloatingPointError):
            continue
        if not np.isfinite(fun):
            continue
        omega, _, _, _ = _unpack_raw(raw_opt, config.K)
        gaps = np.diff(omega)
        valid = bool(len(gaps) == 0 or np.min(gaps) > config.delta_min)
        attempts.append((fun, _lex_key(raw_opt, config.K), raw_opt, grad_norm, valid))

    valid_attempts = [a for a in attempts if a[4]]
    if not valid_attempts:
        best = min(attempts, key=lambda a: (a[0], a[1])) if attempts else None
        raise EstimationError(
            "all restarts diverged or collided in frequency",
            best_attempt=best[2] if best else None,
        )
    fun, _, raw_best, grad_norm, _ = min(valid_attempts, key=lambda a: (a[0], a[1]))
    params = _resolve_unobservable_q(_params_from_raw(raw_best, config.K))
    traj = smooth(params, window, want_covariances=False)
    loss = loss_from_trajectory(traj, window, params, config.lam, prev_omega)
    return WindowEstimate(
        params=params,
        loss=loss,
        loglik=traj.loglik,
        converged=grad_norm <= config.grad_tol,
        restarts_used=config.n_restarts,
    )


def chain_estimates(windows, config: EstimatorConfig) -> list[WindowEstimate]:
    """Estimate a stream of windows, threading each estimate into the next
    window's warm start and frequency-smoothness penalty."""
    out: list[WindowEstimate] = []
    prev = None
    for w in windows:
        prev = estimate_window(w, config, prev=prev)
        out.append(prev)
    return out


# ---------------------------------------------------------------------------
# unconstrained-coordinates estimation (the no-gauge ablation arm)
# ---------------------------------------------------------------------------

def _free_size(dim: int) -> int:
    return dim * dim + dim + dim * (dim + 1) // 2 + 1


def _free_unpack(raw, dim):
    A = raw[: dim * dim].reshape(dim, dim)
    C = raw[dim * dim : dim * dim + dim].reshape(1, dim)
    tri = raw[dim * dim + dim : dim * dim + dim + dim * (dim + 1) // 2]
    L = np.zeros((dim, dim), dtype=raw.dtype)
    idx = np.tril_indices(dim)
    L[idx] = tri
    diag = np.arange(dim)
    L[diag, diag] = np.exp(L[diag, diag])
    Q = L @ L.T
    R = np.exp(2.0 * raw[-1])
    return A, C, Q, R, L


def _free_pack(A, C, Q, R):
    dim = A.shape[0]
    L = np.linalg.cholesky(Q).copy()
    diag = np.arange(dim)
    L[diag, diag] = np.log(L[diag, diag])
    return np.concatenate(
        (A.reshape(-1), np.asarray(C).reshape(-1), L[np.tril_indices(dim)],
         [0.5 * np.log(float(np.asarray(R).reshape(-1)[0]))])
    )


_STAB_MARGIN = 0.9995
_STAB_WEIGHT = 1e-3


class _FreeWhittleProblem:
    """Whittle objective over unconstrained (A, C, Q, R) with a
    spectral-radius barrier keeping A stable."""

    def __init__(self, window: Window, dim: int):
        x = window.samples[:, 0]
        N = len(x)
        M = (N - 1) // 2
        X = np.fft.rfft(x)
        self.I = (np.abs(X[1 : M + 1]) ** 2) / N
        grid = 2.0 * np.pi * np.arange(1, M + 1) / N
        self.E = np.exp(1j * grid)
        self.N = N
        self.dim = dim

    def value_and_grad(self, raw):
        A, C, Q, R, L = _free_unpack(raw, self.dim)
        eigvals, V = np.linalg.eig(A)
        mods2 = np.abs(eigvals) ** 2
        if np.max(mods2) >= _STAB_MARGIN ** 2:
            return 1e12, np.zeros_like(raw)
        eye = np.eye(self.dim)
        res = np.linalg.inv(self.E[:, None, None] * eye - A)   # (M, d, d)
        u = np.einsum("j,mjk->mk", C[0].astype(complex), res)  # C (EI-A)^-1
        QuH = np.einsum("kl,ml->mk", Q.astype(complex), np.conj(u))
        S = np.real(np.einsum("mk,mk->m", u, QuH)) + R
        if np.any(S <= 0):
            return 1e12, np.zeros_like(raw)
        nll = (2.0 / self.N) * np.sum(np.log(S) + self.I / S)
        stab = -_STAB_WEIGHT * np.sum(np.log1p(-mods2 / _STAB_MARGIN ** 2))

        wgt = (2.0 / self.N) * (1.0 / S - self.I / (S * S))    # dNLL/dS_j
        v = np.einsum("mjk,mk->mj", res, QuH)                  # (EI-A)^-1 Q u^H
        gA = 2.0 * np.real(np.einsum("m,mj,mk->jk", wgt, u, v))
        gC = 2.0 * np.real(np.einsum("m,mk->k", wgt, v))
        gQ = np.real(np.einsum("m,mj,mk->jk", wgt, u, np.conj(u)))
        gQ = gQ + gQ.T  # symmetrized accumulation of u_j conj(u_k)

        # stability barrier gradient via first-order eigenvalue perturbation:
        # d lambda_i / dA[m, n] = Yl[i, m] V[n, i] with Yl = V^-1
        Yl = np.linalg.inv(V)
        coef = 2.0 * _STAB_WEIGHT / (_STAB_MARGIN ** 2 - mods2)
        gA_stab = np.einsum("i,im,ni->mn", coef * np.conj(eigvals), Yl, V).real
        gA = gA + gA_stab

        # chain Q = L L^T into the packed lower triangle
        gL = gQ @ L
        diag = np.arange(self.dim)
        gL[diag, diag] *= L[diag, diag]
        grad = np.concatenate(
            (gA.reshape(-1), gC.reshape(-1), gL[np.tril_indices(self.dim)],
             [float(np.sum(wgt)) * 2.0 * R])
        )
        return float(nll + stab), grad


def _random_conjugation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """A well-conditioned random basis change (condition number <= 16)."""
    U, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    V, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    s = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=dim))
    return U @ np.diag(s) @ V


def _random_frame_start(window: Window, K: int, rng: np.random.Generator) -> np.ndarray:
    """A data-agnostic starting point in an arbitrary latent frame.

    Unconstrained representations carry no canonical anchoring, so the
    per-window search starts from a seeded random oscillatory frame:
    random separated frequencies and damping, loadings and noise scaled
    only by the window variance, the whole state conjugated by a random
    well-conditioned basis.
    """
    dim = 2 * K
    var = max(float(np.var(window.samples[:, 0])), 1e-12)
    while True:
        oms = np.sort(rng.uniform(0.2, np.pi - 0.2, size=K))
        if K == 1 or np.min(np.diff(oms)) > 0.2:
            break
    rhos = rng.uniform(0.7, 0.95, size=K)
    modes = tuple(ModeParams(float(o), float(r)) for o, r in zip(oms, rhos))
    from .model import build_transition

    A0 = build_transition(modes)
    C0 = np.zeros((1, dim))
    C0[0, ::2] = np.sqrt(var / K)
    Q0 = 0.1 * var * np.eye(dim)
    R0 = np.array([[0.25 * var]])
    T = _random_conjugation(dim, rng)
    Ti = np.linalg.inv(T)
    return _free_pack(T @ A0 @ Ti, C0 @ Ti, T @ Q0 @ T.T, R0)


def estimate_window_free(window: Window, config: EstimatorConfig):
    """Fit one window over unconstrained stable (A, C, Q, R) coordinates.

    Models an arbitrary latent representation: restart r starts from an
    independent data-agnostic random frame seeded by (config.seed XOR r,
    window_id).  There is no identifiable anchor, so with a small restart
    budget different windows land in different, equally valid coordinates
    and convergence quality varies with the draw; a generous budget
    recovers the same observation law the gauge-fixed estimator finds.
    No gauge projection is applied; this is the ablation arm only.
    """
    if window.obs_dim != 1:
        raise InvalidParameterError("free estimation supports single-channel windows")
    from .gauge import RawParams  # local import avoids a cycle at module load

    dim = 2 * config.K
    problem = _FreeWhittleProblem(window, dim)
    attempts = []
    for r in range(config.n_restarts):
        raw0 = _random_frame_start(
            window, config.K, rng_for(config.seed ^ r, window.window_id, 0x5EED)
        )
        res = minimize(
            problem.value_and_grad,
            raw0,
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": config.max_iters, "gtol": config.grad_tol,
                     "ftol": 1e-13, "maxcor": 20},
        )
        if np.isfinite(res.fun):
            attempts.append((float(res.fun), r, res.x))
    if not attempts:
        raise EstimationError("all unconstrained restarts diverged")
    _, _, raw_best = min(attempts, key=lambda a: (a[0], a[1]))
    A, C, Q, R, _ = _free_unpack(raw_best, dim)
    Q = 0.5 * (Q + Q.T) + 1e-12 * np.eye(dim)
    return RawParams(A, C, Q, np.array([[float(R)]]))
