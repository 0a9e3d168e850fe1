"""Projection of arbitrary minimal state-space parameters onto the
canonical oscillatory gauge, plus the residual-symmetry operations used
to test invariance.

A stable transition matrix with K strictly complex conjugate eigenvalue
pairs is similar to a block diagonal of scaled rotations.  The remaining
freedom (mode permutation, intra-block rotation and scale) is removed by
ordering frequencies and by a convention on the observation matrix: the
first observation row of each mode pair is (c, 0) with c > 0 and each
column pair of C has unit Frobenius norm, the scale being absorbed into
the state noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import (
    GaugeDegeneracyError,
    InstabilityError,
    InvalidParameterError,
    ModalDegeneracyError,
    NearCollisionError,
)
from .model import CanonicalParams, ModeParams, build_transition

__all__ = [
    "RawParams",
    "canonicalize",
    "apply_sign_flip",
    "gauge_distance",
    "fix_intra_block_gauge",
]

DEFAULT_DELTA_MIN = 0.05

# Relative threshold below which an eigenvalue counts as real.
_REAL_EIG_TOL = 1e-10


@dataclass(frozen=True)
class RawParams:
    """Unconstrained state-space parameters (A, C, Q, R) prior to gauge
    fixing.  A must be stable for canonicalization to make sense."""

    A: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidParameterError("A must be square")
        radius = np.max(np.abs(np.linalg.eigvals(A)))
        if radius >= 1.0:
            raise InstabilityError(f"A has spectral radius {radius:.6g} >= 1")
        for name in ("A", "C", "Q", "R"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]


def _extract_modes(A: np.ndarray, delta_min: float):
    """Eigen-split A into ascending (omega, rho) pairs and the real basis
    T such that T^-1 A T is the canonical block diagonal."""
    dim = A.shape[0]
    if dim % 2:
        raise ModalDegeneracyError("state dimension is odd; no pairing exists")
    vals, vecs = np.linalg.eig(A)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(np.abs(vals.imag) <= _REAL_EIG_TOL * scale):
        raise ModalDegeneracyError(
            "real eigenvalue detected; the oscillatory block form is not unique"
        )
    pos = np.flatnonzero(vals.imag > 0)
    if len(pos) != dim // 2:
        raise ModalDegeneracyError("eigenvalues do not form K conjugate pairs")
    omegas = np.arctan2(vals.imag[pos], vals.real[pos])
    order = np.argsort(omegas)
    pos = pos[order]
    omegas = omegas[order]
    rhos = np.abs(vals[pos])
    gaps = np.diff(omegas)
    if len(gaps) and np.min(gaps) <= max(delta_min, 1e-12):
        raise NearCollisionError(
            f"mode frequency gap {np.min(gaps):.6g} <= delta_min={delta_min}"
        )
    if np.max(rhos) >= 1.0:
        raise InstabilityError("eigenvalue modulus >= 1")
    T = np.empty((dim, dim))
    for k, idx in enumerate(pos):
        v = vecs[:, idx]
        T[:, 2 * k] = v.real
        T[:, 2 * k + 1] = v.imag
    if abs(np.linalg.det(T)) < 1e-300:
        raise ModalDegeneracyError("eigenvector basis is singular")
    modes = tuple(ModeParams(float(w), float(r)) for w, r in zip(omegas, rhos))
    return modes, T


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def fix_intra_block_gauge(modes: Sequence[ModeParams], C: np.ndarray,
                          Q: np.ndarray):
    """Apply the per-mode rotation and scale that make the first
    observation row of each block (c, 0) with c > 0 and each C column
    pair unit Frobenius norm.  Returns (C', Q'); the transition blocks
    commute with the transformation and are untouched."""
    K = len(modes)
    C = np.array(C, dtype=float)
    Q = np.array(Q, dtype=float)
    G = np.zeros((2 * K, 2 * K))
    Cp = np.empty_like(C)
    for k in range(K):
        pair = C[:, 2 * k : 2 * k + 2]
        alpha = np.linalg.norm(pair)
        a, b = pair[0]
        r = np.hypot(a, b)
        if alpha <= 0 or r <= 1e-12 * alpha:
            raise GaugeDegeneracyError(
                f"mode {k}: first-row loading vanishes; orientation undefined"
            )
        psi = np.arctan2(b, a)
        Cp[:, 2 * k : 2 * k + 2] = pair @ _rot(-psi) / alpha
        G[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = alpha * _rot(psi)
    Qp = G @ Q @ G.T
    return Cp, 0.5 * (Qp + Qp.T)


def most_isotropic_state_noise(modes: Sequence[ModeParams], Q: np.ndarray,
                               margin: float = 0.02) -> np.ndarray:
    """Resolve the scalar-channel unobservable direction of each mode's
    state-noise block.

    A single observation channel determines only two functionals of each
    2 x 2 diagonal block of Q; moving a block along the remaining
    direction changes the latent law but not the observation law.  This
    picks the unique representative whose blocks are as close to
    isotropic as the positive-definite cone allows, so records from
    different fits are comparable.  All clip targets are absolute points
    of the orbit line, which makes the map idempotent.
    """
    Q = np.array(Q, dtype=float)
    dim = Q.shape[0]
    from scipy.linalg import eigh as generalized_eigh

    for k, mode in enumerate(modes):
        c, s = np.cos(mode.omega), np.sin(mode.omega)
        r = mode.rho
        if abs(s) < 1e-6:
            continue
        n = np.array([
            [1.0, c / s],
            [c / s, -(1.0 - r * r * c * c) / (r * r * s * s)],
        ])
        n /= np.linalg.norm(n)
        sl = slice(2 * k, 2 * k + 2)
        Qk = Q[sl, sl]
        dev_q = Qk - 0.5 * np.trace(Qk) * np.eye(2)
        dev_n = n - 0.5 * np.trace(n) * np.eye(2)
        denom = float(np.sum(dev_n * dev_n))
        if denom < 1e-300:
            continue
        t_star = -float(np.sum(dev_q * dev_n)) / denom
        # positive-definiteness segment of Q + t * embed(n) along the line
        N_emb = np.zeros((dim, dim))
        N_emb[sl, sl] = n
        mu = generalized_eigh(N_emb, Q, eigvals_only=True)
        lo = -np.inf
        hi = np.inf
        for m in mu:
            if m > 1e-12:
                lo = max(lo, -1.0 / m)
            elif m < -1e-12:
                hi = min(hi, -1.0 / m)
        t = t_star
        if np.isfinite(lo) and np.isfinite(hi):
            inset = margin * (hi - lo)
            t = float(np.clip(t_star, lo + inset, hi - inset))
        elif t_star >= hi:
            t = hi - margin * max(t_star - hi, 1e-6)
        elif t_star <= lo:
            t = lo + margin * max(lo - t_star, 1e-6)
        if t != 0.0 and np.isfinite(t):
            # safety against a degenerate segment: halve toward the
            # original block until the full matrix is strictly inside
            floor = 1e-12 * max(np.trace(Q), 1e-300)
            for _ in range(60):
                cand = np.array(Q)
                cand[sl, sl] = Qk + t * n
                if np.linalg.eigvalsh(cand).min() > floor:
                    Q = cand
                    break
                t *= 0.5
    Q = 0.5 * (Q + Q.T)
    # final safety: never hand back an indefinite matrix
    if np.linalg.eigvalsh(Q).min() <= 0.0:
        raise GaugeDegeneracyError("state-noise projection left the cone")
    return Q


def canonicalize(raw, delta_min: float = DEFAULT_DELTA_MIN) -> CanonicalParams:
    """Project (A, C, Q, R) onto the canonical oscillatory gauge.

    Accepts :class:`RawParams` or :class:`CanonicalParams`.  The output
    preserves the stationary observation law exactly (in exact
    arithmetic) and is the unique gauge-convention representative of the
    similarity orbit.  For single-channel systems the scalar-channel
    unobservable direction of each state-noise block is additionally
    resolved (see :func:`most_isotropic_state_noise`).  Inputs with real
    or nearly colliding eigenvalues are rejected, never repaired.
    """
    if isinstance(raw, CanonicalParams):
        A = raw.transition
        C = raw.obs_matrix
        Q = raw.state_noise
        R = raw.obs_noise
    else:
        A, C, Q, R = raw.A, raw.C, raw.Q, raw.R
    modes, T = _extract_modes(np.asarray(A, dtype=float), delta_min)
    Ti = np.linalg.inv(T)
    C1 = np.asarray(C, dtype=float) @ T
    Q1 = Ti @ np.asarray(Q, dtype=float) @ Ti.T
    C2, Q2 = fix_intra_block_gauge(modes, C1, Q1)
    if C2.shape[0] == 1:
        Q2 = most_isotropic_state_noise(modes, Q2)
    return CanonicalParams(modes, C2, Q2, np.asarray(R, dtype=float))


def apply_sign_flip(params: CanonicalParams, flip_mask) -> CanonicalParams:
    """Negate the latent coordinates of the masked modes.

    This realizes the residual finite symmetry of the gauge: transition
    blocks are unchanged, the flipped C column pairs are negated, and Q is
    conjugated by the block sign matrix.  The result intentionally
    violates the first-row orientation convention; it is a fixture for
    invariance testing, not a canonical representative.
    """
    flip_mask = list(flip_mask)
    if len(flip_mask) != params.n_modes:
        raise InvalidParameterError("flip mask length must equal the mode count")
    signs = np.ones(params.state_dim)
    for k, flip in enumerate(flip_mask):
        if flip:
            signs[2 * k : 2 * k + 2] = -1.0
    S = np.diag(signs)
    return CanonicalParams(
        params.modes,
        params.obs_matrix @ S,
        S @ params.state_noise @ S,
        params.obs_noise,
    )


def gauge_distance(a: CanonicalParams, b: CanonicalParams,
                   weights: dict | None = None) -> float:
    """Weighted parameter-space distance between two canonical records.

    Sum of |d omega|_1, |d rho|_1 and Frobenius norms of the C/Q/R
    differences; unit weights by default.  Zero iff equal, symmetric, and
    satisfies the triangle inequality (it is a weighted norm of the
    stacked difference).
    """
    if a.n_modes != b.n_modes or a.obs_dim != b.obs_dim:
        raise InvalidParameterError("parameter records have mismatched dimensions")
    w = {"omega": 1.0, "rho": 1.0, "C": 1.0, "Q": 1.0, "R": 1.0}
    if weights:
        w.update(weights)
    return float(
        w["omega"] * np.abs(a.omegas - b.omegas).sum()
        + w["rho"] * np.abs(a.rhos - b.rhos).sum()
        + w["C"] * np.linalg.norm(a.obs_matrix - b.obs_matrix)
        + w["Q"] * np.linalg.norm(a.state_noise - b.state_noise)
        + w["R"] * np.linalg.norm(a.obs_noise - b.obs_noise)
    )
