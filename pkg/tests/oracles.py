"""Independent reference implementations used to verify the library.

Everything here is deliberately brute-force: dense joint Gaussians,
Kronecker-product linear solves, O(n^2) pair counting.  None of it shares
code with the package under test.
"""

from __future__ import annotations

import numpy as np


def lyapunov_kron(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve Sigma = A Sigma A^T + Q by vectorization: a dense solve of
    (I - A kron A) vec(Sigma) = vec(Q)."""
    n = A.shape[0]
    lhs = np.eye(n * n) - np.kron(A, A)
    sigma = np.linalg.solve(lhs, Q.reshape(-1, order="F")).reshape((n, n), order="F")
    return 0.5 * (sigma + sigma.T)


def joint_observation_cov(A, C, Q, R, sigma, N):
    """Dense (N p) x (N p) covariance of the stacked window observations."""
    dim = A.shape[0]
    p = C.shape[0]
    powers = [np.eye(dim)]
    for _ in range(N - 1):
        powers.append(A @ powers[-1])
    gamma = np.zeros((N * p, N * p))
    for s in range(N):
        for u in range(N):
            if s >= u:
                cov_z = powers[s - u] @ sigma
            else:
                cov_z = sigma @ powers[u - s].T
            block = C @ cov_z @ C.T
            if s == u:
                block = block + R
            gamma[s * p : (s + 1) * p, u * p : (u + 1) * p] = block
    return 0.5 * (gamma + gamma.T)


def dense_gaussian_loglik(A, C, Q, R, sigma, x):
    """Log-density of the N x p window under the stacked joint Gaussian."""
    N, p = x.shape
    gamma = joint_observation_cov(A, C, Q, R, sigma, N)
    vec = x.reshape(-1)
    L = np.linalg.cholesky(gamma)
    alpha = np.linalg.solve(L, vec)
    return float(
        -0.5 * (N * p * np.log(2.0 * np.pi) + alpha @ alpha)
        - np.log(np.diag(L)).sum()
    )


def dense_gaussian_smoothed_means(A, C, Q, R, sigma, x):
    """Conditional means E[z_s | window] from the dense joint Gaussian."""
    N, p = x.shape
    dim = A.shape[0]
    gamma = joint_observation_cov(A, C, Q, R, sigma, N)
    powers = [np.eye(dim)]
    for _ in range(N - 1):
        powers.append(A @ powers[-1])
    cross = np.zeros((N * dim, N * p))  # Cov(z_s, x_u)
    for s in range(N):
        for u in range(N):
            if s >= u:
                cov_z = powers[s - u] @ sigma
            else:
                cov_z = sigma @ powers[u - s].T
            cross[s * dim : (s + 1) * dim, u * p : (u + 1) * p] = cov_z @ C.T
    w = np.linalg.solve(gamma, x.reshape(-1))
    return (cross @ w).reshape(N, dim)


def brute_force_auroc(scores, labels) -> float:
    """Mann-Whitney AUROC by explicit pair enumeration, ties count 1/2."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    pos = scores[labels]
    neg = scores[~labels]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def best_random_deflection(delta, sigma, n_directions, rng):
    """Max deflection (w^T delta)^2 / (w^T Sigma w) over random unit vectors."""
    d = len(delta)
    W = rng.standard_normal((n_directions, d))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    num = (W @ delta) ** 2
    den = np.einsum("ij,jk,ik->i", W, sigma, W)
    return float(np.max(num / den))


def periodogram_peak(x: np.ndarray) -> float:
    """Location (rad/sample) of the largest periodogram ordinate of a
    demeaned scalar series, excluding DC."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    n = len(x)
    spec = np.abs(np.fft.rfft(x)) ** 2
    spec[0] = 0.0
    j = int(np.argmax(spec))
    return 2.0 * np.pi * j / n
