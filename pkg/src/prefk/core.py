"""Numeric foundations: finite vectors, probability vectors, symmetric eigensolves."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput, SingularMatrix

PROB_TOL = 1e-9
SYM_TOL = 1e-9
SPD_MIN_EIG = 1e-12


def as_vector(values, name: str = "vector") -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInput(f"{name} must be a nonempty 1-D sequence, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInput(f"{name} has non-finite entries")
    return v


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise InvalidInput(f"{name} must be a nonempty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput(f"{name} has non-finite entries")
    return m


def as_distribution(values, name: str = "distribution") -> np.ndarray:
    """Validate a probability vector over C >= 2 outcomes.

    Entries must be nonnegative and sum to 1 within ``PROB_TOL``; the
    returned copy is renormalized so the sum is 1 to machine precision.
    """
    p = as_vector(values, name)
    if p.size < 2:
        raise InvalidInput(f"{name} needs at least 2 outcomes")
    if np.any(p < 0):
        raise InvalidInput(f"{name} has negative entries")
    total = p.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise InvalidInput(f"{name} sums to {total!r}, not 1")
    return p / total


def softmax_distribution(scores) -> np.ndarray:
    s = as_vector(scores, "scores")
    if s.size < 2:
        raise InvalidInput("softmax needs at least 2 scores")
    e = np.exp(s - s.max())
    return e / e.sum()


def log_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    return shifted - np.log(np.exp(shifted).sum())


def _check_symmetric(m: np.ndarray) -> None:
    if m.shape[0] != m.shape[1]:
        raise InvalidInput(f"matrix must be square, got {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > SYM_TOL * scale:
        raise InvalidInput("matrix is not symmetric")


def sym_spd_eigvals(m) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in descending order.

    Values in [-1e-9, 0) are treated as round-off on a PSD input and clamped to 0.
    """
    m = as_matrix(m)
    _check_symmetric(m)
    w = np.linalg.eigvalsh(0.5 * (m + m.T))[::-1]
    w = np.where((w < 0) & (w >= -SYM_TOL), 0.0, w)
    return w


def cholesky_spd(sigma) -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix, rejecting near-singular input."""
    sigma = as_matrix(sigma, "Sigma")
    _check_symmetric(sigma)
    if sym_spd_eigvals(sigma)[-1] <= SPD_MIN_EIG:
        raise SingularMatrix("matrix is singular or ill-conditioned (min eigenvalue <= 1e-12)")
    return np.linalg.cholesky(0.5 * (sigma + sigma.T))


def solve_spd(sigma, v) -> np.ndarray:
    v = as_vector(v, "v")
    chol = cholesky_spd(sigma)
    if chol.shape[0] != v.size:
        raise InvalidInput(f"dimension mismatch: {chol.shape[0]} vs {v.size}")
    return _cho_solve(chol, v)


def _cho_solve(chol: np.ndarray, v: np.ndarray) -> np.ndarray:
    from scipy.linalg import solve_triangular

    y = solve_triangular(chol, v, lower=True)
    return solve_triangular(chol.T, y, lower=False)


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise InvalidInput("seed must be a 64-bit unsigned integer")
    return np.random.default_rng(seed)
