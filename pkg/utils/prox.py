"""Closed-form proximal maps: soft shrinkage, half shrinkage (ℓ½) and singular-value thresholding.

Each scalar map returns a global minimizer of ½(s - a)² + tau·pen(s):

- soft:  pen(s) = |s|
- half:  pen(s) = |s|^{1/2}

Half shrinkage: for a > 0 the nonzero stationary points solve, with s = t²,
the depressed cubic t³ - a·t + tau/2 = 0. The largest root (the local
minimizer) has the trigonometric form
    s = (2a/3)·(1 + cos(2θ/3)),  θ = arccos(-(3·tau/4)·sqrt(3)·a^{-3/2}),
and exists when a > (27/16)^{1/3}·tau^{2/3}. It beats s = 0 exactly when
|a| > 1.5·tau^{2/3}; at or below that boundary the map returns 0.
"""
import numpy as np

from models.matrix import Matrix
from utils.linalg import singular_values, svd

# Zero/nonzero jump of half shrinkage, as a multiple of tau^{2/3}.
_HALF_THRESHOLD_FACTOR = 1.5


def soft_shrink(a: float, tau: float) -> float:
    """sign(a)·max(|a| - tau, 0)."""
    return float(np.sign(a) * max(abs(a) - tau, 0.0))


def soft_shrink_matrix(m: Matrix, tau: float) -> Matrix:
    """Entrywise soft shrinkage."""
    m = np.asarray(m, dtype=np.float64)
    return np.sign(m) * np.maximum(np.abs(m) - tau, 0.0)


def half_shrink_matrix(m: Matrix, tau: float) -> Matrix:
    """Entrywise half shrinkage (prox of tau·Σ|s|^{1/2})."""
    m = np.asarray(m, dtype=np.float64)
    out = np.zeros_like(m)
    if tau <= 0:
        return m.copy()
    mag = np.abs(m)
    candidate = mag > _HALF_THRESHOLD_FACTOR * tau ** (2.0 / 3.0)
    if not np.any(candidate):
        return out
    a = mag[candidate]
    ratio = np.clip(-(0.75 * tau) * np.sqrt(3.0) * a ** -1.5, -1.0, 1.0)
    theta = np.arccos(ratio)
    s = (2.0 * a / 3.0) * (1.0 + np.cos(2.0 * theta / 3.0))
    # Global comparison with the zero candidate, whose objective is ½a².
    objective = 0.5 * (s - a) ** 2 + tau * np.sqrt(s)
    keep = objective < 0.5 * a * a
    values = np.where(keep, s, 0.0)
    out[candidate] = np.sign(m[candidate]) * values
    return out


def half_shrink(a: float, tau: float) -> float:
    """Global minimizer of ½(s - a)² + tau·|s|^{1/2}; 0 on ties."""
    return float(half_shrink_matrix(np.array([[a]], dtype=np.float64), tau)[0, 0])


def svt(m: Matrix, tau: float) -> Matrix:
    """
    Singular-value thresholding U·diag(max(s - tau, 0))·Vᵀ.

    Global minimizer of ½||X - M||_F² + tau·||X||_*.

    Raises:
        NumericalError: If the SVD fails
    """
    result = svd(m)
    shrunk = np.maximum(result.singular_values - tau, 0.0)
    k = int(np.count_nonzero(shrunk))
    if k == 0:
        return np.zeros_like(np.asarray(m, dtype=np.float64))
    return (result.u[:, :k] * shrunk[:k]) @ result.vt[:k, :]


def nuclear_norm(m: Matrix) -> float:
    """Sum of singular values."""
    return float(np.sum(singular_values(m)))


def half_quasi_norm(m: Matrix) -> float:
    """Σ |m_ij|^{1/2}."""
    return float(np.sum(np.sqrt(np.abs(np.asarray(m, dtype=np.float64)))))
