"""Poisson sampling, likelihood terms, and KL divergence for vector means."""

from __future__ import annotations

import numpy as np

__all__ = ["sample", "nll", "nll_gradient", "kl"]

_MASK64 = 0xFFFFFFFFFFFFFFFF


def sample(mu: np.ndarray, seed: int) -> np.ndarray:
    """Independent Poisson draws, one counter-based substream per coordinate.

    Coordinate i is drawn from a Philox stream keyed by (seed, i), so the
    result is reproducible regardless of evaluation order or concurrency and
    sample(mu, seed)[i] depends only on (mu[i], seed, i).  Zero means return
    exactly zero.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise ValueError(f"mu must be a vector, got shape {mu.shape}")
    if not np.all(np.isfinite(mu)) or np.any(mu < 0):
        raise ValueError("Poisson means must be finite and nonnegative")
    key = int(seed) & _MASK64
    out = np.zeros(mu.shape[0], dtype=np.int64)
    for i in range(mu.shape[0]):
        if mu[i] == 0.0:
            continue
        rng = np.random.Generator(np.random.Philox(key=[key, i]))
        out[i] = rng.poisson(mu[i])
    return out


def nll(y: np.ndarray, mu: np.ndarray) -> float:
    """Negative Poisson log-likelihood sum(mu - y*log(mu)), constants dropped."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if y.shape != mu.shape:
        raise ValueError(f"shape mismatch: y {y.shape} vs mu {mu.shape}")
    if np.any(y < 0):
        raise ValueError("counts must be nonnegative")
    if np.any(mu <= 0):
        raise ValueError("likelihood means must be strictly positive")
    return float(np.sum(mu - y * np.log(mu)))


def nll_gradient(y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Gradient of nll with respect to mu: 1 - y/mu."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("likelihood means must be strictly positive")
    return 1.0 - y / mu


def kl(mu1: np.ndarray, mu2: np.ndarray) -> float:
    """KL divergence between Poisson vectors, sum over coordinates.

    mu1 may contain zeros (0*log 0 taken as 0); mu2 must be strictly
    positive.
    """
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    if mu1.shape != mu2.shape:
        raise ValueError(f"shape mismatch: {mu1.shape} vs {mu2.shape}")
    if np.any(mu1 < 0):
        raise ValueError("mu1 must be nonnegative")
    if np.any(mu2 <= 0):
        raise ValueError("mu2 must be strictly positive")
    pos = mu1 > 0
    log_ratio = np.zeros_like(mu1)
    log_ratio[pos] = np.log(mu1[pos] / mu2[pos])
    return float(np.sum(mu1 * log_ratio - mu1 + mu2))
