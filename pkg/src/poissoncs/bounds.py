"""Minimax risk rate formulas and regime predicates.

All values carry unspecified leading constants; the defaults set them to one
so the functions track rate shapes.  Natural logarithms are used where the
source formulas write log, base-2 logarithms where they write log2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bases import BasisKind

__all__ = [
    "BoundConfig",
    "minimax_lower",
    "minimax_upper",
    "basis_rate_bounds",
    "downsampling_upper",
    "low_intensity_floor",
]


@dataclass(frozen=True)
class BoundConfig:
    C_L: float = 1.0
    C_U: float = 1.0
    a_u: float = 1.0
    a_l: float = -1.0
    delta: float = 0.0
    include_logT_term: bool = False
    proof_constants: bool = False  # use the sharper proof-derived branch constants

    def __post_init__(self):
        if self.C_L <= 0 or self.C_U <= 0:
            raise ValueError("leading constants must be positive")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if self.a_u <= self.a_l:
            raise ValueError(f"need a_u > a_l, got a_l={self.a_l}, a_u={self.a_u}")


def minimax_lower(
    p: int, s: int, T: float, lambdas: np.ndarray, cfg: BoundConfig = BoundConfig()
) -> float:
    """Worst-case risk lower bound over sparsity levels 1..s.

    For each k the bound is the smaller of the amplitude-limited floor
    k/(p^2 lambda_k^2) and the information-limited decay
    (k/T) * log((p-k-1)/(k/2)); the reported value is the largest over k.
    ``lambdas[k-1]`` must hold the localization value at level k.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (s,):
        raise ValueError(f"lambdas must have length s={s}, got shape {lambdas.shape}")
    if np.any(lambdas <= 0):
        raise ValueError("localization values must be positive")
    if T <= 0:
        raise ValueError(f"need T > 0, got {T}")
    if p < 10 or not 1 <= s < p / 3 - 1:
        warnings.warn(
            f"outside the guaranteed regime (need p >= 10 and 1 <= s < p/3 - 1; "
            f"got p={p}, s={s})",
            stacklevel=2,
        )
    if cfg.proof_constants:
        c_floor = 1.0 / 32.0
        c_decay = (cfg.a_u - cfg.a_l) ** 2 / 512.0
        scale = 1.0
    else:
        c_floor = c_decay = 1.0
        scale = cfg.C_L
    best = 0.0
    for k in range(1, s + 1):
        floor = c_floor * k / (p * p * lambdas[k - 1] ** 2)
        decay = c_decay * (k / T) * math.log((p - k - 1) / (k / 2.0))
        best = max(best, min(floor, decay))
    return scale * best


def minimax_upper(p: int, s: int, T: float, L: float, cfg: BoundConfig = BoundConfig()) -> float:
    """Achievable-risk upper bound: min of likelihood, zero-estimator, and trivial terms."""
    if T <= 0:
        raise ValueError(f"need T > 0, got {T}")
    if not 0.0 < L <= 1.0:
        raise ValueError(f"need 0 < L <= 1, got {L}")
    likelihood = s * math.log2(p) / ((1.0 - cfg.delta) * T)
    if cfg.include_logT_term:
        likelihood += s * math.log2(T + 1.0) / ((1.0 - cfg.delta) * T)
    return cfg.C_U * min(likelihood, s * L * L, 1.0)


def basis_rate_bounds(kind: BasisKind | str, p: int, s: int, T: float) -> tuple[float, float]:
    """Per-basis simplified (lower, upper) rate pair, constants neglected."""
    kind = BasisKind(kind)
    if T <= 0:
        raise ValueError(f"need T > 0, got {T}")
    decay_lower = s * math.log(p / s) / T
    decay_upper = s * math.log(p) / T
    if kind in (BasisKind.DCT, BasisKind.DHT):
        return min(1.0 / p, decay_lower), min(s / p, decay_upper)
    return min(s / (p * p), decay_lower), min(1.0, decay_upper)


def downsampling_upper(p: int, s: int, s_prime: int, T: float, kappa: int, lam: float) -> float:
    """Risk bound for block-sum sensing with rescaled adjoint recovery.

    Coarse coefficients contribute variance 2*s'/(T*p*kappa); the s - s'
    fine coefficients are unrecoverable and contribute their full energy
    (s - s')/(lam^2 * p^2).
    """
    if not 0 <= s_prime <= s:
        raise ValueError(f"need 0 <= s_prime <= s, got s_prime={s_prime}, s={s}")
    if kappa < 1:
        raise ValueError(f"need kappa >= 1, got {kappa}")
    if lam <= 0:
        raise ValueError(f"need lam > 0, got {lam}")
    if T <= 0:
        raise ValueError(f"need T > 0, got {T}")
    return 2.0 * s_prime / (T * p * kappa) + (s - s_prime) / (lam * lam * p * p)


def low_intensity_floor(
    kind: BasisKind | str, p: int, s: int, T: float, cfg: BoundConfig = BoundConfig()
) -> tuple[bool, float]:
    """Constant-risk regime predicate for delta-like wavelet signals.

    Applies when the basis is the DWT, p >= 4, s >= log2(p), and the
    intensity is below (a_u - a_l)^2 * log(p) / (4 * (1 + delta)); the floor
    is the absolute constant 1/8.
    """
    kind = BasisKind(kind)
    threshold = (cfg.a_u - cfg.a_l) ** 2 * math.log(p) / (4.0 * (1.0 + cfg.delta))
    applies = kind is BasisKind.DWT and p >= 4 and s >= math.log2(p) and T <= threshold
    return applies, 0.125
