"""Generators for the admissible signal class and its stress cases.

Every signal here is a coefficient vector theta with the DC coefficient
pinned to p**-0.5 plus at most s non-DC nonzeros, synthesized to a pixel
vector f = D @ theta that should be entrywise nonnegative with unit l1 norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bases import Basis, BasisKind, localization_closed, localization_brute, make_basis

__all__ = [
    "Signal",
    "PackingSpec",
    "MembershipReport",
    "packing_spec",
    "packing_signal",
    "split_packing_signal",
    "triangular_signal",
    "delta_like_dwt_signal",
    "validate_class_membership",
]

_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class MembershipReport:
    dc_pinned: bool
    sparsity_ok: bool
    nonneg_ok: bool
    unit_l1: bool
    min_pixel: float
    l1_error: float

    @property
    def passed(self) -> bool:
        return self.dc_pinned and self.sparsity_ok and self.nonneg_ok and self.unit_l1


@dataclass(frozen=True)
class Signal:
    theta: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    s: int
    basis_kind: BasisKind
    membership: MembershipReport | None = None


@dataclass(frozen=True)
class PackingSpec:
    """Amplitude and separation radius for hard random signals at level k."""

    k: int
    alpha: float  # per-coefficient amplitude 1/(p * lambda_k)
    eta_sq: float  # squared packing radius k/2 * alpha**2


def validate_class_membership(basis: Basis, theta: np.ndarray, s: int) -> MembershipReport:
    """Check the four admissibility flags for a coefficient vector.

    DC coefficient exactly p**-0.5, at most s non-DC nonzeros, pixels above
    -1e-12, and l1 norm within 1e-10 of one.
    """
    theta = np.asarray(theta, dtype=float)
    f = basis.synthesize(theta)
    min_pixel = float(f.min())
    l1_error = float(abs(np.abs(f).sum() - 1.0))
    return MembershipReport(
        dc_pinned=bool(theta[0] == basis.p ** -0.5),
        sparsity_ok=bool(np.count_nonzero(theta[1:]) <= s),
        nonneg_ok=bool(min_pixel >= -1e-12),
        unit_l1=bool(l1_error <= 1e-10),
        min_pixel=min_pixel,
        l1_error=l1_error,
    )


def _localization(basis: Basis, k: int, mode: str) -> float:
    if mode == "closed":
        return localization_closed(basis.kind, basis.p, k)
    if mode == "brute":
        return localization_brute(basis, k)
    raise ValueError(f"unknown localization mode {mode!r}")


def packing_spec(basis: Basis, k: int, lambda_mode: str = "closed") -> PackingSpec:
    lam = _localization(basis, k, lambda_mode)
    alpha = 1.0 / (basis.p * lam)
    return PackingSpec(k=k, alpha=alpha, eta_sq=0.5 * k * alpha * alpha)


def _assemble(basis: Basis, positions: np.ndarray, values: np.ndarray, s: int) -> Signal:
    theta = np.zeros(basis.p)
    theta[0] = basis.p ** -0.5
    theta[positions] = values
    f = basis.synthesize(theta)
    report = validate_class_membership(basis, theta, s)
    return Signal(theta=theta, f=f, s=s, basis_kind=basis.kind, membership=report)


def packing_signal(basis: Basis, k: int, seed: int, lambda_mode: str = "closed") -> Signal:
    """Random hard signal: k non-DC coefficients at +-1/(p*lambda_k).

    Support positions are drawn uniformly without replacement over the non-DC
    coefficients and signs are independent fair flips.  The amplitude is the
    largest value for which nonnegativity of the pixels is guaranteed.
    """
    spec = packing_spec(basis, k, lambda_mode)
    rng = np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, 2]))
    positions = 1 + rng.choice(basis.p - 1, size=k, replace=False)
    signs = rng.integers(0, 2, size=k) * 2.0 - 1.0
    return _assemble(basis, positions, signs * spec.alpha, k)


def split_packing_signal(
    basis: Basis, s: int, s_prime: int, kappa: int, seed: int, lambda_mode: str = "closed"
) -> Signal:
    """Packing-style signal with a prescribed coarse/fine support split.

    Places s_prime of the s nonzeros among the coarse coefficients (indices
    2 .. p/kappa, one-based) and the rest among the fine ones, all at the
    usual +-1/(p*lambda_s) amplitude.  Used to study block-sum sensing,
    where only the coarse coefficients survive downsampling by kappa.
    """
    p = basis.p
    if not 0 <= s_prime <= s:
        raise ValueError(f"need 0 <= s_prime <= s, got s_prime={s_prime}, s={s}")
    if p % kappa != 0:
        raise ValueError(f"kappa={kappa} does not divide p={p}")
    n_coarse = p // kappa - 1
    n_fine = p - p // kappa
    if s_prime > n_coarse or s - s_prime > n_fine:
        raise ValueError("support split does not fit the coarse/fine partition")
    spec = packing_spec(basis, s, lambda_mode)
    rng = np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, 3]))
    coarse = 1 + rng.choice(n_coarse, size=s_prime, replace=False)
    fine = p // kappa + rng.choice(n_fine, size=s - s_prime, replace=False)
    positions = np.concatenate([coarse, fine]).astype(int)
    signs = rng.integers(0, 2, size=s) * 2.0 - 1.0
    return _assemble(basis, positions, signs * spec.alpha, s)


def triangular_signal(p: int, s: int) -> Signal:
    """Linearly decaying low-frequency DCT signal.

    Coefficient j (one-based) holds (s - j + 2)/(s*sqrt(p)) for
    j = 2 .. s+1.  Class membership is verified numerically and attached,
    not assumed.
    """
    if s + 1 > p:
        raise ValueError(f"need s + 1 <= p, got s={s}, p={p}")
    if s < 1:
        raise ValueError(f"need s >= 1, got s={s}")
    basis = make_basis(BasisKind.DCT, p)
    positions = np.arange(1, s + 1)
    j = positions + 1  # one-based coefficient index
    values = (s - j + 2) / (s * math.sqrt(p))
    return _assemble(basis, positions, values, s)


def delta_like_dwt_signal(p: int, s: int, position: int = 1) -> Signal:
    """Wavelet signal concentrating pixel mass like a delta function.

    With s >= log2(p) the coefficients are exactly the analysis of the
    one-based pixel indicator e_position, which is (1 + log2 p)-sparse.
    With smaller s the expansion is truncated to the s coarsest non-DC
    coefficients, which is only supported at position 1 (the truncation is
    a block average of e_1 and stays admissible there).
    """
    basis = make_basis(BasisKind.DWT, p)
    m = p.bit_length() - 1
    if not 1 <= position <= p:
        raise ValueError(f"position must be in 1..{p}, got {position}")
    if s >= m:
        f = np.zeros(p)
        f[position - 1] = 1.0
        theta = basis.analyze(f)
        report = validate_class_membership(basis, theta, s)
        return Signal(theta=theta, f=f, s=s, basis_kind=basis.kind, membership=report)
    if position != 1:
        raise ValueError(
            f"truncated expansion (s={s} < log2(p)={m}) is only supported at position 1"
        )
    scales = np.arange(s)
    positions = (1 << scales)  # zero-based column index of each shift-0 wavelet
    values = (2.0 ** (scales / 2.0)) / math.sqrt(p)
    return _assemble(basis, positions, values, s)
