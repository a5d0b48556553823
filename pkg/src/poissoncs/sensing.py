"""Physically constrained sensing matrices and empirical isometry checks.

The workhorse is a two-point ensemble: a seeded +-1/sqrt(n) Bernoulli matrix
A_tilde, affinely remapped so every entry of the physical matrix A lands in
[1/(2n), 1/n].  That range makes A entrywise nonnegative with column sums at
most one, i.e. the sensor never detects more events than are emitted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bases import Basis
from .errors import BudgetExceededError

__all__ = [
    "SensingMatrix",
    "PhysicalReport",
    "RipEstimate",
    "bernoulli_sensing",
    "validate_physical",
    "downsampling_matrix",
    "estimate_rip",
]


@dataclass(frozen=True)
class SensingMatrix:
    """Pair (A_tilde, A) tied by an affine entry map; immutable."""

    n: int
    p: int
    A: np.ndarray = field(repr=False)
    A_tilde: np.ndarray = field(repr=False)
    a_l: float
    a_u: float
    seed: int

    @property
    def shift(self) -> float:
        return (self.a_u - 2.0 * self.a_l) / math.sqrt(self.n)

    @property
    def rescale(self) -> float:
        return 2.0 * math.sqrt(self.n) * (self.a_u - self.a_l)


@dataclass(frozen=True)
class PhysicalReport:
    nonneg_violations: tuple  # ((i, j, value), ...)
    column_sum_violations: tuple  # ((j, sum), ...)

    @property
    def passed(self) -> bool:
        return not self.nonneg_violations and not self.column_sum_violations


@dataclass(frozen=True)
class RipEstimate:
    s: int
    delta_hat: float
    supports_checked: int
    sampled: bool


def bernoulli_sensing(n: int, p: int, seed: int) -> SensingMatrix:
    """Seeded Bernoulli ensemble mapped onto the physical entry range.

    A_tilde entries are i.i.d. uniform on {-1/sqrt(n), +1/sqrt(n)} (so
    a_l = -1, a_u = 1) and A holds the matching entries 1/(2n) or 1/n.  Both
    matrices come from the same bit draws, so A equals
    (A_tilde + shift)/rescale exactly in real arithmetic while its entries
    are exact binary fractions whenever n is a power of two.
    """
    if n < 1 or p < 1:
        raise ValueError(f"matrix dimensions must be positive, got n={n}, p={p}")
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, 0]))
    bits = rng.integers(0, 2, size=(n, p))
    a_tilde = np.where(bits == 1, 1.0, -1.0) / math.sqrt(n)
    a = np.where(bits == 1, 1.0 / n, 0.5 / n)
    a.setflags(write=False)
    a_tilde.setflags(write=False)
    return SensingMatrix(n=n, p=p, A=a, A_tilde=a_tilde, a_l=-1.0, a_u=1.0, seed=seed)


def validate_physical(A: np.ndarray, sum_tol: float = 1e-12) -> PhysicalReport:
    """Report nonnegativity and column-sum violations of a sensing matrix.

    Nonnegativity is checked exactly; column sums are allowed ``sum_tol``
    of slack above one to absorb summation rounding.
    """
    A = np.asarray(A, dtype=float)
    neg = []
    for i, j in zip(*np.nonzero(A < 0)):
        neg.append((int(i), int(j), float(A[i, j])))
    col_sums = A.sum(axis=0)
    bad_cols = []
    for j in np.nonzero(col_sums > 1.0 + sum_tol)[0]:
        bad_cols.append((int(j), float(col_sums[j])))
    return PhysicalReport(nonneg_violations=tuple(neg), column_sum_violations=tuple(bad_cols))


def downsampling_matrix(p: int, kappa: int) -> np.ndarray:
    """Block-sum sensing matrix: row i sums pixels i*kappa .. (i+1)*kappa - 1."""
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if p % kappa != 0:
        raise ValueError(f"kappa={kappa} does not divide p={p}")
    return np.kron(np.eye(p // kappa), np.ones((1, kappa)))


def _support_iter(p: int, size: int):
    return itertools.combinations(range(p), size)


def estimate_rip(
    sm: SensingMatrix,
    basis: Basis,
    s: int,
    budget: int = 1_000_000,
    sample: int | None = None,
    seed: int = 0,
) -> RipEstimate:
    """Empirical restricted-isometry constant of A_tilde @ D at level s.

    Scans supports of size 2s and records the largest deviation of squared
    singular values from one on the corresponding column submatrix.  When
    comb(p, 2s) exceeds ``budget`` the call fails unless ``sample`` asks for
    that many uniformly drawn supports instead (a lower estimate).
    """
    if sm.p != basis.p:
        raise ValueError(f"basis size {basis.p} does not match sensing matrix p={sm.p}")
    if 2 * s > sm.p:
        raise ValueError(f"need 2s <= p, got s={s}, p={sm.p}")
    total = math.comb(sm.p, 2 * s)
    phi = sm.A_tilde @ basis.matrix
    gram = phi.T @ phi

    if sample is None:
        if total > budget:
            raise BudgetExceededError(
                f"RIP scan needs {total} supports, exceeding budget {budget};"
                " pass sample= to draw a subset",
                required=total,
                budget=budget,
            )
        supports = np.fromiter(
            itertools.chain.from_iterable(_support_iter(sm.p, 2 * s)),
            dtype=np.intp,
            count=total * 2 * s,
        ).reshape(total, 2 * s)
        sampled = False
    else:
        rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, 1]))
        supports = np.empty((sample, 2 * s), dtype=np.intp)
        for row in range(sample):
            supports[row] = rng.choice(sm.p, size=2 * s, replace=False)
        sampled = True

    delta = 0.0
    chunk = 65536
    for start in range(0, supports.shape[0], chunk):
        block = supports[start : start + chunk]
        grams = gram[block[:, :, None], block[:, None, :]]
        eigs = np.linalg.eigvalsh(grams)
        dev = np.abs(eigs - 1.0).max()
        if dev > delta:
            delta = float(dev)
    return RipEstimate(s=s, delta_hat=delta, supports_checked=int(supports.shape[0]), sampled=sampled)
