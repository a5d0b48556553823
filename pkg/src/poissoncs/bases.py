"""Orthonormal sparsifying bases with a constant first column.

Three dictionaries are supported: the type-II discrete cosine transform
(DCT), the naturally ordered discrete Hadamard transform (DHT), and the
orthonormal discrete Haar wavelet transform (DWT).  All are dense p x p
matrices whose first column is p**-0.5 * ones, so the first coefficient of
any unit-l1 nonnegative signal is pinned to p**-0.5.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError

__all__ = [
    "BasisKind",
    "Basis",
    "make_basis",
    "localization_closed",
    "localization_brute",
]


class BasisKind(str, enum.Enum):
    DCT = "dct"
    DHT = "dht"
    DWT = "dwt"


def _require_power_of_two(p: int, kind: BasisKind) -> int:
    m = int(p).bit_length() - 1
    if p < 2 or (1 << m) != p:
        raise ValueError(f"{kind.value} basis requires p to be a power of two >= 2, got {p}")
    return m


@dataclass(frozen=True)
class Basis:
    """Immutable orthonormal dictionary; safe for concurrent reads."""

    kind: BasisKind
    p: int
    matrix: np.ndarray = field(repr=False)
    L: float  # max absolute entry

    @property
    def non_dc(self) -> np.ndarray:
        """Columns 2..p (everything but the constant column)."""
        return self.matrix[:, 1:]

    def synthesize(self, theta: np.ndarray) -> np.ndarray:
        """Pixel vector f = D @ theta."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,):
            raise ValueError(f"theta must have length {self.p}, got shape {theta.shape}")
        return self.matrix @ theta

    def analyze(self, f: np.ndarray) -> np.ndarray:
        """Coefficient vector theta = D.T @ f."""
        f = np.asarray(f, dtype=float)
        if f.shape != (self.p,):
            raise ValueError(f"f must have length {self.p}, got shape {f.shape}")
        return self.matrix.T @ f


def _dct_matrix(p: int) -> np.ndarray:
    j = np.arange(p)[:, None]
    k = np.arange(p)[None, :]
    d = np.sqrt(2.0 / p) * np.cos((2 * j + 1) * k * np.pi / (2 * p))
    d[:, 0] = p ** -0.5
    return d

def _dht_matrix(p: int) -> np.ndarray:
    m = _require_power_of_two(p, BasisKind.DHT)
    idx = np.arange(p)
    # exponent is the bitwise dot product of 0-based binary index expansions
    bits = ((idx[:, None] & idx[None, :])[..., None] >> np.arange(m)) & 1
    parity = bits.sum(axis=-1) % 2
    return np.where(parity == 0, 1.0, -1.0) * (p**-0.5)

def _dwt_matrix(p: int) -> np.ndarray:
    m = _require_power_of_two(p, BasisKind.DWT)
    d = np.zeros((p, p))
    d[:, 0] = p ** -0.5
    col = 1
    for scale in range(m):  # coarse -> fine
        block = p >> scale
        half = block >> 1
        amp = math.sqrt((1 << scale) / p)
        for shift in range(1 << scale):  # left -> right
            start = shift * block
            d[start : start + half, col] = amp
            d[start + half : start + block, col] = -amp
            col += 1
    return d


def make_basis(kind: BasisKind | str, p: int) -> Basis:
    """Build an orthonormal basis of the given kind and size.

    DHT and DWT require p to be a power of two; the DCT accepts any p >= 2.
    """
    kind = BasisKind(kind)
    if p < 2:
        raise ValueError(f"basis size must be >= 2, got {p}")
    if kind is BasisKind.DCT:
        matrix = _dct_matrix(p)
    elif kind is BasisKind.DHT:
        matrix = _dht_matrix(p)
    else:
        matrix = _dwt_matrix(p)
    matrix.setflags(write=False)
    return Basis(kind=kind, p=p, matrix=matrix, L=float(np.abs(matrix).max()))


def localization_closed(
    kind: BasisKind | str, p: int, k: int, table_variant: bool = False
) -> float:
    """Closed-form s-sparse localization value for sparsity level k.

    For the DCT this is an upper bound on the exact value, tight for p >> k.
    For the DHT two published forms are in circulation: the default is the
    exact k/sqrt(p); ``table_variant=True`` returns sqrt(2)*k/sqrt(p).
    For the DWT the value is a partial geometric sum over the wavelet
    magnitudes reachable by a single pixel, saturating at 1/(sqrt(2)-1).
    """
    kind = BasisKind(kind)
    if not 1 <= k <= p - 1:
        raise ValueError(f"k must satisfy 1 <= k <= p - 1, got k={k}, p={p}")
    if kind is BasisKind.DCT:
        return math.sqrt(2.0) * k / math.sqrt(p)
    if kind is BasisKind.DHT:
        _require_power_of_two(p, kind)
        if table_variant:
            return math.sqrt(2.0) * k / math.sqrt(p)
        return k / math.sqrt(p)
    m = _require_power_of_two(p, kind)
    # one wavelet per scale overlaps any fixed pixel, so at most m magnitudes stack
    m_eff = min(k, m)
    return (1.0 - 2.0 ** (-m_eff / 2.0)) / (math.sqrt(2.0) - 1.0)


def localization_brute(basis: Basis, k: int, budget: int = 10_000_000) -> float:
    """Exact localization value by enumerating all k-sparse sign vectors.

    Maximizes the sup-norm of Dbar @ v over v in {-1, 0, +1}**(p-1) with
    exactly k nonzeros, where Dbar drops the constant column.  Raises
    BudgetExceededError when comb(p-1, k) * 2**k exceeds ``budget``.
    """
    p = basis.p
    if not 1 <= k <= p - 1:
        raise ValueError(f"k must satisfy 1 <= k <= p - 1, got k={k}, p={p}")
    required = math.comb(p - 1, k) * (1 << k)
    if required > budget:
        raise BudgetExceededError(
            f"enumeration needs {required} sign vectors, exceeding budget {budget}",
            required=required,
            budget=budget,
        )
    dbar = basis.non_dc
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=k))).T  # k x 2^k
    best = 0.0
    for support in itertools.combinations(range(p - 1), k):
        vals = np.abs(dbar[:, support] @ signs).max()
        if vals > best:
            best = float(vals)
    return best
