"""Reconstruction procedures and their shared building blocks.

Three estimators live here: an l1-penalized Poisson-likelihood proximal
solver (SPIRAL-style, the simulation workhorse), an exhaustive l0-penalized
search over a quantized candidate set (reference estimator for tiny
instances), and the direct block-sum / adjoint estimator for downsampled
wavelet measurements.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bases import Basis, BasisKind
from .errors import BudgetExceededError, SolverDivergenceError
from .poisson import nll
from .sensing import SensingMatrix, downsampling_matrix

__all__ = [
    "QuantizationGrid",
    "SolverOptions",
    "SpiralResult",
    "L0Result",
    "design_operator",
    "poisson_l1_objective",
    "poisson_l1_gradient",
    "spiral_estimate",
    "quantization_grid",
    "quantize",
    "sparsity_penalty",
    "project_simplex",
    "l0_exhaustive",
    "downsampling_estimate",
]


# ---------------------------------------------------------------------------
# quantization machinery


@dataclass(frozen=True)
class QuantizationGrid:
    """Symmetric value grid {-L, ..., L} with K levels (just {0} for K=1)."""

    K: int
    L: float
    levels: np.ndarray = field(repr=False)


def quantization_grid(T: float, L: float, delta: float, a_u: float, a_l: float) -> QuantizationGrid:
    """Intensity-matched grid resolution.

    K is the ceiling of sqrt((1+delta) * L^2 * T * ln 2 / (2*(a_u-a_l)^2)),
    floored at one level.
    """
    if a_u <= a_l:
        raise ValueError(f"need a_u > a_l, got a_l={a_l}, a_u={a_u}")
    if T < 0:
        raise ValueError(f"need T >= 0, got {T}")
    k_star = math.sqrt((1.0 + delta) * L * L * T * math.log(2.0) / (2.0 * (a_u - a_l) ** 2))
    K = max(1, math.ceil(k_star))
    if K == 1:
        levels = np.zeros(1)
    else:
        levels = np.linspace(-L, L, K)
    return QuantizationGrid(K=K, L=L, levels=levels)


def quantize(theta: np.ndarray, grid: QuantizationGrid) -> np.ndarray:
    """Map non-DC coefficients to their nearest grid level.

    The DC coefficient passes through and exact zeros stay zero (the
    sparsity-respecting projection).  Distance ties go to the level of
    smaller magnitude, then to the nonnegative one.  Entries beyond +-L are
    clamped with a warning.
    """
    theta = np.asarray(theta, dtype=float).copy()
    tail = theta[1:]
    if np.any(np.abs(tail) > grid.L):
        warnings.warn("coefficients beyond the grid range were clamped to +-L", stacklevel=2)
        np.clip(tail, -grid.L, grid.L, out=tail)
    nz = np.nonzero(tail)[0]
    if nz.size:
        dist = np.abs(tail[nz][:, None] - grid.levels[None, :])
        # tie-break: distance, then |level|, then sign (nonnegative first)
        order = np.lexsort((grid.levels < 0, np.abs(grid.levels)))
        ranked = dist[:, order]
        tail[nz] = grid.levels[order][np.argmin(ranked, axis=1)]
    theta[1:] = tail
    return theta


def sparsity_penalty(theta: np.ndarray, p: int, s: int, K: int) -> float:
    """Twice the prefix-code length of a quantized coefficient vector.

    2*log2(s) for the support size plus 2*log2(p*K) per non-DC nonzero.
    """
    if s < 1 or K < 1 or p < 2:
        raise ValueError(f"need s >= 1, K >= 1, p >= 2, got s={s}, K={K}, p={p}")
    theta = np.asarray(theta, dtype=float)
    nnz = int(np.count_nonzero(theta[1:]))
    return 2.0 * math.log2(s) + 2.0 * nnz * math.log2(p * K)


def project_simplex(f: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {g >= 0, sum(g) = 1} (sort-based, O(p log p))."""
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("cannot project a non-finite vector")
    u = np.sort(f)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, f.size + 1)
    rho = np.nonzero(u + (1.0 - css) / j > 0)[0][-1]
    lam = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(f + lam, 0.0)


# ---------------------------------------------------------------------------
# l1-penalized proximal solver


@dataclass
class SolverOptions:
    """Knobs for the proximal solver.

    ``tau`` may be a single penalty weight or a grid; with a grid the solver
    sweeps it from largest to smallest with warm starts and returns one
    result per requested weight.  ``bb`` switches Barzilai-Borwein step
    initialization on (monotone backtracking applies either way).
    ``nonneg`` selects where the physical constraints are imposed: "post"
    clips and renormalizes only the final iterate, "iterate" does so after
    every accepted step.
    """

    tau: float | Sequence[float] = 1.0
    max_iters: int = 1000
    rel_tol: float = 1e-6
    bb: bool = True
    backtrack_factor: float = 0.5
    nonneg: str = "post"

    def __post_init__(self):
        taus = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if np.any(taus < 0):
            raise ValueError("penalty weights must be nonnegative")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.nonneg not in ("post", "iterate"):
            raise ValueError(f"unknown nonneg mode {self.nonneg!r}")


@dataclass(frozen=True)
class SpiralResult:
    theta: np.ndarray = field(repr=False)  # analysis of the projected estimate
    f: np.ndarray = field(repr=False)  # nonnegative, unit l1
    theta_pre: np.ndarray = field(repr=False)  # last iterate before projection
    f_pre: np.ndarray = field(repr=False)
    objective_trace: tuple
    iterations: int
    tau: float
    converged: bool


def design_operator(sm: SensingMatrix, basis: Basis, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Forward map pieces: mean = offset + M @ theta_bar.

    M folds the intensity into the non-DC part of A @ D; the offset is the
    contribution of the pinned DC coefficient.
    """
    if T <= 0:
        raise ValueError(f"need T > 0, got {T}")
    if sm.p != basis.p:
        raise ValueError(f"basis size {basis.p} does not match sensing matrix p={sm.p}")
    M = T * (sm.A @ basis.non_dc)
    offset = T * (sm.A @ np.full(basis.p, 1.0 / basis.p))
    return M, offset


def _deviance(y: np.ndarray, mu: np.ndarray) -> float:
    # Poisson nll shifted by its own minimum nll(y, y); numerically stable at
    # large intensities because only residual-scale terms remain.
    pos = y > 0
    out = float(np.sum(mu - y))
    if np.any(pos):
        out -= float(np.sum(y[pos] * np.log(mu[pos] / y[pos])))
    return out


def poisson_l1_objective(
    theta_bar: np.ndarray, y: np.ndarray, M: np.ndarray, offset: np.ndarray, tau: float
) -> float:
    """Penalized objective: Poisson deviance of the fit plus tau * l1.

    Equal to the penalized negative log-likelihood up to a data-only
    constant.  Infinite whenever the mean vector leaves the positive
    orthant.
    """
    mu = offset + M @ np.asarray(theta_bar, dtype=float)
    if mu.min() <= 0:
        return math.inf
    return _deviance(np.asarray(y, dtype=float), mu) + tau * float(np.abs(theta_bar).sum())


def poisson_l1_gradient(
    theta_bar: np.ndarray, y: np.ndarray, M: np.ndarray, offset: np.ndarray, tau: float
) -> np.ndarray:
    """Gradient of the penalized objective; valid off the l1 kinks.

    The penalty contributes tau * sign(theta_bar), so the value is only a
    gradient where no coefficient is exactly zero.
    """
    theta_bar = np.asarray(theta_bar, dtype=float)
    mu = offset + M @ theta_bar
    if mu.min() <= 0:
        raise ValueError("mean vector must be strictly positive")
    return M.T @ (1.0 - np.asarray(y, dtype=float) / mu) + tau * np.sign(theta_bar)


def _soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _clip_renormalize(f: np.ndarray) -> np.ndarray:
    f = np.maximum(f, 0.0)
    total = f.sum()
    if total <= 0:
        return np.full(f.shape, 1.0 / f.size)
    return f / total


def spiral_estimate(
    y: np.ndarray, sm: SensingMatrix, basis: Basis, T: float, opts: SolverOptions
) -> SpiralResult | list[SpiralResult]:
    """Minimize the l1-penalized Poisson likelihood over the non-DC coefficients.

    Proximal gradient with Barzilai-Borwein step initialization and monotone
    backtracking: the traced objective never increases across accepted
    iterates.  The DC coefficient stays pinned at p**-0.5 throughout.  The
    final pixel estimate is clipped to the nonnegative orthant and
    renormalized to unit l1 norm (pre-projection iterates are returned too).

    Returns a single result for a scalar ``opts.tau`` and a list matching
    the requested order for a grid.
    """
    y = np.asarray(y)
    if y.shape != (sm.n,):
        raise ValueError(f"y must have length n={sm.n}, got shape {y.shape}")
    M, offset = design_operator(sm, basis, T)
    taus = np.atleast_1d(np.asarray(opts.tau, dtype=float))
    scalar = np.isscalar(opts.tau) or getattr(opts.tau, "ndim", 1) == 0

    order = np.argsort(-taus)  # largest first so warm starts shrink gradually
    results: dict[int, SpiralResult] = {}
    theta_warm = np.zeros(basis.p - 1)
    for idx in order:
        tau = float(taus[idx])
        theta_bar, trace, iters, converged = _solve_iterates(
            y, M, offset, tau, opts, theta_warm, basis
        )
        theta_warm = theta_bar
        theta_pre = np.concatenate(([basis.p ** -0.5], theta_bar))
        f_pre = basis.synthesize(theta_pre)
        f_hat = _clip_renormalize(f_pre)
        results[int(idx)] = SpiralResult(
            theta=basis.analyze(f_hat),
            f=f_hat,
            theta_pre=theta_pre,
            f_pre=f_pre,
            objective_trace=tuple(trace),
            iterations=iters,
            tau=tau,
            converged=converged,
        )
    ordered = [results[i] for i in range(len(taus))]
    return ordered[0] if scalar else ordered


def _solve_iterates(y, M, offset, tau, opts, theta0, basis):
    p_bar = M.shape[1]
    theta = np.asarray(theta0, dtype=float).copy()
    mu = offset + M @ theta
    if mu.min() <= 0:  # warm start left the domain; restart at the flat signal
        theta = np.zeros(p_bar)
        mu = offset + M @ theta
    y = np.asarray(y, dtype=float)
    obj = _deviance(y, mu) + tau * np.abs(theta).sum()
    trace = [obj]

    curvature = float((M * M).sum() * np.max(np.where(y > 0, y / mu**2, 1.0 / mu)))
    step = 1.0 / max(curvature, 1e-300)
    prev_theta = None
    prev_grad = None
    converged = False
    iterations = 0

    for it in range(1, opts.max_iters + 1):
        grad = M.T @ (1.0 - y / mu)
        if opts.bb and prev_theta is not None:
            d_theta = theta - prev_theta
            d_grad = grad - prev_grad
            denom = float(d_theta @ d_grad)
            if denom > 0:
                step = float(d_theta @ d_theta) / denom
        elif prev_theta is not None:
            step /= opts.backtrack_factor  # let the fixed step grow back

        accepted = False
        for _ in range(80):
            cand = _soft_threshold(theta - step * grad, step * tau)
            mu_c = offset + M @ cand
            if mu_c.min() > 0:
                obj_c = _deviance(y, mu_c) + tau * np.abs(cand).sum()
                if obj_c <= obj:
                    accepted = True
                    break
            step *= opts.backtrack_factor
        if not accepted:  # no admissible descent step left
            converged = True
            break

        iterations = it
        rel_change = np.linalg.norm(cand - theta) / max(np.linalg.norm(theta), 1e-12)
        prev_theta, prev_grad = theta, grad
        theta, mu, obj = cand, mu_c, obj_c

        if opts.nonneg == "iterate":
            full = np.concatenate(([basis.p ** -0.5], theta))
            f_it = _clip_renormalize(basis.synthesize(full))
            theta = basis.analyze(f_it)[1:]
            mu = offset + M @ theta
            obj = _deviance(y, mu) + tau * np.abs(theta).sum()

        trace.append(obj)
        if not math.isfinite(obj):
            raise SolverDivergenceError("objective became non-finite", trace=trace)
        if rel_change < opts.rel_tol:
            converged = True
            break

    return theta, trace, iterations, converged


# ---------------------------------------------------------------------------
# exhaustive l0 reference estimator


@dataclass(frozen=True)
class L0Result:
    theta_candidate: np.ndarray = field(repr=False)  # quantized, pre-projection
    f: np.ndarray = field(repr=False)  # projected onto the simplex
    theta: np.ndarray = field(repr=False)  # analysis of f
    objective: float
    candidates_checked: int
    grid: QuantizationGrid


def l0_exhaustive(
    y: np.ndarray,
    sm: SensingMatrix,
    basis: Basis,
    T: float,
    s: int,
    delta: float = 0.0,
    budget: int = 1_000_000,
) -> L0Result:
    """Exhaustive penalized-likelihood search over quantized sparse candidates.

    Enumerates every coefficient vector with at most s non-DC nonzeros drawn
    from the intensity-matched grid, projects its synthesis onto the
    probability simplex, and scores Poisson nll plus the prefix-code
    penalty.  Ties are broken toward fewer nonzeros, then lexicographically
    smaller support, then smaller level.  Exact but exponential: intended
    for tiny instances, guarded by ``budget``.
    """
    p = basis.p
    grid = quantization_grid(T, basis.L, delta, sm.a_u, sm.a_l)
    levels = grid.levels[grid.levels != 0.0]
    n_levels = levels.size
    count = sum(math.comb(p - 1, t) * n_levels**t for t in range(0, s + 1))
    if count > budget:
        raise BudgetExceededError(
            f"l0 search needs {count} candidates, exceeding budget {budget}",
            required=count,
            budget=budget,
        )

    base_theta = np.zeros(p)
    base_theta[0] = p ** -0.5
    y = np.asarray(y)

    best = None  # (objective, nnz, support, level_key, payload)
    checked = 0

    def score(theta_full):
        f_tilde = project_simplex(basis.synthesize(theta_full))
        mu = T * (sm.A @ f_tilde)
        return nll(y, mu) + sparsity_penalty(theta_full, p, s, grid.K), f_tilde

    # the zero-support candidate (flat signal)
    obj0, f0 = score(base_theta)
    best = (obj0, 0, (), (), (base_theta.copy(), f0))
    checked += 1

    for t in range(1, s + 1):
        if n_levels == 0:
            break  # K = 1: only the flat candidate exists
        assignments = np.array(list(itertools.product(range(n_levels), repeat=t)))
        level_values = levels[assignments]  # rows in ascending lexicographic order
        for support in itertools.combinations(range(1, p), t):
            cols = basis.matrix[:, support]
            f_block = basis.matrix[:, 0] * base_theta[0] + level_values @ cols.T
            for row in range(level_values.shape[0]):
                f_tilde = project_simplex(f_block[row])
                mu = T * (sm.A @ f_tilde)
                theta_nnz = t
                pen = 2.0 * math.log2(s) + 2.0 * theta_nnz * math.log2(p * grid.K)
                obj = nll(y, mu) + pen
                checked += 1
                key = (obj, theta_nnz, support, tuple(assignments[row]))
                if key < (best[0], best[1], best[2], best[3]):
                    theta_full = base_theta.copy()
                    theta_full[list(support)] = level_values[row]
                    best = (obj, theta_nnz, support, tuple(assignments[row]), (theta_full, f_tilde))
    obj, _, _, _, (theta_cand, f_tilde) = best
    return L0Result(
        theta_candidate=theta_cand,
        f=f_tilde,
        theta=basis.analyze(f_tilde),
        objective=float(obj),
        candidates_checked=checked,
        grid=grid,
    )


# ---------------------------------------------------------------------------
# downsampling estimator


def downsampling_estimate(y_ds: np.ndarray, basis: Basis, T: float, kappa: int) -> np.ndarray:
    """Rescaled adjoint analysis of block-sum measurements.

    Pins the DC coefficient and recovers the rest as
    (1/(kappa*T)) * Dbar.T @ A_ds.T @ y.  Exact on coarse-scale Haar
    coefficients in the noiseless limit; fine-scale estimates are
    identically zero.  Only the DWT is supported: the exactness argument
    needs basis vectors constant on the summed blocks.
    """
    if basis.kind is not BasisKind.DWT:
        raise ValueError("downsampling recovery requires the DWT basis")
    if T <= 0:
        raise ValueError(f"need T > 0, got {T}")
    p = basis.p
    a_ds = downsampling_matrix(p, kappa)
    y_ds = np.asarray(y_ds, dtype=float)
    if y_ds.shape != (p // kappa,):
        raise ValueError(f"y_ds must have length p/kappa={p // kappa}, got shape {y_ds.shape}")
    theta = np.zeros(p)
    theta[0] = p ** -0.5
    # the adjoint image is constant on kappa-blocks, so wavelets finer than
    # the block size are orthogonal to it and their estimates vanish
    n_coarse = p // kappa
    theta[1:n_coarse] = basis.matrix[:, 1:n_coarse].T @ (a_ds.T @ y_ds) / (kappa * T)
    return theta
