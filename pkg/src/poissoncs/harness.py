"""Experiment harness: seeded trials, parameter sweeps, and serialization.

Reproduces the four desk-scale studies end to end: risk versus intensity
(the elbow), versus measurement count (flat), versus sparsity (linear), and
block-sum downsampling against compressed sensing (crossover).  Every trial
is deterministic given (config, trial_index); sweeps re-run bitwise
identically.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import poisson
from .bases import Basis, BasisKind, localization_closed, make_basis
from .bounds import BoundConfig, downsampling_upper, minimax_lower, minimax_upper
from .estimators import SolverOptions, downsampling_estimate, l0_exhaustive, spiral_estimate
from .sensing import bernoulli_sensing, downsampling_matrix
from .signals import (
    Signal,
    delta_like_dwt_signal,
    packing_signal,
    split_packing_signal,
    triangular_signal,
)

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "TrialError",
    "SweepRecord",
    "run_trial",
    "sweep",
    "compare_ds_cs",
    "emit",
    "parse_csv",
]

THREADS_ENV = "POISSON_CS_THREADS"


class TrialError(RuntimeError):
    """A trial failed; the original exception is chained as the cause."""


@dataclass
class ExperimentConfig:
    """Everything a trial needs; JSON field names match attribute names.

    ``T`` may be a scalar or a list (the sweep values for the T axis).
    ``tau_grid`` entries are multipliers of sqrt(T) when ``tau_scale`` is
    "sqrt_T" (the default, so one grid spans many decades of intensity) or
    raw penalty weights when "absolute".  With ``fixed_tau`` only the first
    grid entry is used; otherwise the per-trial oracle picks the
    best-risk weight and flags it in the output.
    """

    p: int
    n: int
    s: int
    basis_kind: str = "dct"
    T: float | list = 1e6
    signal_kind: str = "packing"  # packing | triangular | delta
    estimator: str = "spiral"  # spiral | l0 | ds
    tau_grid: list = field(
        default_factory=lambda: [0.125, 0.18, 0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0, 8.0, 16.0]
    )
    trials: int = 100
    master_seed: int = 0
    kappa: int = 1
    s_prime: int = 0
    tau_scale: str = "sqrt_T"
    fixed_tau: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.tau_grid:
            raise ValueError("tau_grid must be nonempty")
        if self.tau_scale not in ("sqrt_T", "absolute"):
            raise ValueError(f"unknown tau_scale {self.tau_scale!r}")
        if self.signal_kind not in ("packing", "triangular", "delta"):
            raise ValueError(f"unknown signal_kind {self.signal_kind!r}")
        if self.estimator not in ("spiral", "l0", "ds"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        BasisKind(self.basis_kind)

    @classmethod
    def from_json(cls, path_or_text: str | Path) -> "ExperimentConfig":
        text = str(path_or_text)
        if not text.lstrip().startswith("{"):
            text = Path(path_or_text).read_text()
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    def replace(self, **kwargs) -> "ExperimentConfig":
        return dataclasses.replace(self, **kwargs)


@dataclass(frozen=True)
class TrialResult:
    seed: int
    mse: float
    theta_bar_energy: float
    bound_lower: float
    bound_upper: float
    tau_used: float
    iterations: int


@dataclass(frozen=True)
class SweepRecord:
    axis_name: str
    axis_value: float
    mean_mse: float
    stderr_mse: float
    bound_lower: float
    bound_upper: float
    extra: dict


def _trial_seeds(master_seed: int, trial_index: int) -> tuple[int, int, int]:
    ss = np.random.SeedSequence(entropy=master_seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(trial_index,))
    sig, mat, noise = (int(v) for v in ss.generate_state(3, dtype=np.uint64))
    return sig, mat, noise


def _make_signal(cfg: ExperimentConfig, basis: Basis, signal_seed: int) -> Signal:
    if cfg.signal_kind == "packing":
        return packing_signal(basis, cfg.s, signal_seed)
    if cfg.signal_kind == "triangular":
        if basis.kind is not BasisKind.DCT:
            raise ValueError("triangular signals are defined in the DCT basis")
        return triangular_signal(cfg.p, cfg.s)
    if basis.kind is not BasisKind.DWT:
        raise ValueError("delta-like signals are defined in the DWT basis")
    return delta_like_dwt_signal(cfg.p, cfg.s, 1)


def _tau_values(cfg: ExperimentConfig, T: float) -> list[float]:
    scale = math.sqrt(T) if cfg.tau_scale == "sqrt_T" else 1.0
    grid = [float(t) * scale for t in cfg.tau_grid]
    return grid[:1] if cfg.fixed_tau else grid


def _bounds_for(cfg: ExperimentConfig, basis: Basis, T: float) -> tuple[float, float]:
    lambdas = np.array(
        [localization_closed(basis.kind, cfg.p, k) for k in range(1, cfg.s + 1)]
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lower = minimax_lower(cfg.p, cfg.s, T, lambdas, BoundConfig())
    upper = minimax_upper(cfg.p, cfg.s, T, basis.L, BoundConfig())
    return lower, upper


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialResult:
    """One seeded generate/sense/observe/reconstruct pass.

    The trial seed tree is derived from (master_seed, trial_index), so a
    repeated call returns an identical result.  For the "ds" estimator the
    measurement count is forced to p/kappa regardless of cfg.n.
    """
    if isinstance(cfg.T, (list, tuple)):
        raise ValueError("run_trial needs a scalar T; use sweep() for lists")
    T = float(cfg.T)
    sig_seed, mat_seed, noise_seed = _trial_seeds(cfg.master_seed, trial_index)
    basis = make_basis(cfg.basis_kind, cfg.p)
    signal = _make_signal(cfg, basis, sig_seed)
    energy = float(np.sum(signal.theta[1:] ** 2))
    lower, upper = _bounds_for(cfg, basis, T)

    try:
        if cfg.estimator == "ds":
            a_ds = downsampling_matrix(cfg.p, cfg.kappa)
            y = poisson.sample(T * (a_ds @ signal.f), noise_seed)
            theta_hat = downsampling_estimate(y, basis, T, cfg.kappa)
            f_hat = basis.synthesize(theta_hat)
            mse = float(np.sum((f_hat - signal.f) ** 2))
            tau_used, iterations = 0.0, 0
        elif cfg.estimator == "l0":
            sm = bernoulli_sensing(cfg.n, cfg.p, mat_seed)
            y = poisson.sample(T * (sm.A @ signal.f), noise_seed)
            res = l0_exhaustive(y, sm, basis, T, cfg.s)
            mse = float(np.sum((res.f - signal.f) ** 2))
            tau_used, iterations = 0.0, res.candidates_checked
        else:
            sm = bernoulli_sensing(cfg.n, cfg.p, mat_seed)
            y = poisson.sample(T * (sm.A @ signal.f), noise_seed)
            taus = _tau_values(cfg, T)
            opts = SolverOptions(tau=taus)
            results = spiral_estimate(y, sm, basis, T, opts)
            if not isinstance(results, list):
                results = [results]
            mses = [float(np.sum((r.f - signal.f) ** 2)) for r in results]
            best = int(np.argmin(mses))
            mse = mses[best]
            tau_used = results[best].tau
            iterations = results[best].iterations
    except Exception as exc:
        raise TrialError(f"trial {trial_index}: {exc}") from exc

    return TrialResult(
        seed=sig_seed,
        mse=mse,
        theta_bar_energy=energy,
        bound_lower=lower,
        bound_upper=upper,
        tau_used=tau_used,
        iterations=iterations,
    )


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_trials(cfg: ExperimentConfig) -> list[TrialResult]:
    workers = _worker_count()
    indices = list(range(cfg.trials))
    if workers == 1:
        return [run_trial(cfg, i) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda i: (i, run_trial(cfg, i)), indices))
    results.sort(key=lambda pair: pair[0])  # aggregation is order-independent
    return [r for _, r in results]


def _aggregate(cfg: ExperimentConfig, axis: str, value: float, trials: list[TrialResult]) -> SweepRecord:
    mses = np.array([t.mse for t in trials])
    mean = float(mses.mean())
    stderr = float(mses.std(ddof=1) / math.sqrt(len(mses))) if len(mses) > 1 else 0.0
    extra = {
        "p": cfg.p,
        "n": cfg.n,
        "s": cfg.s,
        "basis": cfg.basis_kind,
        "estimator": cfg.estimator,
        "trials": cfg.trials,
        "theta_bar_energy": trials[0].theta_bar_energy,
        "mses": [t.mse for t in trials],
        "tau_used": [t.tau_used for t in trials],
    }
    # rate-sandwich ratios, reported whenever the intensity is clearly high
    T_here = float(cfg.T) if not isinstance(cfg.T, (list, tuple)) else None
    if T_here is not None and T_here >= 10.0 * cfg.s * math.log(cfg.p):
        lo = trials[0].bound_lower
        up = trials[0].bound_upper
        extra["sandwich_c1"] = mean / lo if lo > 0 else math.inf
        extra["sandwich_c2"] = mean / up if up > 0 else math.inf
    return SweepRecord(
        axis_name=axis,
        axis_value=float(value),
        mean_mse=mean,
        stderr_mse=stderr,
        bound_lower=trials[0].bound_lower,
        bound_upper=trials[0].bound_upper,
        extra=extra,
    )


def sweep(cfg: ExperimentConfig, axis: str, values: list) -> list[SweepRecord]:
    """Run cfg.trials trials at each axis value and aggregate per value.

    ``axis`` is one of "T", "n", "s"; ``values`` must be sorted ascending.
    """
    if axis not in ("T", "n", "s"):
        raise ValueError(f"axis must be T, n, or s, got {axis!r}")
    if not values:
        raise ValueError("values must be nonempty")
    if list(values) != sorted(values):
        raise ValueError("values must be sorted ascending")
    records = []
    for value in values:
        if axis == "T":
            point = cfg.replace(T=float(value))
        elif axis == "n":
            point = cfg.replace(n=int(value))
        else:
            point = cfg.replace(s=int(value))
        trials = _run_trials(point)
        records.append(_aggregate(point, axis, float(value), trials))
    return records


def compare_ds_cs(
    cfg: ExperimentConfig, T_values: list
) -> tuple[list[SweepRecord], list[SweepRecord]]:
    """Paired comparison of compressed sensing and block-sum downsampling.

    Both arms see the same split-support signals and the same per-trial
    noise seeds; both measure with n = p/kappa rows.  The CS series carries
    the minimax bounds; the DS series carries the downsampling risk bound
    in its bound_upper column.
    """
    if cfg.basis_kind != "dwt":
        raise ValueError("the downsampling comparison requires the DWT basis")
    if cfg.p % cfg.kappa != 0:
        raise ValueError(f"kappa={cfg.kappa} does not divide p={cfg.p}")
    if not 0 <= cfg.s_prime <= cfg.s:
        raise ValueError("need 0 <= s_prime <= s")
    basis = make_basis(cfg.basis_kind, cfg.p)
    n = cfg.p // cfg.kappa
    a_ds = downsampling_matrix(cfg.p, cfg.kappa)
    lam = localization_closed(basis.kind, cfg.p, cfg.s)

    cs_records, ds_records = [], []
    for T in T_values:
        T = float(T)
        point = cfg.replace(T=T, n=n)
        lower, upper = _bounds_for(point, basis, T)
        ds_bound = downsampling_upper(cfg.p, cfg.s, cfg.s_prime, T, cfg.kappa, lam)
        cs_trials, ds_trials = [], []
        for i in range(cfg.trials):
            sig_seed, mat_seed, noise_seed = _trial_seeds(cfg.master_seed, i)
            signal = split_packing_signal(basis, cfg.s, cfg.s_prime, cfg.kappa, sig_seed)
            energy = float(np.sum(signal.theta[1:] ** 2))

            sm = bernoulli_sensing(n, cfg.p, mat_seed)
            y_cs = poisson.sample(T * (sm.A @ signal.f), noise_seed)
            taus = _tau_values(point, T)
            results = spiral_estimate(y_cs, sm, basis, T, SolverOptions(tau=taus))
            if not isinstance(results, list):
                results = [results]
            mses = [float(np.sum((r.f - signal.f) ** 2)) for r in results]
            best = int(np.argmin(mses))
            cs_trials.append(
                TrialResult(sig_seed, mses[best], energy, lower, upper,
                            results[best].tau, results[best].iterations)
            )

            y_ds = poisson.sample(T * (a_ds @ signal.f), noise_seed)
            theta_hat = downsampling_estimate(y_ds, basis, T, cfg.kappa)
            mse_ds = float(np.sum((basis.synthesize(theta_hat) - signal.f) ** 2))
            ds_trials.append(TrialResult(sig_seed, mse_ds, energy, lower, ds_bound, 0.0, 0))

        cs_rec = _aggregate(point, "T", T, cs_trials)
        cs_rec.extra["series"] = "cs"
        cs_rec.extra["s_prime"] = cfg.s_prime
        cs_records.append(cs_rec)

        ds_rec = _aggregate(point.replace(estimator="ds"), "T", T, ds_trials)
        ds_rec = dataclasses.replace(ds_rec, bound_upper=ds_bound)
        ds_rec.extra["series"] = "ds"
        ds_rec.extra["s_prime"] = cfg.s_prime
        ds_records.append(ds_rec)
    return cs_records, ds_records


# ---------------------------------------------------------------------------
# serialization

_CSV_HEADER = "axis_name,axis_value,mean_mse,stderr_mse,bound_lower,bound_upper,extra"


def _fmt(x: float) -> str:
    return repr(float(x))


def emit(records: list[SweepRecord], fmt: str, path: str | Path) -> Path:
    """Write sweep records to ``path`` as csv, json, or a log-log svg chart.

    CSV floats are written in shortest round-trip form, so parsing the file
    back reproduces the exact binary values.
    """
    if not records:
        raise ValueError("no records to emit")
    if fmt not in ("csv", "json", "svg"):
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    if fmt == "csv":
        lines = [_CSV_HEADER]
        for r in records:
            blob = json.dumps(r.extra, sort_keys=True).replace('"', '""')
            lines.append(
                ",".join(
                    [
                        r.axis_name,
                        _fmt(r.axis_value),
                        _fmt(r.mean_mse),
                        _fmt(r.stderr_mse),
                        _fmt(r.bound_lower),
                        _fmt(r.bound_upper),
                        f'"{blob}"',
                    ]
                )
            )
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        payload = [dataclasses.asdict(r) for r in records]
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        path.write_text(_render_svg(records))
    return path


def parse_csv(path: str | Path) -> list[SweepRecord]:
    """Inverse of emit(..., "csv", ...)."""
    import csv as _csv

    records = []
    with open(path, newline="") as fh:
        reader = _csv.DictReader(fh)
        for row in reader:
            records.append(
                SweepRecord(
                    axis_name=row["axis_name"],
                    axis_value=float(row["axis_value"]),
                    mean_mse=float(row["mean_mse"]),
                    stderr_mse=float(row["stderr_mse"]),
                    bound_lower=float(row["bound_lower"]),
                    bound_upper=float(row["bound_upper"]),
                    extra=json.loads(row["extra"]),
                )
            )
    return records


def _render_svg(records: list[SweepRecord], width: int = 640, height: int = 440) -> str:
    """Log-log chart: mean risk solid, rate bounds dashed."""
    series: dict[str, list[SweepRecord]] = {}
    for r in records:
        series.setdefault(str(r.extra.get("series", "mse")), []).append(r)

    xs = [r.axis_value for r in records]
    ys = [v for r in records for v in (r.mean_mse, r.bound_lower, r.bound_upper) if v > 0]
    lx0, lx1 = math.log10(min(xs)), math.log10(max(xs))
    ly0, ly1 = math.log10(min(ys)), math.log10(max(ys))
    lx1 += 1e-9 if lx1 == lx0 else 0.0
    ly1 += 1e-9 if ly1 == ly0 else 0.0
    margin = 50.0

    def sx(v):
        return margin + (math.log10(v) - lx0) / (lx1 - lx0) * (width - 2 * margin)

    def sy(v):
        return height - margin - (math.log10(v) - ly0) / (ly1 - ly0) * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#333"/>',
    ]
    for exp in range(math.ceil(lx0), math.floor(lx1) + 1):
        x = sx(10.0**exp)
        parts.append(f'<line x1="{x:.1f}" y1="{height - margin}" x2="{x:.1f}" '
                     f'y2="{height - margin + 5}" stroke="#333"/>')
        parts.append(f'<text x="{x:.1f}" y="{height - margin + 18}" font-size="10" '
                     f'text-anchor="middle">1e{exp}</text>')
    for exp in range(math.ceil(ly0), math.floor(ly1) + 1):
        yy = sy(10.0**exp)
        parts.append(f'<line x1="{margin - 5}" y1="{yy:.1f}" x2="{margin}" '
                     f'y2="{yy:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{margin - 8}" y="{yy + 3:.1f}" font-size="10" '
                     f'text-anchor="end">1e{exp}</text>')

    def polyline(pts, color, dash=""):
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts if y > 0)
        attr = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline points="{coords}" fill="none" stroke="{color}"{attr}/>'

    for idx, (name, recs) in enumerate(sorted(series.items())):
        color = colors[idx % len(colors)]
        recs = sorted(recs, key=lambda r: r.axis_value)
        parts.append(polyline([(r.axis_value, r.mean_mse) for r in recs], color))
        parts.append(polyline([(r.axis_value, r.bound_lower) for r in recs], color, "2,3"))
        parts.append(polyline([(r.axis_value, r.bound_upper) for r in recs], color, "6,3"))
        parts.append(
            f'<text x="{width - margin - 4}" y="{margin + 14 + 12 * idx}" font-size="11" '
            f'text-anchor="end" fill="{color}">{name}</text>'
        )
    axis = records[0].axis_name
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 8}" font-size="12" '
                 f'text-anchor="middle">{axis}</text>')
    parts.append('</svg>')
    return "\n".join(parts) + "\n"
