"""Command-line front end.

Subcommands mirror the library surface: ``lambda`` (localization values),
``matrix`` (sensing construction/validation), ``signal`` (class members),
``estimate`` (one reconstruction from a config), ``bounds`` (rate
formulas), ``sweep`` and ``compare-ds`` (experiment campaigns).
All commands print JSON to stdout except the sweep family, which writes
the requested output file.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys

import numpy as np

from . import poisson
from .bases import localization_brute, localization_closed, make_basis
from .bounds import BoundConfig, basis_rate_bounds, downsampling_upper, minimax_lower, minimax_upper
from .estimators import SolverOptions, downsampling_estimate, l0_exhaustive, spiral_estimate
from .harness import ExperimentConfig, compare_ds_cs, emit, run_trial, sweep
from .sensing import bernoulli_sensing, downsampling_matrix, estimate_rip, validate_physical
from .signals import delta_like_dwt_signal, packing_signal, triangular_signal


def _print(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True, default=_coerce)
    sys.stdout.write("\n")


def _coerce(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _cmd_lambda(args) -> None:
    out = {
        "basis": args.basis,
        "p": args.p,
        "k": args.k,
        "closed": localization_closed(args.basis, args.p, args.k),
    }
    if args.basis == "dht":
        out["closed_table_variant"] = localization_closed(args.basis, args.p, args.k, table_variant=True)
    if args.brute:
        out["brute"] = localization_brute(make_basis(args.basis, args.p), args.k)
    _print(out)


def _cmd_matrix(args) -> None:
    sm = bernoulli_sensing(args.n, args.p, args.seed)
    out = {
        "n": sm.n,
        "p": sm.p,
        "seed": sm.seed,
        "a_l": sm.a_l,
        "a_u": sm.a_u,
        "shift": sm.shift,
        "rescale": sm.rescale,
        "entry_values": sorted(set(sm.A.flat)),
    }
    if args.validate:
        report = validate_physical(sm.A)
        out["validate"] = {
            "passed": report.passed,
            "nonneg_violations": list(report.nonneg_violations),
            "column_sum_violations": list(report.column_sum_violations),
        }
    if args.rip:
        basis = make_basis(args.basis, args.p)
        est = estimate_rip(sm, basis, args.s, sample=args.sample)
        out["rip"] = {
            "s": est.s,
            "delta_hat": est.delta_hat,
            "supports_checked": est.supports_checked,
            "sampled": est.sampled,
        }
    if args.dump:
        with open(args.dump, "wb") as fh:
            fh.write(struct.pack("<qq", sm.n, sm.p))
            fh.write(np.ascontiguousarray(sm.A, dtype="<f8").tobytes())
        out["dump"] = args.dump
    _print(out)


def _cmd_signal(args) -> None:
    basis = make_basis(args.basis, args.p)
    if args.kind == "packing":
        signal = packing_signal(basis, args.s, args.seed)
    elif args.kind == "triangular":
        signal = triangular_signal(args.p, args.s)
    else:
        signal = delta_like_dwt_signal(args.p, args.s, args.position)
    _print(
        {
            "basis": args.basis,
            "kind": args.kind,
            "s": signal.s,
            "theta": signal.theta,
            "f": signal.f,
            "membership": {
                "passed": signal.membership.passed,
                "dc_pinned": signal.membership.dc_pinned,
                "sparsity_ok": signal.membership.sparsity_ok,
                "nonneg_ok": signal.membership.nonneg_ok,
                "unit_l1": signal.membership.unit_l1,
                "min_pixel": signal.membership.min_pixel,
                "l1_error": signal.membership.l1_error,
            },
        }
    )


def _cmd_estimate(args) -> None:
    cfg = ExperimentConfig.from_json(args.config)
    cfg = cfg.replace(estimator=args.method)
    T = float(cfg.T if not isinstance(cfg.T, list) else cfg.T[0])
    basis = make_basis(cfg.basis_kind, cfg.p)
    from .harness import _make_signal, _tau_values, _trial_seeds  # shared plumbing

    sig_seed, mat_seed, noise_seed = _trial_seeds(cfg.master_seed, 0)
    signal = _make_signal(cfg, basis, sig_seed)
    out = {"method": args.method, "T": T, "p": cfg.p, "s": cfg.s}
    if args.method == "ds":
        a_ds = downsampling_matrix(cfg.p, cfg.kappa)
        y = poisson.sample(T * (a_ds @ signal.f), noise_seed)
        theta_hat = downsampling_estimate(y, basis, T, cfg.kappa)
        out["theta_hat"] = theta_hat
        out["f_hat"] = basis.synthesize(theta_hat)
    elif args.method == "l0":
        sm = bernoulli_sensing(cfg.n, cfg.p, mat_seed)
        y = poisson.sample(T * (sm.A @ signal.f), noise_seed)
        res = l0_exhaustive(y, sm, basis, T, cfg.s)
        out["theta_hat"] = res.theta
        out["f_hat"] = res.f
        out["objective"] = res.objective
        out["candidates_checked"] = res.candidates_checked
    else:
        sm = bernoulli_sensing(cfg.n, cfg.p, mat_seed)
        y = poisson.sample(T * (sm.A @ signal.f), noise_seed)
        results = spiral_estimate(y, sm, basis, T, SolverOptions(tau=_tau_values(cfg, T)))
        if not isinstance(results, list):
            results = [results]
        out["solves"] = [
            {
                "tau": r.tau,
                "iterations": r.iterations,
                "converged": r.converged,
                "objective_trace": list(r.objective_trace),
                "theta_hat": r.theta,
                "f_hat": r.f,
                "mse_vs_truth": float(np.sum((r.f - signal.f) ** 2)),
            }
            for r in results
        ]
    if "f_hat" in out:
        out["mse_vs_truth"] = float(np.sum((np.asarray(out["f_hat"]) - signal.f) ** 2))
    _print(out)


def _cmd_bounds(args) -> None:
    cfg = BoundConfig()
    basis = make_basis(args.basis, args.p)
    lambdas = np.array([localization_closed(args.basis, args.p, k) for k in range(1, args.s + 1)])
    out = {
        "basis": args.basis,
        "p": args.p,
        "s": args.s,
        "T": args.T,
        "minimax_lower": minimax_lower(args.p, args.s, args.T, lambdas, cfg),
        "minimax_upper": minimax_upper(args.p, args.s, args.T, basis.L, cfg),
    }
    if args.table1:
        lower, upper = basis_rate_bounds(args.basis, args.p, args.s, args.T)
        out["per_basis"] = {"lower": lower, "upper": upper}
    if args.ds:
        lam = localization_closed(args.basis, args.p, args.s)
        out["ds_upper"] = downsampling_upper(args.p, args.s, args.sprime, args.T, args.kappa, lam)
    _print(out)


def _cmd_sweep(args) -> None:
    cfg = ExperimentConfig.from_json(args.config)
    if args.values:
        values = [float(v) for v in args.values.split(",")]
    elif args.axis == "T" and isinstance(cfg.T, list):
        values = [float(v) for v in cfg.T]
    else:
        raise SystemExit("sweep values: pass --values or put a list in the config's T field")
    records = sweep(cfg, args.axis, sorted(values))
    emit(records, args.format, args.out)
    _print({"out": args.out, "format": args.format, "points": len(records)})


def _cmd_compare_ds(args) -> None:
    cfg = ExperimentConfig.from_json(args.config)
    if isinstance(cfg.T, list):
        t_values = [float(v) for v in cfg.T]
    else:
        t_values = [float(cfg.T)]
    cs_records, ds_records = compare_ds_cs(cfg, t_values)
    emit(cs_records + ds_records, args.format, args.out)
    _print({"out": args.out, "format": args.format, "points": len(cs_records) + len(ds_records)})


def _cmd_trial(args) -> None:
    cfg = ExperimentConfig.from_json(args.config)
    if isinstance(cfg.T, list):
        cfg = cfg.replace(T=float(cfg.T[0]))
    result = run_trial(cfg, args.index)
    _print(
        {
            "trial": args.index,
            "seed": result.seed,
            "mse": result.mse,
            "theta_bar_energy": result.theta_bar_energy,
            "bound_lower": result.bound_lower,
            "bound_upper": result.bound_upper,
            "tau_used": result.tau_used,
            "iterations": result.iterations,
        }
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poissoncs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_lambda = sub.add_parser("lambda", help="sparse localization values")
    p_lambda.add_argument("--basis", choices=["dct", "dht", "dwt"], required=True)
    p_lambda.add_argument("--p", type=int, required=True)
    p_lambda.add_argument("--k", type=int, required=True)
    p_lambda.add_argument("--brute", action="store_true")
    p_lambda.set_defaults(func=_cmd_lambda)

    p_matrix = sub.add_parser("matrix", help="build and check sensing matrices")
    p_matrix.add_argument("--n", type=int, required=True)
    p_matrix.add_argument("--p", type=int, required=True)
    p_matrix.add_argument("--seed", type=int, default=0)
    p_matrix.add_argument("--validate", action="store_true")
    p_matrix.add_argument("--rip", action="store_true")
    p_matrix.add_argument("--basis", choices=["dct", "dht", "dwt"], default="dct")
    p_matrix.add_argument("--s", type=int, default=1)
    p_matrix.add_argument("--sample", type=int, default=None)
    p_matrix.add_argument("--dump", default=None, help="binary dump: int64 n, p then row-major float64")
    p_matrix.set_defaults(func=_cmd_matrix)

    p_signal = sub.add_parser("signal", help="generate admissible signals")
    p_signal.add_argument("--basis", choices=["dct", "dht", "dwt"], required=True)
    p_signal.add_argument("--p", type=int, required=True)
    p_signal.add_argument("--s", type=int, required=True)
    p_signal.add_argument("--kind", choices=["packing", "triangular", "delta"], required=True)
    p_signal.add_argument("--seed", type=int, default=0)
    p_signal.add_argument("--position", type=int, default=1)
    p_signal.set_defaults(func=_cmd_signal)

    p_estimate = sub.add_parser("estimate", help="run one reconstruction")
    p_estimate.add_argument("--method", choices=["spiral", "l0", "ds"], required=True)
    p_estimate.add_argument("--config", required=True)
    p_estimate.set_defaults(func=_cmd_estimate)

    p_bounds = sub.add_parser("bounds", help="evaluate rate formulas")
    p_bounds.add_argument("--basis", choices=["dct", "dht", "dwt"], required=True)
    p_bounds.add_argument("--p", type=int, required=True)
    p_bounds.add_argument("--s", type=int, required=True)
    p_bounds.add_argument("--T", type=float, required=True)
    p_bounds.add_argument("--table1", action="store_true", help="include per-basis simplified pair")
    p_bounds.add_argument("--ds", action="store_true")
    p_bounds.add_argument("--kappa", type=int, default=4)
    p_bounds.add_argument("--sprime", type=int, default=0)
    p_bounds.set_defaults(func=_cmd_bounds)

    p_sweep = sub.add_parser("sweep", help="risk sweep along T, n, or s")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", choices=["T", "n", "s"], required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--format", choices=["csv", "json", "svg"], default="csv")
    p_sweep.add_argument("--values", default=None, help="comma-separated axis values")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cmp = sub.add_parser("compare-ds", help="downsampling vs compressed sensing")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--format", choices=["csv", "json", "svg"], default="csv")
    p_cmp.set_defaults(func=_cmd_compare_ds)

    p_trial = sub.add_parser("trial", help="run a single seeded trial")
    p_trial.add_argument("--config", required=True)
    p_trial.add_argument("--index", type=int, default=0)
    p_trial.set_defaults(func=_cmd_trial)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
