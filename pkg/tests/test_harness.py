import json
import math

import numpy as np
import pytest

from poissoncs.harness import (
    ExperimentConfig,
    TrialError,
    compare_ds_cs,
    emit,
    parse_csv,
    run_trial,
    sweep,
)

SMALL = dict(p=16, n=16, s=2, basis_kind="dct", trials=3, master_seed=42, T=1e4,
             tau_grid=[0.5, 2.0, 1e6])


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    text = cfg.to_json()
    again = ExperimentConfig.from_json(text)
    assert again == cfg
    path = tmp_path / "cfg.json"
    path.write_text(text)
    assert ExperimentConfig.from_json(path) == cfg


def test_config_rejects_unknown_fields():
    with pytest.raises(ValueError):
        ExperimentConfig.from_json('{"p": 8, "n": 8, "s": 1, "bogus": 1}')


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(p=8, n=8, s=1, trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(p=8, n=8, s=1, tau_grid=[])
    with pytest.raises(ValueError):
        ExperimentConfig(p=8, n=8, s=1, estimator="magic")


def test_run_trial_deterministic():
    cfg = ExperimentConfig(**SMALL)
    a = run_trial(cfg, 0)
    b = run_trial(cfg, 0)
    assert a == b
    c = run_trial(cfg, 1)
    assert c != a


def test_run_trial_zero_estimator_when_only_huge_tau():
    cfg = ExperimentConfig(**{**SMALL, "tau_grid": [1e9], "fixed_tau": True})
    res = run_trial(cfg, 0)
    assert res.mse == pytest.approx(res.theta_bar_energy, rel=1e-12)


def test_run_trial_packing_energy_matches_spec_value():
    from poissoncs.bases import localization_closed

    cfg = ExperimentConfig(**SMALL)
    res = run_trial(cfg, 5)
    lam = localization_closed("dct", 16, 2)
    assert res.theta_bar_energy == pytest.approx(2 / (16**2 * lam**2), rel=1e-12)


def test_run_trial_oracle_never_beaten_by_zero_estimate():
    cfg = ExperimentConfig(**SMALL)
    for i in range(3):
        res = run_trial(cfg, i)
        assert res.mse <= res.theta_bar_energy + 1e-15


def test_run_trial_attaches_bounds():
    cfg = ExperimentConfig(**SMALL)
    res = run_trial(cfg, 0)
    assert res.bound_lower > 0 and res.bound_upper > 0
    assert res.bound_lower <= 1.0 and res.bound_upper <= 1.0


def test_run_trial_needs_scalar_T():
    cfg = ExperimentConfig(**{**SMALL, "T": [1e2, 1e4]})
    with pytest.raises(ValueError):
        run_trial(cfg, 0)


def test_run_trial_annotates_failures_with_index():
    # l0 at this size blows its candidate budget; the trial index is attached
    # and the original error chained
    from poissoncs.errors import BudgetExceededError

    cfg = ExperimentConfig(p=64, n=16, s=10, basis_kind="dct", estimator="l0",
                           trials=1, master_seed=0, T=1e10)
    with pytest.raises(TrialError, match="trial 3") as err:
        run_trial(cfg, 3)
    assert isinstance(err.value.__cause__, BudgetExceededError)


def test_run_trial_ds_estimator():
    cfg = ExperimentConfig(p=32, n=8, s=3, basis_kind="dwt", signal_kind="packing",
                           estimator="ds", trials=2, master_seed=1, T=1e6, kappa=4)
    res = run_trial(cfg, 0)
    assert res.mse >= 0 and res.iterations == 0


def test_run_trial_l0_estimator():
    cfg = ExperimentConfig(p=8, n=16, s=1, basis_kind="dct", estimator="l0",
                           trials=2, master_seed=2, T=1e4)
    res = run_trial(cfg, 0)
    assert res.mse >= 0 and res.iterations > 0  # candidate count recorded


def test_sweep_shapes_and_order():
    cfg = ExperimentConfig(**SMALL)
    records = sweep(cfg, "T", [1e2, 1e4])
    assert [r.axis_value for r in records] == [1e2, 1e4]
    assert all(r.axis_name == "T" for r in records)
    assert all(len(r.extra["mses"]) == 3 for r in records)
    with pytest.raises(ValueError):
        sweep(cfg, "T", [1e4, 1e2])
    with pytest.raises(ValueError):
        sweep(cfg, "q", [1.0])
    with pytest.raises(ValueError):
        sweep(cfg, "T", [])


def test_sweep_stderr_definition():
    cfg = ExperimentConfig(**SMALL)
    rec = sweep(cfg, "T", [1e4])[0]
    mses = np.array(rec.extra["mses"])
    assert rec.mean_mse == pytest.approx(mses.mean())
    assert rec.stderr_mse == pytest.approx(mses.std(ddof=1) / math.sqrt(len(mses)))


def test_sweep_reports_sandwich_ratios_at_high_intensity():
    cfg = ExperimentConfig(**{**SMALL, "trials": 2})
    rec = sweep(cfg, "T", [1e8])[0]
    assert "sandwich_c1" in rec.extra and "sandwich_c2" in rec.extra
    assert rec.extra["sandwich_c1"] > 0


def test_emit_csv_round_trip(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    records = sweep(cfg, "T", [1e2, 1e4])
    path = tmp_path / "out.csv"
    emit(records, "csv", path)
    back = parse_csv(path)
    assert len(back) == 2
    for orig, re in zip(records, back):
        assert re.axis_value == orig.axis_value
        assert re.mean_mse == orig.mean_mse  # bitwise, via shortest round-trip repr
        assert re.stderr_mse == orig.stderr_mse
        assert re.bound_lower == orig.bound_lower
        assert re.bound_upper == orig.bound_upper
        assert re.extra["mses"] == orig.extra["mses"]


def test_emit_rejects_empty_and_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit([], "csv", tmp_path / "x.csv")
    cfg = ExperimentConfig(**SMALL)
    records = sweep(cfg, "T", [1e2])
    with pytest.raises(ValueError):
        emit(records, "yaml", tmp_path / "x.yaml")


def test_emit_single_record_csv(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    records = sweep(cfg, "T", [1e3])
    path = emit(records, "csv", tmp_path / "one.csv")
    lines = path.read_text().strip().split("\n")
    assert len(lines) == 2
    assert lines[0].startswith("axis_name,axis_value,mean_mse")


def test_emit_json_and_svg(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    records = sweep(cfg, "T", [1e2, 1e4])
    jpath = emit(records, "json", tmp_path / "r.json")
    data = json.loads(jpath.read_text())
    assert len(data) == 2 and data[0]["mean_mse"] == records[0].mean_mse
    spath = emit(records, "svg", tmp_path / "r.svg")
    text = spath.read_text()
    assert text.startswith("<svg") and "polyline" in text


def test_sweep_rerun_bitwise_identical(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    p1 = emit(sweep(cfg, "T", [1e2, 1e4]), "csv", tmp_path / "a.csv")
    p2 = emit(sweep(cfg, "T", [1e2, 1e4]), "csv", tmp_path / "b.csv")
    assert p1.read_bytes() == p2.read_bytes()


def test_thread_env_does_not_change_results(tmp_path, monkeypatch):
    cfg = ExperimentConfig(**SMALL)
    serial = sweep(cfg, "T", [1e2, 1e4])
    monkeypatch.setenv("POISSON_CS_THREADS", "4")
    threaded = sweep(cfg, "T", [1e2, 1e4])
    assert serial == threaded


def test_compare_ds_cs_paired_and_labeled():
    cfg = ExperimentConfig(p=64, n=16, s=4, basis_kind="dwt", trials=3,
                           master_seed=9, kappa=4, s_prime=2)
    cs, ds = compare_ds_cs(cfg, [1e4, 1e6])
    assert len(cs) == len(ds) == 2
    assert cs[0].extra["series"] == "cs" and ds[0].extra["series"] == "ds"
    # both arms saw the same signals: energies agree pointwise
    assert cs[0].extra["theta_bar_energy"] == ds[0].extra["theta_bar_energy"]
    # ds bound column carries the downsampling bound
    from poissoncs.bases import localization_closed
    from poissoncs.bounds import downsampling_upper

    lam = localization_closed("dwt", 64, 4)
    assert ds[1].bound_upper == pytest.approx(
        downsampling_upper(64, 4, 2, 1e6, 4, lam)
    )


def test_compare_ds_cs_rerun_identical():
    cfg = ExperimentConfig(p=64, n=16, s=4, basis_kind="dwt", trials=2,
                           master_seed=9, kappa=4, s_prime=2)
    a = compare_ds_cs(cfg, [1e5])
    b = compare_ds_cs(cfg, [1e5])
    assert a == b


def test_compare_ds_cs_requires_dwt():
    cfg = ExperimentConfig(p=64, n=16, s=4, basis_kind="dct", trials=2,
                           master_seed=9, kappa=4, s_prime=2)
    with pytest.raises(ValueError):
        compare_ds_cs(cfg, [1e4])


def test_genuine_crossover_window():
    # in the window between noise-dominated and elbow intensities the
    # block-sum arm wins; far above the elbow compressed sensing wins
    cfg = ExperimentConfig(p=128, n=32, s=6, basis_kind="dwt", trials=5,
                           master_seed=17, kappa=4, s_prime=6)
    cs, ds = compare_ds_cs(cfg, [1e6])
    assert ds[0].mean_mse < cs[0].mean_mse
    cfg2 = cfg.replace(s_prime=3)
    cs2, ds2 = compare_ds_cs(cfg2, [1e10])
    assert cs2[0].mean_mse < ds2[0].mean_mse
