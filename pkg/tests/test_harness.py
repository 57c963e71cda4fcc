import json
import math
from dataclasses import replace

import numpy as np
import pytest

from bestarm import metrics
from bestarm.harness import (
    CSV_COLUMNS,
    AggregateRow,
    ExperimentSpec,
    SpecError,
    fit_loglog_slope,
    instance_hash,
    parse_spec_text,
    read_csv_rows,
    rows_to_csv,
    run_records,
    run_trials,
    scaling_sweep,
    write_results,
)


def test_fit_exact_power_laws():
    s, _, r2 = fit_loglog_slope([(1, 10), (10, 100), (100, 1000)])
    assert s == pytest.approx(1.0) and r2 == pytest.approx(1.0)
    s, _, r2 = fit_loglog_slope([(1, 1), (2, 4), (4, 16)])
    assert s == pytest.approx(2.0) and r2 == pytest.approx(1.0)


def test_fit_hand_ols():
    pts = [(1, 2), (2, 3), (4, 5), (8, 9)]
    s, b, r2 = fit_loglog_slope(pts)
    ref_s, ref_b = np.polyfit(np.log([p[0] for p in pts]), np.log([p[1] for p in pts]), 1)
    assert s == pytest.approx(ref_s) and b == pytest.approx(ref_b)
    assert s == pytest.approx(0.7247, abs=1e-4)  # spec rounds this to 0.719
    lx, ly = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    resid = ly - np.polyval([ref_s, ref_b], lx)
    assert r2 == pytest.approx(1 - np.sum(resid ** 2) / np.sum((ly - ly.mean()) ** 2))
    assert r2 == pytest.approx(0.9934, abs=1e-4)  # spec rounds this to 0.98


def test_fit_synthetic_linear_means():
    s, _, _ = fit_loglog_slope([(n, 3.7 * n) for n in [64, 128, 256, 512]])
    assert s == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("pts", [[(1, 1)], [(2, 1), (2, 5)], [(0, 1), (1, 2)]])
def test_fit_degenerate(pts):
    with pytest.raises(ValueError):
        fit_loglog_slope(pts)


@pytest.mark.parametrize("alg", ["prism_standard", "prism_conservative", "uniform"])
def test_deterministic_family_always_succeeds(alg):
    spec = ExperimentSpec(alpha=0.5, ns=(16,), family="deterministic", algorithm=alg, trials=20)
    assert run_trials(spec).success_rate == 1.0


def test_single_trial_has_zero_stddev():
    assert run_trials(ExperimentSpec(ns=(8,), trials=1)).stddev_pulls == 0.0


def test_conservation_and_theory_columns():
    spec = ExperimentSpec(alpha=0.3, ns=(32,), trials=25, master_seed=4)
    recs = run_records(spec, 32)
    row = run_trials(spec)
    assert row.total_pulls == sum(r.pulls for r in recs)
    assert row.mean_pulls == row.total_pulls / row.trials
    inst = spec.instance(32)
    g = metrics.gaps(inst)
    assert row.H == metrics.hardness_H(g)
    assert row.G == metrics.hardness_G(g)
    assert row.lower_bound == metrics.adaptive_lb(row.H, spec.delta).value
    assert 0 <= row.success_rate <= 1 and row.mean_pulls > 0


def test_uniform_row_uses_sufficient_m():
    spec = ExperimentSpec(alpha=1.0, ns=(4,), algorithm="uniform", trials=10)
    m = __import__("bestarm").sufficient_m(metrics.gaps(spec.instance(4)), spec.delta)
    row = run_trials(spec)
    assert row.mean_pulls == m * 5 and row.stddev_pulls == 0
    assert row.lower_bound == metrics.alpha_lb(4, 1.0, spec.delta)


def test_uniform_pac_sufficiency_row():
    spec = ExperimentSpec(alpha=1.0, ns=(4,), algorithm="uniform", trials=10 ** 4, master_seed=2)
    assert run_trials(spec).success_rate >= 0.9 - 0.01


def test_overflow_trials_counted_separately():
    spec = ExperimentSpec(alpha=0.5, ns=(8,), trials=5, pull_cap=10 ** 4)
    row = run_trials(spec)
    assert row.overflows == 5 and row.completed == 0 and math.isnan(row.mean_pulls)


def test_determinism_across_jobs():
    spec = ExperimentSpec(alpha=0.3, ns=(16, 32), trials=12, master_seed=11)
    a = rows_to_csv([run_trials(spec, n) for n in spec.ns])
    b = rows_to_csv([run_trials(replace(spec, jobs=3), n) for n in spec.ns])
    assert a == b


def test_csv_format():
    row = run_trials(ExperimentSpec(ns=(8,), trials=3))
    text = rows_to_csv([row])
    parsed = read_csv_rows(text)
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert float(parsed[0]["mean_pulls"]) == row.mean_pulls
    assert float(parsed[0]["H"]) == row.H


def test_sweep_requires_octaves():
    with pytest.raises(SpecError):
        scaling_sweep(ExperimentSpec(ns=(64, 80, 96, 128), trials=1))
    with pytest.raises(SpecError):
        scaling_sweep(ExperimentSpec(ns=(64, 128, 256), trials=1))


def test_small_sweep_and_record(tmp_path):
    spec = ExperimentSpec(alpha=0.3, ns=(8, 16, 32, 64), trials=4, algorithm="uniform")
    res = scaling_sweep(spec)
    assert len(res.rows) == 4 and res.slope > 1
    csv_path, json_path = write_results(res, tmp_path / "sweep")
    rec = json.loads(json_path.read_text())
    assert rec["fit"]["slope"] == res.slope
    assert rec["instances"]["8"] == instance_hash(spec.instance(8))
    assert len(rec["instances"]["8"]) == 40
    assert csv_path.read_text() == rows_to_csv(res.rows)


def test_spec_validation():
    with pytest.raises(SpecError):
        ExperimentSpec(trials=0)
    with pytest.raises(SpecError):
        ExperimentSpec(ns=(64, 32))
    with pytest.raises(SpecError):
        ExperimentSpec(algorithm="thompson")
    with pytest.raises(SpecError):
        ExperimentSpec(ns=())


def test_spec_file_parsing():
    text = """
    # scaling run
    alpha = 0.7
    n = 64, 128,256
    alg = uniform
    m = sufficient
    trials = 30   # per n
    seed = 5
    pull_cap = 1e12
    """
    spec = parse_spec_text(text)
    assert spec.alpha == 0.7 and spec.ns == (64, 128, 256) and spec.algorithm == "uniform"
    assert spec.m is None and spec.trials == 30 and spec.master_seed == 5 and spec.pull_cap == 10 ** 12


@pytest.mark.parametrize("text", ["alpha 0.3", "colour = red", "trials = many", "trials = 0"])
def test_spec_file_errors(text):
    with pytest.raises(SpecError):
        parse_spec_text(text)
