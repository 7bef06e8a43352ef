import dataclasses
import json
import math

import numpy as np
import pytest

from risqr.harness import (AxisError, ExperimentSpec, SpecError, aggregate_trajectories,
                           data_rate, estimate_pe, fmt, point_constellation, run_spec, sweep)
from risqr.quantum import StepLog, TrialRecord


def test_data_rate_examples():
    assert data_rate(0.0, 16, 15e-6) / 1e6 == pytest.approx(0.2667, abs=1e-4)
    assert data_rate(1.0, 16, 15e-6) == 0.0
    assert data_rate(0.0005, 16, 15e-6) / 1e6 == pytest.approx(0.2665, abs=1e-4)
    with pytest.raises(ValueError):
        data_rate(1.5, 16, 1e-6)


def _record(true_prs, elapsed=(1e-6,)):
    steps = [StepLog(t=i * 1e-6, lo_index=0, max_pr=p, true_pr=p, deviation=0.0,
                     shot_elapsed=elapsed[min(i, len(elapsed) - 1)], clicks=0)
             for i, p in enumerate(true_prs)]
    return TrialRecord(true_index=0, decision=0, correct=True, steps_used=len(steps),
                       final_posterior=np.array([1.0]), elapsed=0.0, steps=steps)


def test_aggregate_single_trial():
    s = aggregate_trajectories([_record([0.2, 0.5, 0.9])])
    assert list(s.true_pr) == pytest.approx([0.2, 0.5, 0.9])


def test_aggregate_mean_and_padding():
    s = aggregate_trajectories([_record([0.5, 0.5]), _record([1.0, 1.0, 0.8])])
    assert s.true_pr[0] == pytest.approx(0.75)
    assert s.true_pr[2] == pytest.approx((0.5 + 0.8) / 2)


def test_aggregate_heatmap():
    s = aggregate_trajectories([_record([0.5], [1.2e-6]), _record([0.5], [1.3e-6])], 0.5e-6)
    assert s.heatmap == [(1, 1.0, 2)]


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate_trajectories([])


def test_vacuum_null_forced_truth():
    spec = ExperimentSpec(M=16, visibility=1.0, forced_truth=0, trials=300)
    row = estimate_pe(spec)
    assert row.p_e == 0.0 and row.errors == 0


def test_v1_mean_true_pr_non_decreasing():
    spec = ExperimentSpec(M=16, visibility=1.0, trials=200, record_trajectories=True, n0=0.9)
    (row,) = sweep(spec)
    s = aggregate_trajectories(row.records)
    assert np.all(np.diff(s.true_pr) >= -1e-12)


def test_sql_bpsk_row():
    spec = ExperimentSpec(scheme="psk-sql", M=2, K=1, n0=1.0, efficiency_central=1.0,
                          trials=200_000, master_seed=3)
    row = estimate_pe(spec)
    p = 0.5 * math.erfc(1.0)
    assert abs(row.p_e - p) < 3 * math.sqrt(p * (1 - p) / row.trials)


def test_repeat_is_bit_identical():
    spec = ExperimentSpec(M=16, visibility=0.997, trials=300, master_seed=4, n0=0.6)
    a, b = estimate_pe(spec), estimate_pe(spec)
    assert a.csv_values() == b.csv_values()


def test_workers_do_not_change_results():
    spec = ExperimentSpec(M=16, visibility=0.997, trials=600, master_seed=4, n0=0.6)
    assert estimate_pe(spec).csv_values() == estimate_pe(spec, workers=2).csv_values()


def test_rate_consistency():
    spec = ExperimentSpec(M=64, visibility=0.998, trials=100, n0_grid=(0.6, 1.2),
                          symbol_duration=23e-6)
    for r in sweep(spec):
        assert r.data_rate * 23e-6 / math.log2(64) + r.p_e == pytest.approx(1.0, abs=1e-12)


def test_single_point_grid():
    spec = ExperimentSpec(scheme="ris-sql", n0_grid=(1.35,), trials=1000)
    assert len(sweep(spec)) == 1


def test_sql_monotone_in_nbar():
    spec = ExperimentSpec(scheme="ris-sql", n0_grid=(0.3, 0.9, 1.5), trials=100_000)
    rows = sweep(spec)
    for a, b in zip(rows, rows[1:]):
        assert b.p_e <= a.p_e or b.ci_low <= a.ci_high


def test_axis_errors():
    with pytest.raises(AxisError):
        ExperimentSpec(n0_grid=(1, 2), k_grid=(80, 160))
    with pytest.raises(AxisError):
        ExperimentSpec(scheme="ris-sql", S=2)
    with pytest.raises(SpecError):
        ExperimentSpec(M=12)
    with pytest.raises(SpecError):
        ExperimentSpec(visibility=1.2)
    with pytest.raises(SpecError):
        ExperimentSpec(forced_truth=16)


def test_received_convention_rescales():
    spec = ExperimentSpec(nbar_convention="received", n0=1.5, S=3)
    c = point_constellation(spec, spec.points()[0])
    assert c.mean_energy() == pytest.approx(0.5)


def test_fmt_round_trips():
    assert fmt(15.0) == "15"
    assert fmt(0.1) == "0.1"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(True) == "1"


def test_run_spec_outputs_and_manifest_replay(tmp_path):
    spec = ExperimentSpec(M=16, visibility=0.997, trials=50, n0_grid=(0.6, 1.2),
                          master_seed=8, record_trajectories=True)
    run_spec(spec, tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "pe_sweep.csv" in names and "manifest.json" in names
    assert "point1_heatmap.csv" in names
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["master_seeds"] == [8]
    replay = ExperimentSpec.from_dict({k: tuple(v) if isinstance(v, list) else v
                                       for k, v in manifest["specs"][0].items()})
    assert replay == spec
    again = tmp_path / "again"
    run_spec(replay, again)
    assert (again / "pe_sweep.csv").read_bytes() == (tmp_path / "pe_sweep.csv").read_bytes()
    header = (tmp_path / "pe_sweep.csv").read_text().splitlines()[0]
    assert "wall_time" not in header


def test_spec_dict_round_trip():
    spec = ExperimentSpec(t_grid=(13e-6, 15e-6), label="x")
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec
    assert dataclasses.replace(spec, trials=5).trials == 5
