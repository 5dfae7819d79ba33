import math

import pytest

import oid_spm

SMALL = {
    "design.steps": 4,
    "design.horizon": 10,
    "design.max_inputs": 2,
    "design.optimizer.max_iterations": 1,
}


def test_zero_current_stays_at_rest_voltage():
    trace = oid_spm.simulate(oid_spm.synthetic_truth(), [0.0], 10.0, 3.8)
    assert len(trace["time"]) == 101
    assert all(abs(v - 3.8) < 1e-10 for v in trace["voltage"])


def test_estimate_recovers_truth_from_its_own_trace():
    truth = oid_spm.synthetic_truth()
    trace = oid_spm.simulate(truth, [-1.0, 1.0, -2.0, 2.0], 20.0, 3.7)
    time = [0.0] + [t + 1.0 for t in trace["time"]]
    current = [0.0] + trace["current"]
    voltage = [3.7] + trace["voltage"]
    phase = ["rest"] + ["impulse"] * len(trace["time"])
    result = oid_spm.estimate(time, current, voltage, phase, start=truth)
    assert result["J"] < 1e-20
    assert oid_spm.relative_error(result["mu"], truth) < 1e-8


def test_design_reports_progress_and_returns_record():
    seen = []
    record = oid_spm.design("collection", SMALL, lambda n, phi: seen.append(n))
    assert seen == [1, 2]
    assert len(record["iterations"]) == 2
    assert math.isfinite(record["iterations"][1]["phi"])


def test_run_test_writes_summary(tmp_path):
    config = dict(SMALL, **{"study.runs": 2})
    summary = oid_spm.run_test(1, config, tmp_path)
    assert summary["test"] == 1
    assert summary["experiment_time_s"] == 20.0
    assert summary["study_runs"] == 2
    assert (tmp_path / "summary.json").exists()


def test_errors_carry_their_code():
    with pytest.raises(oid_spm.OidError, match="config"):
        oid_spm.run_test(1, {"experiment.tset": 1})
    with pytest.raises(oid_spm.OidError):
        oid_spm.simulate([1.0, 2.0], [0.0], 10.0, 3.8)
