"""Per-sample cost measurement: report shape, guards, static op counts."""
import pytest

from swphase.bench import (
    OP_COUNTS,
    check_timer,
    measure_pipeline_cost,
    tracker_cost_ratio,
)
from swphase.errors import ConfigurationError


def test_timer_is_fine_grained_here():
    assert check_timer() < 1e-6


@pytest.mark.parametrize("kw", [
    {"reps": 2},
    {"warmup_samples": 999},
])
def test_measurement_guards(kw):
    with pytest.raises(ConfigurationError):
        measure_pipeline_cost("pv", **kw)


@pytest.fixture(scope="module")
def pv_report():
    return measure_pipeline_cost("pv", reps=3, chunk_samples=2000,
                                 warmup_samples=1000)


def test_report_shape(pv_report):
    r = pv_report
    assert r.algorithm == "pv"
    assert set(r.stages) == {"preprocess", "tracker", "gate"}
    for s in r.stages.values():
        assert len(s.reps_ns) == 3
        assert s.q1_ns <= s.median_ns <= s.q3_ns
        assert s.median_ns >= 0.0
    assert r.total_median_ns == pytest.approx(
        sum(s.median_ns for s in r.stages.values()))
    assert r.sample_period_ns == pytest.approx(4e6)   # 250 Hz
    assert r.rcr == pytest.approx(r.total_median_ns / 4e6)
    assert r.efficiency_pct == pytest.approx(100.0 * (1.0 - r.rcr))

    assert set(r.op_counts) == {"preprocess", "pv"}

def test_real_time_headroom(pv_report):
    # the whole point: a 4 ms sample period dwarfs per-sample cost
    assert pv_report.rcr < 0.5
    assert pv_report.efficiency_pct > 50.0


def test_op_counts_are_static_and_complete():
    kinds = {"mul", "add", "trig", "atan2", "fmod", "cmp"}
    assert set(OP_COUNTS) == {"preprocess", "at", "pll", "pv"}
    for counts in OP_COUNTS.values():
        assert set(counts) == kinds
        assert all(isinstance(v, int) and v >= 0 for v in counts.values())
    # the vocoder arithmetic strictly outweighs the PLL's
    assert sum(OP_COUNTS["pv"].values()) > sum(OP_COUNTS["pll"].values())
    assert OP_COUNTS["pv"]["atan2"] >= 1 and OP_COUNTS["pll"]["atan2"] == 0


def test_tracker_ratio_in_expected_band():
    ratio = tracker_cost_ratio(reps=5, chunk_samples=3000)
    assert 1.0 < ratio < 6.0
