"""Per-sample compute cost of the streaming pipeline.

Wall-clock timing of the three stages (preprocess, tracker, gate) over a
deterministic synthetic stream, plus static per-sample operation counts
derived from the step arithmetic. The headline figures:

- rcr: real-time consumption ratio, median per-sample cost of all three
  stages divided by the sample period (must stay well under 1);
- efficiency: 100 * (1 - rcr);
- tracker cost ratio: phase vocoder vs PLL, tracker stage alone.

Timing refuses to run on clocks coarser than 1 microsecond.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dsp import PreprocessChain
from .errors import ConfigurationError, TimerResolutionError
from .gate import GateConfig, StimulationGate
from .trackers import TrackerConfig, make_tracker

MAX_TIMER_RESOLUTION_S = 1e-6
DEFAULT_WARMUP_SAMPLES = 2000
DEFAULT_REPS = 5
DEFAULT_CHUNK_SAMPLES = 4000

# Static per-sample floating-point operation counts of each stage's inner
# step, by kind. They follow from the recurrences and do not depend on the
# sampling rate or, for the vocoder, on the moving-average span (running
# sums make the span free).
OP_COUNTS = {
    "preprocess": {"mul": 11, "add": 8, "trig": 0, "atan2": 0, "fmod": 0, "cmp": 3},
    "at":         {"mul": 5,  "add": 4, "trig": 0, "atan2": 0, "fmod": 0, "cmp": 4},
    "pll":        {"mul": 4,  "add": 4, "trig": 1, "atan2": 0, "fmod": 3, "cmp": 7},
    "pv":         {"mul": 9,  "add": 12, "trig": 2, "atan2": 1, "fmod": 4, "cmp": 10},
}


def check_timer() -> float:
    """Resolution of the benchmark clock in seconds; refuses coarse clocks."""
    res = time.get_clock_info("perf_counter").resolution
    if res >= MAX_TIMER_RESOLUTION_S:
        raise TimerResolutionError(
            f"perf_counter resolution {res:.2e} s is too coarse; "
            f"need better than {MAX_TIMER_RESOLUTION_S:.0e} s")
    return res


@dataclass
class StageCost:
    name: str
    reps_ns: list            # per-sample cost of every repetition
    median_ns: float
    q1_ns: float
    q3_ns: float


@dataclass
class CostReport:
    algorithm: str
    fs: float
    warmup_samples: int
    reps: int
    chunk_samples: int
    timer_resolution_s: float
    stages: dict = field(default_factory=dict)
    total_median_ns: float = 0.0
    sample_period_ns: float = 0.0
    rcr: float = 0.0
    efficiency_pct: float = 0.0
    op_counts: dict = field(default_factory=dict)


def _bench_stream(fn, warm, chunk, reps: int) -> list:
    """Median-friendly ns/sample of fn over chunk, loop overhead removed."""
    for xi in warm:
        fn(xi)
    base = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        for xi in chunk:
            pass
        base.append(time.perf_counter_ns() - t0)
    overhead = min(base)
    out = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        for xi in chunk:
            fn(xi)
        dt = time.perf_counter_ns() - t0
        out.append(max(0.0, (dt - overhead) / len(chunk)))
    return out


def _stage_cost(name, fn, warm, chunk, reps) -> StageCost:
    reps_ns = _bench_stream(fn, warm, chunk, reps)
    return StageCost(name, reps_ns,
                     float(np.median(reps_ns)),
                     float(np.percentile(reps_ns, 25)),
                     float(np.percentile(reps_ns, 75)))


def _test_signal(fs: float, n: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    x = 75.0 * np.sin(2 * math.pi * 1.0 * t) + 10.0 * rng.standard_normal(n)
    return x.tolist()


def measure_pipeline_cost(algorithm: str = "pv", fs: float = 250.0,
                          tracker_config: TrackerConfig = None,
                          warmup_samples: int = DEFAULT_WARMUP_SAMPLES,
                          reps: int = DEFAULT_REPS,
                          chunk_samples: int = DEFAULT_CHUNK_SAMPLES) -> CostReport:
    """Time preprocess, tracker and gate steps separately on one stream."""
    if reps < 3:
        raise ConfigurationError("need at least 3 repetitions")
    if warmup_samples < 1000:
        raise ConfigurationError("need at least 1000 warmup samples")
    res = check_timer()
    cfg = tracker_config or TrackerConfig(algorithm=algorithm)
    if cfg.sample_rate_hz != fs or cfg.algorithm != algorithm:
        cfg = TrackerConfig(**{**cfg.__dict__, "algorithm": algorithm,
                               "sample_rate_hz": fs})
    cfg.validate()

    raw = _test_signal(fs, warmup_samples + chunk_samples)
    warm, chunk = raw[:warmup_samples], raw[warmup_samples:]
    chain = PreprocessChain(fs)
    pre = _stage_cost("preprocess", chain.step, warm, chunk, reps)
    clean_chain = PreprocessChain(fs)
    clean = [clean_chain.step(xi) for xi in raw]
    cwarm, cchunk = clean[:warmup_samples], clean[warmup_samples:]

    tracker = make_tracker(cfg)
    trk = _stage_cost("tracker", tracker.step, cwarm, cchunk, reps)

    gate = StimulationGate(GateConfig(), fs)
    gat = _stage_cost("gate", gate.step, cwarm, cchunk, reps)

    report = CostReport(algorithm=cfg.algorithm, fs=fs,
                        warmup_samples=warmup_samples, reps=reps,
                        chunk_samples=chunk_samples, timer_resolution_s=res)
    report.stages = {s.name: s for s in (pre, trk, gat)}
    report.total_median_ns = pre.median_ns + trk.median_ns + gat.median_ns
    report.sample_period_ns = 1e9 / fs
    report.rcr = report.total_median_ns / report.sample_period_ns
    report.efficiency_pct = 100.0 * (1.0 - report.rcr)
    report.op_counts = {"preprocess": OP_COUNTS["preprocess"],
                        cfg.algorithm: OP_COUNTS[cfg.algorithm]}
    return report


def tracker_cost_ratio(fs: float = 250.0, reps: int = DEFAULT_REPS,
                       chunk_samples: int = DEFAULT_CHUNK_SAMPLES) -> float:
    """Phase vocoder vs PLL per-sample cost, tracker stage only."""
    pv = measure_pipeline_cost("pv", fs, reps=reps, chunk_samples=chunk_samples)
    pll = measure_pipeline_cost("pll", fs, reps=reps, chunk_samples=chunk_samples)
    denom = pll.stages["tracker"].median_ns
    if denom <= 0:
        raise TimerResolutionError("PLL tracker stage timed at zero cost")
    return pv.stages["tracker"].median_ns / denom


def pv_cost_vs_fs(fs_values=(125.0, 250.0, 500.0), span_s: float = 0.5,
                  reps: int = 9, chunk_samples: int = DEFAULT_CHUNK_SAMPLES) -> dict:
    """Vocoder tracker cost per sample at several rates, span scaled with fs.

    With running-sum moving averages the cost must not grow with fs.
    """
    out = {}
    for fs in fs_values:
        cfg = TrackerConfig(algorithm="pv", sample_rate_hz=fs,
                            maf_span=max(2, int(round(span_s * fs))))
        rep = measure_pipeline_cost("pv", fs, tracker_config=cfg,
                                    reps=reps, chunk_samples=chunk_samples)
        out[fs] = rep.stages["tracker"].median_ns
    return out
