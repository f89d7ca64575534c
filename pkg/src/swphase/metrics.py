"""Evaluation quantities: circular statistics, phase-target error, active
stimulation percentages, slow-wave inventory, targeting capacity, and
trigger-interval statistics.

Phase arguments are degrees; the up-phase class is (0, 90] under the
convention 0 deg = upward zero crossing, 90 deg = positive peak.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UndefinedStatisticError

TARGET_PHASE_DEG = 45.0
MAX_STIM_PER_WINDOW = 8       # 2 s window at the 4 Hz refractory ceiling
PAS_WINDOW_S = 2.0
UP_PHASE_DEG = (0.0, 90.0)    # half-open: (0, 90]
LOW_AMP_UV = (20.0, 60.0)     # peak-to-peak class bounds
MIN_WAVE_AMP_UV = 20.0        # below this a wave is uncounted ("sub20")

RESULTANT_EPS = 1e-9
PLATEAU_MAX_S = 0.05          # flat-run tolerance in minima detection

INTERVAL_HIST_RANGE_S = (0.25, 3.0)
INTERVAL_HIST_BIN_S = 0.05
PHASE_HIST_BINS = 36          # 10 deg each


@dataclass(frozen=True)
class CircularSummary:
    mean_deg: float
    sd_deg: float
    resultant: float
    n: int


def circular_mean_sd(phases_deg) -> CircularSummary:
    """First trigonometric moment statistics of a phase sample.

    sd is sqrt(-2 ln R) converted to degrees. A resultant below 1e-9
    (antipodal cancellation) leaves the mean undefined and raises.
    """
    p = np.radians(np.asarray(phases_deg, dtype=float))
    if p.size < 1:
        raise UndefinedStatisticError("circular mean of an empty sample")
    vec = np.exp(1j * p).mean()
    r = float(np.abs(vec))
    if r < RESULTANT_EPS:
        raise UndefinedStatisticError(f"resultant {r:.2e} below {RESULTANT_EPS}; mean undefined")
    mean = math.degrees(math.atan2(vec.imag, vec.real)) % 360.0
    sd = math.degrees(math.sqrt(max(0.0, -2.0 * math.log(r))))
    return CircularSummary(mean, sd, r, int(p.size))


def circular_distance_deg(a: float, b: float) -> float:
    """Shortest-arc distance between two angles, in [0, 180]."""
    d = math.fmod(a - b, 360.0)
    if d < -180.0:
        d += 360.0
    elif d > 180.0:
        d -= 360.0
    return abs(d)


def cmae45(phases_deg):
    """Distance of the circular mean from the 45 deg target.

    Returns (normalized in [0,1], degrees in [0,180]). Undefined-mean
    samples propagate the underlying error.
    """
    summary = circular_mean_sd(phases_deg)
    deg = circular_distance_deg(summary.mean_deg, TARGET_PHASE_DEG)
    return deg / 180.0, deg


def in_up_phase(phase_deg) -> np.ndarray:
    p = np.asarray(phase_deg, dtype=float)
    return (p > UP_PHASE_DEG[0]) & (p <= UP_PHASE_DEG[1])


@dataclass(frozen=True)
class PasReport:
    pas_all: float
    pas_in_up: float
    pas_not_up: float
    qualifying_windows: int
    scored_nrem_windows: int
    n_triggers: int
    n_in_up: int


def pas(trigger_phases_deg, qualifying_windows: int,
        scored_nrem_windows: Optional[int] = None) -> PasReport:
    """Active-stimulation percentages against the window budget.

    qualifying_windows counts 2 s windows that are both hypnogram NREM and
    device NREM+SWA; scored_nrem_windows (optional) is the hypnogram-only
    count, carried through for reporting. pas_all is computed as the sum of
    its up and not-up parts, so the identity holds exactly in floating point.
    """
    if qualifying_windows < 1:
        raise UndefinedStatisticError("no qualifying windows; PAS undefined")
    p = np.asarray(trigger_phases_deg, dtype=float)
    n_all = int(p.size)
    n_up = int(np.count_nonzero(in_up_phase(p)))
    budget = qualifying_windows * MAX_STIM_PER_WINDOW
    pas_in = 100.0 * n_up / budget
    pas_not = 100.0 * (n_all - n_up) / budget
    pas_all = pas_in + pas_not
    return PasReport(pas_all, pas_in, pas_not, qualifying_windows,
                     scored_nrem_windows if scored_nrem_windows is not None
                     else qualifying_windows, n_all, n_up)


@dataclass(frozen=True)
class SlowWave:
    start: int           # index of the first minimum
    end: int             # index of the next minimum
    frequency_hz: float  # reciprocal minima spacing
    p2p_uv: float        # first minimum to the maximum between the minima
    amp_class: str       # sub20 | low | high


def _classify(p2p: float) -> str:
    if p2p < MIN_WAVE_AMP_UV:
        return "sub20"
    if p2p <= LOW_AMP_UV[1]:
        return "low"
    return "high"


def local_minima(x: np.ndarray, fs: float) -> np.ndarray:
    """Strict three-point minima plus short-plateau minima (earliest sample).

    A plateau of equal values no longer than 50 ms flanked by larger
    neighbors counts as one minimum at its first sample; longer plateaus are
    ambiguous and yield nothing.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 3:
        return np.empty(0, dtype=int)
    strict = np.flatnonzero((x[1:-1] < x[:-2]) & (x[1:-1] < x[2:])) + 1
    max_plateau = max(1, int(round(PLATEAU_MAX_S * fs)))
    change = np.flatnonzero(np.diff(x) != 0.0)
    starts = np.concatenate([[0], change + 1])
    ends = np.concatenate([change, [n - 1]])  # runs of equal values, inclusive
    plateaus = []
    for s, e in zip(starts, ends):
        if e == s or s == 0 or e == n - 1:
            continue
        if (e - s + 1) <= max_plateau and x[s - 1] > x[s] and x[e + 1] > x[s]:
            plateaus.append(s)
    if plateaus:
        return np.unique(np.concatenate([strict, np.asarray(plateaus, dtype=int)]))
    return strict


def detect_waves(filtered: np.ndarray, fs: float,
                 mask: Optional[np.ndarray] = None) -> list:
    """Slow-wave inventory of a 0.5-4 Hz filtered signal.

    Each adjacent pair of minima with both ends inside the mask yields one
    wave; p2p is the rise from the first minimum to the highest point before
    the next minimum.
    """
    filtered = np.asarray(filtered, dtype=float)
    mins = local_minima(filtered, fs)
    waves = []
    for a, b in zip(mins[:-1], mins[1:]):
        if mask is not None and not (mask[a] and mask[b]):
            continue
        p2p = float(filtered[a:b + 1].max() - filtered[a])
        freq = fs / (b - a)
        waves.append(SlowWave(int(a), int(b), freq, p2p, _classify(p2p)))
    return waves


@dataclass(frozen=True)
class TargetingReport:
    low_capacity_pct: float      # share of low-amplitude waves hit
    high_capacity_pct: float
    up_phase_pct: float          # share of triggers inside (0, 90]
    n_low: int
    n_high: int
    n_triggers: int


def targeting_capacity(waves, trigger_indices, trigger_phases_deg) -> TargetingReport:
    """Wave-hit rates per amplitude class plus the up-phase trigger share.

    A wave is hit iff at least one trigger index falls in [start, end).
    Sub-20 uV waves are excluded from both classes.
    """
    idx = np.sort(np.asarray(trigger_indices, dtype=int))

    def hit(w):
        j = np.searchsorted(idx, w.start)
        return j < len(idx) and idx[j] < w.end

    counts = {"low": [0, 0], "high": [0, 0]}
    for w in waves:
        if w.amp_class in counts:
            counts[w.amp_class][0] += 1
            counts[w.amp_class][1] += int(hit(w))

    def pct(c):
        return 100.0 * c[1] / c[0] if c[0] else float("nan")

    phases = np.asarray(trigger_phases_deg, dtype=float)
    up = 100.0 * np.count_nonzero(in_up_phase(phases)) / len(phases) if len(phases) else float("nan")
    return TargetingReport(pct(counts["low"]), pct(counts["high"]), up,
                           counts["low"][0], counts["high"][0], len(idx))


@dataclass(frozen=True)
class IntervalReport:
    median_s: float
    sd_s: float
    n_intervals: int
    hist_edges_s: np.ndarray
    hist_counts: np.ndarray


def trigger_intervals(trigger_times_s) -> Optional[IntervalReport]:
    """Successive-difference statistics; None with fewer than two triggers.

    Histogram: 0.05 s bins over [0.25, 3] s.
    """
    t = np.sort(np.asarray(trigger_times_s, dtype=float))
    if t.size < 2:
        return None
    iv = np.diff(t)
    lo, hi = INTERVAL_HIST_RANGE_S
    edges = np.arange(lo, hi + INTERVAL_HIST_BIN_S / 2, INTERVAL_HIST_BIN_S)
    counts, _ = np.histogram(iv, bins=edges)
    return IntervalReport(float(np.median(iv)), float(np.std(iv)), len(iv),
                          edges, counts)


def phase_histogram(phases_deg, bins: int = PHASE_HIST_BINS):
    """Circular histogram: (edges_deg, counts), default 36 bins of 10 deg."""
    p = np.asarray(phases_deg, dtype=float) % 360.0
    edges = np.linspace(0.0, 360.0, bins + 1)
    counts, _ = np.histogram(p, bins=edges)
    return edges, counts
