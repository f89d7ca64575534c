"""Parameter search: k-fold cross-validated grid search with selection by
distance to the utopia point.

Objectives per parameter combo, computed from pooled per-recording tallies:

- cmae_norm: circular distance of the pooled mean trigger phase from the
  45 deg target, normalized by 180;
- pas_not_up_norm: stimulation accuracy outside the rising phase, /100;
- pas_in_up_norm: stimulation accuracy inside the rising phase, /100.

Utopia is (0, 0, 1). A combo that yields zero triggers on a fold side is
assigned cmae_norm=1 and both PAS terms 0, so its distance is sqrt(2).
Selection minimizes ed_error = mean validation distance plus the absolute
gap between mean optimization and mean validation distances; ties fall to
the smaller mean validation distance, then to declaration order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dsp import PreprocessChain, design_sw_isolation
from .errors import ConfigurationError
from .gate import GateConfig, flags_at_sample, gate_flags_batch
from .metrics import MAX_STIM_PER_WINDOW, PAS_WINDOW_S, in_up_phase
from .oracle import compute_phase_track
from .pipeline import (candidates_from_phase_stream, qualifying_windows,
                       tracker_phase_stream)
from .recording import EegRecording
from .trackers import TrackerConfig

UTOPIA = (0.0, 0.0, 1.0)


@dataclass
class ObjectiveTally:
    """Sufficient statistics for the three objectives, summable across
    recordings and folds."""
    vec_real: float = 0.0
    vec_imag: float = 0.0
    n_phased: int = 0        # oracle-valid delivered triggers (mean phase)
    n_in_windows: int = 0    # delivered triggers inside qualifying windows
    n_up: int = 0            # ... of those, inside the rising phase
    windows: int = 0         # qualifying 2 s windows

    def __add__(self, other: "ObjectiveTally") -> "ObjectiveTally":
        return ObjectiveTally(
            self.vec_real + other.vec_real,
            self.vec_imag + other.vec_imag,
            self.n_phased + other.n_phased,
            self.n_in_windows + other.n_in_windows,
            self.n_up + other.n_up,
            self.windows + other.windows,
        )


def tally_from_phases(phases_deg, in_window_flags, windows: int) -> ObjectiveTally:
    """Build a tally from oracle phases of delivered triggers.

    in_window_flags marks, per trigger, whether it fell inside a qualifying
    window (those feed the PAS terms; all feed the mean phase).
    """
    p = np.asarray(phases_deg, dtype=float)
    inw = np.asarray(in_window_flags, dtype=bool)
    if len(p) != len(inw):
        raise ConfigurationError("one in-window flag per trigger phase required")
    rad = np.radians(p)
    up = in_up_phase(p)
    return ObjectiveTally(
        vec_real=float(np.cos(rad).sum()),
        vec_imag=float(np.sin(rad).sum()),
        n_phased=len(p),
        n_in_windows=int(inw.sum()),
        n_up=int((up & inw).sum()),
        windows=int(windows),
    )


def objectives_from_tally(t: ObjectiveTally):
    """(cmae_norm, pas_not_up_norm, pas_in_up_norm) from a pooled tally."""
    if t.n_phased == 0:
        return 1.0, 0.0, 0.0
    mean = math.degrees(math.atan2(t.vec_imag, t.vec_real)) % 360.0
    d = abs(mean - 45.0) % 360.0
    cmae = min(d, 360.0 - d) / 180.0
    cap = t.windows * MAX_STIM_PER_WINDOW
    if cap == 0:
        return cmae, 0.0, 0.0
    pas_all = t.n_in_windows / cap
    pas_up = t.n_up / cap
    return cmae, pas_all - pas_up, pas_up


def euclidean_distance(cmae_norm: float, pas_not_up_norm: float,
                       pas_in_up_norm: float) -> float:
    """Distance to the utopia point (0, 0, 1); inputs must lie in [0, 1]."""
    for name, v in (("cmae_norm", cmae_norm),
                    ("pas_not_up_norm", pas_not_up_norm),
                    ("pas_in_up_norm", pas_in_up_norm)):
        if not (0.0 <= v <= 1.0):
            raise ConfigurationError(f"{name} outside [0, 1]: {v!r}")
    return math.sqrt(cmae_norm ** 2 + pas_not_up_norm ** 2
                     + (1.0 - pas_in_up_norm) ** 2)


def distance_from_tally(t: ObjectiveTally) -> float:
    return euclidean_distance(*objectives_from_tally(t))


def kfold_split(n: int, k: int, seed: int):
    """Deterministic shuffled k-fold partition of range(n).

    Returns a list of (optimization_indices, validation_indices) pairs.
    Refuses fewer recordings than folds.
    """
    if k < 2:
        raise ConfigurationError("k-fold needs k >= 2")
    if n < k:
        raise ConfigurationError(f"cannot split {n} recordings into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(order, k)
    folds = []
    for i in range(k):
        val = np.sort(parts[i])
        opt = np.sort(np.concatenate([parts[j] for j in range(k) if j != i]))
        folds.append((opt, val))
    return folds


def expand_grid(grid: dict) -> list:
    """Cartesian product of a {param: values} grid, in declaration order."""
    if not grid:
        raise ConfigurationError("empty parameter grid")
    names = list(grid.keys())
    for name in names:
        if len(grid[name]) == 0:
            raise ConfigurationError(f"no values for grid parameter {name!r}")
    return [dict(zip(names, combo))
            for combo in itertools.product(*(grid[n] for n in names))]


@dataclass
class ComboResult:
    combo: dict
    fold_opt_ed: list
    fold_val_ed: list
    mean_opt_ed: float
    mean_val_ed: float
    ed_error: float
    val_objectives: tuple   # (cmae_norm, pas_not_up_norm, pas_in_up_norm), pooled over all folds


@dataclass
class CvOutcome:
    best: ComboResult
    results: list
    k: int
    seed: int
    folds: list


def grid_search_cv(recordings: Sequence[EegRecording], grid: dict,
                   evaluate: Callable[[dict, EegRecording], ObjectiveTally],
                   k: int = 5, seed: int = 0) -> CvOutcome:
    """Evaluate every combo on every recording once, then score per fold.

    evaluate(combo, recording) returns that recording's ObjectiveTally for
    the combo. Fold sides pool tallies by summation before scoring, so one
    long recording cannot be outvoted by many short ones trigger-by-trigger.
    """
    combos = expand_grid(grid)
    folds = kfold_split(len(recordings), k, seed)
    tallies = [[evaluate(c, r) for r in recordings] for c in combos]

    results = []
    for ci, combo in enumerate(combos):
        row = tallies[ci]
        opt_eds, val_eds = [], []
        val_pool = ObjectiveTally()
        for opt_idx, val_idx in folds:
            opt_pool = ObjectiveTally()
            for i in opt_idx:
                opt_pool = opt_pool + row[i]
            fold_val = ObjectiveTally()
            for i in val_idx:
                fold_val = fold_val + row[i]
            val_pool = val_pool + fold_val
            opt_eds.append(distance_from_tally(opt_pool))
            val_eds.append(distance_from_tally(fold_val))
        mean_opt = float(np.mean(opt_eds))
        mean_val = float(np.mean(val_eds))
        results.append(ComboResult(
            combo, opt_eds, val_eds, mean_opt, mean_val,
            ed_error=mean_val + abs(mean_opt - mean_val),
            val_objectives=objectives_from_tally(val_pool)))

    best_i = 0
    for i in range(1, len(results)):
        a, b = results[i], results[best_i]
        if (a.ed_error < b.ed_error
                or (a.ed_error == b.ed_error and a.mean_val_ed < b.mean_val_ed)):
            best_i = i
    return CvOutcome(results[best_i], results, k, seed, folds)


PLL_TARGET_GRID_DEG = [float(v) for v in range(0, 360, 15)]
PV_TARGET_GRID_DEG = [float(v) for v in range(0, 360, 15)]


def default_grid(algorithm: str) -> dict:
    """Search spaces used to produce the shipped tracker defaults."""
    if algorithm == "at":
        return {"at_threshold_uv": [20.0, 30.0, 40.0, 50.0, 60.0, 75.0]}
    if algorithm == "pll":
        return {"phi_target_deg": PLL_TARGET_GRID_DEG,
                "k_pll": [1e-5, 1e-4, 4e-4, 1e-3, 1e-2]}
    if algorithm == "pv":
        return {"phi_target_deg": PV_TARGET_GRID_DEG,
                "k_pv": [0.5, 1.0, 2.0, 4.0],
                "maf_span": [25, 50, 125, 250]}
    raise ConfigurationError(f"unknown algorithm {algorithm!r}")


class _RecordingCache:
    """Per-recording intermediates shared across the whole grid."""

    def __init__(self, recording: EegRecording, gate_config: GateConfig):
        fs = recording.fs
        chain = PreprocessChain(fs)
        self.fs = fs
        self.y = chain.run(recording.samples)
        self.window_flags = gate_flags_batch(self.y, fs, gate_config)
        self.gate_win = int(round(gate_config.window_step_s * fs))
        self.track = compute_phase_track(recording.samples, fs)
        self.q_count, _, self.qual = qualifying_windows(
            recording, self.window_flags, gate_config, self.track.valid)
        self.pas_win = int(round(PAS_WINDOW_S * fs))
        self.onoff = gate_config.onoff_enabled
        self.onoff_period = gate_config.onoff_period_s
        self.streams: dict = {}     # dynamics key -> per-sample phase stream
        self.iso: Optional[np.ndarray] = None

    def delivered_filter(self, idx: np.ndarray) -> np.ndarray:
        keep = []
        for i in idx:
            f = flags_at_sample(self.window_flags, int(i), self.gate_win)
            if not (f.nrem and f.swa) or f.beta_inhibit:
                continue
            if self.onoff and math.fmod(i / self.fs, 2 * self.onoff_period) >= self.onoff_period:
                continue
            keep.append(int(i))
        return np.asarray(keep, dtype=int)

    def tally(self, delivered_idx: np.ndarray) -> ObjectiveTally:
        valid = delivered_idx[self.track.valid[delivered_idx]]
        phases = self.track.phase_deg[valid]
        inw = np.zeros(len(valid), dtype=bool)
        if len(valid):
            w = valid // self.pas_win
            inb = w < len(self.qual)
            inw[inb] = self.qual[w[inb]]
        return tally_from_phases(phases, inw, self.q_count)


def make_pipeline_evaluator(recordings: Sequence[EegRecording],
                            algorithm: str,
                            gate_config: Optional[GateConfig] = None,
                            base_config: Optional[TrackerConfig] = None):
    """evaluate(combo, recording) closure for grid_search_cv.

    Preprocessing, gate flags, the oracle track and qualifying-window counts
    are computed once per recording; tracker phase streams once per distinct
    loop-dynamics setting. Trigger targets and thresholds then reuse those.
    """
    gate_config = (gate_config or GateConfig()).validate()
    base = base_config or TrackerConfig(algorithm=algorithm)
    caches = {id(r): _RecordingCache(r, gate_config) for r in recordings}

    def evaluate(combo: dict, recording: EegRecording) -> ObjectiveTally:
        cache = caches.get(id(recording))
        if cache is None:
            cache = _RecordingCache(recording, gate_config)
            caches[id(recording)] = cache
        cfg = TrackerConfig(**{**base.__dict__, **combo,
                               "algorithm": algorithm,
                               "sample_rate_hz": cache.fs})
        cfg.validate()
        refr = max(1, math.ceil(cfg.refractory_s * cfg.sample_rate_hz))
        if algorithm == "at":
            if cache.iso is None:
                from scipy.signal import lfilter
                b, a = design_sw_isolation(cache.fs)
                cache.iso = lfilter(b, a, cache.y)
            z = cache.iso
            thr = cfg.at_threshold_uv
            prev = np.empty_like(z)
            prev[0] = 0.0
            prev[1:] = z[:-1]
            hits = np.flatnonzero((prev < thr) & (z >= thr))
            idx, last = [], -(1 << 60)
            for i in hits:
                if i - last >= refr:
                    idx.append(int(i))
                    last = i
            cand = np.asarray(idx, dtype=int)
        else:
            key = (("k_pll", cfg.k_pll) if algorithm == "pll"
                   else ("k_pv", cfg.k_pv, cfg.maf_span, cfg.pv_trigger_on_nco))
            stream = cache.streams.get(key)
            if stream is None:
                stream = tracker_phase_stream(cache.y, cfg)
                cache.streams[key] = stream
            cand = candidates_from_phase_stream(stream, cfg.target_deg(), refr)
        return cache.tally(cache.delivered_filter(cand))

    return evaluate
