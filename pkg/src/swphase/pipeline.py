"""End-to-end session plumbing: preprocess -> tracker -> gate -> log,
plus offline evaluation of a logged session against the phase oracle.

Two execution paths produce identical results: a per-sample streaming loop
(the reference) and a batch path that vectorizes the filters and window
logic but advances the trackers with the same arithmetic in the same order.
Both are causal; the batch path is just faster.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dsp import PreprocessChain
from .errors import ConfigurationError
from .gate import (GateConfig, StimulationGate, flags_at_sample,
                   gate_flags_batch, on_window_at)
from .metrics import (IntervalReport, PAS_WINDOW_S, PasReport,
                      TargetingReport, circular_mean_sd, cmae45,
                      detect_waves, pas, targeting_capacity,
                      trigger_intervals)
from .oracle import hilbert_phase, phase_at_triggers, zero_phase_bandpass
from .recording import EegRecording, NREM_STAGES, EPOCH_S
from .trackers import TrackerConfig, make_tracker, PllTracker, PvTracker


@dataclass(frozen=True)
class LoggedTrigger:
    sample_index: int
    time_s: float
    algorithm: str
    tracker_phase_deg: Optional[float]
    amplitude_uv: float
    delivered: bool
    suppression_reason: str   # "" when delivered
    on_window: bool           # protocol phase at the timestamp


@dataclass
class SessionResult:
    log: list
    window_flags: list
    tracker_config: TrackerConfig
    gate_config: GateConfig
    fs: float
    slip_count: int = 0
    preprocessed: Optional[np.ndarray] = None

    def delivered(self):
        return [e for e in self.log if e.delivered]

    def suppression_counts(self) -> dict:
        out = {"nrem": 0, "swa": 0, "beta": 0, "onoff": 0}
        for e in self.log:
            if not e.delivered:
                out[e.suppression_reason] += 1
        return out


def _decide(flags, time_s, cfg: GateConfig):
    if not flags.nrem:
        return False, "nrem"
    if not flags.swa:
        return False, "swa"
    if flags.beta_inhibit:
        return False, "beta"
    if cfg.onoff_enabled and not on_window_at(time_s, cfg):
        return False, "onoff"
    return True, ""


def run_session(recording: EegRecording, tracker_config: TrackerConfig,
                gate_config: Optional[GateConfig] = None,
                streaming: bool = False,
                keep_preprocessed: bool = False) -> SessionResult:
    """Process a recording through one tracker and the gate.

    All candidate triggers are logged; the gate only sets delivered /
    suppression fields (trackers never see the gate).
    """
    gate_config = (gate_config or GateConfig()).validate()
    cfg = tracker_config
    if cfg.sample_rate_hz != recording.fs:
        cfg = TrackerConfig(**{**cfg.__dict__, "sample_rate_hz": recording.fs})
    cfg.validate()
    fs = recording.fs

    if streaming:
        return _run_streaming(recording, cfg, gate_config, keep_preprocessed)

    chain = PreprocessChain(fs)
    y = chain.run(recording.samples)
    tracker = make_tracker(cfg)
    events = tracker.run(y)
    window_flags = gate_flags_batch(y, fs, gate_config)
    window_n = int(round(gate_config.window_step_s * fs))
    log = []
    for ev in events:
        flags = flags_at_sample(window_flags, ev.sample_index, window_n)
        ok, reason = _decide(flags, ev.time_s, gate_config)
        log.append(LoggedTrigger(ev.sample_index, ev.time_s, ev.algorithm,
                                 ev.tracker_phase_deg, ev.amplitude_uv,
                                 ok, reason,
                                 on_window_at(ev.time_s, gate_config)))
    return SessionResult(log, window_flags, cfg, gate_config, fs,
                         slip_count=getattr(tracker, "slip_count", 0),
                         preprocessed=y if keep_preprocessed else None)


def _run_streaming(recording, cfg, gate_config, keep_preprocessed):
    fs = recording.fs
    chain = PreprocessChain(fs)
    tracker = make_tracker(cfg)
    gate = StimulationGate(gate_config, fs)
    log = []
    kept = np.empty(len(recording.samples)) if keep_preprocessed else None
    algo = cfg.algorithm
    for i, x in enumerate(np.asarray(recording.samples, dtype=float).tolist()):
        y = chain.step(x)
        if kept is not None:
            kept[i] = y
        flags = gate.flags          # flags from completed windows only
        if algo == "at":
            ev = tracker.step(y)
        elif algo == "pll":
            _, ev = tracker.step(y)
        else:
            _, _, ev = tracker.step(y)
        if ev is not None:
            ok, reason = _decide(flags, ev.time_s, gate_config)
            log.append(LoggedTrigger(ev.sample_index, ev.time_s, ev.algorithm,
                                     ev.tracker_phase_deg, ev.amplitude_uv,
                                     ok, reason,
                                     on_window_at(ev.time_s, gate_config)))
        gate.step(y)
    return SessionResult(log, list(gate.window_log), cfg, gate_config, fs,
                         slip_count=getattr(tracker, "slip_count", 0),
                         preprocessed=kept)


def tracker_phase_stream(preprocessed: np.ndarray, cfg: TrackerConfig) -> np.ndarray:
    """Per-sample phase estimate of the PLL or PV over a preprocessed batch.

    Used by the optimizer to factor the parameter grid: the stream depends
    on the loop dynamics but not on the trigger target, so crossings for
    many targets can be derived from one pass.
    """
    cfg.validate()
    if cfg.algorithm == "pll":
        tr = PllTracker(cfg)
        out = np.empty(len(preprocessed))
        for i, xi in enumerate(np.asarray(preprocessed, dtype=float).tolist()):
            out[i], _ = tr.step(xi)
        return out
    if cfg.algorithm == "pv":
        tr = PvTracker(cfg)
        out = np.empty(len(preprocessed))
        for i, xi in enumerate(np.asarray(preprocessed, dtype=float).tolist()):
            out[i], _, _ = tr.step(xi)
        return out
    raise ConfigurationError("phase streams exist for pll and pv only")


def candidates_from_phase_stream(stream_deg: np.ndarray, target_deg: float,
                                 refractory_samples: int) -> np.ndarray:
    """Trigger sample indices from a phase-estimate stream.

    Mirrors the trackers' inline crossing detection: forward arc below
    180 deg containing the target, then the refractory filter. The first
    sample never fires (the trackers compare against their previous
    estimate, which starts undefined).
    """
    p = np.asarray(stream_deg, dtype=float)
    prev = np.empty_like(p)
    prev[0] = 0.0
    prev[1:] = p[:-1]
    arc = np.mod(p - prev, 360.0)
    d = np.mod(target_deg - prev, 360.0)
    hit = (arc < 180.0) & (d > 0.0) & (d <= arc)
    idx = np.flatnonzero(hit)
    out = []
    last = -(1 << 60)
    for i in idx:
        if i - last >= refractory_samples:
            out.append(i)
            last = i
    return np.asarray(out, dtype=int)


def scored_nrem_window_mask(recording: EegRecording, n_windows: int,
                            fs: float) -> np.ndarray:
    """Per-2 s-window flag: hypnogram stage at the window start is N2/N3."""
    win = int(round(PAS_WINDOW_S * fs))
    epoch_n = int(round(EPOCH_S * fs))
    hyp = recording.hypnogram or []
    out = np.zeros(n_windows, dtype=bool)
    for w in range(n_windows):
        e = (w * win) // epoch_n
        if e < len(hyp) and hyp[e] in NREM_STAGES:
            out[w] = True
    return out


def qualifying_windows(recording: EegRecording, window_flags,
                       gate_config: GateConfig, valid_mask=None):
    """Count PAS windows: 2 s, hypnogram NREM, device nrem+swa, fully
    inside the oracle-valid region when a mask is given.

    Returns (qualifying_count, scored_count, per_window_bool).
    """
    fs = recording.fs
    win = int(round(PAS_WINDOW_S * fs))
    n_windows = len(recording.samples) // win
    gate_win = int(round(gate_config.window_step_s * fs))
    scored = scored_nrem_window_mask(recording, n_windows, fs)
    qual = np.zeros(n_windows, dtype=bool)
    for w in range(n_windows):
        if not scored[w]:
            continue
        start = w * win
        if valid_mask is not None and not (valid_mask[start] and valid_mask[start + win - 1]):
            continue
        flags = flags_at_sample(window_flags, start, gate_win)
        qual[w] = flags.nrem and flags.swa
    return int(qual.sum()), int(scored.sum()), qual


@dataclass
class MetricsReport:
    algorithm: str
    n_candidates: int
    n_delivered: int
    n_oracle_dropped: int
    mean_undefined: bool
    circular_mean_deg: Optional[float]
    circular_sd_deg: Optional[float]
    cmae45_norm: Optional[float]
    cmae45_deg: Optional[float]
    pas_report: Optional[PasReport]
    targeting: Optional[TargetingReport]
    intervals: Optional[IntervalReport]
    suppression_counts: dict
    trigger_phases_deg: np.ndarray


def evaluate_session(recording: EegRecording, session: SessionResult,
                     filtered: Optional[np.ndarray] = None) -> MetricsReport:
    """Judge a session's delivered triggers against the offline oracle."""
    fs = recording.fs
    if filtered is None:
        filtered = zero_phase_bandpass(recording.samples, fs)
    track = hilbert_phase(filtered, fs)
    delivered = session.delivered()
    phases, dropped = phase_at_triggers(track, delivered)
    valid_idx = np.asarray([e.sample_index for e in delivered
                            if track.valid[e.sample_index]], dtype=int)

    mean_undefined = False
    cmean = csd = cnorm = cdeg = None
    if len(phases):
        try:
            summary = circular_mean_sd(phases)
            cmean, csd = summary.mean_deg, summary.sd_deg
            cnorm, cdeg = cmae45(phases)
        except Exception:
            mean_undefined = True

    q_count, scored_count, qual = qualifying_windows(
        recording, session.window_flags, session.gate_config, track.valid)
    pas_report = None
    if q_count >= 1:
        win = int(round(PAS_WINDOW_S * fs))
        in_qual = [p for e, p in zip(
            [e for e in delivered if track.valid[e.sample_index]], phases)
            if e.sample_index // win < len(qual) and qual[e.sample_index // win]]
        pas_report = pas(in_qual, q_count, scored_count)

    device_mask = np.zeros(len(recording.samples), dtype=bool)
    gate_win = int(round(session.gate_config.window_step_s * fs))
    for k, f in enumerate(session.window_flags):
        if f.nrem and f.swa:
            start = (k + 1) * gate_win
            device_mask[start:start + gate_win] = True
    wave_mask = recording.nrem_mask() & device_mask & track.valid
    waves = detect_waves(filtered, fs, wave_mask)
    targeting = targeting_capacity(waves, valid_idx, phases) if len(waves) else None

    intervals = trigger_intervals([e.time_s for e in delivered])

    return MetricsReport(
        algorithm=session.tracker_config.algorithm,
        n_candidates=len(session.log),
        n_delivered=len(delivered),
        n_oracle_dropped=dropped,
        mean_undefined=mean_undefined,
        circular_mean_deg=cmean, circular_sd_deg=csd,
        cmae45_norm=cnorm, cmae45_deg=cdeg,
        pas_report=pas_report,
        targeting=targeting,
        intervals=intervals,
        suppression_counts=session.suppression_counts(),
        trigger_phases_deg=phases,
    )
