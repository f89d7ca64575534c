"""Autonomous stimulation gating.

Every 4 s window of the preprocessed stream yields band powers; from those:

- NREM flag: averaged 0.5-2 and 2-4 Hz powers over the last 80 s above their
  thresholds AND averaged 20-30 Hz power below its threshold;
- SWA flag: last window's 0.5-4 Hz power at or above the SWA threshold;
- beta inhibit: last window's 17-22 Hz power at or above the beta threshold.

A candidate trigger is delivered iff nrem and swa hold, beta does not, and
(when the ON-OFF protocol is enabled) the candidate's timestamp falls in an
ON window. Suppression reports the first failing condition in the fixed
order nrem, swa, beta, onoff. The first 80 s never deliver (cold start).
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

GATE_WINDOW_S = 4.0
NREM_HISTORY_S = 80.0
ONOFF_PERIOD_S = 6.0

NREM_LOW_BAND_HZ = (0.5, 2.0)
NREM_MID_BAND_HZ = (2.0, 4.0)
NREM_BETA_BAND_HZ = (20.0, 30.0)
SWA_BAND_HZ = (0.5, 4.0)
INHIBIT_BETA_BAND_HZ = (17.0, 22.0)

SUPPRESSION_ORDER = ("nrem", "swa", "beta", "onoff")

# defaults calibrated against the default synthetic generator spec
# (see calibrate_gate); geometric midpoints of NREM vs wake band statistics
DEFAULT_NREM_LOW_UV2 = 95.0
DEFAULT_NREM_MID_UV2 = 8.0
DEFAULT_NREM_BETA_UV2 = 4.6
DEFAULT_SWA_UV2 = 115.0
DEFAULT_BETA_UV2 = 4.8


@dataclass
class GateConfig:
    nrem_low_threshold_uv2: float = DEFAULT_NREM_LOW_UV2
    nrem_mid_threshold_uv2: float = DEFAULT_NREM_MID_UV2
    nrem_beta_threshold_uv2: float = DEFAULT_NREM_BETA_UV2
    swa_threshold_uv2: float = DEFAULT_SWA_UV2
    beta_threshold_uv2: float = DEFAULT_BETA_UV2
    window_step_s: float = GATE_WINDOW_S
    nrem_history_s: float = NREM_HISTORY_S
    onoff_period_s: float = ONOFF_PERIOD_S
    onoff_enabled: bool = False

    def validate(self):
        for name in ("nrem_low_threshold_uv2", "nrem_mid_threshold_uv2",
                     "nrem_beta_threshold_uv2", "swa_threshold_uv2",
                     "beta_threshold_uv2"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.window_step_s <= 0 or self.onoff_period_s <= 0:
            raise ConfigurationError("window and protocol periods must be positive")
        ratio = self.nrem_history_s / self.window_step_s
        if abs(ratio - round(ratio)) > 1e-9 or ratio < 1:
            raise ConfigurationError("nrem_history_s must be a positive multiple of window_step_s")
        return self

    @property
    def history_windows(self) -> int:
        return int(round(self.nrem_history_s / self.window_step_s))


@dataclass(frozen=True)
class GateFlags:
    nrem: bool
    swa: bool
    beta_inhibit: bool


@dataclass(frozen=True)
class WindowPowers:
    low: float        # 0.5-2 Hz
    mid: float        # 2-4 Hz
    high_beta: float  # 20-30 Hz
    swa: float        # 0.5-4 Hz
    beta: float       # 17-22 Hz


def window_band_powers(window: np.ndarray, fs: float) -> WindowPowers:
    """All five gate band powers from a single tapered transform."""
    x = np.asarray(window, dtype=float)
    n = len(x)
    w = np.hanning(n)
    spectrum = np.abs(np.fft.rfft(x * w)) ** 2
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    scale = 2.0 / (n * np.sum(w * w))

    def band(lo, hi):
        sel = (freqs >= lo) & (freqs <= hi)
        return float(np.sum(spectrum[sel]) * scale)

    return WindowPowers(band(*NREM_LOW_BAND_HZ), band(*NREM_MID_BAND_HZ),
                        band(*NREM_BETA_BAND_HZ), band(*SWA_BAND_HZ),
                        band(*INHIBIT_BETA_BAND_HZ))


def nrem_vote(history, config: GateConfig) -> bool:
    """NREM decision over a full history of WindowPowers; False if short."""
    if len(history) < config.history_windows:
        return False
    low = sum(p.low for p in history) / len(history)
    mid = sum(p.mid for p in history) / len(history)
    beta = sum(p.high_beta for p in history) / len(history)
    return (low > config.nrem_low_threshold_uv2
            and mid > config.nrem_mid_threshold_uv2
            and beta < config.nrem_beta_threshold_uv2)


def on_window_at(time_s: float, config: GateConfig) -> bool:
    """ON-OFF protocol phase at a timestamp; pure function of elapsed time."""
    period = config.onoff_period_s
    return math.fmod(time_s, 2.0 * period) < period


class StimulationGate:
    """Streaming gate: feed every preprocessed sample, ask for decisions.

    Flags update on 4 s window boundaries and apply to all samples until the
    next boundary, so a candidate is always judged by already-complete
    windows (causal). Until the first 80 s of history exist the nrem flag
    stays False and everything is suppressed.
    """

    def __init__(self, config: GateConfig, fs: float):
        config.validate()
        self.config = config
        self.fs = fs
        self._window_n = int(round(config.window_step_s * fs))
        self._buf = np.empty(self._window_n)
        self._fill = 0
        self._history = deque(maxlen=config.history_windows)
        self._flags = GateFlags(False, False, False)
        self._n = 0
        self.window_log = []   # (nrem, swa, beta_inhibit) per completed window

    @property
    def flags(self) -> GateFlags:
        return self._flags

    def step(self, x: float) -> GateFlags:
        self._buf[self._fill] = x
        self._fill += 1
        self._n += 1
        if self._fill == self._window_n:
            powers = window_band_powers(self._buf, self.fs)
            self._history.append(powers)
            cfg = self.config
            self._flags = GateFlags(
                nrem_vote(self._history, cfg),
                powers.swa >= cfg.swa_threshold_uv2,
                powers.beta >= cfg.beta_threshold_uv2,
            )
            self.window_log.append(self._flags)
            self._fill = 0
        return self._flags

    def decide(self, time_s: float):
        """(delivered, reason) for a candidate at time_s under current flags.

        reason is "" when delivered, otherwise the first failing condition
        in the order nrem, swa, beta, onoff.
        """
        f = self._flags
        cfg = self.config
        if not f.nrem:
            return False, "nrem"
        if not f.swa:
            return False, "swa"
        if f.beta_inhibit:
            return False, "beta"
        if cfg.onoff_enabled and not on_window_at(time_s, cfg):
            return False, "onoff"
        return True, ""


def gate_flags_batch(preprocessed: np.ndarray, fs: float, config: GateConfig):
    """Per-window flags for a whole preprocessed recording.

    Returns a list of GateFlags, one per completed 4 s window, identical to
    what the streaming gate would log. Samples in window k are governed by
    the flags of window k-1 (none before the first boundary).
    """
    config.validate()
    window_n = int(round(config.window_step_s * fs))
    n_windows = len(preprocessed) // window_n
    history = deque(maxlen=config.history_windows)
    out = []
    for k in range(n_windows):
        powers = window_band_powers(preprocessed[k * window_n:(k + 1) * window_n], fs)
        history.append(powers)
        out.append(GateFlags(
            nrem_vote(history, config),
            powers.swa >= config.swa_threshold_uv2,
            powers.beta >= config.beta_threshold_uv2,
        ))
    return out


def flags_at_sample(window_flags, sample_index: int, window_n: int) -> GateFlags:
    """The flags governing a sample: those of the last completed window."""
    k = sample_index // window_n - 1
    if k < 0:
        return GateFlags(False, False, False)
    k = min(k, len(window_flags) - 1)
    return window_flags[k]


def calibrate_gate(recording, fs: float = None, base: GateConfig = None) -> GateConfig:
    """Derive thresholds from a recording with a hypnogram.

    Band statistics are collected per 4 s window separately for N3 and Wake
    epochs of the PREPROCESSED signal; each threshold is the geometric
    midpoint of the two medians (NREM bands: N3 above, wake below; beta
    bands the other way around). The SWA threshold comes from the same
    scheme on the 0.5-4 Hz band.
    """
    from .dsp import PreprocessChain
    from .recording import EegRecording

    if not isinstance(recording, EegRecording):
        raise ConfigurationError("calibrate_gate needs an EegRecording with a hypnogram")
    if not recording.hypnogram:
        raise ConfigurationError("recording has no hypnogram to calibrate against")
    fs = fs or recording.fs
    chain = PreprocessChain(fs)
    y = chain.run(recording.samples)
    window_n = int(round(GATE_WINDOW_S * fs))
    n3 = recording.stage_mask(("N3",))
    wake = recording.stage_mask(("W",))
    per_stage = {"N3": [], "W": []}
    for k in range(len(y) // window_n):
        s = slice(k * window_n, (k + 1) * window_n)
        if n3[s].all():
            per_stage["N3"].append(window_band_powers(y[s], fs))
        elif wake[s].all():
            per_stage["W"].append(window_band_powers(y[s], fs))
    if not per_stage["N3"] or not per_stage["W"]:
        raise ConfigurationError("calibration needs both N3 and W epochs")

    def med(stage, attr):
        return float(np.median([getattr(p, attr) for p in per_stage[stage]]))

    def gmid(a, b):
        return math.sqrt(a * b)

    base = base or GateConfig()
    return GateConfig(
        nrem_low_threshold_uv2=gmid(med("N3", "low"), med("W", "low")),
        nrem_mid_threshold_uv2=gmid(med("N3", "mid"), med("W", "mid")),
        nrem_beta_threshold_uv2=gmid(med("N3", "high_beta"), med("W", "high_beta")),
        swa_threshold_uv2=gmid(med("N3", "swa"), med("W", "swa")),
        beta_threshold_uv2=gmid(med("N3", "beta"), med("W", "beta")),
        window_step_s=base.window_step_s,
        nrem_history_s=base.nrem_history_s,
        onoff_period_s=base.onoff_period_s,
        onoff_enabled=base.onoff_enabled,
    )
