"""Real-time slow-wave phase estimators and trigger emission.

Three algorithms over the common preprocessed stream:

- amplitude threshold (AT): no phase estimate, fires on an upward level
  crossing of a band-isolated copy of the signal;
- phase-locked loop (PLL): first-order loop around a 1 Hz oscillator;
- phase vocoder (PV): quadrature demodulation with moving-average smoothing,
  tracking instantaneous frequency and phase.

All trackers enforce the same refractory spacing between triggers and are
strictly causal: ``step`` consumes one sample and never looks ahead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dsp import IirFilter, design_sw_isolation
from .errors import ConfigurationError

TAU = 2.0 * math.pi
NCO_CENTER_HZ = 1.0          # free-running rate of the PLL oscillator
PV_FREQ_RANGE_HZ = (0.5, 4.0)  # clamp on the vocoder's tracked frequency
PV_EPSILON_UV = 0.1          # below this demodulated magnitude the angle is noise
DEFAULT_REFRACTORY_S = 0.25  # 4 Hz stimulation ceiling

ALGORITHMS = ("at", "pll", "pv")

# Trigger targets that hit the 45 deg oracle phase, per algorithm. The PLL
# locks half a cycle away from the input, so its target sits across the
# circle from the vocoder's.
DEFAULT_TARGET_DEG = {"at": 45.0, "pll": 195.0, "pv": 45.0}


@dataclass
class TrackerConfig:
    """Parameters for any of the three trackers.

    phi_target_deg is the tracker phase at which a trigger is emitted (AT
    ignores it); None picks the per-algorithm default. k_pll and k_pv are
    the loop gains; maf_span is the vocoder's moving-average length in
    samples; at_threshold_uv the AT level.
    """
    algorithm: str = "pv"
    phi_target_deg: Optional[float] = None
    k_pll: float = 4e-4
    k_pv: float = 2.0
    maf_span: int = 125
    at_threshold_uv: float = 30.0
    refractory_s: float = DEFAULT_REFRACTORY_S
    sample_rate_hz: float = 250.0
    pv_trigger_on_nco: bool = False

    def target_deg(self) -> float:
        if self.phi_target_deg is None:
            return DEFAULT_TARGET_DEG[self.algorithm]
        return self.phi_target_deg

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.phi_target_deg is not None and not 0.0 <= self.phi_target_deg < 360.0:
            raise ConfigurationError("phi_target_deg must be in [0, 360)")
        if self.k_pll <= 0 or self.k_pv <= 0:
            raise ConfigurationError("loop gains must be positive")
        if int(self.maf_span) < 1:
            raise ConfigurationError("maf_span must be >= 1 sample")
        if self.at_threshold_uv <= 0:
            raise ConfigurationError("at_threshold_uv must be positive")
        if self.refractory_s <= 0:
            raise ConfigurationError("refractory_s must be positive")
        if self.sample_rate_hz <= 0:
            raise ConfigurationError("sample_rate_hz must be positive")
        return self


@dataclass(frozen=True)
class TriggerEvent:
    sample_index: int
    time_s: float
    algorithm: str
    tracker_phase_deg: Optional[float]
    amplitude_uv: float


def wrap_radians(v: float) -> float:
    v = math.fmod(v, TAU)
    return v + TAU if v < 0.0 else v


def wrap_degrees(v: float) -> float:
    v = math.fmod(v, 360.0)
    return v + 360.0 if v < 0.0 else v


def phase_crossed(prev_deg: float, cur_deg: float, target_deg: float) -> bool:
    """True iff target lies on the forward arc prev -> cur, arc < 180 deg.

    Arcs of 180 deg or more in one sample are treated as slips, never as
    crossings.
    """
    arc = math.fmod(cur_deg - prev_deg, 360.0)
    if arc < 0.0:
        arc += 360.0
    if arc >= 180.0:
        return False
    d = math.fmod(target_deg - prev_deg, 360.0)
    if d < 0.0:
        d += 360.0
    return 0.0 < d <= arc


class _TrackerBase:
    """Shared counter/refractory bookkeeping."""

    def __init__(self, config: TrackerConfig):
        config.validate()
        self.config = config
        self._target = config.target_deg()
        self._refr = max(1, math.ceil(config.refractory_s * config.sample_rate_hz))
        self._n = 0
        self._last_trigger = -(1 << 60)
        self.slip_count = 0

    def _emit(self, phase_deg, amplitude) -> Optional[TriggerEvent]:
        n = self._n
        if n - self._last_trigger < self._refr:
            return None
        self._last_trigger = n
        return TriggerEvent(n, n / self.config.sample_rate_hz,
                            self.config.algorithm, phase_deg, amplitude)


class AmplitudeThresholdTracker(_TrackerBase):
    """Triggers on the first upward crossing of a fixed level.

    Input is the common preprocessed stream; a first-order 0.5-2 Hz band-pass
    inside the tracker isolates slow waves before thresholding. No phase is
    estimated.
    """

    def __init__(self, config: TrackerConfig):
        super().__init__(config)
        self._iso = IirFilter(*design_sw_isolation(config.sample_rate_hz))
        self._prev = 0.0

    def step(self, x: float) -> Optional[TriggerEvent]:
        v = self._iso.step(x)
        event = None
        if self._prev < self.config.at_threshold_uv <= v:
            event = self._emit(None, x)
        self._prev = v
        self._n += 1
        return event

    def run(self, x) -> list:
        events = []
        thr = self.config.at_threshold_uv
        refr = self._refr
        fs = self.config.sample_rate_hz
        algo = self.config.algorithm
        step = self._iso.step
        prev = self._prev
        n = self._n
        last = self._last_trigger
        for xi in np.asarray(x, dtype=float).tolist():
            v = step(xi)
            if prev < thr <= v and n - last >= refr:
                events.append(TriggerEvent(n, n / fs, algo, None, xi))
                last = n
            prev = v
            n += 1
        self._prev = prev
        self._n = n
        self._last_trigger = last
        return events


class PllTracker(_TrackerBase):
    """First-order phase-locked loop around a 1 Hz oscillator.

    Per sample: error = x * cos(theta); the accumulated correction moves
    opposite the error, and theta advances by the free-run increment plus the
    same correction. Triggers fire when wrapped theta crosses the target
    phase. The error has no extra low-pass; ripple at twice the input
    frequency is inherent and the loop gain bounds it.
    """

    def __init__(self, config: TrackerConfig):
        super().__init__(config)
        self.theta = 0.0   # radians, [0, 2*pi)
        self.phi_p = 0.0   # accumulated correction, radians
        self._omega_dt = TAU * NCO_CENTER_HZ / config.sample_rate_hz
        self.reset_count = 0

    def reset(self):
        self.theta = 0.0
        self.phi_p = 0.0

    def step(self, x: float):
        """Advance one sample; returns (phase_estimate_deg, event or None)."""
        k = self.config.k_pll
        prev_theta = self.theta
        e = x * math.cos(prev_theta)
        self.phi_p -= k * e
        theta = wrap_radians(prev_theta + self._omega_dt - k * e)
        if not (math.isfinite(theta) and math.isfinite(self.phi_p)):
            self.reset()
            self.reset_count += 1
            theta = 0.0
            prev_theta = 0.0  # no crossing can fire on a reset sample
        prev_deg = math.degrees(prev_theta)
        cur_deg = math.degrees(theta)
        self.theta = theta
        event = None
        arc = math.fmod(cur_deg - prev_deg, 360.0)
        if arc < 0.0:
            arc += 360.0
        if arc >= 180.0:
            self.slip_count += 1
        elif phase_crossed(prev_deg, cur_deg, self._target):
            event = self._emit(cur_deg, x)
        self._n += 1
        return cur_deg, event

    def run(self, x) -> list:
        events = []
        cfg = self.config
        k = cfg.k_pll
        omega_dt = self._omega_dt
        target = self._target
        refr = self._refr
        fs = cfg.sample_rate_hz
        cos = math.cos
        fmod = math.fmod
        theta = self.theta
        phi_p = self.phi_p
        n = self._n
        last = self._last_trigger
        slips = 0
        resets = 0
        for xi in np.asarray(x, dtype=float).tolist():
            prev_theta = theta
            e = xi * cos(theta)
            phi_p -= k * e
            new = fmod(theta + omega_dt - k * e, TAU)
            if new < 0.0:
                new += TAU
            if not (math.isfinite(new) and math.isfinite(phi_p)):
                new = 0.0
                phi_p = 0.0
                prev_theta = 0.0
                resets += 1
            prev_deg = math.degrees(prev_theta)
            cur_deg = math.degrees(new)
            theta = new
            arc = fmod(cur_deg - prev_deg, 360.0)
            if arc < 0.0:
                arc += 360.0
            if arc >= 180.0:
                slips += 1
            else:
                d = fmod(target - prev_deg, 360.0)
                if d < 0.0:
                    d += 360.0
                if 0.0 < d <= arc and n - last >= refr:
                    events.append(TriggerEvent(n, n / fs, "pll", cur_deg, xi))
                    last = n
            n += 1
        self.theta = theta
        self.phi_p = phi_p
        self._n = n
        self._last_trigger = last
        self.slip_count += slips
        self.reset_count += resets
        return events


class PvTracker(_TrackerBase):
    """Phase vocoder: quadrature demodulation plus moving-average smoothing.

    The sample multiplies the oscillator's sine and cosine; both products run
    through span-length moving averages (ring buffer with running sums, so
    cost is independent of the span). The four-quadrant angle of the averaged
    pair is the phase error; its sample-to-sample change, scaled by the gain,
    steers the tracked frequency, clamped to 0.5-4 Hz. The phase estimate is
    oscillator argument plus phase error, which is also what triggers are
    matched against unless pv_trigger_on_nco asks for the bare oscillator
    argument.

    When the averaged vector is shorter than PV_EPSILON_UV the angle is
    meaningless: the previous phase error is held and the frequency stays
    untouched for that sample.
    """

    def __init__(self, config: TrackerConfig):
        super().__init__(config)
        span = int(config.maf_span)
        self.omega = TAU * NCO_CENTER_HZ  # rad/s
        self.theta = 0.0                  # oscillator argument, [0, 2*pi)
        self.phi_e = 0.0                  # last defined phase error
        self._span = span
        self._buf_i = [0.0] * span
        self._buf_q = [0.0] * span
        self._sum_i = 0.0
        self._sum_q = 0.0
        self._idx = 0
        self._dt = 1.0 / config.sample_rate_hz
        self._omega_lo = TAU * PV_FREQ_RANGE_HZ[0]
        self._omega_hi = TAU * PV_FREQ_RANGE_HZ[1]
        self._prev_est = 0.0
        self.hold_count = 0

    def step(self, x: float):
        """Advance one sample; returns (phase_estimate_deg, freq_hz, event)."""
        cfg = self.config
        span = self._span
        idx = self._idx
        i_new = x * math.sin(self.theta)
        q_new = x * math.cos(self.theta)
        self._sum_i += i_new - self._buf_i[idx]
        self._sum_q += q_new - self._buf_q[idx]
        self._buf_i[idx] = i_new
        self._buf_q[idx] = q_new
        self._idx = idx + 1 if idx + 1 < span else 0
        mean_i = self._sum_i / span
        mean_q = self._sum_q / span
        if math.hypot(mean_i, mean_q) >= PV_EPSILON_UV:
            err = math.atan2(mean_q, mean_i)
            delta = math.fmod(err - self.phi_e + 3.0 * math.pi, TAU) - math.pi
            omega = self.omega + cfg.k_pv * delta
            if omega < self._omega_lo:
                omega = self._omega_lo
            elif omega > self._omega_hi:
                omega = self._omega_hi
            self.omega = omega
            self.phi_e = err
        else:
            self.hold_count += 1
        self.theta = wrap_radians(self.theta + self.omega * self._dt)
        if cfg.pv_trigger_on_nco:
            est = math.degrees(self.theta)
        else:
            est = math.degrees(wrap_radians(self.theta + self.phi_e))
        prev = self._prev_est
        self._prev_est = est
        event = None
        arc = math.fmod(est - prev, 360.0)
        if arc < 0.0:
            arc += 360.0
        if arc >= 180.0:
            self.slip_count += 1
        elif phase_crossed(prev, est, self._target):
            event = self._emit(est, x)
        self._n += 1
        return est, self.omega / TAU, event

    def run(self, x) -> list:
        events = []
        cfg = self.config
        k = cfg.k_pv
        span = self._span
        dt = self._dt
        target = self._target
        refr = self._refr
        fs = cfg.sample_rate_hz
        on_nco = cfg.pv_trigger_on_nco
        omega_lo = self._omega_lo
        omega_hi = self._omega_hi
        sin = math.sin
        cos = math.cos
        hypot = math.hypot
        atan2 = math.atan2
        fmod = math.fmod
        pi = math.pi
        buf_i = self._buf_i
        buf_q = self._buf_q
        sum_i = self._sum_i
        sum_q = self._sum_q
        idx = self._idx
        omega = self.omega
        theta = self.theta
        phi_e = self.phi_e
        prev = self._prev_est
        n = self._n
        last = self._last_trigger
        slips = 0
        holds = 0
        for xi in np.asarray(x, dtype=float).tolist():
            i_new = xi * sin(theta)
            q_new = xi * cos(theta)
            sum_i += i_new - buf_i[idx]
            sum_q += q_new - buf_q[idx]
            buf_i[idx] = i_new
            buf_q[idx] = q_new
            idx = idx + 1 if idx + 1 < span else 0
            mean_i = sum_i / span
            mean_q = sum_q / span
            if hypot(mean_i, mean_q) >= PV_EPSILON_UV:
                err = atan2(mean_q, mean_i)
                delta = fmod(err - phi_e + 3.0 * pi, TAU) - pi
                omega = omega + k * delta
                if omega < omega_lo:
                    omega = omega_lo
                elif omega > omega_hi:
                    omega = omega_hi
                phi_e = err
            else:
                holds += 1
            theta = fmod(theta + omega * dt, TAU)
            if theta < 0.0:
                theta += TAU
            if on_nco:
                est = math.degrees(theta)
            else:
                w = fmod(theta + phi_e, TAU)
                if w < 0.0:
                    w += TAU
                est = math.degrees(w)
            arc = fmod(est - prev, 360.0)
            if arc < 0.0:
                arc += 360.0
            if arc >= 180.0:
                slips += 1
            else:
                d = fmod(target - prev, 360.0)
                if d < 0.0:
                    d += 360.0
                if 0.0 < d <= arc and n - last >= refr:
                    events.append(TriggerEvent(n, n / fs, "pv", est, xi))
                    last = n
            prev = est
            n += 1
        self._buf_i = buf_i
        self._buf_q = buf_q
        self._sum_i = sum_i
        self._sum_q = sum_q
        self._idx = idx
        self.omega = omega
        self.theta = theta
        self.phi_e = phi_e
        self._prev_est = prev
        self._n = n
        self._last_trigger = last
        self.slip_count += slips
        self.hold_count += holds
        return events


def make_tracker(config: TrackerConfig):
    cls = {"at": AmplitudeThresholdTracker, "pll": PllTracker, "pv": PvTracker}
    return cls[config.algorithm](config)
