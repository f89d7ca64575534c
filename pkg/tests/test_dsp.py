import math

import numpy as np
import pytest
from scipy import signal

from swphase.dsp import (IirFilter, PreprocessChain, band_power,
                         design_highpass, design_lowpass, design_notch,
                         design_sw_isolation)
from swphase.errors import ConfigurationError, StreamIntegrityError

from conftest import FS, sinusoid


def measure_response(chain: PreprocessChain, freq_hz: float, fs: float = FS,
                     settle_s: float = 60.0, measure_s: float = 20.0):
    """Empirical gain and phase shift via quadrature projection.

    Independent of the chain's own frequency_response: runs an actual
    sinusoid through the filters and projects the steady-state tail.
    """
    n_settle = int(settle_s * fs)
    n = n_settle + int(measure_s * fs)
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * freq_hz * t)
    y = chain.run(x)[n_settle:]
    tt = t[n_settle:]
    c = 2 * np.mean(y * np.sin(2 * np.pi * freq_hz * tt))
    s = 2 * np.mean(y * np.cos(2 * np.pi * freq_hz * tt))
    gain = math.hypot(c, s)
    phase_deg = math.degrees(math.atan2(s, c))
    return gain, phase_deg


class TestIirFilter:
    def test_run_matches_scipy_lfilter_bitwise(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(5000)
        b, a = design_lowpass(FS)
        f = IirFilter(b, a)
        want = signal.lfilter(b, a, x)
        got = f.run(x)
        assert np.array_equal(got, want)

    def test_step_matches_run_bitwise(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(512)
        b, a = design_notch(FS)
        want = IirFilter(b, a).run(x)
        f = IirFilter(b, a)
        got = np.array([f.step(float(v)) for v in x])
        assert np.array_equal(got, want)

    def test_chunked_run_matches_one_shot(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(1000)
        b, a = design_highpass(FS)
        want = IirFilter(b, a).run(x)
        f = IirFilter(b, a)
        got = np.concatenate([f.run(x[:100]), f.run(x[100:317]), f.run(x[317:])])
        assert np.array_equal(got, want)

    def test_unstable_coefficients_rejected(self):
        # pole at z = 1.5
        with pytest.raises(ConfigurationError):
            IirFilter([1.0], [1.0, -1.5])

    def test_reset_restores_initial_output(self):
        b, a = design_lowpass(FS)
        f = IirFilter(b, a)
        first = f.step(1.0)
        f.step(0.5)
        f.reset()
        assert f.step(1.0) == first


class TestPreprocessChain:
    def test_empirical_gain_matches_analytic_response(self):
        chain = PreprocessChain(FS)
        for freq in (0.5, 1.0, 2.0, 4.0, 10.0):
            gain, phase = measure_response(PreprocessChain(FS), freq)
            h = chain.frequency_response([freq])[0]
            assert gain == pytest.approx(abs(h), rel=1e-3)
            want_phase = math.degrees(math.atan2(h.imag, h.real))
            assert phase == pytest.approx(want_phase, abs=0.05)

    def test_slow_wave_band_passes_nearly_unchanged(self):
        gain, phase = measure_response(PreprocessChain(FS), 1.0)
        assert gain > 0.99          # < 1% attenuation at 1 Hz
        assert 2.0 < phase < 6.0    # small lead from the 0.1 Hz high-pass

    def test_highpass_stage_alone_leads_at_1hz(self):
        b, a = design_highpass(FS)
        _, h = signal.freqz(b, a, worN=[2 * np.pi * 1.0 / FS])
        lead = math.degrees(math.atan2(h[0].imag, h[0].real))
        assert lead == pytest.approx(5.71, abs=0.05)

    def test_mains_frequency_notched_out(self):
        gain, _ = measure_response(PreprocessChain(FS), 50.0)
        assert gain < 1e-3

    def test_lowpass_corner_at_30hz(self):
        gain, _ = measure_response(PreprocessChain(FS), 30.0)
        assert gain == pytest.approx(1 / math.sqrt(2), rel=0.02)

    def test_step_rejects_nonfinite_input(self):
        chain = PreprocessChain(FS)
        chain.step(1.0)
        with pytest.raises(StreamIntegrityError):
            chain.step(float("nan"))

    def test_run_names_first_bad_index(self):
        chain = PreprocessChain(FS)
        x = np.zeros(100)
        x[37] = np.inf
        with pytest.raises(StreamIntegrityError, match="37"):
            chain.run(x)

    def test_fs_below_minimum_rejected(self):
        with pytest.raises(ConfigurationError):
            PreprocessChain(50.0)


class TestSlowWaveIsolation:
    def test_passband_and_rejection(self):
        b, a = design_sw_isolation(FS)
        w = 2 * np.pi * np.array([1.0, 10.0, 0.05]) / FS
        _, h = signal.freqz(b, a, worN=w)
        assert abs(h[0]) > 0.85     # ~1 Hz passes
        assert abs(h[1]) < 0.3      # 10 Hz attenuated
        assert abs(h[2]) < 0.3      # drift attenuated


class TestBandPower:
    def test_sinusoid_power_is_half_amplitude_squared(self):
        # 60 uV peak-to-peak -> amplitude 30 -> 450 uV^2
        x = sinusoid(1.0, 30.0, 4.0)
        bp = band_power(x, FS, (0.5, 2.0))
        assert bp.power_uv2 == pytest.approx(450.0, rel=0.01)

    def test_out_of_band_sinusoid_contributes_nothing(self):
        x = sinusoid(20.0, 30.0, 4.0)
        bp = band_power(x, FS, (0.5, 4.0))
        assert bp.power_uv2 < 0.5

    def test_white_noise_total_power_is_variance(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(int(FS * 60)) * 10.0
        bp = band_power(x, FS, (0.1, FS / 2 - 0.1))
        assert bp.power_uv2 == pytest.approx(100.0, rel=0.05)

    def test_band_additivity(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(int(FS * 30))
        whole = band_power(x, FS, (1.0, 20.0)).power_uv2
        left = band_power(x, FS, (1.0, 9.99)).power_uv2
        right = band_power(x, FS, (10.0, 20.0)).power_uv2
        assert left + right == pytest.approx(whole, rel=1e-9)

    def test_invalid_band_rejected(self):
        x = np.zeros(int(FS * 4))
        for band in ((0.0, 2.0), (4.0, 2.0), (1.0, 130.0)):
            with pytest.raises(ConfigurationError):
                band_power(x, FS, band)

    def test_short_window_rejected(self):
        with pytest.raises(ConfigurationError):
            band_power(np.zeros(100), FS, (0.5, 4.0))
