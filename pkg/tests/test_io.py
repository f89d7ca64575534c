"""File formats: recording container, phase tracks, hypnograms, trigger
logs, config files. Round-trips and rejection of malformed input."""
import math

import numpy as np
import pytest

from swphase.errors import ConfigurationError, FileFormatError
from swphase.gate import GateConfig
from swphase.io import (
    MAGIC,
    apply_config,
    config_echo,
    gate_config_from,
    hash_file,
    parse_config_text,
    parse_stage_runs,
    read_hypnogram,
    read_phase_track,
    read_recording,
    read_recording_binary,
    read_recording_csv,
    read_trigger_log,
    tracker_config_from,
    write_hypnogram,
    write_phase_track,
    write_recording,
    write_recording_binary,
    write_recording_csv,
    write_trigger_log,
)
from swphase.oracle import PhaseTrack
from swphase.pipeline import LoggedTrigger
from swphase.recording import EegRecording


def sample_recording(n=1000, label="EEG Fpz-Cz", start=12.5):
    rng = np.random.default_rng(3)
    samples = np.asarray(rng.normal(0.0, 40.0, n), dtype=np.float32).astype(float)
    return EegRecording(samples=samples, fs=250.0, label=label, start_time=start)


class TestRecordingBinary:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "rec.swp"
        rec = sample_recording()
        write_recording_binary(path, rec)
        back = read_recording_binary(path)
        assert back.fs == rec.fs
        assert back.label == rec.label
        assert back.start_time == rec.start_time
        np.testing.assert_array_equal(back.samples, rec.samples)

    def test_body_is_float32(self, tmp_path):
        path = tmp_path / "rec.swp"
        rec = EegRecording(samples=np.array([1.0 / 3.0]), fs=250.0)
        write_recording_binary(path, rec)
        back = read_recording_binary(path)
        assert back.samples[0] == np.float32(1.0 / 3.0)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "rec.swp"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(FileFormatError, match="magic"):
            read_recording_binary(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "rec.swp"
        rec = sample_recording(10)
        write_recording_binary(path, rec)
        raw = bytearray(path.read_bytes())
        raw[4:6] = (99).to_bytes(2, "little")
        path.write_bytes(bytes(raw))
        with pytest.raises(FileFormatError, match="version"):
            read_recording_binary(path)

    def test_truncated_body(self, tmp_path):
        path = tmp_path / "rec.swp"
        write_recording_binary(path, sample_recording(100))
        raw = path.read_bytes()
        path.write_bytes(raw[:-10])
        with pytest.raises(FileFormatError, match="truncated"):
            read_recording_binary(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "rec.swp"
        write_recording_binary(path, sample_recording(100))
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(FileFormatError, match="trailing"):
            read_recording_binary(path)


class TestRecordingCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "rec.csv"
        rec = sample_recording(200)
        write_recording_csv(path, rec)
        back = read_recording_csv(path)
        assert back.fs == rec.fs
        assert back.label == rec.label
        np.testing.assert_allclose(back.samples, rec.samples, atol=1e-6)

    def test_missing_rate_header(self, tmp_path):
        path = tmp_path / "rec.csv"
        path.write_text("1.0\n2.0\n")
        with pytest.raises(FileFormatError, match="fs"):
            read_recording_csv(path)

    def test_non_numeric_sample(self, tmp_path):
        path = tmp_path / "rec.csv"
        path.write_text("# fs=250.0\n1.0\nbogus\n")
        with pytest.raises(FileFormatError, match="rec.csv:3"):
            read_recording_csv(path)

    def test_sniffing_dispatch(self, tmp_path):
        rec = sample_recording(50)
        bin_path = tmp_path / "as_binary.dat"
        csv_path = tmp_path / "as_text.csv"
        write_recording(bin_path, rec)
        write_recording(csv_path, rec)
        assert bin_path.read_bytes()[:4] == MAGIC
        assert csv_path.read_text().startswith("# fs=")
        for p in (bin_path, csv_path):
            back = read_recording(p)
            np.testing.assert_allclose(back.samples, rec.samples, atol=1e-6)


class TestPhaseTrack:
    def test_round_trip_with_invalid_samples(self, tmp_path):
        path = tmp_path / "track.swp"
        phase = np.array([10.0, 180.0, 350.0, 42.0])
        valid = np.array([True, False, True, True])
        write_phase_track(path, PhaseTrack(phase_deg=phase, valid=valid, fs=250.0))
        back = read_phase_track(path)
        np.testing.assert_array_equal(back.valid, valid)
        np.testing.assert_allclose(back.phase_deg[valid], phase[valid], atol=1e-4)
        assert back.phase_deg[1] == 0.0          # NaN mapped to a safe value
        assert back.fs == 250.0

    def test_rejects_other_labels(self, tmp_path):
        path = tmp_path / "notatrack.swp"
        write_recording_binary(path, sample_recording(10))
        with pytest.raises(FileFormatError, match="label"):
            read_phase_track(path)


class TestHypnogram:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "h.csv"
        stages = ["W", "N1", "N2", "N3", "REM", "N2"]
        write_hypnogram(path, stages)
        assert read_hypnogram(path) == stages

    def test_rejects_gap(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("epoch_index,stage\n0,W\n2,N2\n")
        with pytest.raises(FileFormatError, match="contiguous"):
            read_hypnogram(path)

    def test_rejects_unknown_stage(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("epoch_index,stage\n0,DEEP\n")
        with pytest.raises(FileFormatError, match="stage"):
            read_hypnogram(path)

    def test_rejects_empty(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("epoch_index,stage\n")
        with pytest.raises(FileFormatError, match="empty"):
            read_hypnogram(path)


class TestStageRuns:
    def test_expansion(self):
        assert parse_stage_runs("W*2 N1 N2*3") == ["W", "W", "N1", "N2", "N2", "N2"]

    @pytest.mark.parametrize("text", ["X*3", "N2*zero", "N2*0", "", "  "])
    def test_rejects(self, text):
        with pytest.raises(ConfigurationError):
            parse_stage_runs(text)


def sample_log():
    return [
        LoggedTrigger(1000, 4.0, "pv", 44.931, 55.2, True, "", True),
        LoggedTrigger(1300, 5.2, "pv", None, 12.0, False, "swa", True),
        LoggedTrigger(1700, 6.8, "pv", 46.5, 60.1, False, "onoff", False),
    ]


class TestTriggerLog:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "trig.csv"
        write_trigger_log(path, sample_log(), {"input_sha256": "ab" * 32})
        provenance, rows = read_trigger_log(path)
        assert provenance["input_sha256"] == "ab" * 32
        assert "swphase" in provenance
        assert len(rows) == 3
        assert rows[0].sample_index == 1000
        assert rows[0].delivered is True
        assert rows[1].tracker_phase_deg is None
        assert rows[1].suppression_reason == "swa"
        assert rows[2].on_window is False
        assert rows[2].tracker_phase_deg == pytest.approx(46.5)

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trigger_log(a, sample_log(), {"config": "x=1"})
        write_trigger_log(b, sample_log(), {"config": "x=1"})
        assert a.read_bytes() == b.read_bytes()
        assert hash_file(a) == hash_file(b)

    def test_rejects_header_drift(self, tmp_path):
        path = tmp_path / "trig.csv"
        path.write_text("sample_index,time_s\n1,0.004\n")
        with pytest.raises(FileFormatError, match="header"):
            read_trigger_log(path)

    def test_rejects_short_rows(self, tmp_path):
        path = tmp_path / "trig.csv"
        write_trigger_log(path, sample_log())
        path.write_text(path.read_text() + "5,0.02,pv\n")
        with pytest.raises(FileFormatError, match="fields"):
            read_trigger_log(path)


class TestConfigFiles:
    def test_parse_key_values(self):
        text = "# comment\nat_threshold_uv = 40\n\nrefractory_s=0.5\n"
        assert parse_config_text(text) == {"at_threshold_uv": "40",
                                           "refractory_s": "0.5"}

    def test_rejects_bare_words(self):
        with pytest.raises(FileFormatError, match="key = value"):
            parse_config_text("fast\n")

    def test_tracker_overrides_coerced(self):
        cfg = tracker_config_from({"algorithm": "pll", "k_pll": "2e-4",
                                   "phi_target_deg": "120"})
        assert cfg.algorithm == "pll"
        assert cfg.k_pll == pytest.approx(2e-4)
        assert cfg.phi_target_deg == pytest.approx(120.0)
        assert isinstance(cfg.phi_target_deg, float)

    def test_gate_overrides_coerced(self):
        cfg = gate_config_from({"onoff_enabled": "true",
                                "swa_threshold_uv2": "90"})
        assert cfg.onoff_enabled is True
        assert cfg.swa_threshold_uv2 == pytest.approx(90.0)

    def test_int_fields_stay_int(self):
        cfg = tracker_config_from({"maf_span": "125"})
        assert cfg.maf_span == 125
        assert isinstance(cfg.maf_span, int)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError, match="unknown"):
            tracker_config_from({"threshold": "40"})

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigurationError, match="bad value"):
            tracker_config_from({"at_threshold_uv": "forty"})
        with pytest.raises(ConfigurationError, match="boolean"):
            gate_config_from({"onoff_enabled": "maybe"})

    def test_echo_is_sorted_and_flat(self):
        echo = config_echo(GateConfig())
        keys = [part.split("=")[0] for part in echo.split(";")]
        assert keys == sorted(keys)
        assert "\n" not in echo

    def test_apply_config_returns_new_instance(self):
        base = GateConfig()
        out = apply_config(base, {"swa_threshold_uv2": "50"})
        assert out is not base
        assert base.swa_threshold_uv2 != 50.0
