"""File formats.

Recording container, binary flavor (little-endian throughout):

    magic    4 bytes  b"SWPH"
    version  u16      currently 1
    fs       f64      sampling rate, Hz
    label    u16 length + that many UTF-8 bytes
    count    u64      number of samples
    start    f64      recording start time, seconds
    body     count x f32 sample values, microvolts

The CSV flavor carries the same header fields as ``# key=value`` comment
lines followed by one sample per line. Readers sniff the magic, so either
flavor can be handed to any command.

Phase tracks reuse the binary container with label "phase_deg"; invalid
samples are NaN.

Trigger logs are CSV with a ``#``-prefixed provenance header (library
version, SHA-256 of the input file, configuration echo). No timestamps:
rerunning a command on the same input produces byte-identical output.

Hypnograms are ``epoch_index,stage`` CSV, contiguous from epoch 0; the
compact run-length form "W*10 N1*3 N2*30" is accepted wherever a hypnogram
file is, via parse_stage_runs.

Configuration files are flat ``key = value`` lines with ``#`` comments.
"""
from __future__ import annotations

import hashlib
import math
import struct
from typing import Optional

import numpy as np

from .errors import ConfigurationError, FileFormatError
from .gate import GateConfig
from .oracle import PhaseTrack
from .recording import EegRecording, STAGES
from .trackers import TrackerConfig

MAGIC = b"SWPH"
FORMAT_VERSION = 1


def hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise FileFormatError(f"truncated file: expected {n} bytes for {what}")
    return data


def write_recording_binary(path, recording: EegRecording) -> None:
    label = recording.label.encode("utf-8")
    samples = np.asarray(recording.samples, dtype="<f4")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", FORMAT_VERSION))
        f.write(struct.pack("<d", recording.fs))
        f.write(struct.pack("<H", len(label)))
        f.write(label)
        f.write(struct.pack("<Q", len(samples)))
        f.write(struct.pack("<d", recording.start_time))
        f.write(samples.tobytes())


def read_recording_binary(path) -> EegRecording:
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != MAGIC:
            raise FileFormatError(f"{path}: not a recording file (bad magic)")
        (version,) = struct.unpack("<H", _read_exact(f, 2, "version"))
        if version != FORMAT_VERSION:
            raise FileFormatError(f"{path}: unsupported format version {version}")
        (fs,) = struct.unpack("<d", _read_exact(f, 8, "sampling rate"))
        (label_len,) = struct.unpack("<H", _read_exact(f, 2, "label length"))
        label = _read_exact(f, label_len, "label").decode("utf-8")
        (count,) = struct.unpack("<Q", _read_exact(f, 8, "sample count"))
        (start,) = struct.unpack("<d", _read_exact(f, 8, "start time"))
        body = _read_exact(f, 4 * count, "sample data")
        extra = f.read(1)
        if extra:
            raise FileFormatError(f"{path}: trailing bytes after sample data")
    samples = np.frombuffer(body, dtype="<f4").astype(np.float64)
    return EegRecording(samples=samples, fs=fs, label=label, start_time=start)


def write_recording_csv(path, recording: EegRecording) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# fs={recording.fs!r}\n")
        f.write(f"# label={recording.label}\n")
        f.write(f"# start_time={recording.start_time!r}\n")
        for v in np.asarray(recording.samples, dtype=np.float32):
            f.write(f"{float(v)!r}\n")


def read_recording_csv(path) -> EegRecording:
    header = {}
    values = []
    with open(path, "r", encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    header[key.strip()] = val.strip()
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise FileFormatError(f"{path}:{ln}: not a number: {line!r}")
    if "fs" not in header:
        raise FileFormatError(f"{path}: missing '# fs=' header line")
    try:
        fs = float(header["fs"])
    except ValueError:
        raise FileFormatError(f"{path}: bad sampling rate {header['fs']!r}")
    return EegRecording(samples=np.asarray(values, dtype=np.float64), fs=fs,
                        label=header.get("label", "EEG"),
                        start_time=float(header.get("start_time", 0.0)))


def read_recording(path) -> EegRecording:
    with open(path, "rb") as f:
        head = f.read(4)
    if head == MAGIC:
        return read_recording_binary(path)
    return read_recording_csv(path)


def write_recording(path, recording: EegRecording) -> None:
    if str(path).lower().endswith(".csv"):
        write_recording_csv(path, recording)
    else:
        write_recording_binary(path, recording)


def write_phase_track(path, track: PhaseTrack) -> None:
    phase = np.asarray(track.phase_deg, dtype=np.float64).copy()
    phase[~np.asarray(track.valid, dtype=bool)] = math.nan
    write_recording_binary(path, EegRecording(samples=phase, fs=track.fs,
                                              label="phase_deg"))


def read_phase_track(path) -> PhaseTrack:
    rec = read_recording_binary(path)
    if rec.label != "phase_deg":
        raise FileFormatError(f"{path}: not a phase track (label {rec.label!r})")
    phase = np.asarray(rec.samples, dtype=np.float64)
    valid = np.isfinite(phase)
    phase = np.where(valid, phase, 0.0)
    return PhaseTrack(phase_deg=phase, valid=valid, fs=rec.fs)


def write_hypnogram(path, stages) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch_index,stage\n")
        for i, s in enumerate(stages):
            f.write(f"{i},{s}\n")


def read_hypnogram(path) -> list:
    stages = []
    with open(path, "r", encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ln == 1 and line.lower().startswith("epoch_index"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FileFormatError(f"{path}:{ln}: expected epoch_index,stage")
            try:
                idx = int(parts[0])
            except ValueError:
                raise FileFormatError(f"{path}:{ln}: bad epoch index {parts[0]!r}")
            if idx != len(stages):
                raise FileFormatError(
                    f"{path}:{ln}: epochs must be contiguous from 0, got {idx}")
            stage = parts[1].strip()
            if stage not in STAGES:
                raise FileFormatError(f"{path}:{ln}: unknown stage {stage!r}")
            stages.append(stage)
    if not stages:
        raise FileFormatError(f"{path}: empty hypnogram")
    return stages


def parse_stage_runs(text: str) -> list:
    """Expand "W*10 N1*3 N2*30" into a per-epoch stage list."""
    out = []
    for tok in text.split():
        stage, star, count = tok.partition("*")
        if stage not in STAGES:
            raise ConfigurationError(f"unknown stage {stage!r} in {tok!r}")
        n = 1
        if star:
            try:
                n = int(count)
            except ValueError:
                raise ConfigurationError(f"bad repeat count in {tok!r}")
            if n < 1:
                raise ConfigurationError(f"repeat count must be >= 1 in {tok!r}")
        out.extend([stage] * n)
    if not out:
        raise ConfigurationError("empty stage specification")
    return out


TRIGGER_COLUMNS = ("sample_index", "time_s", "algorithm", "tracker_phase_deg",
                   "amplitude_uv", "delivered", "suppression_reason",
                   "on_window")


def write_trigger_log(path, log, provenance: Optional[dict] = None) -> None:
    """CSV trigger log; provenance keys become '# key=value' header lines."""
    from . import __version__
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# swphase={__version__}\n")
        for key, val in (provenance or {}).items():
            f.write(f"# {key}={val}\n")
        f.write(",".join(TRIGGER_COLUMNS) + "\n")
        for e in log:
            phase = "" if e.tracker_phase_deg is None else f"{e.tracker_phase_deg:.6f}"
            f.write(f"{e.sample_index},{e.time_s:.6f},{e.algorithm},{phase},"
                    f"{e.amplitude_uv:.6f},{int(e.delivered)},"
                    f"{e.suppression_reason},{int(e.on_window)}\n")


def read_trigger_log(path):
    """Returns (provenance dict, list of row dicts with typed fields)."""
    from .pipeline import LoggedTrigger
    provenance = {}
    rows = []
    saw_header = False
    with open(path, "r", encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, val = body.partition("=")
                provenance[key.strip()] = val.strip()
                continue
            if not saw_header:
                if line.split(",") != list(TRIGGER_COLUMNS):
                    raise FileFormatError(f"{path}:{ln}: unexpected column header")
                saw_header = True
                continue
            parts = line.split(",")
            if len(parts) != len(TRIGGER_COLUMNS):
                raise FileFormatError(f"{path}:{ln}: expected "
                                      f"{len(TRIGGER_COLUMNS)} fields")
            try:
                rows.append(LoggedTrigger(
                    sample_index=int(parts[0]),
                    time_s=float(parts[1]),
                    algorithm=parts[2],
                    tracker_phase_deg=float(parts[3]) if parts[3] else None,
                    amplitude_uv=float(parts[4]),
                    delivered=bool(int(parts[5])),
                    suppression_reason=parts[6],
                    on_window=bool(int(parts[7])),
                ))
            except ValueError as exc:
                raise FileFormatError(f"{path}:{ln}: {exc}")
    if not saw_header:
        raise FileFormatError(f"{path}: missing column header")
    return provenance, rows


def parse_config_text(text: str) -> dict:
    out = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FileFormatError(f"line {ln}: expected key = value")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def read_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        v = _BOOL.get(value.lower())
        if v is None:
            raise ConfigurationError(f"expected a boolean, got {value!r}")
        return v
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, tuple):
        return tuple(float(v) for v in value.split(","))
    if like is None:       # optional numeric field (unset default)
        return float(value)
    return value


def apply_config(base, overrides: dict):
    """New dataclass instance with string overrides coerced per field."""
    fields = dict(base.__dict__)
    for key, raw in overrides.items():
        if key not in fields:
            raise ConfigurationError(
                f"unknown configuration key {key!r} for {type(base).__name__}")
        try:
            fields[key] = _coerce(raw, fields[key])
        except ValueError:
            raise ConfigurationError(f"bad value for {key}: {raw!r}")
    return type(base)(**fields)


def config_echo(cfg) -> str:
    """Flat one-line echo of a dataclass config for provenance headers."""
    return ";".join(f"{k}={v}" for k, v in sorted(cfg.__dict__.items()))


def tracker_config_from(overrides: dict) -> TrackerConfig:
    return apply_config(TrackerConfig(), overrides)


def gate_config_from(overrides: dict) -> GateConfig:
    return apply_config(GateConfig(), overrides)
