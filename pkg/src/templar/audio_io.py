"""WAV decoding and endpoint trimming.

Only mono 16 kHz RIFF/WAVE files are accepted. Samples are normalized to
[-1, 1]; integer PCM of width ``b`` bits is divided by ``2**(b-1)`` so that
the most negative code maps exactly to -1.0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    SilenceError,
    UnsupportedChannelsError,
    UnsupportedEncodingError,
    UnsupportedSampleRateError,
    WavFormatError,
)

SAMPLE_RATE_HZ = 16000

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

# Trailing 14 bytes shared by the KSDATAFORMAT_SUBTYPE_* GUIDs.
_GUID_TAIL = b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Normalized mono waveform."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size == 0:
            raise ValueError("samples must be non-empty")
        if not np.all(np.isfinite(samples)) or np.any(np.abs(samples) > 1.0):
            raise ValueError("samples must be finite and lie in [-1, 1]")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample_rate_hz must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return self.sample_rate_hz == other.sample_rate_hz and np.array_equal(
            self.samples, other.samples
        )

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class TrimConfig:
    energy_threshold_ratio: float = 0.01
    guard_frames: int = 2
    trim_frame_ms: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.energy_threshold_ratio < 1.0:
            raise ConfigError("energy_threshold_ratio must lie in (0, 1)")
        if self.guard_frames < 0:
            raise ConfigError("guard_frames must be non-negative")
        if not self.trim_frame_ms > 0:
            raise ConfigError("trim_frame_ms must be positive")


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        chunk_id, size = struct.unpack_from("<4sI", data, pos)
        body_start = pos + 8
        body_end = body_start + size
        if body_end > len(data):
            raise WavFormatError(
                f"chunk {chunk_id!r} declares {size} bytes but only "
                f"{len(data) - body_start} remain"
            )
        yield chunk_id, data[body_start:body_end]
        pos = body_end + (size & 1)


def _parse_fmt(body: bytes):
    if len(body) < 16:
        raise WavFormatError("fmt chunk too short")
    tag, channels, rate, _byte_rate, block_align, bits = struct.unpack_from(
        "<HHIIHH", body
    )
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise WavFormatError("extensible fmt chunk too short")
        subformat = body[24:40]
        if subformat[2:] != _GUID_TAIL:
            raise UnsupportedEncodingError("unrecognized extensible sub-format GUID")
        tag = struct.unpack_from("<H", subformat)[0]
    return tag, channels, rate, block_align, bits


def _decode_pcm(raw: bytes, bits: int) -> np.ndarray:
    if bits == 8:
        # 8-bit WAV is unsigned with a 128 offset
        return (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    if bits == 16:
        return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if bits == 24:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v >= 1 << 23, v - (1 << 24), v)
        return v.astype(np.float64) / float(1 << 23)
    if bits == 32:
        return np.frombuffer(raw, dtype="<i4").astype(np.float64) / float(1 << 31)
    raise UnsupportedEncodingError(f"unsupported PCM bit depth {bits}")


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode a mono RIFF/WAVE byte string into an :class:`AudioBuffer`.

    Accepts integer PCM (8/16/24/32 bit) and IEEE float (32/64 bit), either
    as plain format tags or wrapped in WAVE_FORMAT_EXTENSIBLE. Float samples
    outside [-1, 1] are clipped.

    Raises:
        WavFormatError: the RIFF structure is malformed or has no audio.
        UnsupportedEncodingError: compressed or unknown sample encoding.
        UnsupportedChannelsError: more than one channel.
        UnsupportedSampleRateError: sample rate other than 16 kHz.
    """
    data = bytes(data)
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError("not a RIFF/WAVE container")

    fmt = None
    raw = None
    for chunk_id, body in _iter_chunks(data):
        if chunk_id == b"fmt " and fmt is None:
            fmt = _parse_fmt(body)
        elif chunk_id == b"data" and raw is None:
            raw = body
    if fmt is None:
        raise WavFormatError("missing fmt chunk")
    if raw is None:
        raise WavFormatError("missing data chunk")

    tag, channels, rate, block_align, bits = fmt
    if tag not in (WAVE_FORMAT_PCM, WAVE_FORMAT_IEEE_FLOAT):
        raise UnsupportedEncodingError(f"unsupported format tag 0x{tag:04x}")
    if channels != 1:
        raise UnsupportedChannelsError(f"expected 1 channel, got {channels}")
    if rate != SAMPLE_RATE_HZ:
        raise UnsupportedSampleRateError(
            f"expected {SAMPLE_RATE_HZ} Hz, got {rate} Hz (resampling is not supported)"
        )
    if bits % 8 or bits == 0 or block_align != bits // 8:
        raise WavFormatError(f"inconsistent block_align={block_align} for {bits}-bit samples")

    width = bits // 8
    raw = raw[: len(raw) - len(raw) % width]
    if not raw:
        raise WavFormatError("data chunk holds no samples")

    if tag == WAVE_FORMAT_IEEE_FLOAT:
        if bits not in (32, 64):
            raise UnsupportedEncodingError(f"unsupported float width {bits}")
        samples = np.frombuffer(raw, dtype="<f4" if bits == 32 else "<f8").astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise WavFormatError("non-finite float samples")
        samples = np.clip(samples, -1.0, 1.0)
    else:
        samples = _decode_pcm(raw, bits)
    return AudioBuffer(samples, rate)


def read_wav(path) -> AudioBuffer:
    with open(path, "rb") as fh:
        return decode_wav(fh.read())


def encode_wav(audio: AudioBuffer) -> bytes:
    """Encode as 16-bit PCM mono. Samples are scaled by 32768 and clipped."""
    pcm = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = pcm.tobytes()
    fmt = struct.pack(
        "<HHIIHH", WAVE_FORMAT_PCM, 1, audio.sample_rate_hz, audio.sample_rate_hz * 2, 2, 16
    )
    body = (
        b"WAVE"
        + b"fmt " + struct.pack("<I", len(fmt)) + fmt
        + b"data" + struct.pack("<I", len(payload)) + payload
    )
    if len(payload) & 1:
        body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def write_wav(path, audio: AudioBuffer) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav(audio))


def frame_energies(samples: np.ndarray, frame_len: int) -> np.ndarray:
    """Sum of squares over consecutive non-overlapping frames; the last may be partial."""
    n = samples.size
    count = -(-n // frame_len)
    padded = np.zeros(count * frame_len)
    padded[:n] = samples
    return np.sum(padded.reshape(count, frame_len) ** 2, axis=1)


def trim_endpoints(audio: AudioBuffer, cfg: TrimConfig = TrimConfig()) -> AudioBuffer:
    """Crop leading and trailing low-energy frames.

    The kept span runs from the first to the last frame whose energy exceeds
    ``energy_threshold_ratio`` times the peak frame energy, widened by
    ``guard_frames`` frames on each side and clamped to the buffer.
    """
    frame_len = max(1, int(round(cfg.trim_frame_ms * audio.sample_rate_hz / 1000.0)))
    energy = frame_energies(audio.samples, frame_len)
    peak = energy.max()
    if peak <= 0.0:
        raise SilenceError("buffer contains no signal above the energy threshold")
    active = np.flatnonzero(energy > cfg.energy_threshold_ratio * peak)
    first = max(int(active[0]) - cfg.guard_frames, 0)
    last = min(int(active[-1]) + cfg.guard_frames, energy.size - 1)
    start = first * frame_len
    stop = min((last + 1) * frame_len, audio.samples.size)
    if start == 0 and stop == audio.samples.size:
        return audio
    return AudioBuffer(audio.samples[start:stop], audio.sample_rate_hz)
