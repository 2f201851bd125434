"""MFCC frontend: framing, windowing, FFT, mel filterbank, log, DCT.

The pipeline has no pre-emphasis, liftering or delta stage. Coefficient 0
(the log-energy term) is kept as the first of the ``num_ceps`` outputs.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, fields

import numpy as np
import scipy.fft

from .audio_io import AudioBuffer
from .errors import ConfigError, DomainError, ShapeError, TooShortError

MEL_SCALE = 2595.0
MEL_BREAK_HZ = 700.0


class Window(str, enum.Enum):
    RECTANGULAR = "rectangular"
    HAMMING = "hamming"


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class MfccConfig:
    """Frontend parameters.

    ``fft_size=None`` means the smallest power of two that holds one frame.
    """

    frame_len_ms: float = 25.0
    frame_shift_ms: float = 10.0
    window: Window = Window.RECTANGULAR
    fft_size: int | None = None
    num_filters: int = 26
    fmin_hz: float = 300.0
    fmax_hz: float = 5000.0
    num_ceps: int = 12
    log_floor: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "window", Window(self.window))
        if not 0 < self.frame_shift_ms <= self.frame_len_ms:
            raise ConfigError("require 0 < frame_shift_ms <= frame_len_ms")
        if self.fft_size is not None and not _is_pow2(self.fft_size):
            raise ConfigError(f"fft_size must be a power of two, got {self.fft_size}")
        if self.num_filters < 1 or self.num_ceps < 1:
            raise ConfigError("num_filters and num_ceps must be positive")
        if self.num_ceps > self.num_filters:
            raise ConfigError("num_ceps cannot exceed num_filters")
        if not 0 <= self.fmin_hz < self.fmax_hz:
            raise ConfigError("require 0 <= fmin_hz < fmax_hz")
        if not self.log_floor > 0:
            raise ConfigError("log_floor must be positive")

    def frame_length(self, sample_rate_hz: int) -> int:
        return int(round(self.frame_len_ms * sample_rate_hz / 1000.0))

    def frame_shift(self, sample_rate_hz: int) -> int:
        return int(round(self.frame_shift_ms * sample_rate_hz / 1000.0))

    def resolved_fft_size(self, sample_rate_hz: int) -> int:
        n = self.frame_length(sample_rate_hz)
        if self.fft_size is not None:
            return self.fft_size
        return 1 << max(0, (n - 1).bit_length())

    def check_rate(self, sample_rate_hz: int) -> None:
        if self.fmax_hz > sample_rate_hz / 2:
            raise ConfigError(
                f"fmax_hz={self.fmax_hz} exceeds Nyquist for {sample_rate_hz} Hz audio"
            )
        n = self.frame_length(sample_rate_hz)
        if n < 1 or self.frame_shift(sample_rate_hz) < 1:
            raise ConfigError("frame length and shift must be at least one sample")
        if self.resolved_fft_size(sample_rate_hz) < n:
            raise ConfigError(f"fft_size {self.fft_size} is shorter than the {n}-sample frame")

    def to_text(self) -> str:
        """Canonical ``key=value`` form; one line per field, fixed order."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Window):
                value = value.value
            elif value is None:
                value = "auto"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MfccConfig":
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in types:
                raise ConfigError(f"line {lineno}: unrecognized entry {line!r}")
            try:
                if key == "window":
                    kwargs[key] = Window(value.lower())
                elif key == "fft_size":
                    kwargs[key] = None if value == "auto" else int(value)
                elif key in ("num_filters", "num_ceps"):
                    kwargs[key] = int(value)
                else:
                    kwargs[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
        return cls(**kwargs)

    def fingerprint(self) -> int:
        digest = hashlib.sha256(self.to_text().encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """``T x num_ceps`` cepstral coefficients tagged with the producing config."""

    frames: np.ndarray
    config_fingerprint: int

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.dtype not in (np.float32, np.float64):
            frames = frames.astype(np.float64)
        if frames.ndim != 2 or frames.shape[0] == 0 or frames.shape[1] == 0:
            raise ShapeError(f"feature matrix must be non-empty 2-D, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("feature matrix contains NaN or inf")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_ceps(self) -> int:
        return self.frames.shape[1]

    def __len__(self):
        return self.frames.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return (
            self.config_fingerprint == other.config_fingerprint
            and self.frames.dtype == other.frames.dtype
            and np.array_equal(self.frames, other.frames)
        )


def hz_to_mel(f):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise DomainError("frequency must be non-negative")
    m = MEL_SCALE * np.log10(1.0 + f / MEL_BREAK_HZ)
    return float(m) if m.ndim == 0 else m


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0) or np.any(np.isnan(m)):
        raise DomainError("mel value must be non-negative")
    f = MEL_BREAK_HZ * (10.0 ** (m / MEL_SCALE) - 1.0)
    return float(f) if f.ndim == 0 else f


def frame_signal(audio: AudioBuffer, cfg: MfccConfig) -> np.ndarray:
    """Split into overlapping frames, shape ``(T, frame_len)``.

    ``T = (len - frame_len) // shift + 1``, so samples after the last full
    frame are dropped.
    """
    n = cfg.frame_length(audio.sample_rate_hz)
    hop = cfg.frame_shift(audio.sample_rate_hz)
    x = audio.samples
    if x.size < n:
        raise TooShortError(f"{x.size} samples is shorter than one {n}-sample frame")
    count = (x.size - n) // hop + 1
    idx = np.arange(n)[None, :] + hop * np.arange(count)[:, None]
    return x[idx]


def window_weights(n: int, window: Window) -> np.ndarray:
    window = Window(window)
    if window is Window.RECTANGULAR or n == 1:
        return np.ones(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))


def apply_window(frame, window: Window) -> np.ndarray:
    """Taper along the last axis. Works on one frame or a stack of frames."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size == 0:
        raise ShapeError("cannot window an empty frame")
    return frame * window_weights(frame.shape[-1], window)


def power_spectrum(frame, fft_size: int) -> np.ndarray:
    """``|X[k]|**2`` for ``k = 0..fft_size/2`` after zero-padding the last axis."""
    frame = np.asarray(frame, dtype=np.float64)
    if not _is_pow2(fft_size) or fft_size < frame.shape[-1]:
        raise ConfigError(
            f"fft_size must be a power of two >= frame length {frame.shape[-1]}, got {fft_size}"
        )
    spec = np.fft.rfft(frame, n=fft_size, axis=-1)
    return spec.real**2 + spec.imag**2


def _snap(freq_hz: np.ndarray, fft_size: int, sample_rate_hz: int) -> np.ndarray:
    # nearest bin, exact halves round down
    pos = freq_hz * fft_size / sample_rate_hz
    return np.ceil(pos - 0.5).astype(int)


def filter_edge_bins(cfg: MfccConfig, sample_rate_hz: int, fft_size: int) -> np.ndarray:
    mels = np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.num_filters + 2)
    return _snap(mel_to_hz(mels), fft_size, sample_rate_hz)


def build_mel_filterbank(cfg: MfccConfig, sample_rate_hz: int, fft_size: int) -> np.ndarray:
    """Triangular filters, shape ``(num_filters, fft_size // 2 + 1)``.

    Filter ``m`` rises from edge bin ``m`` (weight 0) to edge ``m+1``
    (weight 1) and falls back to 0 at edge ``m+2``.
    """
    if cfg.fmax_hz > sample_rate_hz / 2:
        raise ConfigError(f"fmax_hz={cfg.fmax_hz} exceeds Nyquist for {sample_rate_hz} Hz")
    if not _is_pow2(fft_size):
        raise ConfigError(f"fft_size must be a power of two, got {fft_size}")
    edges = filter_edge_bins(cfg, sample_rate_hz, fft_size)
    if np.any(np.diff(edges) <= 0):
        raise ConfigError(
            f"{cfg.num_filters} filters are too many for a {fft_size}-point FFT: "
            "filter edges collapse onto the same bin"
        )
    bins = np.arange(fft_size // 2 + 1)
    fb = np.zeros((cfg.num_filters, bins.size))
    for m in range(cfg.num_filters):
        lo, mid, hi = edges[m : m + 3]
        rise = (bins - lo) / (mid - lo)
        fall = (hi - bins) / (hi - mid)
        fb[m] = np.clip(np.minimum(rise, fall), 0.0, 1.0)
    return fb


def dct_ortho(x, axis: int = -1) -> np.ndarray:
    """Orthonormal DCT-II."""
    return scipy.fft.dct(np.asarray(x, dtype=np.float64), type=2, norm="ortho", axis=axis)


def idct_ortho(x, axis: int = -1) -> np.ndarray:
    return scipy.fft.idct(np.asarray(x, dtype=np.float64), type=2, norm="ortho", axis=axis)


def log_mel_energies(audio: AudioBuffer, cfg: MfccConfig) -> np.ndarray:
    cfg.check_rate(audio.sample_rate_hz)
    fft_size = cfg.resolved_fft_size(audio.sample_rate_hz)
    frames = apply_window(frame_signal(audio, cfg), cfg.window)
    spec = power_spectrum(frames, fft_size)
    fb = build_mel_filterbank(cfg, audio.sample_rate_hz, fft_size)
    return np.log(np.maximum(spec @ fb.T, cfg.log_floor))


def cepstra_from_log_energies(log_energies: np.ndarray, num_ceps: int) -> np.ndarray:
    return dct_ortho(log_energies, axis=-1)[..., :num_ceps]


def extract_mfcc(audio: AudioBuffer, cfg: MfccConfig = MfccConfig()) -> FeatureMatrix:
    """Run the full frontend on ``audio``; one row per frame, in time order."""
    ceps = cepstra_from_log_energies(log_mel_energies(audio, cfg), cfg.num_ceps)
    return FeatureMatrix(ceps, cfg.fingerprint())
