"""Audio front end: WAV loading, 24-band log-Mel frames, masking augmentation.

Frames use a 32 ms window and 10 ms shift at a fixed 16 kHz operating rate;
other sample rates are resampled on load. All functions are pure; the only
randomness (augmentation) is driven by an explicit per-call seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import AudioFormatError, TooShortError

OPERATING_RATE = 16000
N_MELS = 24
WINDOW_MS = 32
SHIFT_MS = 10
LOG_EPS = 1e-10


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray  # float64 in [-1, 1]
    sample_rate: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("waveform must be a non-empty 1-D array")
        if not np.all(np.isfinite(s)):
            raise ValueError("waveform contains non-finite samples")
        if np.max(np.abs(s)) > 1.0 + 1e-9:
            raise ValueError("waveform samples must lie in [-1, 1]")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class MelFrames:
    values: np.ndarray  # (T, N_MELS)
    frame_shift_ms: int = SHIFT_MS
    window_ms: int = WINDOW_MS

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] != N_MELS:
            raise ValueError(f"mel frames must be (T, {N_MELS}) with T >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("mel frames contain non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class AugmentConfig:
    max_freq_masks: int = 2
    max_freq_width: int = 4
    max_time_masks: int = 2
    max_time_width: int = 20
    seed: int = 0


def load_wav(path, target_rate: int = OPERATING_RATE) -> Waveform:
    """Read a RIFF/PCM WAV file, downmix to mono, normalize and resample.

    16-bit PCM is scaled by 1/32768, 32-bit PCM by 1/2^31; float files are
    rescaled only if they exceed full scale.
    """
    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError) as e:
        raise AudioFormatError(f"{path}: {e}") from e
    if data.size == 0:
        raise AudioFormatError(f"{path}: file contains no audio samples")
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
        peak = np.max(np.abs(samples))
        if peak > 1.0:
            samples = samples / peak
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        raise AudioFormatError(f"{path}: unsupported sample format {data.dtype}")
    if rate != target_rate:
        g = np.gcd(int(target_rate), int(rate))
        samples = resample_poly(samples, target_rate // g, rate // g)
        samples = np.clip(samples, -1.0, 1.0)
        rate = target_rate
    return Waveform(samples=samples, sample_rate=int(rate))


def _mel_scale(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int, fmin: float = 0.0, fmax: float = 8000.0) -> np.ndarray:
    """Triangular filters on the mel scale, (n_mels, n_fft//2 + 1)."""
    mel_pts = np.linspace(_mel_scale(fmin), _mel_scale(fmax), n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)
    bin_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    fb = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        lo, center, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (bin_freqs - lo) / (center - lo)
        down = (hi - bin_freqs) / (hi - center)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def frame_count(n_samples: int, window: int, hop: int) -> int:
    return (n_samples - window) // hop + 1


def mel_spectrogram(w: Waveform) -> MelFrames:
    """Log-compressed 24-band Mel energies, 32 ms window / 10 ms shift.

    Each frame is mean-removed (DC rejection) and Hann-windowed before the
    FFT; energies get a log floor of LOG_EPS so silence maps to log(eps).
    """
    if w.sample_rate != OPERATING_RATE:
        raise ValueError(f"expected {OPERATING_RATE} Hz input, resample on load")
    window = OPERATING_RATE * WINDOW_MS // 1000
    hop = OPERATING_RATE * SHIFT_MS // 1000
    n = w.samples.size
    if n < window:
        raise TooShortError(f"waveform of {n} samples is shorter than one {window}-sample window")
    t = frame_count(n, window, hop)
    idx = np.arange(window)[None, :] + hop * np.arange(t)[:, None]
    frames = w.samples[idx]
    frames = frames - frames.mean(axis=1, keepdims=True)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(window) / window)
    spectrum = np.fft.rfft(frames * hann, n=window, axis=1)
    power = np.abs(spectrum) ** 2
    fb = mel_filterbank(N_MELS, window, OPERATING_RATE)
    energies = power @ fb.T
    return MelFrames(values=np.log(energies + LOG_EPS))


def normalize(m: MelFrames) -> MelFrames:
    """Per-utterance, per-band mean/variance normalization."""
    v = m.values
    mu = v.mean(axis=0, keepdims=True)
    sd = v.std(axis=0, keepdims=True)
    out = (v - mu) / np.maximum(sd, 1e-8)
    return MelFrames(values=out, frame_shift_ms=m.frame_shift_ms, window_ms=m.window_ms)


def spec_augment(m: MelFrames, cfg: AugmentConfig) -> MelFrames:
    """Mask random time/frequency stripes with the utterance mean.

    Deterministic for a given (input, config) pair; zero mask counts or
    zero widths leave the input untouched.
    """
    t, f = m.values.shape
    if cfg.max_freq_width > f:
        raise ValueError(f"max_freq_width {cfg.max_freq_width} exceeds {f} bands")
    if cfg.max_time_width > t:
        raise ValueError(f"max_time_width {cfg.max_time_width} exceeds {t} frames")
    if cfg.max_freq_masks < 0 or cfg.max_time_masks < 0:
        raise ValueError("mask counts must be nonnegative")
    out = m.values.copy()
    fill = float(m.values.mean())
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.max_freq_masks):
        width = int(rng.integers(0, cfg.max_freq_width + 1))
        if width == 0:
            continue
        start = int(rng.integers(0, f - width + 1))
        out[:, start : start + width] = fill
    for _ in range(cfg.max_time_masks):
        width = int(rng.integers(0, cfg.max_time_width + 1))
        if width == 0:
            continue
        start = int(rng.integers(0, t - width + 1))
        out[start : start + width, :] = fill
    return MelFrames(values=out, frame_shift_ms=m.frame_shift_ms, window_ms=m.window_ms)


def frames_to_csv(m: MelFrames, path) -> None:
    """Dump frames as CSV, one row per frame, 24 columns."""
    np.savetxt(path, m.values, delimiter=",", fmt="%.10g")


def frames_from_csv(path) -> np.ndarray:
    values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return values
