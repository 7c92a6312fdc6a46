"""WAV loading, Mel frames, masking augmentation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.io import wavfile

from plfkit import signal
from plfkit.errors import AudioFormatError, TooShortError
from plfkit.signal import AugmentConfig, MelFrames, Waveform, frame_count


def _write_wav(path, data, rate=16000):
    wavfile.write(path, rate, data)
    return path


def test_load_silence(tmp_path):
    path = _write_wav(tmp_path / "sil.wav", np.zeros(16000, dtype=np.int16))
    w = signal.load_wav(path)
    assert w.sample_rate == 16000
    assert w.samples.size == 16000
    assert np.all(w.samples == 0.0)


def test_load_fullscale_square_wave(tmp_path):
    data = np.empty(1000, dtype=np.int16)
    data[0::2] = 32767
    data[1::2] = -32767
    path = _write_wav(tmp_path / "sq.wav", data)
    w = signal.load_wav(path)
    assert np.max(w.samples) == pytest.approx(32767 / 32768)
    assert np.min(w.samples) == pytest.approx(-32767 / 32768)


def test_load_float32_and_stereo(tmp_path):
    data = np.stack([np.linspace(-0.5, 0.5, 800), np.linspace(0.5, -0.5, 800)], axis=1).astype(np.float32)
    path = _write_wav(tmp_path / "st.wav", data)
    w = signal.load_wav(path)
    assert w.samples.ndim == 1
    assert np.max(np.abs(w.samples)) <= 1.0


def test_load_resamples_other_rates(tmp_path):
    path = _write_wav(tmp_path / "8k.wav", np.zeros(8000, dtype=np.int16), rate=8000)
    w = signal.load_wav(path)
    assert w.sample_rate == 16000
    assert w.samples.size == 16000


def test_truncated_header_is_format_error(tmp_path):
    path = tmp_path / "trunc.wav"
    path.write_bytes(b"RIFF\x10\x00\x00\x00WAVEfmt")
    with pytest.raises(AudioFormatError):
        signal.load_wav(path)


def test_empty_audio_is_format_error(tmp_path):
    path = _write_wav(tmp_path / "empty.wav", np.zeros(0, dtype=np.int16))
    with pytest.raises(AudioFormatError):
        signal.load_wav(path)


def test_waveform_validation():
    with pytest.raises(ValueError):
        Waveform(samples=np.array([]), sample_rate=16000)
    with pytest.raises(ValueError):
        Waveform(samples=np.array([0.0, np.nan]), sample_rate=16000)
    with pytest.raises(ValueError):
        Waveform(samples=np.array([1.5]), sample_rate=16000)


def test_mel_one_window_exactly():
    w = Waveform(samples=np.random.default_rng(0).uniform(-0.5, 0.5, 512), sample_rate=16000)
    assert signal.mel_spectrogram(w).n_frames == 1


def test_mel_one_second_is_97_frames():
    w = Waveform(samples=np.random.default_rng(0).uniform(-0.5, 0.5, 16000), sample_rate=16000)
    m = signal.mel_spectrogram(w)
    assert m.values.shape == (97, 24)


def test_mel_all_zero_hits_log_floor():
    w = Waveform(samples=np.zeros(1600), sample_rate=16000)
    m = signal.mel_spectrogram(w)
    np.testing.assert_allclose(m.values, np.log(signal.LOG_EPS))


def test_mel_too_short():
    w = Waveform(samples=np.zeros(100), sample_rate=16000)
    with pytest.raises(TooShortError):
        signal.mel_spectrogram(w)


def test_mel_dc_offset_invariance():
    rng = np.random.default_rng(3)
    base = rng.uniform(-0.4, 0.4, 4000)
    m1 = signal.mel_spectrogram(Waveform(samples=base, sample_rate=16000))
    m2 = signal.mel_spectrogram(Waveform(samples=base + 0.3, sample_rate=16000))
    np.testing.assert_allclose(m1.values, m2.values, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(512, 50000))
def test_frame_count_formula(n):
    w = Waveform(samples=np.zeros(n), sample_rate=16000)
    m = signal.mel_spectrogram(w)
    assert m.n_frames == frame_count(n, 512, 160) == (n - 512) // 160 + 1
    assert np.all(np.isfinite(m.values))


def _frames(rng, t=50):
    return MelFrames(values=rng.normal(0, 1, (t, 24)))


def test_augment_zero_masks_is_identity(rng):
    m = _frames(rng)
    cfg = AugmentConfig(max_freq_masks=0, max_time_masks=0, seed=1)
    np.testing.assert_array_equal(signal.spec_augment(m, cfg).values, m.values)


def test_augment_deterministic(rng):
    m = _frames(rng)
    cfg = AugmentConfig(seed=99)
    a = signal.spec_augment(m, cfg)
    b = signal.spec_augment(m, cfg)
    np.testing.assert_array_equal(a.values, b.values)


def test_augment_preserves_shape_and_fills_mean(rng):
    m = _frames(rng, t=40)
    cfg = AugmentConfig(max_freq_masks=1, max_freq_width=24, max_time_masks=0, seed=3)
    out = signal.spec_augment(m, cfg)
    assert out.values.shape == m.values.shape
    changed = out.values != m.values
    if changed.any():
        assert np.unique(out.values[changed]).size == 1
        assert out.values[changed][0] == pytest.approx(m.values.mean())


def test_augment_width_validation(rng):
    m = _frames(rng, t=10)
    with pytest.raises(ValueError):
        signal.spec_augment(m, AugmentConfig(max_time_width=11, seed=0))
    with pytest.raises(ValueError):
        signal.spec_augment(m, AugmentConfig(max_freq_width=25, seed=0))


def test_normalize_zero_mean_unit_var(rng):
    m = _frames(rng, t=80)
    out = signal.normalize(m)
    np.testing.assert_allclose(out.values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.values.std(axis=0), 1.0, atol=1e-9)


def test_frames_csv_roundtrip(tmp_path, rng):
    m = _frames(rng, t=17)
    path = tmp_path / "frames.csv"
    signal.frames_to_csv(m, path)
    back = signal.frames_from_csv(path)
    np.testing.assert_allclose(back, m.values, atol=1e-8)
