"""Signal primitives: windows, control upsampling, FFT convolution, OLA, STFT.

All functions are pure and work in float64 internally; they never hold state
between calls, so they are safe to call from any number of threads.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sp_fft

from dsp.types import AudioBuffer, FrameGrid, Spectrogram
from errors import InvalidArgumentError

EXP_SIGMOID_MAX = 2.0
EXP_SIGMOID_FLOOR = 1e-7
EXP_SIGMOID_EXPONENT = np.log(10.0)


# ── Windows ──────────────────────────────────────────────────────────────────


def hann_window(length: int) -> np.ndarray:
    """Symmetric Hann window ``0.5 (1 - cos(2 pi m / (length - 1)))``.

    Odd lengths have an exact centre sample equal to 1.
    """
    if length < 1:
        raise InvalidArgumentError(f"window length must be >= 1, got {length}")
    if length == 1:
        return np.ones(1)
    m = np.arange(length, dtype=np.float64)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * m / (length - 1)))


def periodic_hann(length: int) -> np.ndarray:
    """Periodic Hann of ``length`` points, symmetric about ``length // 2``."""
    return hann_window(length + 1)[:length]


# ── Control-rate upsampling ──────────────────────────────────────────────────


def reflect_pad_index(n_frames: int) -> np.ndarray:
    """Frame indices of the track after reflect-padding one frame per side."""
    if n_frames == 1:
        return np.zeros(3, dtype=np.int64)
    inner = np.arange(n_frames)
    return np.concatenate(([1], inner, [n_frames - 2]))


def hann_crossfade(padded: np.ndarray, u: int) -> np.ndarray:
    """Zero-stuff ``padded`` by ``u`` and convolve with ``hann_window(2u + 1)``.

    ``padded`` is ``[n_frames + 2, ...]``; the result is ``[n_frames * u, ...]``
    with frame ``n`` centred on sample ``n * u``. Between two frame centres
    only two kernel taps are non-zero, so the convolution reduces to a
    crossfade of neighbouring frames.
    """
    w = hann_window(2 * u + 1)
    n_frames = padded.shape[0] - 2
    tail = (1,) * (padded.ndim - 1)
    rise = w[:u].reshape((1, u) + tail)
    fall = w[u:2 * u].reshape((1, u) + tail)
    out = padded[1:n_frames + 1, None] * fall + padded[2:n_frames + 2, None] * rise
    return out.reshape((n_frames * u,) + padded.shape[1:])


def hann_crossfade_transpose(grad: np.ndarray, u: int) -> np.ndarray:
    """Adjoint of :func:`hann_crossfade` (gradient w.r.t. the padded track)."""
    w = hann_window(2 * u + 1)
    n_frames = grad.shape[0] // u
    tail = (1,) * (grad.ndim - 1)
    g = grad.reshape((n_frames, u) + grad.shape[1:])
    rise = w[:u].reshape((1, u) + tail)
    fall = w[u:2 * u].reshape((1, u) + tail)
    out = np.zeros((n_frames + 2,) + grad.shape[1:], dtype=np.float64)
    out[1:n_frames + 1] += (g * fall).sum(axis=1)
    out[2:n_frames + 2] += (g * rise).sum(axis=1)
    return out


def upsample_control(track: np.ndarray, grid: FrameGrid) -> np.ndarray:
    """Upsample a 200 Hz control track to the audio rate.

    Accepts ``[frames]`` or ``[frames x channels]``. The track is
    reflect-padded by one frame on each side so the edges are not attenuated.
    """
    track = np.asarray(track, dtype=np.float64)
    if track.ndim == 0 or track.shape[0] == 0:
        raise InvalidArgumentError("control track is empty")
    if not np.all(np.isfinite(track)):
        raise InvalidArgumentError("control track contains NaN/Inf")
    padded = track[reflect_pad_index(track.shape[0])]
    return hann_crossfade(padded, grid.u)


# ── Convolution / overlap-add ────────────────────────────────────────────────


def fft_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full linear convolution along the last axis via real FFTs.

    Leading axes broadcast, so a ``[frames x n]`` stack convolves frame-wise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] == 0 or b.shape[-1] == 0:
        raise InvalidArgumentError("fft_convolve needs non-empty inputs")
    n_out = a.shape[-1] + b.shape[-1] - 1
    n_fft = sp_fft.next_fast_len(n_out, real=True)
    spec = sp_fft.rfft(a, n_fft, axis=-1) * sp_fft.rfft(b, n_fft, axis=-1)
    return sp_fft.irfft(spec, n_fft, axis=-1)[..., :n_out]


def overlap_add(frames: np.ndarray, hop: int) -> np.ndarray:
    """Sum ``[n_frames x frame_len]`` frames placed ``hop`` samples apart."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise InvalidArgumentError(f"overlap_add expects a 2-D frame stack, got {frames.shape}")
    n_frames, frame_len = frames.shape
    if hop < 1:
        raise InvalidArgumentError(f"hop must be >= 1, got {hop}")
    if hop > frame_len:
        raise InvalidArgumentError(f"hop {hop} exceeds frame length {frame_len}")

    n_chunks = -(-frame_len // hop)
    chunked = np.zeros((n_frames, n_chunks * hop))
    chunked[:, :frame_len] = frames
    chunked = chunked.reshape(n_frames, n_chunks, hop)

    out = np.zeros((n_frames + n_chunks - 1, hop))
    for j in range(n_chunks):
        out[j:j + n_frames] += chunked[:, j]
    return out.reshape(-1)[:(n_frames - 1) * hop + frame_len]


def overlap_add_transpose(grad: np.ndarray, n_frames: int, frame_len: int, hop: int) -> np.ndarray:
    """Adjoint of :func:`overlap_add`: gather each frame's window of ``grad``."""
    n_chunks = -(-frame_len // hop)
    padded = np.zeros((n_frames + n_chunks - 1) * hop)
    padded[:grad.shape[0]] = grad
    padded = padded.reshape(-1, hop)
    chunked = np.stack([padded[j:j + n_frames] for j in range(n_chunks)], axis=1)
    return chunked.reshape(n_frames, n_chunks * hop)[:, :frame_len]


# ── STFT ─────────────────────────────────────────────────────────────────────


def stft_hop(fft_size: int, overlap: float) -> int:
    if fft_size < 2 or fft_size & (fft_size - 1):
        raise InvalidArgumentError(f"fft_size must be a power of two, got {fft_size}")
    if not 0.0 <= overlap < 1.0:
        raise InvalidArgumentError(f"overlap must be in [0, 1), got {overlap}")
    return max(1, int(round(fft_size * (1.0 - overlap))))


def frame_count(n_samples: int, fft_size: int, hop: int) -> int:
    """``floor((len - fft) / hop) + 1``; short signals give one padded frame."""
    return (max(n_samples, fft_size) - fft_size) // hop + 1


def frame_signal(x: np.ndarray, fft_size: int, hop: int) -> np.ndarray:
    """Slice ``x`` into ``[frames x fft_size]``, zero-padding the final frame."""
    n_frames = frame_count(x.shape[0], fft_size, hop)
    needed = (n_frames - 1) * hop + fft_size
    if needed > x.shape[0]:
        x = np.concatenate((x, np.zeros(needed - x.shape[0])))
    view = np.lib.stride_tricks.sliding_window_view(x, fft_size)
    return view[::hop][:n_frames]


def unframe_signal(grad_frames: np.ndarray, n_samples: int, hop: int) -> np.ndarray:
    """Adjoint of :func:`frame_signal`."""
    out = overlap_add(grad_frames, hop)
    if out.shape[0] < n_samples:
        out = np.concatenate((out, np.zeros(n_samples - out.shape[0])))
    return out[:n_samples]


def stft_complex(x: np.ndarray, fft_size: int, hop: int) -> np.ndarray:
    """Hann-windowed half spectrum ``[frames x (fft_size // 2 + 1)]``."""
    frames = frame_signal(np.asarray(x, dtype=np.float64), fft_size, hop)
    return sp_fft.rfft(frames * periodic_hann(fft_size), axis=-1)


def stft_magnitude(audio: AudioBuffer | np.ndarray, fft_size: int, overlap: float = 0.75) -> Spectrogram:
    """Magnitude STFT with Hann analysis window."""
    x = audio.samples if isinstance(audio, AudioBuffer) else np.asarray(audio)
    hop = stft_hop(fft_size, overlap)
    if x.shape[0] < hop:
        raise InvalidArgumentError(
            f"audio of {x.shape[0]} samples is shorter than one hop ({hop})"
        )
    return Spectrogram(np.abs(stft_complex(x, fft_size, hop)), fft_size, hop)


# ── Nonlinearities ───────────────────────────────────────────────────────────


def log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def exp_sigmoid(x):
    """``2 sigmoid(x)^ln(10) + 1e-7``: bounded, positive, monotone."""
    x = np.asarray(x, dtype=np.float64)
    return EXP_SIGMOID_MAX * np.exp(EXP_SIGMOID_EXPONENT * log_sigmoid(x)) + EXP_SIGMOID_FLOOR
