"""LTV-FIR filtered noise.

Each frame's M band magnitudes are read as half of a real, zero-phase
transfer function. The inverse FFT of the mirrored spectrum is shifted to a
causal linear-phase response, windowed, attenuated by gamma and convolved
with one frame of uniform noise; frames are overlap-added with hop ``u``.

Everything between the band magnitudes and the impulse response is linear,
so it is folded into one fixed ``[M x 2(M-1)]`` basis matrix.
"""

from __future__ import annotations

import logging
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft

from autodiff import functional as F
from autodiff.context import no_grad
from autodiff.tensor import Tensor, as_tensor
from dsp.signal import periodic_hann
from dsp.types import AudioBuffer, FrameGrid
from errors import InvalidArgumentError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.01


def _check(n_bands: int, gamma: float) -> None:
    if n_bands < 2:
        raise InvalidArgumentError(f"need at least 2 filter bands, got {n_bands}")
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma must be > 0, got {gamma}")


@lru_cache(maxsize=16)
def noise_basis(n_bands: int, gamma: float) -> np.ndarray:
    """Map from band magnitudes ``[M]`` to the windowed causal response ``[2(M-1)]``.

    Row ``j`` is the response of a unit spectrum at band ``j``; the matrix is
    read-only because it is shared between calls.
    """
    _check(n_bands, gamma)
    n_taps = 2 * (n_bands - 1)
    zero_phase = sp_fft.irfft(np.eye(n_bands), n_taps, axis=-1)
    causal = np.roll(zero_phase, n_bands - 1, axis=-1)
    basis = gamma * causal * periodic_hann(n_taps)
    basis.flags.writeable = False
    return basis


def frame_noise(n_frames: int, frame_size: int, seed: int) -> np.ndarray:
    """Uniform ``[-1, 1]`` excitation, ``[frames x u]``.

    Drawn from a counter-based Philox stream keyed by ``seed``: frame ``f``
    is the ``f``-th block of the stream, so any frame can be regenerated on
    its own by advancing the counter.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    return rng.uniform(-1.0, 1.0, size=(n_frames, frame_size))


def impulse_responses(H: Tensor | np.ndarray, gamma: float = DEFAULT_GAMMA) -> Tensor:
    """Per-frame causal filter taps ``[frames x 2(M-1)]``."""
    H = as_tensor(H)
    return F.fft_linear(H, noise_basis(H.shape[1], float(gamma)))


def filtered_noise(H: Tensor | np.ndarray, grid: FrameGrid, gamma: float, seed: int) -> Tensor:
    """Differentiable noise branch, ``[frames * u]``."""
    H = as_tensor(H)
    if H.ndim != 2:
        raise ShapeError("filter bands must be [frames x M]", H.shape)
    n_frames, n_bands = H.shape
    _check(n_bands, gamma)
    noise = frame_noise(n_frames, grid.u, seed)
    frames = F.fft_linear(H, noise_basis(n_bands, float(gamma)), noise)
    return F.take(F.overlap_add(frames, grid.u), 0, grid.samples_for(n_frames))


def noise_filter_bank(H: Tensor | np.ndarray, grid: FrameGrid, gamma: float, seed: int) -> AudioBuffer:
    """Render the filtered-noise branch alone."""
    H = as_tensor(H)
    if np.any(H.data < 0):
        raise InvalidArgumentError("filter magnitudes must be >= 0")
    with no_grad():
        out = filtered_noise(H, grid, gamma, seed)
    return AudioBuffer(out.data, source="synth:noise")
