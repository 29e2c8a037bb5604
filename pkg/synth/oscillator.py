"""Harmonic oscillator: sine and cosine banks over K harmonics of F0."""

from __future__ import annotations

import numpy as np

from autodiff import functional as F
from autodiff.context import no_grad
from autodiff.tensor import Tensor, as_tensor
from dsp.signal import upsample_control
from dsp.types import AudioBuffer, FrameGrid
from synth.controls import SynthControls

MASK_VALUE = -1e20


def harmonic_numbers(n_harmonics: int) -> np.ndarray:
    return np.arange(1, n_harmonics + 1, dtype=np.float64)


def nyquist_keep_mask(f0_hz: np.ndarray, n_harmonics: int, sample_rate_hz: int) -> np.ndarray:
    """True where harmonic ``k * f0`` is at or below Nyquist (``[frames x K]``)."""
    f0 = np.maximum(np.asarray(f0_hz, dtype=np.float64), 0.0)
    return np.outer(f0, harmonic_numbers(n_harmonics)) <= sample_rate_hz / 2


def mask_above_nyquist(
    logits: Tensor | np.ndarray,
    f0_hz: np.ndarray,
    sample_rate_hz: int = 16000,
) -> Tensor:
    """Replace logits of harmonics above Nyquist with -1e20."""
    logits = as_tensor(logits)
    keep = nyquist_keep_mask(f0_hz, logits.shape[1], sample_rate_hz)
    return F.where_const(logits, keep, MASK_VALUE)


def nyquist_distribution(
    logits: Tensor | np.ndarray,
    f0_hz: np.ndarray,
    sample_rate_hz: int = 16000,
) -> Tensor:
    """Softmax over the harmonics below Nyquist; masked entries are exactly 0.

    A frame with no harmonic below Nyquist gets an all-zero row.
    """
    logits = as_tensor(logits)
    keep = nyquist_keep_mask(f0_hz, logits.shape[1], sample_rate_hz)
    dist = F.softmax(F.where_const(logits, keep, MASK_VALUE), axis=1)
    return F.mul(dist, keep.astype(np.float64))


def harmonic_phases(f0_hz: np.ndarray, n_harmonics: int, grid: FrameGrid) -> np.ndarray:
    """Phase of every harmonic at the audio rate, ``[frames * u x K]`` radians.

    The fundamental advances by ``f0 / fs`` cycles per sample (inclusive
    running sum); cycle counts are wrapped to ``[0, 1)`` before scaling.
    """
    f0_up = np.maximum(upsample_control(np.maximum(f0_hz, 0.0), grid), 0.0)
    cycles = np.mod(np.cumsum(f0_up / grid.sample_rate_hz), 1.0)
    return 2.0 * np.pi * np.mod(np.outer(cycles, harmonic_numbers(n_harmonics)), 1.0)


def _bank(amplitude: Tensor, dist: Tensor, table: np.ndarray, grid: FrameGrid) -> Tensor:
    dist_up = F.upsample(dist, grid.u)
    per_sample = F.total(F.mul(dist_up, table), axis=1)
    return F.mul(F.upsample(amplitude, grid.u), per_sample)


def harmonic_signal(controls: SynthControls, grid: FrameGrid) -> Tensor:
    """Differentiable oscillator output ``sum_k a c_k sin + a~ c~_k cos``."""
    controls.validate()
    phases = harmonic_phases(controls.f0_hz, controls.n_harmonics, grid)
    out = _bank(controls.a, controls.c, np.sin(phases), grid)
    if controls.has_cosine:
        out = F.add(out, _bank(controls.a_tilde, controls.c_tilde, np.cos(phases), grid))
    return out


def oscillator_bank(controls: SynthControls, grid: FrameGrid) -> AudioBuffer:
    """Render the harmonic branch alone."""
    with no_grad():
        out = harmonic_signal(controls, grid)
    return AudioBuffer(out.data, source="synth:harmonic")
