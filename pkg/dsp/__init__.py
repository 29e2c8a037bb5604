"""Deterministic signal primitives.

  - AudioBuffer / FrameGrid / Spectrogram: signal containers
  - hann_window, upsample_control, fft_convolve, overlap_add,
    stft_magnitude, exp_sigmoid: pure float64 primitives
"""

from dsp.signal import (
    exp_sigmoid,
    fft_convolve,
    hann_window,
    overlap_add,
    periodic_hann,
    stft_magnitude,
    upsample_control,
)
from dsp.types import DEFAULT_GRID, AudioBuffer, FrameGrid, Spectrogram

__all__ = [
    "AudioBuffer",
    "FrameGrid",
    "Spectrogram",
    "DEFAULT_GRID",
    "hann_window",
    "periodic_hann",
    "upsample_control",
    "fft_convolve",
    "overlap_add",
    "stft_magnitude",
    "exp_sigmoid",
]
