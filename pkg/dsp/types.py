"""Signal containers shared by the generator, losses and file handling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from config import FRAME_RATE_HZ, SAMPLE_RATE_HZ
from errors import InvalidArgumentError


@dataclass
class AudioBuffer:
    """Mono waveform at the engine sample rate.

    Samples are stored as float32; DSP code promotes to float64 internally.
    """

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ
    source: str | None = None  # provenance: file path, "synth:harmonic", ...

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 1:
            raise InvalidArgumentError(f"audio must be mono, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("audio contains NaN/Inf samples")
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise InvalidArgumentError(
                f"sample rate {self.sample_rate_hz} Hz, engine runs at {SAMPLE_RATE_HZ} Hz"
            )
        self.samples = samples

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    @classmethod
    def silence(cls, n_samples: int, source: str | None = None) -> "AudioBuffer":
        return cls(np.zeros(n_samples, dtype=np.float32), source=source)


@dataclass(frozen=True)
class FrameGrid:
    """Control-rate grid: one frame of ``frame_size_u`` samples per 5 ms."""

    frame_rate_hz: int = FRAME_RATE_HZ
    frame_size_u: int = SAMPLE_RATE_HZ // FRAME_RATE_HZ
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self):
        if self.frame_size_u * self.frame_rate_hz != self.sample_rate_hz:
            raise InvalidArgumentError(
                f"frame size {self.frame_size_u} x {self.frame_rate_hz} Hz "
                f"!= {self.sample_rate_hz} Hz"
            )

    @property
    def u(self) -> int:
        return self.frame_size_u

    def samples_for(self, n_frames: int) -> int:
        return n_frames * self.frame_size_u


DEFAULT_GRID = FrameGrid()


@dataclass
class Spectrogram:
    """Magnitude STFT, ``[frames x bins]`` with ``bins = fft_size // 2 + 1``."""

    magnitudes: np.ndarray
    fft_size: int
    hop: int

    @property
    def n_frames(self) -> int:
        return int(self.magnitudes.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.magnitudes.shape[1])
