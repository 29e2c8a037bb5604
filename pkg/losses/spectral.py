"""Multi-scale spectral loss."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from autodiff import functional as F
from autodiff.context import no_grad, recording
from autodiff.tensor import Tape, Tensor, as_tensor
from dsp.signal import stft_hop
from dsp.types import AudioBuffer
from errors import ConfigError, InvalidArgumentError

LOG_FLOOR = 1e-7


@dataclass
class MssConfig:
    fft_sizes: list[int] = field(default_factory=lambda: [2048, 1024, 512, 256, 128, 64])
    overlap: float = 0.75
    alpha: float = 1.0

    def __post_init__(self):
        self.fft_sizes = [int(n) for n in self.fft_sizes]
        if not self.fft_sizes:
            raise ConfigError("fft_sizes must not be empty")
        if any(n < 2 or n & (n - 1) for n in self.fft_sizes):
            raise ConfigError(f"fft_sizes must be powers of two, got {self.fft_sizes}")
        if not 0.0 <= self.overlap < 1.0:
            raise ConfigError(f"overlap must be in [0, 1), got {self.overlap}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")

    def hop(self, fft_size: int) -> int:
        return stft_hop(fft_size, self.overlap)


def _signal(x: AudioBuffer | Tensor | np.ndarray) -> Tensor:
    if isinstance(x, AudioBuffer):
        return Tensor(x.samples)
    return as_tensor(x)


def mss_loss(
    y: AudioBuffer | Tensor | np.ndarray,
    y_hat: AudioBuffer | Tensor | np.ndarray,
    cfg: MssConfig,
    tape: Tape | None = None,
) -> Tensor:
    """Sum over FFT sizes of ``mean|S - S^| + alpha * mean|log S - log S^|``."""
    y, y_hat = _signal(y), _signal(y_hat)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise InvalidArgumentError(f"signals must be equal-length 1-D, got {y.shape} and {y_hat.shape}")
    longest = max(cfg.fft_sizes)
    if y.shape[0] < longest:
        raise InvalidArgumentError(f"signal of {y.shape[0]} samples is shorter than FFT size {longest}")

    with recording(tape):
        total = None
        for n_fft in cfg.fft_sizes:
            hop = cfg.hop(n_fft)
            s = F.spectrogram(y, n_fft, hop)
            s_hat = F.spectrogram(y_hat, n_fft, hop)
            term = F.l1_distance(s, s_hat)
            if cfg.alpha:
                log_term = F.l1_distance(F.log(s, floor=LOG_FLOOR), F.log(s_hat, floor=LOG_FLOOR))
                term = F.add(term, F.mul(log_term, cfg.alpha))
            total = term if total is None else F.add(total, term)
    return total


def mss_distance(y: AudioBuffer | np.ndarray, y_hat: AudioBuffer | np.ndarray, cfg: MssConfig) -> float:
    """M-STFT distance between two signals, truncated to the shorter one."""
    a, b = _signal(y).data, _signal(y_hat).data
    n = min(a.shape[0], b.shape[0])
    with no_grad():
        return mss_loss(a[:n], b[:n], cfg).item()
