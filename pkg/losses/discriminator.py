"""Multi-resolution spectrogram discriminators.

One sub-discriminator per FFT size. Each sees ``log(1 + |STFT|)`` as a
one-channel ``[freq x time]`` image and applies five weight-normalised 2-D
convolutions; the output is a raw logit map (no sigmoid).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from autodiff import functional as F
from autodiff.context import recording
from autodiff.tensor import Tape, Tensor, as_tensor
from dsp.signal import stft_hop
from dsp.types import AudioBuffer
from encoder.weights import WeightSet, uniform_init
from errors import ConfigError, InvalidArgumentError, ShapeError

logger = logging.getLogger(__name__)

LRELU_SLOPE = 0.2
NORM_EPS = 1e-12
HIDDEN_KERNEL = (3, 9)
FINAL_KERNEL = (3, 3)
TIME_STRIDE = (1, 2)


@dataclass
class DiscriminatorConfig:
    fft_sizes: list[int] = field(default_factory=lambda: [2048, 1024, 512, 256, 128, 64])
    channels: list[int] = field(default_factory=lambda: [32, 64, 128, 256])
    overlap: float = 0.75

    def __post_init__(self):
        self.fft_sizes = [int(n) for n in self.fft_sizes]
        self.channels = [int(c) for c in self.channels]
        if not self.fft_sizes:
            raise ConfigError("discriminator needs at least one resolution")
        if any(n < 2 or n & (n - 1) for n in self.fft_sizes):
            raise ConfigError(f"disc_fft_sizes must be powers of two, got {self.fft_sizes}")
        if len(self.channels) != 4 or any(c < 1 for c in self.channels):
            raise ConfigError(f"disc_channels needs 4 positive widths, got {self.channels}")

    @property
    def n_resolutions(self) -> int:
        return len(self.fft_sizes)

    def layers(self) -> list[tuple[int, int, tuple[int, int], tuple[int, int]]]:
        """``(c_in, c_out, kernel, stride)`` per conv layer."""
        widths = [1, *self.channels, 1]
        out = []
        for j in range(5):
            kernel = FINAL_KERNEL if j == 4 else HIDDEN_KERNEL
            stride = TIME_STRIDE if 1 <= j <= 3 else (1, 1)
            out.append((widths[j], widths[j + 1], kernel, stride))
        return out


def init_discriminator(cfg: DiscriminatorConfig, seed: int) -> WeightSet:
    """Direction ``v`` uniform, gain ``g = ||v||`` per output channel, zero bias."""
    rng = np.random.default_rng(seed)
    weights = WeightSet()
    for i in range(cfg.n_resolutions):
        for j, (c_in, c_out, (kh, kw), _) in enumerate(cfg.layers()):
            prefix = f"disc.r{i}.conv{j}"
            v = uniform_init(rng, (c_out, c_in, kh, kw), c_in * kh * kw)
            weights.add(f"{prefix}.v", v)
            weights.add(f"{prefix}.g", np.sqrt((v**2).sum(axis=(1, 2, 3))))
            weights.add(f"{prefix}.b", np.zeros(c_out))
    return weights


def discriminator_param_count(cfg: DiscriminatorConfig) -> int:
    count = 0
    for c_in, c_out, (kh, kw), _ in cfg.layers():
        count += c_out * c_in * kh * kw + 2 * c_out
    return count * cfg.n_resolutions


def weight_norm(v: Tensor, g: Tensor) -> Tensor:
    """``g * v / ||v||`` with the norm taken per output channel."""
    v, g = as_tensor(v), as_tensor(g)
    c_out = v.shape[0]
    if g.shape != (c_out,):
        raise ShapeError("weight norm gain", g.shape, (c_out,))
    inv_norm = F.power(F.add(F.total(F.power(v, 2.0), axis=(1, 2, 3), keepdims=True), NORM_EPS), -0.5)
    scale = F.mul(F.reshape(g, (c_out, 1, 1, 1)), inv_norm)
    return F.mul(v, F.broadcast(scale, v.shape))


def discriminator_forward(
    audio: AudioBuffer | Tensor | np.ndarray,
    weights: Mapping[str, Tensor | np.ndarray] | WeightSet,
    cfg: DiscriminatorConfig,
    i: int,
    tape: Tape | None = None,
) -> Tensor:
    """Logit map ``[1 x freq' x time']`` of sub-discriminator ``i``."""
    if not 0 <= i < cfg.n_resolutions:
        raise InvalidArgumentError(f"resolution index {i} out of range (R={cfg.n_resolutions})")
    x = Tensor(audio.samples) if isinstance(audio, AudioBuffer) else as_tensor(audio)
    n_fft = cfg.fft_sizes[i]
    if x.ndim != 1 or x.shape[0] < n_fft:
        raise InvalidArgumentError(f"discriminator {i} needs >= {n_fft} samples, got {x.shape}")

    with recording(tape):
        spec = F.spectrogram(x, n_fft, stft_hop(n_fft, cfg.overlap))
        image = F.transpose(F.log(F.add(spec, 1.0)))
        h = F.reshape(image, (1,) + image.shape)
        layers = cfg.layers()
        for j, (_, _, _, stride) in enumerate(layers):
            prefix = f"disc.r{i}.conv{j}"
            w = weight_norm(as_tensor(weights[f"{prefix}.v"]), as_tensor(weights[f"{prefix}.g"]))
            h = F.conv2d(h, w, as_tensor(weights[f"{prefix}.b"]), stride=stride)
            if j < len(layers) - 1:
                h = F.leaky_relu(h, LRELU_SLOPE)
    return h
