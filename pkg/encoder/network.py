"""Encoder: (EMA, F0, loudness) at 200 Hz -> generator controls.

Input projection, ``n_stacks`` stacks of dilated ResBlocks, loudness FiLM,
then two per-frame MLP heads: one for the sine/cosine amplitudes and
harmonic distributions, one for the noise filter bands.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from autodiff import functional as F
from autodiff.context import recording
from autodiff.tensor import Tape, Tensor, as_tensor
from encoder.config import INPUT_CHANNELS, ControlTrack, EmaNormalization, EncoderConfig
from encoder.weights import WeightSet, uniform_init
from errors import ShapeError
from synth.controls import SynthControls
from synth.generator import identity_kernel
from synth.oscillator import nyquist_distribution

logger = logging.getLogger(__name__)

LRELU_SLOPE = 0.1

Params = Mapping[str, Tensor | np.ndarray] | WeightSet


@dataclass(frozen=True)
class ParamSpec:
    name: str
    shape: tuple[int, ...]
    fan_in: int
    init: str = "uniform"  # uniform | zeros | ones | impulse | film_bias


def _conv(prefix: str, c_in: int, c_out: int, k: int, bias_init: str = "zeros") -> list[ParamSpec]:
    return [
        ParamSpec(f"{prefix}.w", (c_out, c_in, k), c_in * k),
        ParamSpec(f"{prefix}.b", (c_out,), c_in * k, bias_init),
    ]


def _linear(prefix: str, d_in: int, d_out: int) -> list[ParamSpec]:
    return [ParamSpec(f"{prefix}.w", (d_in, d_out), d_in), ParamSpec(f"{prefix}.b", (d_out,), d_in, "zeros")]


def _mlp(prefix: str, width: int, d_out: int, depth: int) -> list[ParamSpec]:
    specs = []
    for i in range(depth - 1):
        specs += [
            ParamSpec(f"{prefix}.norm{i}.gain", (width,), width, "ones"),
            ParamSpec(f"{prefix}.norm{i}.bias", (width,), width, "zeros"),
        ]
        specs += _linear(f"{prefix}.fc{i}", width, width)
    return specs + _linear(f"{prefix}.out", width, d_out)


def layout(cfg: EncoderConfig) -> list[ParamSpec]:
    """Every generator tensor in creation order."""
    h, k = cfg.hidden_dim, cfg.kernel
    specs = _linear("enc.in", INPUT_CHANNELS, h)
    for s in range(cfg.n_stacks):
        for b in range(cfg.blocks_per_stack):
            for c in range(cfg.convs_per_block):
                specs += _conv(f"enc.s{s}.b{b}.conv{c}", h, h, k)
    if cfg.use_film:
        specs += _conv("film.conv0", 1, h, k)
        specs += _conv("film.conv1", h, h, k)
        specs += _conv("film.conv2", h, 2 * h, k, bias_init="film_bias")
    specs += _mlp("head_harm", h, cfg.harmonic_outputs, cfg.mlp_depth)
    specs += _mlp("head_noise", h, cfg.n_bands, cfg.mlp_depth)
    if cfg.use_post_conv:
        specs.append(ParamSpec("post.kernel", (cfg.post_kernel,), cfg.post_kernel, "impulse"))
    return specs


def generator_param_count(cfg: EncoderConfig) -> int:
    """Parameter count of :func:`init_weights` without allocating it."""
    return int(sum(np.prod(spec.shape) for spec in layout(cfg)))


def init_weights(cfg: EncoderConfig, seed: int) -> WeightSet:
    """Seeded initial generator weights.

    Conv and linear weights are ``uniform(-b, b)``, ``b = sqrt(1 / fan_in)``;
    biases start at zero except the FiLM scale bias, which starts at one so
    the initial modulation is close to identity. The post kernel starts as a
    centred unit impulse.
    """
    rng = np.random.default_rng(seed)
    weights = WeightSet()
    for spec in layout(cfg):
        if spec.init == "uniform":
            value = uniform_init(rng, spec.shape, spec.fan_in)
        elif spec.init == "ones":
            value = np.ones(spec.shape)
        elif spec.init == "impulse":
            value = identity_kernel(spec.shape[0])
        elif spec.init == "film_bias":
            value = np.zeros(spec.shape)
            value[: spec.shape[0] // 2] = 1.0
        else:
            value = np.zeros(spec.shape)
        weights.add(spec.name, value)
    logger.debug(f"Initialised {len(weights)} generator tensors (seed {seed})")
    return weights


def check_weights(weights: Params, cfg: EncoderConfig) -> None:
    """Raise ``ShapeError`` unless every generator tensor is present with its shape."""
    for spec in layout(cfg):
        if spec.name not in weights:
            raise ShapeError(f"missing weight '{spec.name}'")
        shape = as_tensor(weights[spec.name]).shape
        if shape != spec.shape:
            raise ShapeError(f"weight '{spec.name}'", shape, spec.shape)


def _p(weights: Params, name: str) -> Tensor:
    return as_tensor(weights[name])


def _mlp_forward(x: Tensor, weights: Params, prefix: str, depth: int) -> Tensor:
    for i in range(depth - 1):
        x = F.layer_norm(x, _p(weights, f"{prefix}.norm{i}.gain"), _p(weights, f"{prefix}.norm{i}.bias"))
        x = F.add(F.matmul(x, _p(weights, f"{prefix}.fc{i}.w")), _p(weights, f"{prefix}.fc{i}.b"))
        x = F.leaky_relu(x, LRELU_SLOPE)
    return F.add(F.matmul(x, _p(weights, f"{prefix}.out.w")), _p(weights, f"{prefix}.out.b"))


def film_modulate(features: Tensor, loudness: np.ndarray, film_weights: Params) -> Tensor:
    """``scale * features + shift`` with (scale, shift) generated from loudness."""
    features = as_tensor(features)
    loudness = np.asarray(loudness, dtype=np.float64).reshape(-1, 1)
    if loudness.shape[0] != features.shape[0]:
        raise ShapeError("film: loudness frames", loudness.shape, features.shape)
    width = features.shape[1]
    z = loudness
    for i in range(3):
        z = F.conv1d(z, _p(film_weights, f"film.conv{i}.w"), _p(film_weights, f"film.conv{i}.b"))
        if i < 2:
            z = F.leaky_relu(z, LRELU_SLOPE)
    if z.shape[1] != 2 * width:
        raise ShapeError("film: modulation width", z.shape, (features.shape[0], 2 * width))
    scale = F.take(z, 0, width, axis=1)
    shift = F.take(z, width, 2 * width, axis=1)
    return F.add(F.mul(scale, features), shift)


def encode(
    track: ControlTrack,
    weights: Params,
    cfg: EncoderConfig,
    tape: Tape | None = None,
    norm: EmaNormalization | None = None,
    sample_rate_hz: int = 16000,
) -> SynthControls:
    """Map a control track to generator controls, frame for frame."""
    check_weights(weights, cfg)
    n_frames, n_harm = track.n_frames, cfg.n_harmonics
    with recording(tape):
        x = track.encoder_input(norm)
        h = F.add(F.matmul(x, _p(weights, "enc.in.w")), _p(weights, "enc.in.b"))
        for s in range(cfg.n_stacks):
            for b, dilation in enumerate(cfg.dilations):
                r = h
                for c in range(cfg.convs_per_block):
                    prefix = f"enc.s{s}.b{b}.conv{c}"
                    r = F.leaky_relu(r, LRELU_SLOPE)
                    r = F.conv1d(
                        r,
                        _p(weights, f"{prefix}.w"),
                        _p(weights, f"{prefix}.b"),
                        dilation=dilation if c == 0 else 1,
                    )
                h = F.add(h, r)
        if cfg.use_film:
            h = film_modulate(h, track.loudness, weights)

        harm = _mlp_forward(h, weights, "head_harm", cfg.mlp_depth)
        bands = _mlp_forward(h, weights, "head_noise", cfg.mlp_depth)

        def _bank(offset: int) -> tuple[Tensor, Tensor]:
            amp = F.exp_sigmoid(F.reshape(F.take(harm, offset, offset + 1, axis=1), (n_frames,)))
            logits = F.take(harm, offset + 1, offset + 1 + n_harm, axis=1)
            dist = nyquist_distribution(logits, track.f0_hz, sample_rate_hz)
            return amp, dist

        a, c = _bank(0)
        a_tilde = c_tilde = None
        if cfg.use_cosine:
            a_tilde, c_tilde = _bank(n_harm + 1)
        H = F.exp_sigmoid(bands)

    return SynthControls(a=a, c=c, H=H, f0_hz=track.f0_hz, a_tilde=a_tilde, c_tilde=c_tilde)
