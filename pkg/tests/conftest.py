"""Shared fixtures: tiny configs, seeded RNG, synthetic utterances."""

import numpy as np
import pytest

from data.dataset import Dataset
from data.synthetic import synthetic_utterance
from dsp.types import DEFAULT_GRID
from encoder.config import EMA_CHANNELS, ControlTrack, EncoderConfig
from losses.discriminator import DiscriminatorConfig
from losses.spectral import MssConfig


# ── Configs ──────────────────────────────────────────────────────────────────


def tiny_encoder_config(**overrides) -> EncoderConfig:
    fields = dict(
        hidden_dim=4,
        n_stacks=1,
        blocks_per_stack=2,
        dilations=[1, 2],
        kernel=3,
        convs_per_block=2,
        n_harmonics=4,
        n_bands=5,
        mlp_depth=2,
        post_kernel=9,
        gamma=0.01,
    )
    fields.update(overrides)
    return EncoderConfig(**fields)


@pytest.fixture
def tiny_cfg() -> EncoderConfig:
    """Smallest generator that still exercises every stage."""
    return tiny_encoder_config()


@pytest.fixture
def small_mss() -> MssConfig:
    return MssConfig(fft_sizes=[256, 64])


@pytest.fixture
def small_disc() -> DiscriminatorConfig:
    return DiscriminatorConfig(fft_sizes=[128, 64], channels=[2, 3, 3, 3])


# ── Data ─────────────────────────────────────────────────────────────────────


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def random_track(n_frames: int, seed: int = 0, f0_hz: float = 150.0) -> ControlTrack:
    rng = np.random.default_rng(seed)
    ema = rng.standard_normal((n_frames, EMA_CHANNELS))
    f0 = f0_hz + 5.0 * rng.standard_normal(n_frames)
    loudness = rng.uniform(0.0, 0.5, n_frames)
    return ControlTrack(ema, np.maximum(f0, 0.0), loudness)


@pytest.fixture
def track() -> ControlTrack:
    """8 frames = 640 samples."""
    return random_track(8)


@pytest.fixture
def utterance():
    """Half a second of synthetic speech-like audio with controls."""
    return synthetic_utterance(seconds=0.5, seed=0)


@pytest.fixture
def tiny_dataset() -> Dataset:
    return Dataset([
        synthetic_utterance(seconds=0.2, seed=s, utt_id=f"utt{s}") for s in range(3)
    ])


@pytest.fixture
def grid():
    return DEFAULT_GRID
