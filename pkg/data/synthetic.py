"""Synthetic utterances for desk-scale runs and tests.

The audio is a vibrato sawtooth with short noise bursts; the "EMA" is a set
of 12 slow sinusoids. Nothing here needs a corpus.
"""

from __future__ import annotations

import numpy as np

from dsp.types import DEFAULT_GRID, AudioBuffer, FrameGrid
from data.dataset import UtteranceRecord
from data.features import extract_loudness
from encoder.config import EMA_CHANNELS, ControlTrack

BASE_F0_HZ = 120.0
VIBRATO_HZ = 5.0
VIBRATO_DEPTH_HZ = 10.0
SAW_AMPLITUDE = 0.3
BURST_EVERY_S = 0.25
BURST_LENGTH_S = 0.04
BURST_AMPLITUDE = 0.1


def vibrato_f0(n_samples: int, sample_rate_hz: int) -> np.ndarray:
    t = np.arange(n_samples) / sample_rate_hz
    return BASE_F0_HZ + VIBRATO_DEPTH_HZ * np.sin(2 * np.pi * VIBRATO_HZ * t)


def synthetic_utterance(
    seconds: float = 2.0,
    seed: int = 0,
    grid: FrameGrid = DEFAULT_GRID,
    utt_id: str = "synthetic",
    split: str = "train",
) -> UtteranceRecord:
    """Aligned audio and control track of ``seconds`` length."""
    rng = np.random.default_rng(seed)
    n_frames = int(round(seconds * grid.frame_rate_hz))
    n_samples = grid.samples_for(n_frames)
    fs = grid.sample_rate_hz

    f0 = vibrato_f0(n_samples, fs)
    phase = np.cumsum(f0 / fs) % 1.0
    audio = SAW_AMPLITUDE * (2.0 * phase - 1.0)

    burst_len = int(BURST_LENGTH_S * fs)
    for start in range(0, n_samples, int(BURST_EVERY_S * fs)):
        stop = min(start + burst_len, n_samples)
        audio[start:stop] += BURST_AMPLITUDE * rng.standard_normal(stop - start)
    audio = np.clip(audio, -1.0, 1.0 - 2.0**-15)
    buffer = AudioBuffer(audio.astype(np.float32), source=utt_id)

    t = np.arange(n_frames) / grid.frame_rate_hz
    rates = rng.uniform(0.5, 4.0, EMA_CHANNELS)
    phases = rng.uniform(0.0, 2 * np.pi, EMA_CHANNELS)
    ema = np.sin(2 * np.pi * rates[None, :] * t[:, None] + phases[None, :])
    frame_f0 = f0[:: grid.u][:n_frames]
    track = ControlTrack(ema, frame_f0, extract_loudness(buffer, grid))
    return UtteranceRecord(utt_id, buffer, track, split)
