"""
Vocoder facade: checkpoint-backed encode + synthesize.

Usage:
    vocoder = Vocoder.from_path("runs/desk/latest.ddsp")
    decomposed = vocoder.run(track, seed=0)
    write_wav("out.wav", decomposed.final)

The CLI `synth` and `bench` commands both go through `run`, so benchmark
timings cover exactly the synthesis path.
"""
from __future__ import annotations

import logging
from pathlib import Path

from autodiff.context import no_grad
from dsp.types import DEFAULT_GRID, FrameGrid
from encoder.checkpoint import Checkpoint, load_checkpoint
from encoder.config import ControlTrack, EncoderConfig
from encoder.network import encode
from encoder.weights import WeightSet, param_count
from synth.controls import DecomposedAudio, SynthControls
from synth.generator import synthesize

logger = logging.getLogger(__name__)


class Vocoder:
    """
    Inference-only view of a checkpoint.

    Weights are read-only here; any number of `run` calls may share one
    instance.
    """

    def __init__(self, checkpoint: Checkpoint, grid: FrameGrid = DEFAULT_GRID):
        self._ckpt = checkpoint
        self._grid = grid
        self._weights: WeightSet = checkpoint.generator_weights
        self._kernel = self._weights["post.kernel"] if checkpoint.cfg.use_post_conv else None

    @classmethod
    def from_path(cls, path: str | Path, grid: FrameGrid = DEFAULT_GRID) -> "Vocoder":
        ckpt = load_checkpoint(path)
        vocoder = cls(ckpt, grid)
        logger.info(f"Vocoder ready: {path} ({vocoder.param_count} params, hidden {ckpt.cfg.hidden_dim})")
        return vocoder

    @property
    def cfg(self) -> EncoderConfig:
        return self._ckpt.cfg

    @property
    def param_count(self) -> int:
        return param_count(self._weights)

    @property
    def post_kernel(self):
        return self._kernel

    def controls(self, track: ControlTrack) -> SynthControls:
        """Encoder pass only."""
        with no_grad():
            return encode(track, self._weights, self.cfg, norm=self._ckpt.norm, sample_rate_hz=self._grid.sample_rate_hz)

    def run(self, track: ControlTrack, seed: int = 0) -> DecomposedAudio:
        """Synthesize ``track``; output has ``frames * u`` samples.

        Args:
            track: 200 Hz control features
            seed: noise seed (same seed, same samples)
        """
        controls = self.controls(track)
        return synthesize(controls, self._kernel, self._grid, gamma=self.cfg.gamma, seed=seed)
