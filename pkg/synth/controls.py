"""Generator control signals and synthesis outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from autodiff.tensor import Tensor, as_tensor
from dsp.types import AudioBuffer
from config import SAMPLE_RATE_HZ
from errors import ContractViolation, InvalidArgumentError, ShapeError

ROW_SUM_TOLERANCE = 1e-5


@dataclass
class SynthControls:
    """Per-frame controls emitted by the encoder.

    ``a``/``a_tilde`` are ``[frames]``, ``c``/``c_tilde`` are
    ``[frames x K]`` and ``H`` is ``[frames x M]``. With the cosine bank
    disabled ``a_tilde`` and ``c_tilde`` are None. Fields are tensors so the
    generator can differentiate through them; ``f0_hz`` is a plain array.
    """

    a: Tensor
    c: Tensor
    H: Tensor
    f0_hz: np.ndarray
    a_tilde: Tensor | None = None
    c_tilde: Tensor | None = None

    def __post_init__(self):
        self.a = as_tensor(self.a)
        self.c = as_tensor(self.c)
        self.H = as_tensor(self.H)
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64)
        if (self.a_tilde is None) != (self.c_tilde is None):
            raise InvalidArgumentError("a_tilde and c_tilde must be given together")
        if self.a_tilde is not None:
            self.a_tilde = as_tensor(self.a_tilde)
            self.c_tilde = as_tensor(self.c_tilde)

    @property
    def n_frames(self) -> int:
        return int(self.f0_hz.shape[0])

    @property
    def n_harmonics(self) -> int:
        return int(self.c.shape[1])

    @property
    def n_bands(self) -> int:
        return int(self.H.shape[1])

    @property
    def has_cosine(self) -> bool:
        return self.c_tilde is not None

    def validate(self) -> None:
        """Check shapes, the F0 range and that harmonic rows are distributions."""
        frames = self.n_frames
        if self.f0_hz.ndim != 1 or frames == 0:
            raise InvalidArgumentError(f"f0 must be a non-empty vector, got {self.f0_hz.shape}")
        if np.any(self.f0_hz < 0) or not np.all(np.isfinite(self.f0_hz)):
            raise InvalidArgumentError("f0 must be finite and >= 0 (unvoiced frames are 0)")
        if self.c.ndim != 2 or self.c.shape[0] != frames or self.c.shape[1] < 1:
            raise ShapeError("harmonic distribution", self.c.shape, (frames, "K"))
        if self.a.shape != (frames,):
            raise ShapeError("amplitude", self.a.shape, (frames,))
        if self.H.ndim != 2 or self.H.shape[0] != frames or self.H.shape[1] < 2:
            raise ShapeError("filter bands", self.H.shape, (frames, "M"))
        if np.any(self.H.data < 0):
            raise InvalidArgumentError("filter magnitudes must be >= 0")

        banks = [("c", self.c)]
        if self.has_cosine:
            if self.a_tilde.shape != (frames,):
                raise ShapeError("cosine amplitude", self.a_tilde.shape, (frames,))
            if self.c_tilde.shape != self.c.shape:
                raise ShapeError("cosine distribution", self.c_tilde.shape, self.c.shape)
            banks.append(("c_tilde", self.c_tilde))
        # frames whose fundamental is above Nyquist carry an all-zero row
        silent = self.f0_hz > SAMPLE_RATE_HZ / 2
        for name, dist in banks:
            if np.any(dist.data < 0):
                raise ContractViolation(f"{name} has negative entries")
            rows = dist.data.sum(axis=1)
            worst = np.max(np.abs(np.where(silent, rows, rows - 1.0)))
            if worst > ROW_SUM_TOLERANCE:
                raise ContractViolation(f"{name} rows must sum to 1 (off by {worst:.3e})")

    def detach(self) -> "SynthControls":
        return SynthControls(
            a=self.a.detach(),
            c=self.c.detach(),
            H=self.H.detach(),
            f0_hz=self.f0_hz,
            a_tilde=None if self.a_tilde is None else self.a_tilde.detach(),
            c_tilde=None if self.c_tilde is None else self.c_tilde.detach(),
        )


@dataclass
class SynthBranches:
    """Generator outputs as graph tensors (all ``[frames * u]``)."""

    harmonic: Tensor
    noise: Tensor
    mixed: Tensor
    final: Tensor

    def to_audio(self) -> "DecomposedAudio":
        return DecomposedAudio(
            harmonic=AudioBuffer(self.harmonic.data, source="synth:harmonic"),
            noise=AudioBuffer(self.noise.data, source="synth:noise"),
            mixed_pre_post=AudioBuffer(self.mixed.data, source="synth:mixed"),
            final=AudioBuffer(self.final.data, source="synth:final"),
        )


@dataclass
class DecomposedAudio:
    """Generator branches for decomposition and analysis."""

    harmonic: AudioBuffer
    noise: AudioBuffer
    mixed_pre_post: AudioBuffer
    final: AudioBuffer

    def __post_init__(self):
        lengths = {len(self.harmonic), len(self.noise), len(self.mixed_pre_post), len(self.final)}
        if len(lengths) != 1:
            raise ContractViolation(f"decomposed branches differ in length: {sorted(lengths)}")
