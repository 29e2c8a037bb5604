"""Encoder configuration and the control-track input type."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from errors import ConfigError, InvalidArgumentError

EMA_CHANNELS = 12
INPUT_CHANNELS = EMA_CHANNELS + 2  # [ema | f0 feature | loudness]
F0_FEATURE_CEILING_HZ = 8000.0


@dataclass
class EncoderConfig:
    """Shape of the encoder and of the generator it drives."""

    hidden_dim: int = 256
    n_stacks: int = 4
    blocks_per_stack: int = 5
    dilations: list[int] = field(default_factory=lambda: [1, 2, 4, 8, 16])
    kernel: int = 3
    convs_per_block: int = 2
    n_harmonics: int = 50
    n_bands: int = 65
    mlp_depth: int = 3
    post_kernel: int = 1025
    gamma: float = 0.01
    use_cosine: bool = True
    use_film: bool = True
    use_post_conv: bool = True

    def __post_init__(self):
        self.dilations = [int(d) for d in self.dilations]
        problems = self.validate()
        if problems:
            raise ConfigError("invalid encoder config: " + "; ".join(problems))

    def validate(self) -> list[str]:
        problems = []
        if self.hidden_dim < 1:
            problems.append(f"hidden_dim={self.hidden_dim}")
        if self.n_stacks < 1 or self.blocks_per_stack < 1:
            problems.append(f"n_stacks={self.n_stacks}, blocks_per_stack={self.blocks_per_stack}")
        if len(self.dilations) != self.blocks_per_stack:
            problems.append(f"{len(self.dilations)} dilations for {self.blocks_per_stack} blocks")
        if any(d < 1 for d in self.dilations):
            problems.append(f"dilations={self.dilations}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            problems.append(f"kernel={self.kernel} (must be odd)")
        if self.convs_per_block < 1:
            problems.append(f"convs_per_block={self.convs_per_block}")
        if self.n_harmonics < 1:
            problems.append(f"n_harmonics={self.n_harmonics}")
        if self.n_bands < 2:
            problems.append(f"n_bands={self.n_bands}")
        if self.mlp_depth < 1:
            problems.append(f"mlp_depth={self.mlp_depth}")
        if self.post_kernel < 1 or self.post_kernel % 2 == 0:
            problems.append(f"post_kernel={self.post_kernel} (must be odd)")
        if not self.gamma > 0:
            problems.append(f"gamma={self.gamma}")
        return problems

    @property
    def harmonic_outputs(self) -> int:
        banks = 2 if self.use_cosine else 1
        return banks * (self.n_harmonics + 1)

    @property
    def receptive_radius(self) -> int:
        """Frames on either side of an output frame that can influence it."""
        half = (self.kernel - 1) // 2
        per_stack = sum(half * d + half * (self.convs_per_block - 1) for d in self.dilations)
        film = 3 * half if self.use_film else 0
        return max(self.n_stacks * per_stack, film)

    def flags(self) -> int:
        return int(self.use_cosine) | int(self.use_film) << 1 | int(self.use_post_conv) << 2

    @classmethod
    def from_flags(cls, flags: int, **fields) -> "EncoderConfig":
        return cls(
            use_cosine=bool(flags & 1),
            use_film=bool(flags & 2),
            use_post_conv=bool(flags & 4),
            **fields,
        )


@dataclass
class EmaNormalization:
    """Per-channel z-score for EMA coordinates (fitted on the training split)."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(EMA_CHANNELS))
    std: np.ndarray = field(default_factory=lambda: np.ones(EMA_CHANNELS))
    enabled: bool = False

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(EMA_CHANNELS)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(EMA_CHANNELS)
        if np.any(self.std <= 0):
            raise InvalidArgumentError("EMA std must be > 0")

    @classmethod
    def fit(cls, ema_tracks: list[np.ndarray], min_std: float = 1e-6) -> "EmaNormalization":
        stacked = np.concatenate([np.asarray(t, dtype=np.float64) for t in ema_tracks], axis=0)
        # float32 so a checkpoint round trip reproduces the same statistics
        mean = stacked.mean(axis=0).astype(np.float32)
        std = np.maximum(stacked.std(axis=0), min_std).astype(np.float32)
        return cls(mean, std, enabled=True)

    def apply(self, ema: np.ndarray) -> np.ndarray:
        if not self.enabled:
            return ema
        return (ema - self.mean) / self.std


@dataclass
class ControlTrack:
    """Time-aligned 200 Hz encoder input: EMA ``[frames x 12]``, F0 Hz, loudness."""

    ema: np.ndarray
    f0_hz: np.ndarray
    loudness: np.ndarray

    def __post_init__(self):
        self.ema = np.asarray(self.ema, dtype=np.float64)
        self.f0_hz = np.asarray(self.f0_hz, dtype=np.float64).reshape(-1)
        self.loudness = np.asarray(self.loudness, dtype=np.float64).reshape(-1)
        if self.ema.ndim != 2 or self.ema.shape[1] != EMA_CHANNELS:
            raise InvalidArgumentError(f"EMA must be [frames x {EMA_CHANNELS}], got {self.ema.shape}")
        frames = {self.ema.shape[0], self.f0_hz.shape[0], self.loudness.shape[0]}
        if len(frames) != 1:
            raise InvalidArgumentError(
                f"frame count mismatch: ema {self.ema.shape[0]}, f0 {self.f0_hz.shape[0]}, "
                f"loudness {self.loudness.shape[0]}"
            )
        if self.n_frames == 0:
            raise InvalidArgumentError("control track is empty")
        for name in ("ema", "f0_hz", "loudness"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidArgumentError(f"{name} contains NaN/Inf")
        if np.any(self.f0_hz < 0):
            raise InvalidArgumentError("f0 must be >= 0 (unvoiced frames are 0)")

    @property
    def n_frames(self) -> int:
        return int(self.f0_hz.shape[0])

    def crop(self, start: int, stop: int) -> "ControlTrack":
        return ControlTrack(self.ema[start:stop], self.f0_hz[start:stop], self.loudness[start:stop])

    def stacked(self) -> np.ndarray:
        """Combined ``[frames x 14]`` feature matrix in file channel order."""
        return np.column_stack((self.ema, self.f0_hz, self.loudness))

    @classmethod
    def from_stacked(cls, features: np.ndarray) -> "ControlTrack":
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[1] != INPUT_CHANNELS:
            raise InvalidArgumentError(f"expected [frames x {INPUT_CHANNELS}] features, got {features.shape}")
        return cls(features[:, :EMA_CHANNELS], features[:, EMA_CHANNELS], features[:, EMA_CHANNELS + 1])

    def encoder_input(self, norm: EmaNormalization | None = None) -> np.ndarray:
        """``[ema | ln(1 + f0) / ln(8001) | loudness]`` as ``[frames x 14]``."""
        ema = norm.apply(self.ema) if norm is not None else self.ema
        f0_feature = np.log1p(self.f0_hz) / np.log1p(F0_FEATURE_CEILING_HZ)
        return np.column_stack((ema, f0_feature, self.loudness))
