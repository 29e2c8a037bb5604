"""
Feature files and loudness extraction.

FeatureFile layout (little-endian):
    "ARTF" | u32 version=1 | u32 frame_rate_hz=200 | u32 n_channels | u32 n_frames
    | f32 data [n_frames x n_channels], row-major

Channel layouts: EMA (12), F0 (1), loudness (1) or the combined 14-channel
encoder input [ema | f0 | loudness].
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from config import FRAME_RATE_HZ
from data.binary import BinaryReader
from dsp.types import AudioBuffer, FrameGrid
from encoder.config import EMA_CHANNELS, INPUT_CHANNELS, ControlTrack
from errors import InvalidArgumentError, UnsupportedFormatError

logger = logging.getLogger(__name__)

FEATURE_MAGIC = b"ARTF"
FEATURE_VERSION = 1
CHANNEL_LAYOUTS = {EMA_CHANNELS: "ema", 1: "f0/loudness", INPUT_CHANNELS: "combined"}


@dataclass
class FeatureFile:
    """200 Hz feature matrix ``[n_frames x n_channels]`` (float32)."""

    data: np.ndarray
    frame_rate_hz: int = FRAME_RATE_HZ

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise InvalidArgumentError(f"feature data must be [frames x channels], got {data.shape}")
        if data.shape[1] not in CHANNEL_LAYOUTS:
            raise InvalidArgumentError(f"{data.shape[1]} channels; expected one of {sorted(CHANNEL_LAYOUTS)}")
        self.data = data

    @property
    def n_frames(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.data.shape[1])

    def to_bytes(self) -> bytes:
        header = FEATURE_MAGIC + struct.pack(
            "<4I", FEATURE_VERSION, self.frame_rate_hz, self.n_channels, self.n_frames
        )
        return header + np.ascontiguousarray(self.data, dtype="<f4").tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes, path: str | None = None) -> "FeatureFile":
        reader = BinaryReader(buf, path)
        magic = reader.take_bytes(len(FEATURE_MAGIC))
        if magic != FEATURE_MAGIC:
            reader.offset = 0
            raise reader.fail(f"bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
        version, rate, channels, frames = reader.take("<4I")
        if version != FEATURE_VERSION:
            raise reader.fail(f"unsupported version {version}")
        if rate != FRAME_RATE_HZ:
            raise reader.fail(f"frame rate {rate} Hz, expected {FRAME_RATE_HZ} Hz")
        if channels not in CHANNEL_LAYOUTS:
            raise reader.fail(f"{channels} channels; expected one of {sorted(CHANNEL_LAYOUTS)}")
        expected = frames * channels * 4
        if reader.remaining != expected:
            raise reader.fail(f"payload is {reader.remaining} bytes, header implies {expected}")
        data = reader.take_array(frames * channels).reshape(frames, channels)
        return cls(data.copy(), frame_rate_hz=rate)


def write_features(path: str | Path, features: FeatureFile | np.ndarray) -> None:
    features = features if isinstance(features, FeatureFile) else FeatureFile(features)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(features.to_bytes())
    logger.debug(f"Wrote {path}: {features.n_frames} x {features.n_channels}")


def read_features(path: str | Path, channels: int | None = None) -> np.ndarray:
    """Read a FeatureFile; ``channels`` enforces a layout."""
    path = Path(path)
    ff = FeatureFile.from_bytes(path.read_bytes(), str(path))
    if channels is not None and ff.n_channels != channels:
        raise UnsupportedFormatError(f"{ff.n_channels} channels, expected {channels}", path=str(path))
    return ff.data


def extract_loudness(audio: AudioBuffer, grid: FrameGrid) -> np.ndarray:
    """Max absolute amplitude of each ``u``-sample frame; trailing partial frame dropped."""
    n_frames = len(audio) // grid.u
    if n_frames < 1:
        raise InvalidArgumentError(f"audio of {len(audio)} samples is shorter than one frame ({grid.u})")
    frames = audio.samples[: n_frames * grid.u].astype(np.float64).reshape(n_frames, grid.u)
    return np.abs(frames).max(axis=1)


def assemble_track(
    audio: AudioBuffer,
    ema: np.ndarray,
    f0_hz: np.ndarray,
    grid: FrameGrid,
) -> tuple[ControlTrack, AudioBuffer]:
    """Align EMA, F0 and audio-derived loudness, truncating to the shortest.

    F0 values <= 0 are unvoiced and stored as 0.
    """
    ema = np.asarray(ema, dtype=np.float64)
    f0_hz = np.asarray(f0_hz, dtype=np.float64).reshape(-1)
    n_frames = min(len(audio) // grid.u, ema.shape[0], f0_hz.shape[0])
    if n_frames < 1:
        raise InvalidArgumentError("no complete frame after alignment")
    dropped = {
        "audio": len(audio) // grid.u - n_frames,
        "ema": ema.shape[0] - n_frames,
        "f0": f0_hz.shape[0] - n_frames,
    }
    if any(dropped.values()):
        logger.info(f"Truncated to {n_frames} frames (dropped {dropped})")
    clipped = AudioBuffer(audio.samples[: grid.samples_for(n_frames)], source=audio.source)
    loudness = extract_loudness(clipped, grid)
    track = ControlTrack(ema[:n_frames], np.maximum(f0_hz[:n_frames], 0.0), loudness)
    return track, clipped
