"""PCM16 mono 16 kHz WAV I/O."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from config import SAMPLE_RATE_HZ
from dsp.types import AudioBuffer
from errors import UnsupportedFormatError

logger = logging.getLogger(__name__)

PCM16_SCALE = 32768.0


def read_wav(path: str | Path) -> AudioBuffer:
    """Read a PCM16 mono 16 kHz file, scaled to [-1, 1) by 1/32768."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except ValueError as e:
        raise UnsupportedFormatError(f"not a readable RIFF/WAVE file ({e})", path=str(path)) from None
    if data.dtype != np.int16:
        raise UnsupportedFormatError(f"sample format {data.dtype}, expected 16-bit PCM", path=str(path))
    if data.ndim != 1:
        raise UnsupportedFormatError(f"{data.shape[1]} channels, expected mono", path=str(path))
    if rate != SAMPLE_RATE_HZ:
        raise UnsupportedFormatError(f"sample rate {rate} Hz, expected {SAMPLE_RATE_HZ} Hz", path=str(path))
    logger.debug(f"Read {path}: {data.shape[0]} samples")
    return AudioBuffer(data.astype(np.float32) / np.float32(PCM16_SCALE), source=str(path))


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Scale by 32768, round half away from zero, clip to int16."""
    scaled = np.asarray(samples, dtype=np.float64) * PCM16_SCALE
    rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(rounded, -32768, 32767).astype(np.int16)


def write_wav(path: str | Path, audio: AudioBuffer) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, audio.sample_rate_hz, quantize_pcm16(audio.samples))
    logger.debug(f"Wrote {path}: {len(audio)} samples")
