"""Utterance records, manifests, crops and splits."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from data.features import read_features
from data.wav import read_wav
from dsp.types import DEFAULT_GRID, AudioBuffer, FrameGrid
from encoder.config import INPUT_CHANNELS, ControlTrack, EmaNormalization
from errors import ContractViolation, CropTooShort, InvalidArgumentError, UnsupportedFormatError

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.9, 0.05, 0.05)


@dataclass
class UtteranceRecord:
    id: str
    audio: AudioBuffer
    track: ControlTrack
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise InvalidArgumentError(f"unknown split '{self.split}'")
        if self.track.n_frames * DEFAULT_GRID.u != len(self.audio):
            raise ContractViolation(
                f"{self.id}: {self.track.n_frames} frames do not cover {len(self.audio)} samples"
            )

    @property
    def n_frames(self) -> int:
        return self.track.n_frames


def align(audio: AudioBuffer, track: ControlTrack, grid: FrameGrid = DEFAULT_GRID) -> tuple[AudioBuffer, ControlTrack]:
    """Truncate audio and features to the shorter whole-frame duration."""
    n_frames = min(len(audio) // grid.u, track.n_frames)
    if n_frames < 1:
        raise InvalidArgumentError("no complete frame after alignment")
    audio = AudioBuffer(audio.samples[: grid.samples_for(n_frames)], source=audio.source)
    return audio, track.crop(0, n_frames)


def align_and_crop(
    record: UtteranceRecord,
    crop_frames: int,
    rng_seed: int | np.random.Generator,
    grid: FrameGrid = DEFAULT_GRID,
) -> tuple[ControlTrack, AudioBuffer]:
    """Uniformly random ``crop_frames`` window of ``record``.

    Raises ``CropTooShort`` when the utterance has fewer frames than the crop.
    """
    if crop_frames < 1:
        raise InvalidArgumentError(f"crop_frames must be >= 1, got {crop_frames}")
    if record.n_frames < crop_frames:
        raise CropTooShort(f"{record.id}: {record.n_frames} frames < crop {crop_frames}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    offset = int(rng.integers(0, record.n_frames - crop_frames + 1))
    track = record.track.crop(offset, offset + crop_frames)
    start = grid.samples_for(offset)
    audio = AudioBuffer(record.audio.samples[start:start + grid.samples_for(crop_frames)], source=record.id)
    return track, audio


def split_dataset(
    ids: Sequence[str],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> dict[str, str]:
    """Deterministic shuffled train/val/test assignment."""
    if not ids:
        raise InvalidArgumentError("cannot split an empty id list")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"ratios must be 3 non-negative values summing to 1, got {ratios}")
    if len(set(ids)) != len(ids):
        raise InvalidArgumentError("duplicate utterance ids")

    n = len(ids)
    order = np.random.default_rng(seed).permutation(n)
    n_val = min(n, int(round(n * ratios[1])))
    n_test = min(n - n_val, int(round(n * ratios[2])))
    n_train = n - n_val - n_test
    assignment = {}
    for rank, idx in enumerate(order):
        split = "train" if rank < n_train else "val" if rank < n_train + n_val else "test"
        assignment[ids[idx]] = split
    return assignment


def read_manifest(path: str | Path) -> list[tuple[str, Path, Path]]:
    """``id<TAB>wav<TAB>feat`` lines; relative paths resolve against the manifest."""
    path = Path(path)
    base = path.parent
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise UnsupportedFormatError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}", path=str(path))
        utt_id, wav, feat = parts
        entries.append((utt_id, base / wav, base / feat))
    return entries


class Dataset:
    """In-memory utterance collection with split views."""

    def __init__(self, records: list[UtteranceRecord]):
        self.records = records

    @classmethod
    def from_manifest(
        cls,
        path: str | Path,
        ratios: tuple[float, float, float] = DEFAULT_RATIOS,
        seed: int = 0,
        grid: FrameGrid = DEFAULT_GRID,
    ) -> "Dataset":
        entries = read_manifest(path)
        if not entries:
            raise InvalidArgumentError(f"manifest {path} lists no utterances")
        assignment = split_dataset([e[0] for e in entries], ratios, seed)
        records = []
        for utt_id, wav_path, feat_path in entries:
            audio = read_wav(wav_path)
            track = ControlTrack.from_stacked(read_features(feat_path, channels=INPUT_CHANNELS))
            audio, track = align(audio, track, grid)
            records.append(UtteranceRecord(utt_id, audio, track, assignment[utt_id]))
        dataset = cls(records)
        logger.info(f"Loaded {len(records)} utterances from {path} ({dataset.summary()})")
        return dataset

    def split(self, name: str) -> list[UtteranceRecord]:
        if name not in SPLITS:
            raise InvalidArgumentError(f"unknown split '{name}'")
        return [r for r in self.records if r.split == name]

    def summary(self) -> str:
        return ", ".join(f"{s} {len(self.split(s))}" for s in SPLITS)

    def fit_ema_norm(self) -> EmaNormalization:
        """Per-channel z-score over the training split."""
        train = self.split("train")
        if not train:
            raise InvalidArgumentError("no training utterances")
        return EmaNormalization.fit([r.track.ema for r in train])

    def __iter__(self) -> Iterator[UtteranceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)
