"""Training run directory: checkpoints with optimizer state, metrics CSVs.

Layout of an output directory:

    ckpt_000000.ddsp      initial weights (epoch 0)
    ckpt_000100.ddsp      every checkpoint_every epochs
    latest.ddsp           copy of the newest checkpoint
    metrics.csv           epoch,step,mss,l_g,l_d,lr_g,lr_d
    val_metrics.csv       epoch,val_mss

Each checkpoint is a DDSPW001 weight file followed by an optimizer section:

    "DDSPO001"
    u32 epoch, u32 step, u32 n_states
    per state: u16 name length, UTF-8 name, u32 step,
               tensor block (first moments), tensor block (second moments)

Tensor blocks use the weight-file encoding, so moments are float32 on disk.
"""

from __future__ import annotations

import csv
import logging
import shutil
import struct
from dataclasses import dataclass, field
from pathlib import Path

from encoder.checkpoint import Checkpoint, decode_checkpoint, pack_tensors, save_checkpoint, unpack_tensors
from errors import UnsupportedFormatError
from training.optim import OptimizerState

logger = logging.getLogger(__name__)

OPTIMIZER_MAGIC = b"DDSPO001"
METRICS_COLUMNS = ("epoch", "step", "mss", "l_g", "l_d", "lr_g", "lr_d")
VAL_COLUMNS = ("epoch", "val_mss")
LATEST = "latest.ddsp"


@dataclass
class TrainingSnapshot:
    """Everything needed to continue a run."""

    checkpoint: Checkpoint
    epoch: int
    step: int
    optimizers: dict[str, OptimizerState] = field(default_factory=dict)


def encode_optimizer_section(epoch: int, step: int, optimizers: dict[str, OptimizerState]) -> bytes:
    parts = [OPTIMIZER_MAGIC, struct.pack("<3I", epoch, step, len(optimizers))]
    for name, state in optimizers.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)) + encoded)
        parts.append(struct.pack("<I", state.step))
        parts.append(pack_tensors(state.m))
        parts.append(pack_tensors(state.v))
    return b"".join(parts)


def decode_snapshot(buf: bytes, path: str | None = None) -> TrainingSnapshot:
    """Parse a checkpoint written by :class:`CheckpointStore`."""
    ckpt, reader = decode_checkpoint(buf, path)
    if reader.at_end():
        raise reader.fail("no optimizer section; not a training checkpoint")
    magic = reader.take_bytes(len(OPTIMIZER_MAGIC))
    if magic != OPTIMIZER_MAGIC:
        reader.offset -= len(OPTIMIZER_MAGIC)
        raise reader.fail(f"bad optimizer magic {magic!r}, expected {OPTIMIZER_MAGIC!r}")
    epoch, step, n_states = reader.take("<3I")
    optimizers: dict[str, OptimizerState] = {}
    for _ in range(n_states):
        (name_len,) = reader.take("<H")
        name = reader.take_bytes(name_len).decode("utf-8", errors="replace")
        (opt_step,) = reader.take("<I")
        m = unpack_tensors(reader)
        v = unpack_tensors(reader)
        optimizers[name] = OptimizerState(m=m, v=v, step=opt_step)
    if not reader.at_end():
        raise reader.fail(f"{reader.remaining} trailing bytes after optimizer section")
    return TrainingSnapshot(checkpoint=ckpt, epoch=epoch, step=step, optimizers=optimizers)


class CheckpointStore:
    """Checkpoint and metrics persistence for one training run."""

    def __init__(self, out_dir: str | Path):
        """Initialize the store.

        Args:
            out_dir: Run directory; created on first write.
        """
        self.out_dir = Path(out_dir)

    @property
    def metrics_path(self) -> Path:
        return self.out_dir / "metrics.csv"

    @property
    def val_metrics_path(self) -> Path:
        return self.out_dir / "val_metrics.csv"

    @property
    def latest_path(self) -> Path:
        return self.out_dir / LATEST

    def checkpoint_path(self, epoch: int) -> Path:
        return self.out_dir / f"ckpt_{epoch:06d}.ddsp"

    def save(self, snapshot: TrainingSnapshot) -> Path:
        """Write ``ckpt_<epoch>.ddsp`` and refresh ``latest.ddsp``."""
        path = self.checkpoint_path(snapshot.epoch)
        trailer = encode_optimizer_section(snapshot.epoch, snapshot.step, snapshot.optimizers)
        save_checkpoint(path, snapshot.checkpoint, trailer=trailer)
        tmp = self.latest_path.with_suffix(".ddsp.tmp")
        shutil.copyfile(path, tmp)
        tmp.replace(self.latest_path)
        logger.info(f"Checkpoint saved: {path} (epoch {snapshot.epoch}, step {snapshot.step})")
        return path

    def has_checkpoint(self) -> bool:
        return self.latest_path.exists()

    def load(self, path: str | Path | None = None) -> TrainingSnapshot:
        """Load ``path`` or, by default, ``latest.ddsp``."""
        path = Path(path) if path is not None else self.latest_path
        snapshot = decode_snapshot(path.read_bytes(), str(path))
        logger.info(f"Resuming from {path} (epoch {snapshot.epoch}, step {snapshot.step})")
        return snapshot

    def start_metrics(self, resume_epoch: int | None = None) -> None:
        """Create fresh CSVs, or cut existing ones back to ``resume_epoch``."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for path, columns in ((self.metrics_path, METRICS_COLUMNS), (self.val_metrics_path, VAL_COLUMNS)):
            rows = []
            if resume_epoch is not None and path.exists():
                rows = [r for r in self._read(path) if int(r["epoch"]) <= resume_epoch]
            with path.open("w", newline="", encoding="utf-8") as f:
                writer = csv.DictWriter(f, fieldnames=columns)
                writer.writeheader()
                writer.writerows(rows)

    def append_metrics(self, row: dict) -> None:
        self._append(self.metrics_path, METRICS_COLUMNS, row)

    def append_val_metrics(self, epoch: int, val_mss: float) -> None:
        self._append(self.val_metrics_path, VAL_COLUMNS, {"epoch": epoch, "val_mss": val_mss})

    def read_metrics(self) -> list[dict]:
        """Metrics rows with numeric values."""
        if not self.metrics_path.exists():
            return []
        return [
            {k: int(v) if k in ("epoch", "step") else float(v) for k, v in row.items()}
            for row in self._read(self.metrics_path)
        ]

    @staticmethod
    def _read(path: Path) -> list[dict]:
        with path.open(newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None:
                return []
            return list(reader)

    @staticmethod
    def _append(path: Path, columns: tuple[str, ...], row: dict) -> None:
        if not path.exists():
            raise UnsupportedFormatError("metrics file missing; call start_metrics first", path=str(path))
        with path.open("a", newline="", encoding="utf-8") as f:
            csv.DictWriter(f, fieldnames=columns).writerow({k: _fmt(row[k]) for k in columns})


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
