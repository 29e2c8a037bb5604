"""Binary weight checkpoints.

Layout (all little-endian)::

    "DDSPW001"
    u32 n_fields, n_fields x u32     hidden_dim, n_stacks, blocks_per_stack,
                                     kernel, convs_per_block, n_harmonics,
                                     n_bands, mlp_depth, post_kernel, flags,
                                     n_dilations, dilations...
    f64 gamma
    u8 ema_norm_flag, 12 x f32 mean, 12 x f32 std
    u32 tensor count
    per tensor: u16 name length, UTF-8 name, u8 rank, rank x u32 dims,
                f32 data (row-major)

Anything after the tensors (the trainer's optimizer section) is returned to
the caller untouched.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from data.binary import BinaryReader
from encoder.config import EMA_CHANNELS, EmaNormalization, EncoderConfig
from encoder.network import check_weights
from encoder.weights import WeightSet
from errors import ConfigError

logger = logging.getLogger(__name__)

WEIGHTS_MAGIC = b"DDSPW001"
_HEADER_FIELDS = (
    "hidden_dim",
    "n_stacks",
    "blocks_per_stack",
    "kernel",
    "convs_per_block",
    "n_harmonics",
    "n_bands",
    "mlp_depth",
    "post_kernel",
)


@dataclass
class Checkpoint:
    """Generator config + weights (+ discriminator weights) + EMA normalisation."""

    cfg: EncoderConfig
    weights: WeightSet
    norm: EmaNormalization = field(default_factory=EmaNormalization)

    @property
    def generator_weights(self) -> WeightSet:
        return self.weights.subset("enc.", "film.", "head_harm.", "head_noise.", "post.")

    @property
    def discriminator_weights(self) -> WeightSet:
        return self.weights.subset("disc.")


def pack_tensors(tensors: dict[str, np.ndarray] | WeightSet) -> bytes:
    """u32 count, then one record per tensor (float32 payload)."""
    parts = [struct.pack("<I", len(tensors))]
    for name, value in tensors.items():
        encoded = name.encode("utf-8")
        value = np.asarray(value)
        parts.append(struct.pack("<H", len(encoded)) + encoded)
        parts.append(struct.pack(f"<B{value.ndim}I", value.ndim, *value.shape))
        parts.append(np.ascontiguousarray(value, dtype="<f4").tobytes())
    return b"".join(parts)


def unpack_tensors(reader: BinaryReader) -> dict[str, np.ndarray]:
    (count,) = reader.take("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.take("<H")
        try:
            name = reader.take_bytes(name_len).decode("utf-8")
        except UnicodeDecodeError:
            raise reader.fail("tensor name is not UTF-8") from None
        if name in tensors:
            raise reader.fail(f"duplicate tensor '{name}'")
        (rank,) = reader.take("<B")
        dims = reader.take(f"<{rank}I") if rank else ()
        data = reader.take_array(int(np.prod(dims)) if dims else 1)
        tensors[name] = data.astype(np.float64).reshape(dims)
    return tensors


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    cfg = ckpt.cfg
    fields = [getattr(cfg, f) for f in _HEADER_FIELDS]
    fields += [cfg.flags(), len(cfg.dilations), *cfg.dilations]
    norm = ckpt.norm
    parts = [
        WEIGHTS_MAGIC,
        struct.pack(f"<I{len(fields)}I", len(fields), *fields),
        struct.pack("<d", cfg.gamma),
        struct.pack("<B", int(norm.enabled)),
        np.asarray(norm.mean, dtype="<f4").tobytes(),
        np.asarray(norm.std, dtype="<f4").tobytes(),
        pack_tensors(ckpt.weights),
    ]
    return b"".join(parts)


def decode_checkpoint(buf: bytes, path: str | None = None) -> tuple[Checkpoint, BinaryReader]:
    """Parse the weight section; the returned reader sits just after it."""
    reader = BinaryReader(buf, path)
    magic = reader.take_bytes(len(WEIGHTS_MAGIC))
    if magic != WEIGHTS_MAGIC:
        reader.offset = 0
        raise reader.fail(f"bad magic {magic!r}, expected {WEIGHTS_MAGIC!r}")

    (n_fields,) = reader.take("<I")
    if n_fields < len(_HEADER_FIELDS) + 2:
        raise reader.fail(f"config record has {n_fields} fields")
    fields = reader.take(f"<{n_fields}I")
    values = dict(zip(_HEADER_FIELDS, fields))
    flags, n_dil = fields[len(_HEADER_FIELDS)], fields[len(_HEADER_FIELDS) + 1]
    dilations = list(fields[len(_HEADER_FIELDS) + 2:])
    if len(dilations) != n_dil:
        raise reader.fail(f"config record lists {len(dilations)} dilations, header says {n_dil}")
    (gamma,) = reader.take("<d")
    try:
        cfg = EncoderConfig.from_flags(flags, dilations=dilations, gamma=gamma, **values)
    except ConfigError as e:
        raise reader.fail(str(e)) from None

    (norm_flag,) = reader.take("<B")
    mean = reader.take_array(EMA_CHANNELS)
    std = reader.take_array(EMA_CHANNELS)
    if np.any(std <= 0):
        raise reader.fail("EMA std must be > 0")
    norm = EmaNormalization(mean, std, enabled=bool(norm_flag))

    weights = WeightSet(unpack_tensors(reader))
    check_weights(weights, cfg)
    return Checkpoint(cfg=cfg, weights=weights, norm=norm), reader


def save_checkpoint(path: str | Path, ckpt: Checkpoint, trailer: bytes = b"") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode_checkpoint(ckpt) + trailer)
    tmp.replace(path)
    logger.debug(f"Wrote checkpoint {path} ({len(ckpt.weights)} tensors)")


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    ckpt, _ = decode_checkpoint(path.read_bytes(), str(path))
    logger.debug(f"Loaded checkpoint {path} (hidden {ckpt.cfg.hidden_dim})")
    return ckpt
