"""Encoder package.

- EncoderConfig / ControlTrack / EmaNormalization: configuration and input
- WeightSet: named parameter tensors
- encode / film_modulate / init_weights: the network
- Checkpoint: DDSPW001 serialization
"""

from encoder.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from encoder.config import ControlTrack, EmaNormalization, EncoderConfig
from encoder.network import encode, film_modulate, generator_param_count, init_weights
from encoder.weights import WeightSet, param_count

__all__ = [
    "EncoderConfig",
    "ControlTrack",
    "EmaNormalization",
    "WeightSet",
    "param_count",
    "init_weights",
    "generator_param_count",
    "encode",
    "film_modulate",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
