"""Named parameter tensors shared by the generator and the discriminators."""

from __future__ import annotations

import hashlib
from typing import Iterator, Mapping

import numpy as np

from autodiff.tensor import Tensor
from errors import InvalidArgumentError, ShapeError


class WeightSet:
    """Ordered name -> float64 array map.

    Generator tensors live under ``enc.``, ``film.``, ``head_harm.``,
    ``head_noise.`` and ``post.``; discriminator tensors under ``disc.``.
    Checkpoints store them as float32.
    """

    def __init__(self, tensors: Mapping[str, np.ndarray] | None = None):
        self._tensors: dict[str, np.ndarray] = {}
        for name, value in (tensors or {}).items():
            self.add(name, value)

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self._tensors:
            raise InvalidArgumentError(f"duplicate weight name '{name}'")
        self._tensors[name] = np.array(value, dtype=np.float64)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._tensors[name]
        except KeyError:
            raise ShapeError(f"missing weight '{name}'") from None

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        current = self[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != current.shape:
            raise ShapeError(f"weight '{name}'", value.shape, current.shape)
        self._tensors[name] = value.copy()

    def __contains__(self, name: object) -> bool:
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def subset(self, *prefixes: str) -> "WeightSet":
        """Tensors whose names start with any of ``prefixes`` (copied)."""
        return WeightSet({k: v for k, v in self._tensors.items() if k.startswith(prefixes)})

    def merged(self, other: "WeightSet") -> "WeightSet":
        out = self.copy()
        for name, value in other.items():
            out.add(name, value)
        return out

    def copy(self) -> "WeightSet":
        return WeightSet(self._tensors)

    def leaves(self, requires_grad: bool = True) -> dict[str, Tensor]:
        """Fresh graph leaves for one forward pass."""
        return {k: Tensor(v, requires_grad=requires_grad, name=k) for k, v in self._tensors.items()}

    def digest(self) -> str:
        """SHA-256 over names, shapes and values."""
        h = hashlib.sha256()
        for name, value in self._tensors.items():
            h.update(name.encode("utf-8"))
            h.update(str(value.shape).encode("ascii"))
            h.update(np.ascontiguousarray(value).tobytes())
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"WeightSet({len(self)} tensors, {param_count(self)} params)"


def param_count(weights: WeightSet) -> int:
    """Exact number of scalar parameters."""
    return int(sum(v.size for _, v in weights.items()))


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """``uniform(-b, b)`` with ``b = sqrt(1 / fan_in)``."""
    bound = np.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)
