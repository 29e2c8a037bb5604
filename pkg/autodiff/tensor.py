"""Tensor and Tape.

A ``Tensor`` is a float64 ndarray plus a ``requires_grad`` flag. A ``Tape``
is an append-only list of recorded op applications; insertion order is a
topological order, and backward walks it in reverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from errors import InvalidArgumentError


class Tensor:
    """Dense float64 array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise InvalidArgumentError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        """Same values, cut from the graph."""
        return Tensor(self.data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>"


def as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class Node:
    """One recorded op application."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    attrs: dict[str, Any]
    ctx: dict[str, Any]
    parents: tuple[int | None, ...] = ()


@dataclass
class Tape:
    """Append-only record of ops whose inputs require gradients."""

    nodes: list[Node] = field(default_factory=list)
    _producer: dict[int, int] = field(default_factory=dict, repr=False)

    def record(self, node: Node) -> int:
        node.parents = tuple(self._producer.get(id(t)) for t in node.inputs)
        self.nodes.append(node)
        index = len(self.nodes) - 1
        self._producer[id(node.output)] = index
        return index

    def producer(self, tensor: Tensor) -> int | None:
        """Index of the node that produced ``tensor`` (None for leaves)."""
        return self._producer.get(id(tensor))

    def __len__(self) -> int:
        return len(self.nodes)
