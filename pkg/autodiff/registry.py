"""Op registry.

Each differentiable op is a forward function decorated with ``@op(name)``;
its vector-Jacobian product is attached with ``@<wrapper>.vjp``. The wrapper
carries the name, a one-line description and both callables, so the tape
only ever stores op names and looks the implementation up here.
"""

from __future__ import annotations

from typing import Any, Callable

import numpy as np

ForwardFn = Callable[..., np.ndarray]
VjpFn = Callable[..., tuple[np.ndarray | None, ...]]


class OpWrapper:
    """Forward + VJP pair for one op kind."""

    def __init__(self, name: str, forward: ForwardFn):
        self._forward = forward
        self.name = name
        self.description = (forward.__doc__ or "").strip().split("\n")[0]
        self._vjp: VjpFn | None = None

    def vjp(self, func: VjpFn) -> VjpFn:
        """Decorator registering the backward rule."""
        self._vjp = func
        return func

    @property
    def differentiable(self) -> bool:
        return self._vjp is not None

    @property
    def definition(self) -> dict:
        return {"name": self.name, "description": self.description, "differentiable": self.differentiable}

    def forward(self, ctx: dict, *arrays: np.ndarray, **attrs: Any) -> np.ndarray:
        return self._forward(ctx, *arrays, **attrs)

    def backward(self, ctx: dict, grad: np.ndarray, *arrays: np.ndarray, **attrs: Any):
        if self._vjp is None:
            raise NotImplementedError(f"op '{self.name}' has no gradient")
        return self._vjp(ctx, grad, *arrays, **attrs)

    def __repr__(self) -> str:
        return f"OpWrapper({self.name!r})"


OP_REGISTRY: dict[str, OpWrapper] = {}


def op(name: str) -> Callable[[ForwardFn], OpWrapper]:
    """Register ``func`` as the forward of op kind ``name``."""

    def decorator(func: ForwardFn) -> OpWrapper:
        if name in OP_REGISTRY:
            raise ValueError(f"op '{name}' registered twice")
        wrapper = OpWrapper(name, func)
        OP_REGISTRY[name] = wrapper
        return wrapper

    return decorator


def lookup(name: str) -> OpWrapper:
    try:
        return OP_REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown op kind '{name}'") from None
