"""Reverse pass and finite-difference verification."""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Mapping

import numpy as np

from autodiff.context import no_grad, recording
from autodiff.registry import lookup
from autodiff.tensor import Tape, Tensor
from errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def backward(
    tape: Tape,
    loss: Tensor | int,
    wrt: Iterable[Tensor] | None = None,
) -> dict[Tensor, np.ndarray]:
    """Gradients of a scalar ``loss`` w.r.t. leaves of ``tape``.

    ``loss`` is the loss tensor or its node index. With ``wrt`` the map has
    exactly those tensors (zeros for any the loss does not touch); otherwise
    every requires-grad leaf seen on the tape. The tape is left intact, so
    several losses recorded on one tape can each be differentiated.
    """
    if isinstance(loss, int):
        loss = tape.nodes[loss].output
    if loss.size != 1:
        raise InvalidArgumentError(f"loss must be scalar, got shape {loss.shape}")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        wrapper = lookup(node.op)
        in_grads = wrapper.backward(node.ctx, g, *(t.data for t in node.inputs), **node.attrs)
        for tensor, gi in zip(node.inputs, in_grads):
            if gi is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            grads[key] = grads[key] + gi if key in grads else gi
            if tape.producer(tensor) is None:
                leaves[key] = tensor

    targets = list(wrt) if wrt is not None else list(leaves.values())
    return {t: grads.get(id(t), np.zeros_like(t.data)) for t in targets}


PointLike = Tensor | Mapping[str, Tensor]


def _leaves(point: PointLike) -> dict[str, Tensor]:
    if isinstance(point, Tensor):
        return {"x": point}
    return dict(point)


def _call(f: Callable, point: PointLike, leaves: dict[str, Tensor]) -> Tensor:
    return f(leaves["x"]) if isinstance(point, Tensor) else f(leaves)


def grad_check_tensors(
    f: Callable[..., Tensor],
    point: PointLike,
    eps: float = 1e-5,
    max_coords: int | None = None,
    seed: int = 0,
) -> dict[str, float]:
    """Per-tensor max relative error of analytic vs central-difference gradients.

    ``point`` is a Tensor (``f(x)``) or a name->Tensor map (``f(params)``).
    With ``max_coords`` only that many randomly chosen coordinates per tensor
    are probed.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise InvalidArgumentError(f"eps must be in [1e-7, 1e-3], got {eps}")

    leaves = {k: Tensor(t.data.copy(), requires_grad=True, name=k) for k, t in _leaves(point).items()}
    tape = Tape()
    with recording(tape):
        out = _call(f, point, leaves)
    if out.size != 1:
        raise InvalidArgumentError(f"grad_check needs a scalar function, got shape {out.shape}")
    analytic = backward(tape, out, wrt=leaves.values())

    rng = np.random.default_rng(seed)
    errors: dict[str, float] = {}
    for name, leaf in leaves.items():
        flat = leaf.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        a_flat = analytic[leaf].reshape(-1)
        worst = 0.0
        for i in coords:
            original = flat[i]
            with no_grad():
                flat[i] = original + eps
                f_plus = _call(f, point, leaves).item()
                flat[i] = original - eps
                f_minus = _call(f, point, leaves).item()
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * eps)
            err = abs(a_flat[i] - numeric) / max(1.0, abs(a_flat[i]))
            worst = max(worst, err)
        errors[name] = worst
        logger.debug(f"grad_check {name}: {len(coords)} coords, max rel err {worst:.3e}")
    return errors


def grad_check(
    f: Callable[..., Tensor],
    point: PointLike,
    eps: float = 1e-5,
    max_coords: int | None = None,
    seed: int = 0,
) -> float:
    """Max relative error ``|analytic - numeric| / max(1, |analytic|)``."""
    errors = grad_check_tensors(f, point, eps=eps, max_coords=max_coords, seed=seed)
    return max(errors.values(), default=0.0)
