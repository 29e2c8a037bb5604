"""Call-style wrappers over ``forward_eval`` used by model and loss code."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from autodiff.ops import forward_eval
from autodiff.tensor import Tensor

TensorLike = Tensor | np.ndarray | float


def add(a: TensorLike, b: TensorLike) -> Tensor:
    return forward_eval("add", (a, b))


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    return forward_eval("sub", (a, b))


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    return forward_eval("mul", (a, b))


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    return forward_eval("matmul", (a, b))


def leaky_relu(x: TensorLike, slope: float) -> Tensor:
    return forward_eval("leaky_relu", (x,), {"slope": slope})


def sigmoid(x: TensorLike) -> Tensor:
    return forward_eval("sigmoid", (x,))


def exp_sigmoid(x: TensorLike) -> Tensor:
    return forward_eval("exp_sigmoid", (x,))


def softmax(x: TensorLike, axis: int = -1) -> Tensor:
    return forward_eval("softmax", (x,), {"axis": axis})


def log(x: TensorLike, floor: float | None = None) -> Tensor:
    return forward_eval("log", (x,), {"floor": floor})


def power(x: TensorLike, exponent: float) -> Tensor:
    return forward_eval("pow", (x,), {"exponent": exponent})


def where_const(x: TensorLike, mask: np.ndarray, fill: float) -> Tensor:
    return forward_eval("where_const", (x,), {"mask": mask, "fill": fill})


def total(x: TensorLike, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return forward_eval("sum", (x,), {"axis": axis, "keepdims": keepdims})


def mean(x: TensorLike, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    return forward_eval("mean", (x,), {"axis": axis, "keepdims": keepdims})


def take(x: TensorLike, start: int, stop: int | None = None, axis: int = 0) -> Tensor:
    return forward_eval("slice", (x,), {"axis": axis, "start": start, "stop": stop})


def concat(xs: Sequence[TensorLike], axis: int = 0) -> Tensor:
    return forward_eval("concat", tuple(xs), {"axis": axis})


def transpose(x: TensorLike, axes: tuple[int, ...] | None = None) -> Tensor:
    return forward_eval("transpose", (x,), {"axes": axes})


def broadcast(x: TensorLike, shape: tuple[int, ...]) -> Tensor:
    return forward_eval("broadcast", (x,), {"shape": tuple(shape)})


def reshape(x: TensorLike, shape: tuple[int, ...]) -> Tensor:
    return forward_eval("reshape", (x,), {"shape": tuple(shape)})


def conv1d(
    x: TensorLike,
    w: TensorLike,
    b: TensorLike | None = None,
    dilation: int = 1,
    padding: str | int = "same",
) -> Tensor:
    inputs = (x, w) if b is None else (x, w, b)
    return forward_eval("conv1d", inputs, {"dilation": dilation, "padding": padding})


def conv2d(
    x: TensorLike,
    w: TensorLike,
    b: TensorLike | None = None,
    stride: tuple[int, int] = (1, 1),
    padding: tuple[int, int] | None = None,
) -> Tensor:
    inputs = (x, w) if b is None else (x, w, b)
    return forward_eval("conv2d", inputs, {"stride": tuple(stride), "padding": padding})


def fir_filter(x: TensorLike, kernel: TensorLike) -> Tensor:
    return forward_eval("fir_filter", (x, kernel))


def fft_linear(bands: TensorLike, basis: np.ndarray, noise: np.ndarray | None = None) -> Tensor:
    return forward_eval("fft_linear", (bands,), {"basis": basis, "noise": noise})


def upsample(x: TensorLike, u: int) -> Tensor:
    return forward_eval("upsample", (x,), {"u": u})


def overlap_add(frames: TensorLike, hop: int) -> Tensor:
    return forward_eval("overlap_add", (frames,), {"hop": hop})


def spectrogram(x: TensorLike, fft_size: int, hop: int) -> Tensor:
    return forward_eval("spectrogram", (x,), {"fft_size": fft_size, "hop": hop})


def l1_distance(a: TensorLike, b: TensorLike) -> Tensor:
    return forward_eval("l1_distance", (a, b))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalisation of ``[frames x features]`` with affine output."""
    frames, width = x.shape
    centred = sub(x, broadcast(mean(x, axis=1, keepdims=True), (frames, width)))
    var = mean(power(centred, 2.0), axis=1, keepdims=True)
    inv_std = power(add(var, eps), -0.5)
    return add(mul(mul(centred, broadcast(inv_std, (frames, width))), gain), bias)
