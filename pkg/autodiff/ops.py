"""Op implementations and ``forward_eval``.

Every op receives float64 arrays and returns a float64 array. Elementwise
binary ops accept equal shapes, a single-element operand, or an operand whose
shape equals the other's trailing axes (leading-axis broadcast); anything
else is a ``ShapeError`` and must go through an explicit ``broadcast``.
"""

from __future__ import annotations

import logging
from typing import Any, Sequence

import numpy as np
from scipy import fft as sp_fft

from autodiff.context import get_tape
from autodiff.registry import lookup, op
from autodiff.tensor import Node, Tape, Tensor, as_tensor
from dsp.signal import (
    EXP_SIGMOID_EXPONENT,
    EXP_SIGMOID_FLOOR,
    exp_sigmoid as _exp_sigmoid,
    fft_convolve,
    frame_signal,
    hann_crossfade,
    hann_crossfade_transpose,
    log_sigmoid,
    overlap_add as _overlap_add,
    overlap_add_transpose,
    periodic_hann,
    reflect_pad_index,
    unframe_signal,
)
from errors import InvalidArgumentError, NumericError, ShapeError

logger = logging.getLogger(__name__)


# ── forward_eval ─────────────────────────────────────────────────────────────


def forward_eval(
    op_kind: str,
    inputs: Sequence[Tensor | np.ndarray | float],
    attrs: dict[str, Any] | None = None,
    tape: Tape | None = None,
) -> Tensor:
    """Evaluate one op and record it when any input requires a gradient.

    ``tape`` defaults to the active tape of the current context; without a
    tape nothing is recorded and the result is a constant.
    """
    wrapper = lookup(op_kind)
    attrs = attrs or {}
    tensors = tuple(as_tensor(t) for t in inputs)
    ctx: dict[str, Any] = {}
    out = wrapper.forward(ctx, *(t.data for t in tensors), **attrs)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"op '{op_kind}' produced non-finite values (shape {out.shape})")

    tape = tape if tape is not None else get_tape()
    track = tape is not None and any(t.requires_grad for t in tensors)
    result = Tensor(out, requires_grad=track)
    if track:
        tape.record(Node(op=op_kind, inputs=tensors, output=result, attrs=attrs, ctx=ctx))
    return result


# ── Broadcasting helpers ─────────────────────────────────────────────────────


def _check_binary(name: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape == b.shape or a.size == 1 or b.size == 1:
        return
    if a.ndim > b.ndim and a.shape[a.ndim - b.ndim:] == b.shape:
        return
    if b.ndim > a.ndim and b.shape[b.ndim - a.ndim:] == a.shape:
        return
    raise ShapeError(f"{name}: incompatible shapes", a.shape, b.shape)


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


# ── Elementwise arithmetic ───────────────────────────────────────────────────


@op("add")
def _add(ctx, a, b):
    """Elementwise sum."""
    _check_binary("add", a, b)
    return a + b


@_add.vjp
def _add_vjp(ctx, g, a, b):
    return unbroadcast(g, a.shape), unbroadcast(g, b.shape)


@op("sub")
def _sub(ctx, a, b):
    """Elementwise difference."""
    _check_binary("sub", a, b)
    return a - b


@_sub.vjp
def _sub_vjp(ctx, g, a, b):
    return unbroadcast(g, a.shape), unbroadcast(-g, b.shape)


@op("mul")
def _mul(ctx, a, b):
    """Elementwise product."""
    _check_binary("mul", a, b)
    return a * b


@_mul.vjp
def _mul_vjp(ctx, g, a, b):
    return unbroadcast(g * b, a.shape), unbroadcast(g * a, b.shape)


@op("matmul")
def _matmul(ctx, a, b):
    """Matrix product of two 2-D arrays."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul: incompatible shapes", a.shape, b.shape)
    return a @ b


@_matmul.vjp
def _matmul_vjp(ctx, g, a, b):
    return g @ b.T, a.T @ g


# ── Nonlinearities ───────────────────────────────────────────────────────────


@op("leaky_relu")
def _leaky_relu(ctx, x, slope=0.01):
    """Leaky ReLU with negative-side ``slope``."""
    return np.where(x > 0, x, slope * x)


@_leaky_relu.vjp
def _leaky_relu_vjp(ctx, g, x, slope=0.01):
    return (np.where(x > 0, g, slope * g),)


@op("sigmoid")
def _sigmoid(ctx, x):
    """Logistic sigmoid."""
    y = np.exp(log_sigmoid(x))
    ctx["y"] = y
    return y


@_sigmoid.vjp
def _sigmoid_vjp(ctx, g, x):
    y = ctx["y"]
    return (g * y * (1.0 - y),)


@op("exp_sigmoid")
def _exp_sigmoid_op(ctx, x):
    """2 sigmoid(x)^ln10 + 1e-7."""
    y = _exp_sigmoid(x)
    ctx["y"] = y
    return y


@_exp_sigmoid_op.vjp
def _exp_sigmoid_vjp(ctx, g, x):
    one_minus_sigma = np.exp(log_sigmoid(-x))
    return (g * (ctx["y"] - EXP_SIGMOID_FLOOR) * EXP_SIGMOID_EXPONENT * one_minus_sigma,)


@op("softmax")
def _softmax(ctx, x, axis=-1):
    """Softmax along ``axis``."""
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    ctx["y"] = y
    return y


@_softmax.vjp
def _softmax_vjp(ctx, g, x, axis=-1):
    y = ctx["y"]
    return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)


@op("log")
def _log(ctx, x, floor=None):
    """Natural log, optionally of ``max(x, floor)``."""
    if floor is not None:
        x = np.maximum(x, floor)
    elif np.any(x <= 0):
        raise NumericError("log of non-positive value")
    return np.log(x)


@_log.vjp
def _log_vjp(ctx, g, x, floor=None):
    if floor is None:
        return (g / x,)
    return (np.where(x > floor, g / np.maximum(x, floor), 0.0),)


@op("pow")
def _pow(ctx, x, exponent=2.0):
    """Elementwise power by a constant."""
    return np.power(x, exponent)


@_pow.vjp
def _pow_vjp(ctx, g, x, exponent=2.0):
    return (g * exponent * np.power(x, exponent - 1.0),)


@op("where_const")
def _where_const(ctx, x, mask=None, fill=0.0):
    """Keep ``x`` where ``mask`` is true, constant ``fill`` elsewhere."""
    if mask is None or mask.shape != x.shape:
        raise ShapeError("where_const: mask shape", x.shape, getattr(mask, "shape", ()))
    return np.where(mask, x, fill)


@_where_const.vjp
def _where_const_vjp(ctx, g, x, mask=None, fill=0.0):
    return (np.where(mask, g, 0.0),)


# ── Reductions and shape ops ─────────────────────────────────────────────────


@op("sum")
def _sum(ctx, x, axis=None, keepdims=False):
    """Sum over ``axis`` (all axes when None)."""
    return np.asarray(x.sum(axis=axis, keepdims=keepdims))


@_sum.vjp
def _sum_vjp(ctx, g, x, axis=None, keepdims=False):
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, x.shape).copy(),)


@op("mean")
def _mean(ctx, x, axis=None, keepdims=False):
    """Mean over ``axis`` (all axes when None)."""
    return np.asarray(x.mean(axis=axis, keepdims=keepdims))


@_mean.vjp
def _mean_vjp(ctx, g, x, axis=None, keepdims=False):
    count = x.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g / count, x.shape).copy(),)


@op("slice")
def _slice(ctx, x, axis=0, start=0, stop=None):
    """Contiguous slice ``[start:stop]`` along ``axis``."""
    stop = x.shape[axis] if stop is None else stop
    if not 0 <= start < stop <= x.shape[axis]:
        raise ShapeError(f"slice [{start}:{stop}] out of range on axis {axis}", x.shape)
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    return x[tuple(index)].copy()


@_slice.vjp
def _slice_vjp(ctx, g, x, axis=0, start=0, stop=None):
    stop = x.shape[axis] if stop is None else stop
    out = np.zeros_like(x)
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    out[tuple(index)] = g
    return (out,)


@op("concat")
def _concat(ctx, *xs, axis=0):
    """Concatenate along ``axis``."""
    try:
        return np.concatenate(xs, axis=axis)
    except ValueError:
        raise ShapeError("concat: incompatible shapes", *(x.shape for x in xs)) from None


@_concat.vjp
def _concat_vjp(ctx, g, *xs, axis=0):
    bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]
    return tuple(np.split(g, bounds, axis=axis))


@op("transpose")
def _transpose(ctx, x, axes=None):
    """Permute axes (reverse when None)."""
    return np.transpose(x, axes).copy()


@_transpose.vjp
def _transpose_vjp(ctx, g, x, axes=None):
    inverse = None if axes is None else np.argsort(axes)
    return (np.transpose(g, inverse),)


@op("broadcast")
def _broadcast(ctx, x, shape=()):
    """Expand size-1 / missing leading axes to ``shape``."""
    try:
        return np.broadcast_to(x, shape).copy()
    except ValueError:
        raise ShapeError("broadcast: cannot expand", x.shape, tuple(shape)) from None


@_broadcast.vjp
def _broadcast_vjp(ctx, g, x, shape=()):
    return (unbroadcast(g, x.shape),)


@op("reshape")
def _reshape(ctx, x, shape=()):
    """Row-major reshape."""
    if int(np.prod(shape)) != x.size:
        raise ShapeError("reshape: element count differs", x.shape, tuple(shape))
    return x.reshape(shape).copy()


@_reshape.vjp
def _reshape_vjp(ctx, g, x, shape=()):
    return (g.reshape(x.shape),)


# ── Convolutions ─────────────────────────────────────────────────────────────


def _conv1d_padding(padding, dilation: int, k: int) -> int:
    if padding == "same":
        if k % 2 == 0:
            raise ShapeError(f"same padding needs an odd kernel, got {k}")
        return dilation * (k - 1) // 2
    return int(padding)


@op("conv1d")
def _conv1d(ctx, x, w, b=None, dilation=1, padding="same"):
    """Dilated 1-D convolution, ``x [T x Cin]``, ``w [Cout x Cin x k]``."""
    if x.ndim != 2 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeError("conv1d: input/weight mismatch", x.shape, w.shape)
    if b is not None and b.shape != (w.shape[0],):
        raise ShapeError("conv1d: bias mismatch", b.shape, (w.shape[0],))
    k = w.shape[2]
    pad = _conv1d_padding(padding, dilation, k)
    t_out = x.shape[0] + 2 * pad - dilation * (k - 1)
    if t_out < 1:
        raise ShapeError("conv1d: input shorter than dilated kernel", x.shape, w.shape)
    xp = np.pad(x, ((pad, pad), (0, 0)))
    y = np.zeros((t_out, w.shape[0]))
    for j in range(k):
        y += xp[j * dilation:j * dilation + t_out] @ w[:, :, j].T
    if b is not None:
        y += b
    ctx["xp"], ctx["pad"], ctx["t_out"] = xp, pad, t_out
    return y


@_conv1d.vjp
def _conv1d_vjp(ctx, g, x, w, b=None, dilation=1, padding="same"):
    xp, pad, t_out = ctx["xp"], ctx["pad"], ctx["t_out"]
    gxp = np.zeros_like(xp)
    gw = np.zeros_like(w)
    for j in range(w.shape[2]):
        window = slice(j * dilation, j * dilation + t_out)
        gxp[window] += g @ w[:, :, j]
        gw[:, :, j] = g.T @ xp[window]
    gx = gxp[pad:pad + x.shape[0]]
    gb = None if b is None else g.sum(axis=0)
    return gx, gw, gb


@op("conv2d")
def _conv2d(ctx, x, w, b=None, stride=(1, 1), padding=None):
    """Strided 2-D convolution, ``x [Cin x H x W]``, ``w [Cout x Cin x kh x kw]``."""
    if x.ndim != 3 or w.ndim != 4 or x.shape[0] != w.shape[1]:
        raise ShapeError("conv2d: input/weight mismatch", x.shape, w.shape)
    cout, cin, kh, kw = w.shape
    ph, pw = padding if padding is not None else ((kh - 1) // 2, (kw - 1) // 2)
    sh, sw = stride
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    h_out = (xp.shape[1] - kh) // sh + 1
    w_out = (xp.shape[2] - kw) // sw + 1
    if h_out < 1 or w_out < 1:
        raise ShapeError("conv2d: input smaller than kernel", x.shape, w.shape)
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win[:, ::sh, ::sw][:, :h_out, :w_out]
    cols = win.transpose(1, 2, 0, 3, 4).reshape(h_out * w_out, cin * kh * kw)
    y = (cols @ w.reshape(cout, -1).T).T.reshape(cout, h_out, w_out)
    if b is not None:
        y = y + b[:, None, None]
    ctx.update(cols=cols, xp_shape=xp.shape, pad=(ph, pw), out=(h_out, w_out))
    return y


@_conv2d.vjp
def _conv2d_vjp(ctx, g, x, w, b=None, stride=(1, 1), padding=None):
    cout, cin, kh, kw = w.shape
    sh, sw = stride
    ph, pw = ctx["pad"]
    h_out, w_out = ctx["out"]
    g2 = g.reshape(cout, h_out * w_out).T
    gw = (g2.T @ ctx["cols"]).reshape(w.shape)
    gcols = (g2 @ w.reshape(cout, -1)).reshape(h_out, w_out, cin, kh, kw)
    gxp = np.zeros(ctx["xp_shape"])
    for i in range(kh):
        for j in range(kw):
            gxp[:, i:i + sh * h_out:sh, j:j + sw * w_out:sw] += gcols[:, :, :, i, j].transpose(2, 0, 1)
    gx = gxp[:, ph:ph + x.shape[1], pw:pw + x.shape[2]]
    gb = None if b is None else g.sum(axis=(1, 2))
    return gx, gw, gb


@op("fir_filter")
def _fir_filter(ctx, x, k):
    """Same-length centred convolution of ``x [T]`` with odd ``k [L]``."""
    if x.ndim != 1 or k.ndim != 1:
        raise ShapeError("fir_filter: expects 1-D signal and kernel", x.shape, k.shape)
    if k.shape[0] % 2 == 0:
        raise InvalidArgumentError(f"kernel length must be odd, got {k.shape[0]}")
    c = (k.shape[0] - 1) // 2
    return fft_convolve(x, k)[c:c + x.shape[0]]


@_fir_filter.vjp
def _fir_filter_vjp(ctx, g, x, k):
    n, taps = x.shape[0], k.shape[0]
    c = (taps - 1) // 2
    gfull = np.zeros(n + taps - 1)
    gfull[c:c + n] = g
    gx = fft_convolve(gfull, k[::-1])[taps - 1:taps - 1 + n]
    gk = fft_convolve(gfull, x[::-1])[n - 1:n - 1 + taps]
    return gx, gk


# ── Signal ops ───────────────────────────────────────────────────────────────


@op("fft_linear")
def _fft_linear(ctx, h_bands, basis=None, noise=None):
    """Per-frame fixed real map: band gains -> impulse response (-> filtered noise).

    ``basis [M x N]`` folds inverse FFT, causal shift, window and gain;
    with ``noise [frames x u]`` each frame's response is convolved with it.
    """
    if basis is None or h_bands.ndim != 2 or h_bands.shape[1] != basis.shape[0]:
        raise ShapeError("fft_linear: bands/basis mismatch", h_bands.shape, getattr(basis, "shape", ()))
    h = h_bands @ basis
    if noise is None:
        return h
    if noise.shape[0] != h.shape[0]:
        raise ShapeError("fft_linear: noise frames mismatch", noise.shape, h.shape)
    return fft_convolve(noise, h)


@_fft_linear.vjp
def _fft_linear_vjp(ctx, g, h_bands, basis=None, noise=None):
    if noise is not None:
        u = noise.shape[1]
        n_taps = basis.shape[1]
        g = fft_convolve(g, noise[:, ::-1])[:, u - 1:u - 1 + n_taps]
    return (g @ basis.T,)


@op("upsample")
def _upsample(ctx, x, u=80):
    """200 Hz -> audio rate: reflect pad, zero-stuff, Hann(2u+1) smoothing."""
    if x.ndim not in (1, 2) or x.shape[0] == 0:
        raise ShapeError("upsample: expects [frames] or [frames x channels]", x.shape)
    return hann_crossfade(x[reflect_pad_index(x.shape[0])], u)


@_upsample.vjp
def _upsample_vjp(ctx, g, x, u=80):
    gp = hann_crossfade_transpose(g, u)
    gx = np.zeros_like(x)
    np.add.at(gx, reflect_pad_index(x.shape[0]), gp)
    return (gx,)


@op("overlap_add")
def _overlap_add_op(ctx, frames, hop=80):
    """Overlap-add ``[frames x len]`` with ``hop``."""
    return _overlap_add(frames, hop)


@_overlap_add_op.vjp
def _overlap_add_vjp(ctx, g, frames, hop=80):
    return (overlap_add_transpose(g, frames.shape[0], frames.shape[1], hop),)


@op("spectrogram")
def _spectrogram(ctx, x, fft_size=512, hop=128):
    """Hann-windowed magnitude STFT ``[frames x bins]`` of a 1-D signal."""
    if x.ndim != 1:
        raise ShapeError("spectrogram: expects a 1-D signal", x.shape)
    if x.shape[0] < hop:
        raise InvalidArgumentError(f"signal of {x.shape[0]} samples is shorter than one hop ({hop})")
    spec = sp_fft.rfft(frame_signal(x, fft_size, hop) * periodic_hann(fft_size), axis=-1)
    mag = np.abs(spec)
    ctx["spec"], ctx["mag"] = spec, mag
    return mag


@_spectrogram.vjp
def _spectrogram_vjp(ctx, g, x, fft_size=512, hop=128):
    spec, mag = ctx["spec"], ctx["mag"]
    safe = np.where(mag > 0, mag, 1.0)
    G = np.where(mag > 0, g / safe, 0.0) * spec
    G[:, 1:-1] *= 0.5
    g_frames = fft_size * sp_fft.irfft(G, fft_size, axis=-1) * periodic_hann(fft_size)
    return (unframe_signal(g_frames, x.shape[0], hop),)


@op("l1_distance")
def _l1_distance(ctx, a, b):
    """Mean absolute difference."""
    if a.shape != b.shape:
        raise ShapeError("l1_distance: shapes differ", a.shape, b.shape)
    return np.asarray(np.abs(a - b).mean())


@_l1_distance.vjp
def _l1_distance_vjp(ctx, g, a, b):
    d = np.sign(a - b) * (g / a.size)
    return d, -d
