"""Differentiable operations.

Each op computes its forward value with numpy and registers a backward rule
mapping the output gradient to one gradient per parent (``None`` for
parents that do not need one).  Shapes follow numpy broadcasting.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from ..errors import InvalidArgument
from ..spline import SplineGrid, bspline_basis_with_derivative
from .tensor import Tensor, as_tensor

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_shapes(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise InvalidArgument(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# -- elementwise arithmetic ---------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes(a, b, "mul")

    def backward(g):
        ga = _unbroadcast(g * b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._from_op(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shapes(a, b, "div")

    def backward(g):
        ga = _unbroadcast(g / b.data, a.shape) if a.requires_grad else None
        gb = _unbroadcast(-g * a.data / b.data ** 2, b.shape) if b.requires_grad else None
        return ga, gb

    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data
    return Tensor._from_op(out, (a, b), backward, "div")


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor._from_op(-a.data, (a,), lambda g: (-g,), "neg")


def square(a) -> Tensor:
    a = as_tensor(a)
    return Tensor._from_op(a.data * a.data, (a,), lambda g: (2.0 * a.data * g,), "square")


# -- linear algebra and shape ---------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise InvalidArgument(f"matmul: shapes {a.shape} and {b.shape} are incompatible")

    def backward(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return Tensor._from_op(a.data @ b.data, (a, b), backward, "matmul")


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise InvalidArgument(f"reshape: cannot reshape {a.shape} into {tuple(shape)}") from None
    return Tensor._from_op(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = np.argsort(axes)
    return Tensor._from_op(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),),
                           "transpose")


def sum(a, axis=None, keepdims=False) -> Tensor:  # noqa: A001 - mirrors numpy
    a = as_tensor(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._from_op(np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), (a,),
                           backward, "sum")


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / n)


# -- activations ---------------------------------------------------------------

def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return Tensor._from_op(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,), "relu")


def prelu(x, slope) -> Tensor:
    """``max(0, x) + slope * min(0, x)`` with a single learnable slope."""
    x, slope = as_tensor(x), as_tensor(slope)
    if slope.size != 1:
        raise InvalidArgument(f"prelu: slope must hold one value, got shape {slope.shape}")
    a = slope.data.reshape(())
    pos = x.data > 0
    neg_part = np.where(pos, 0.0, x.data)

    def backward(g):
        gx = g * np.where(pos, 1.0, a) if x.requires_grad else None
        gs = np.sum(g * neg_part).reshape(slope.shape) if slope.requires_grad else None
        return gx, gs

    return Tensor._from_op(np.where(pos, x.data, a * x.data), (x, slope), backward, "prelu")


def gelu(x) -> Tensor:
    """Exact GELU, ``x * Phi(x)`` with the Gaussian CDF written via erf."""
    x = as_tensor(x)
    cdf = 0.5 * (1.0 + erf(x.data / _SQRT2))

    def backward(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data * x.data)
        return (g * (cdf + x.data * pdf),)

    return Tensor._from_op(x.data * cdf, (x,), backward, "gelu")


def sigmoid_np(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def silu(x) -> Tensor:
    x = as_tensor(x)
    s = sigmoid_np(x.data)

    def backward(g):
        return (g * (s * (1.0 + x.data * (1.0 - s))),)

    return Tensor._from_op(x.data * s, (x,), backward, "silu")


# -- convolution, normalization, pooling -------------------------------------

def conv_output_length(length: int, kernel_size: int, stride=1, padding=0, dilation=1) -> int:
    return (length + 2 * padding - dilation * (kernel_size - 1) - 1) // stride + 1


def conv1d(x, weight, bias=None, stride: int = 1, padding: int = 0, dilation: int = 1,
           groups: int = 1) -> Tensor:
    """Cross-correlation of ``x`` ([C_in, L] or [B, C_in, L]) with ``weight``
    ([C_out, C_in // groups, k]), plus an optional per-channel ``bias``."""
    x, weight = as_tensor(x), as_tensor(weight)
    unbatched = x.ndim == 2
    if x.ndim not in (2, 3) or weight.ndim != 3:
        raise InvalidArgument(f"conv1d: bad ranks, input {x.shape}, kernel {weight.shape}")
    xd = x.data[None] if unbatched else x.data
    B, C_in, L = xd.shape
    C_out, C_per, k = weight.shape
    if stride < 1 or dilation < 1 or padding < 0 or groups < 1:
        raise InvalidArgument("conv1d: stride, dilation, groups must be >= 1 and padding >= 0")
    if C_in % groups or C_out % groups or C_per * groups != C_in:
        raise InvalidArgument(
            f"conv1d: input {x.shape} and kernel {weight.shape} disagree on channels "
            f"for groups={groups}")
    L_out = conv_output_length(L, k, stride, padding, dilation)
    if L_out < 1:
        raise InvalidArgument(
            f"conv1d: input length {L} too short for kernel {weight.shape} "
            f"(dilation={dilation}, padding={padding})")
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (C_out,):
            raise InvalidArgument(f"conv1d: bias shape {bias.shape} != ({C_out},)")
    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding))) if padding else xd
    starts = np.arange(L_out) * stride
    taps = [starts + j * dilation for j in range(k)]
    G = groups
    O = C_out // G
    # cols[g][b * L_out + o, c * k + j] = xp[b, g * C_per + c, o * stride + j * dilation]
    span = dilation * (k - 1) + 1
    windows = np.lib.stride_tricks.sliding_window_view(xp, span, axis=2)
    windows = windows[:, :, ::stride][:, :, :L_out, ::dilation]        # [B, C_in, L_out, k]
    windows = windows.transpose(0, 2, 1, 3)                            # [B, L_out, C_in, k]
    cols = [windows[:, :, gi * C_per:(gi + 1) * C_per].reshape(B * L_out, C_per * k)
            for gi in range(G)]
    w2 = weight.data.reshape(C_out, C_per * k)
    out = np.empty((B, C_out, L_out))
    for gi in range(G):
        res = cols[gi] @ w2[gi * O:(gi + 1) * O].T                     # [B * L_out, O]
        out[:, gi * O:(gi + 1) * O] = res.reshape(B, L_out, O).transpose(0, 2, 1)
    if bias is not None:
        out += bias.data[None, :, None]
    if unbatched:
        out = out[0]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        gb3 = g[None] if unbatched else g
        g2 = gb3.transpose(0, 2, 1).reshape(B * L_out, C_out)
        gx = gw = gbias = None
        if weight.requires_grad:
            gw = np.concatenate([g2[:, gi * O:(gi + 1) * O].T @ cols[gi] for gi in range(G)])
            gw = gw.reshape(weight.shape)
        if x.requires_grad:
            gwin = np.concatenate(
                [(g2[:, gi * O:(gi + 1) * O] @ w2[gi * O:(gi + 1) * O]).reshape(
                    B, L_out, C_per, k) for gi in range(G)], axis=2)
            gwin = gwin.transpose(0, 2, 3, 1)                          # [B, C_in, k, L_out]
            gxp = np.zeros_like(xp)
            # positions within one tap are distinct, so fancy-index += is safe
            for j, idx in enumerate(taps):
                gxp[:, :, idx] += gwin[:, :, j]
            gx = gxp[:, :, padding:padding + L] if padding else gxp
            if unbatched:
                gx = gx[0]
        if bias is not None and bias.requires_grad:
            gbias = gb3.sum(axis=(0, 2))
        return (gx, gw) if bias is None else (gx, gw, gbias)

    return Tensor._from_op(out, parents, backward, "conv1d")


def instance_norm_1d(x, eps: float = 1e-5) -> Tensor:
    """Normalize each channel over the length axis (biased variance, no affine)."""
    x = as_tensor(x)
    if x.ndim < 2:
        raise InvalidArgument(f"instance_norm_1d: need [..., C, L], got {x.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def backward(g):
        gm = g.mean(axis=-1, keepdims=True)
        gxm = (g * xhat).mean(axis=-1, keepdims=True)
        return (inv * (g - gm - xhat * gxm),)

    return Tensor._from_op(xhat, (x,), backward, "instance_norm_1d")


def adaptive_avg_pool_to_1(x) -> Tensor:
    """Average over the trailing length axis: [..., C, L] -> [..., C]."""
    x = as_tensor(x)
    L = x.shape[-1]

    def backward(g):
        return (np.repeat(g[..., None] / L, L, axis=-1),)

    return Tensor._from_op(x.data.mean(axis=-1), (x,), backward, "adaptive_avg_pool_to_1")


def dropout(x, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: surviving entries are scaled by ``1 / (1 - p)``."""
    x = as_tensor(x)
    if not 0.0 <= p < 1.0:
        raise InvalidArgument(f"dropout probability must lie in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if rng is None:
        raise InvalidArgument("dropout in training mode needs an rng")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return Tensor._from_op(x.data * mask, (x,), lambda g: (g * mask,), "dropout")


def embedding_lookup(table, indices, padding_idx: int | None = None) -> Tensor:
    """Gather rows of ``table`` ([V, d]) at integer ``indices``.

    The row at ``padding_idx`` never receives gradient.
    """
    table = as_tensor(table)
    idx = np.asarray(indices)
    if not np.issubdtype(idx.dtype, np.integer):
        raise InvalidArgument(f"embedding_lookup: indices must be integers, got {idx.dtype}")
    V = table.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= V):
        raise InvalidArgument(f"embedding_lookup: index out of range for table of {V} rows")

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx.reshape(-1), g.reshape(-1, table.shape[1]))
        if padding_idx is not None:
            gt[padding_idx] = 0.0
        return (gt,)

    return Tensor._from_op(table.data[idx], (table,), backward, "embedding_lookup")


def log_softmax_np(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    logits = as_tensor(logits)
    y = np.atleast_1d(np.asarray(labels))
    z = logits.data[None] if logits.ndim == 1 else logits.data
    if z.ndim != 2 or y.shape != (z.shape[0],):
        raise InvalidArgument(
            f"softmax_cross_entropy: logits {logits.shape} vs labels {np.shape(labels)}")
    if y.size and (y.min() < 0 or y.max() >= z.shape[1]):
        raise InvalidArgument("softmax_cross_entropy: label out of range")
    logp = log_softmax_np(z)
    n = z.shape[0]
    rows = np.arange(n)
    loss = -logp[rows, y].mean()

    def backward(g):
        grad = np.exp(logp)
        grad[rows, y] -= 1.0
        grad *= g / n
        return (grad.reshape(logits.shape),)

    return Tensor._from_op(np.asarray(loss), (logits,), backward, "softmax_cross_entropy")


def mse(pred, target) -> Tensor:
    diff = sub(pred, target)
    return mean(square(diff))


# -- splines -----------------------------------------------------------------

def bspline_basis(x, grid: SplineGrid) -> Tensor:
    """Basis expansion ``x.shape -> x.shape + (G + k,)``, differentiable in ``x``."""
    x = as_tensor(x)
    values, deriv = bspline_basis_with_derivative(x.data, grid)

    def backward(g):
        return ((g * deriv).sum(axis=-1),)

    return Tensor._from_op(values, (x,), backward, "bspline_basis")


conv1d_raw = conv1d
