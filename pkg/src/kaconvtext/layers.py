"""Parameterized layers: Conv1d, KAConv1d, KANLayer, MLPHead and the KART stack."""
from __future__ import annotations

import math

import numpy as np

from .autodiff import Adam, Tensor, backward
from .autodiff import functional as F
from .errors import InvalidArgument
from .spline import SplineGrid, fit_spline_coeffs, make_uniform_grid


class Module:
    """Minimal container: parameters are Tensor attributes listed in ``_param_names``;
    children are Module attributes listed in ``_child_names``."""

    _param_names: tuple = ()
    _child_names: tuple = ()

    def named_parameters(self, prefix: str = ""):
        for name in self._param_names:
            yield prefix + name, getattr(self, name)
        for child in self._child_names:
            mod = getattr(self, child)
            if isinstance(mod, (list, tuple)):
                for i, m in enumerate(mod):
                    yield from m.named_parameters(f"{prefix}{child}.{i}.")
            elif mod is not None:
                yield from mod.named_parameters(f"{prefix}{child}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.requires_grad]

    def num_params(self) -> int:
        return sum(p.size for p in self.trainable_parameters())

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()


def _param(shape, name) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


def _uniform(rng, bound, shape) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


def _kaiming_bound(fan_in: int) -> float:
    # kaiming-uniform with negative slope sqrt(5): sqrt(6 / ((1 + 5) * fan_in))
    return 1.0 / math.sqrt(fan_in)


def _spline_noise_coeffs(grid: SplineGrid, lead_shape, scale_noise, rng) -> np.ndarray:
    """Spline coefficients fitted to uniform noise sampled at the interior grid points."""
    pts = grid.interior_points
    noise = (rng.random(tuple(lead_shape) + (pts.size,)) - 0.5) * scale_noise / grid.grid_size
    if scale_noise == 0:
        return np.zeros(tuple(lead_shape) + (grid.n_basis,))
    return fit_spline_coeffs(pts, noise, grid).coeffs


class Conv1d(Module):
    """Plain 1-D convolution with bias; activation is left to the caller."""

    _param_names = ("weight", "bias")

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0, dilation=1,
                 groups=1, rng=None):
        if in_channels % groups or out_channels % groups:
            raise InvalidArgument("channel counts must be divisible by groups")
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel_size = kernel_size
        self.stride, self.padding, self.dilation, self.groups = stride, padding, dilation, groups
        self.weight = _param((out_channels, in_channels // groups, kernel_size), "weight")
        self.bias = _param((out_channels,), "bias")
        if rng is not None:
            self.reset_parameters(rng)

    def reset_parameters(self, rng):
        bound = _kaiming_bound(self.weight.shape[1] * self.kernel_size)
        self.weight.data[...] = _uniform(rng, bound, self.weight.shape)
        self.bias.data[...] = _uniform(rng, bound, self.bias.shape)

    def __call__(self, x):
        length = x.shape[-1]
        span = self.dilation * (self.kernel_size - 1) + 1
        if length + 2 * self.padding < span:
            raise InvalidArgument(f"Conv1d: input length {length} shorter than kernel span {span}")
        return F.conv1d(x, self.weight, self.bias, self.stride, self.padding, self.dilation,
                        self.groups)


class KAConv1d(Module):
    """Convolution whose kernel taps are learnable functions
    ``phi(x) = spline(x) + w * b(x)``.

    The input is instance-normalized first.  The spline path expands the
    normalized signal in the B-spline basis and convolves the expansion with
    ``spline_weight``; the base path feeds ``prelu(gelu(z))`` through an
    ordinary convolution with ``base_weight``.  No bias.
    """

    _param_names = ("spline_weight", "base_weight", "prelu_slope")

    def __init__(self, in_channels, out_channels, kernel_size, grid: SplineGrid | None = None,
                 scale_noise=0.1, scale_base=1.0, stride=1, padding=0, dilation=1, groups=1,
                 rng=None):
        if in_channels % groups or out_channels % groups:
            raise InvalidArgument("channel counts must be divisible by groups")
        self.grid = grid or make_uniform_grid()
        self.in_channels, self.out_channels = in_channels, out_channels
        self.kernel_size = kernel_size
        self.scale_noise, self.scale_base = scale_noise, scale_base
        self.stride, self.padding, self.dilation, self.groups = stride, padding, dilation, groups
        c_per = in_channels // groups
        nb = self.grid.n_basis
        self.spline_weight = _param((out_channels, c_per, kernel_size, nb), "spline_weight")
        self.base_weight = _param((out_channels, c_per, kernel_size), "base_weight")
        self.prelu_slope = _param((1,), "prelu_slope")
        self.prelu_slope.data[...] = 0.25
        if rng is not None:
            self.reset_parameters(rng)

    def reset_parameters(self, rng):
        fan_in = self.base_weight.shape[1] * self.kernel_size
        self.base_weight.data[...] = self.scale_base * _uniform(
            rng, _kaiming_bound(fan_in), self.base_weight.shape)
        self.spline_weight.data[...] = _spline_noise_coeffs(
            self.grid, self.spline_weight.shape[:3], self.scale_noise, rng)
        self.prelu_slope.data[...] = 0.25

    def __call__(self, x):
        length = x.shape[-1]
        span = self.dilation * (self.kernel_size - 1) + 1
        if length + 2 * self.padding < span:
            raise InvalidArgument(
                f"KAConv1d: input length {length} shorter than kernel span {span}")
        conv = dict(stride=self.stride, padding=self.padding, dilation=self.dilation,
                    groups=self.groups)
        z = F.instance_norm_1d(x)
        basis = F.bspline_basis(z, self.grid)                     # [..., C, L, nb]
        nb = self.grid.n_basis
        lead = basis.shape[:-3]
        basis = F.transpose(basis, tuple(range(len(lead))) + tuple(
            len(lead) + a for a in (0, 2, 1)))                      # [..., C, nb, L]
        basis = F.reshape(basis, lead + (self.in_channels * nb, length))
        c_out, c_per, k, _ = self.spline_weight.shape
        w = F.reshape(F.transpose(self.spline_weight, (0, 1, 3, 2)), (c_out, c_per * nb, k))
        spline_out = F.conv1d(basis, w, **conv)
        base_out = F.conv1d(F.prelu(F.gelu(z), self.prelu_slope), self.base_weight, **conv)
        return spline_out + base_out


class KANLayer(Module):
    """Fully connected KAN layer: every edge (i -> j) carries
    ``base_weight[j, i] * silu(x_i) + spline_scaler[j, i] * spline_ji(x_i)``."""

    _param_names = ("base_weight", "spline_weight", "spline_scaler")

    def __init__(self, in_features, out_features, grid: SplineGrid | None = None,
                 scale_noise=0.1, scale_base=1.0, scale_spline=1.0, rng=None):
        self.grid = grid or make_uniform_grid()
        self.in_features, self.out_features = in_features, out_features
        self.scale_noise, self.scale_base, self.scale_spline = scale_noise, scale_base, scale_spline
        self.base_weight = _param((out_features, in_features), "base_weight")
        self.spline_weight = _param((out_features, in_features, self.grid.n_basis),
                                    "spline_weight")
        self.spline_scaler = _param((out_features, in_features), "spline_scaler")
        if rng is not None:
            self.reset_parameters(rng)

    def reset_parameters(self, rng):
        bound = _kaiming_bound(self.in_features)
        self.base_weight.data[...] = self.scale_base * _uniform(rng, bound, self.base_weight.shape)
        self.spline_weight.data[...] = _spline_noise_coeffs(
            self.grid, self.spline_weight.shape[:2], self.scale_noise, rng)
        self.spline_scaler.data[...] = self.scale_spline * _uniform(
            rng, bound, self.spline_scaler.shape)

    def __call__(self, x):
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.shape[-1] != self.in_features:
            raise InvalidArgument(
                f"KANLayer: expected {self.in_features} input features, got shape {x.shape}")
        single = x.ndim == 1
        if single:
            x = F.reshape(x, (1, self.in_features))
        n_out, n_in, nb = self.spline_weight.shape
        base = F.matmul(F.silu(x), F.transpose(self.base_weight))
        basis = F.reshape(F.bspline_basis(x, self.grid), (x.shape[0], n_in * nb))
        scaled = self.spline_weight * F.reshape(self.spline_scaler, (n_out, n_in, 1))
        spline = F.matmul(basis, F.transpose(F.reshape(scaled, (n_out, n_in * nb))))
        out = base + spline
        return F.reshape(out, (n_out,)) if single else out


class MLPHead(Module):
    """Linear classifier producing raw logits."""

    _param_names = ("weight", "bias")

    def __init__(self, in_features, n_classes, rng=None):
        self.in_features, self.n_classes = in_features, n_classes
        self.weight = _param((n_classes, in_features), "weight")
        self.bias = _param((n_classes,), "bias")
        if rng is not None:
            self.reset_parameters(rng)

    def reset_parameters(self, rng):
        bound = _kaiming_bound(self.in_features)
        self.weight.data[...] = _uniform(rng, bound, self.weight.shape)
        self.bias.data[...] = _uniform(rng, bound, self.bias.shape)

    def __call__(self, x):
        return F.matmul(x, F.transpose(self.weight)) + self.bias


def conv1d_forward(layer: Conv1d, x):
    return layer(x)


def kaconv1d_forward(layer: KAConv1d, x):
    return layer(x)


def kan_forward(layer: KANLayer, x):
    return layer(x)


def init_kaconv(layer: KAConv1d, rng) -> None:
    layer.reset_parameters(rng)


def init_kan(layer: KANLayer, rng) -> None:
    layer.reset_parameters(rng)


class KANStack(Module):
    """A chain of KANLayers, e.g. widths ``[n, 2n + 1, 1]``."""

    _child_names = ("layers",)

    def __init__(self, widths, grid: SplineGrid | None = None, rng=None, **kwargs):
        if len(widths) < 2 or min(widths) < 1:
            raise InvalidArgument(f"invalid KAN widths {widths}")
        self.widths = list(widths)
        self.layers = [KANLayer(a, b, grid=grid, rng=rng, **kwargs)
                       for a, b in zip(widths[:-1], widths[1:])]

    def __call__(self, x):
        for layer in self.layers:
            x = layer(x)
        return x


def kart_stack(n_inputs: int, grid: SplineGrid | None = None, rng=None, **kwargs) -> KANStack:
    """Two KAN layers shaped ``[n, 2n + 1, 1]``, mirroring the inner and outer sums
    of the Kolmogorov-Arnold representation."""
    if n_inputs < 1:
        raise InvalidArgument(f"n_inputs must be >= 1, got {n_inputs}")
    return KANStack([n_inputs, 2 * n_inputs + 1, 1], grid=grid, rng=rng, **kwargs)


def fit_regression(model: Module, xs, ys, steps: int = 2000, lr: float = 1e-2) -> list[float]:
    """Full-batch Adam on mean squared error; returns the loss per step.

    ``xs`` has shape [N, n_in]; ``ys`` has shape [N] or [N, n_out].
    """
    xs = Tensor(np.asarray(xs, dtype=np.float64))
    ys = np.asarray(ys, dtype=np.float64)
    if ys.ndim == 1:
        ys = ys[:, None]
    target = Tensor(ys)
    opt = Adam(model.trainable_parameters(), lr=lr)
    history = []
    for _ in range(steps):
        loss = F.mse(model(xs), target)
        history.append(loss.item())
        backward(loss)
        opt.step()
    return history


def regression_mse(model: Module, xs, ys) -> float:
    ys = np.asarray(ys, dtype=np.float64)
    if ys.ndim == 1:
        ys = ys[:, None]
    pred = model(Tensor(np.asarray(xs, dtype=np.float64))).data
    return float(np.mean((pred - ys) ** 2))
