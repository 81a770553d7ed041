"""Central finite-difference gradient checks."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, backward


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b|| / max(||a||, ||b||)``, zero when both vanish."""
    denom = max(np.linalg.norm(a), np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / denom)


def numerical_grad(fn, tensor: Tensor, eps: float = 1e-5) -> np.ndarray:
    """d fn() / d tensor by central differences; ``fn`` returns a scalar Tensor."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = fn().item()
        flat[i] = orig - eps
        down = fn().item()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * eps)
    return grad


def check_gradients(fn, tensors, eps: float = 1e-5) -> dict:
    """Compare analytic and numerical gradients of scalar ``fn()`` w.r.t. ``tensors``.

    Returns ``{index: relative_error}``.  Gradients accumulated in the
    tensors are reset before and after.
    """
    for t in tensors:
        t.zero_grad()
    backward(fn())
    analytic = [t.grad.copy() for t in tensors]
    for t in tensors:
        t.zero_grad()
    return {i: relative_error(analytic[i], numerical_grad(fn, t, eps))
            for i, t in enumerate(tensors)}
