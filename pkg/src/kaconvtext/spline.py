"""B-spline grids, Cox-de Boor basis evaluation and least-squares coefficient fits.

Everything here works in float64 and is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgument

RIDGE = 1e-8


@dataclass(frozen=True)
class SplineGrid:
    """Uniform knot vector over ``[range_lo, range_hi]`` extended by
    ``spline_order`` knots on each side.

    ``grid_eps`` is carried for configuration round-trips only; grids are
    never re-fitted to data.
    """

    grid_size: int = 5
    spline_order: int = 3
    range_lo: float = -1.0
    range_hi: float = 1.0
    grid_eps: float = 0.02
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        G, k = self.grid_size, self.spline_order
        if int(G) != G or G < 1:
            raise InvalidArgument(f"grid_size must be a positive integer, got {G!r}")
        if int(k) != k or k < 0:
            raise InvalidArgument(f"spline_order must be a non-negative integer, got {k!r}")
        if not (np.isfinite(self.range_lo) and np.isfinite(self.range_hi)):
            raise InvalidArgument("grid range must be finite")
        if not self.range_lo < self.range_hi:
            raise InvalidArgument(
                f"grid range must satisfy lo < hi, got [{self.range_lo}, {self.range_hi}]"
            )
        if not 0.0 <= self.grid_eps <= 1.0:
            raise InvalidArgument(f"grid_eps must lie in [0, 1], got {self.grid_eps}")
        # (hi - lo) * i / G keeps the knots at index k and G + k exactly on lo and hi
        steps = np.arange(-k, G + k + 1, dtype=np.float64)
        knots = self.range_lo + (self.range_hi - self.range_lo) * steps / G
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @property
    def n_basis(self) -> int:
        return self.grid_size + self.spline_order

    @property
    def spacing(self) -> float:
        return (self.range_hi - self.range_lo) / self.grid_size

    @property
    def interior_points(self) -> np.ndarray:
        """The ``G + 1`` knots lying in ``[range_lo, range_hi]``."""
        k = self.spline_order
        return self.knots[k:len(self.knots) - k]

    def to_dict(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "spline_order": self.spline_order,
            "range_lo": self.range_lo,
            "range_hi": self.range_hi,
            "grid_eps": self.grid_eps,
        }


def make_uniform_grid(G: int = 5, k: int = 3, lo: float = -1.0, hi: float = 1.0,
                      grid_eps: float = 0.02) -> SplineGrid:
    return SplineGrid(grid_size=G, spline_order=k, range_lo=float(lo),
                      range_hi=float(hi), grid_eps=grid_eps)


def _padded_knots(grid: SplineGrid) -> np.ndarray:
    # k more uniform knots on each side so every local triangle has the knots it reads
    k = grid.spline_order
    t = grid.knots
    h = grid.spacing
    ext = h * np.arange(1, k + 1, dtype=np.float64)
    return np.concatenate([t[0] - ext[::-1], t, t[-1] + ext])


def _local_bases(x: np.ndarray, grid: SplineGrid, derivative: bool):
    """Cox-de Boor restricted to the k + 1 functions that are nonzero at each point.

    Knot intervals are half-open ``[t_j, t_{j+1})`` except the last, which is
    closed.  Returns dense ``(values, derivs)`` of shape ``x.shape + (G + k,)``;
    ``derivs`` is None unless requested.
    """
    k = grid.spline_order
    n = grid.n_basis
    t = grid.knots
    tp = _padded_knots(grid)
    flat = x.reshape(-1)
    span = np.searchsorted(t, flat, side="right") - 1
    span = np.where(flat == t[-1], len(t) - 2, span)
    inside = (span >= 0) & (span <= len(t) - 2)
    span = np.clip(span, 0, len(t) - 2) + k          # index into tp
    P = flat.size
    N = np.ones((P, 1))
    lower = None
    for d in range(1, k + 1):
        if d == k:
            lower = N
        left = np.stack([flat - tp[span + 1 - j] for j in range(1, d + 1)], axis=1)
        right = np.stack([tp[span + j] - flat for j in range(1, d + 1)], axis=1)
        new = np.zeros((P, d + 1))
        saved = np.zeros(P)
        for r in range(d):
            temp = N[:, r] / (right[:, r] + left[:, d - r - 1])
            new[:, r] = saved + right[:, r] * temp
            saved = left[:, d - r - 1] * temp
        new[:, d] = saved
        N = new
    # local column r is basis index span - 2k + r in the unpadded numbering; scatter
    # into a frame k columns wider on each side, then crop
    width = n + 2 * k
    flat_idx = (np.arange(P) * width + span - k)[:, None] + np.arange(k + 1)
    mask = inside[:, None]
    frame = np.zeros((P, width))
    frame.reshape(-1)[flat_idx] = np.where(mask, N, 0.0)
    values = frame[:, k:k + n]
    derivs = None
    if derivative:
        frame = np.zeros((P, width))
        if k > 0:
            # B'_i = k/(t_{i+k}-t_i) B_{i,k-1} - k/(t_{i+k+1}-t_{i+1}) B_{i+1,k-1}
            zero = np.zeros((P, 1))
            lo = np.concatenate([zero, lower], axis=1)                  # B_{i,k-1}
            hi = np.concatenate([lower, zero], axis=1)                  # B_{i+1,k-1}
            ip = span[:, None] - k + np.arange(k + 1)                   # i in padded numbering
            a = k / (tp[ip + k] - tp[ip])
            b = k / (tp[ip + k + 1] - tp[ip + 1])
            frame.reshape(-1)[flat_idx] = np.where(mask, a * lo - b * hi, 0.0)
        derivs = frame[:, k:k + n].reshape(x.shape + (n,))
    return values.reshape(x.shape + (n,)), derivs


def bspline_basis(x, grid: SplineGrid) -> np.ndarray:
    """Evaluate all ``G + k`` basis functions at ``x``.

    Returns an array of shape ``x.shape + (grid.n_basis,)``.  Points outside
    the extended knot range evaluate to all zeros.
    """
    return _local_bases(np.asarray(x, dtype=np.float64), grid, derivative=False)[0]


def bspline_basis_with_derivative(x, grid: SplineGrid) -> tuple[np.ndarray, np.ndarray]:
    """Basis values and their derivatives with respect to ``x``."""
    return _local_bases(np.asarray(x, dtype=np.float64), grid, derivative=True)


def bspline_basis_derivative(x, grid: SplineGrid) -> np.ndarray:
    return bspline_basis_with_derivative(x, grid)[1]


def evaluate_spline(x, coeffs, grid: SplineGrid) -> np.ndarray:
    """Evaluate ``sum_i coeffs[..., i] * B_i(x)``; ``coeffs`` broadcasts over leading axes."""
    return bspline_basis(x, grid) @ np.asarray(coeffs, dtype=np.float64)


class SplineFit(NamedTuple):
    coeffs: np.ndarray
    residual: np.ndarray
    rank: int
    regularized: bool


def fit_spline_coeffs(xs, ys, grid: SplineGrid, ridge: float = RIDGE) -> SplineFit:
    """Least-squares spline coefficients for one or many target functions.

    ``xs`` has shape ``(N,)``.  ``ys`` has shape ``(..., N)``: every leading
    index is an independent function sampled at ``xs``.  The returned
    ``coeffs`` has shape ``(..., G + k)`` and ``residual`` holds the sum of
    squared errors per function.

    When the design matrix is rank deficient (for instance fewer samples
    than basis functions) the ridge-regularized normal equations are solved
    instead and ``regularized`` is set.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1:
        raise InvalidArgument(f"xs must be one-dimensional, got shape {xs.shape}")
    if ys.shape[-1:] != xs.shape:
        raise InvalidArgument(f"ys shape {ys.shape} does not end with len(xs)={xs.size}")
    A = bspline_basis(xs, grid)
    lead = ys.shape[:-1]
    Y = ys.reshape(-1, xs.size).T
    rank = int(np.linalg.matrix_rank(A))
    regularized = rank < grid.n_basis
    if regularized:
        gram = A.T @ A + ridge * np.eye(grid.n_basis)
        C = np.linalg.solve(gram, A.T @ Y)
    else:
        C = np.linalg.lstsq(A, Y, rcond=None)[0]
    resid = ((A @ C - Y) ** 2).sum(axis=0)
    return SplineFit(C.T.reshape(lead + (grid.n_basis,)), resid.reshape(lead), rank, regularized)
