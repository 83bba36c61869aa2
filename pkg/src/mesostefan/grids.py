"""Uniform 1-D mesoscopic grids, the interaction kernel, and convolutions.

The mesoscopic domain is eps^-1 * [-left, right] in kernel-range units.  The
kernel J is an even probability density supported on [-1, 1]; convolution is
trapezoid quadrature, either with zero extension ("free") or with reflected
images about both endpoints ("neumann").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError

KERNEL_RANGE = 1.0
DEFAULT_POINT_CAP = 10_000_000
MAX_SPACING = 0.1  # at least 10 samples per unit kernel range


def _cos2_kernel(r):
    # strict inequality pins J(+-1) to exactly 0 (cos(pi/2) rounds to ~1e-17)
    return np.where(np.abs(r) < 1.0, np.cos(0.5 * np.pi * r) ** 2, 0.0)


def _quartic_kernel(r):
    return np.where(np.abs(r) <= 1.0, (15.0 / 16.0) * (1.0 - r * r) ** 2, 0.0)


#: Available kernel shapes.  Both are even, C^1, supported on [-1, 1] and
#: integrate to 1 before discrete renormalization.
KERNEL_SHAPES = {"cos2": _cos2_kernel, "quartic": _quartic_kernel}


@dataclass(frozen=True)
class Grid:
    """Uniform grid on eps^-1 * [-left, right]; both endpoints are points."""

    epsilon: float
    left: float
    right: float
    spacing: float
    points: np.ndarray

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def a(self) -> float:
        """Left endpoint (mesoscopic units)."""
        return float(self.points[0])

    @property
    def b(self) -> float:
        """Right endpoint (mesoscopic units)."""
        return float(self.points[-1])

    @property
    def center_index(self) -> int:
        """Index of the point closest to x = 0."""
        return int(np.argmin(np.abs(self.points)))

    def index_of(self, x: float) -> int:
        i = int(round((x - self.a) / self.spacing))
        if i < 0 or i >= self.n or abs(self.points[i] - x) > 1e-9 * max(1.0, abs(x)):
            raise GridError(f"x={x} is not a grid point")
        return i

    def descriptor(self) -> str:
        return json.dumps(
            {
                "epsilon": self.epsilon,
                "left": self.left,
                "right": self.right,
                "spacing": self.spacing,
                "n": self.n,
            }
        )


@dataclass(frozen=True)
class Kernel:
    """Discretely renormalized samples of J on [-1, 1] at the grid spacing."""

    spacing: float
    shape: str
    samples: np.ndarray   # raw J values at offsets k*spacing, k=-K..K
    weights: np.ndarray   # quadrature weights, sum(weights) == 1 exactly

    @property
    def half_points(self) -> int:
        return (self.samples.size - 1) // 2

    @property
    def range(self) -> float:
        return KERNEL_RANGE


@dataclass(frozen=True)
class Profile:
    """Real-valued function sampled on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.points.shape:
            raise GridError("profile values do not match grid size")


def build_grid(epsilon, half_length_left, half_length_right, spacing,
               point_cap=DEFAULT_POINT_CAP) -> Grid:
    """Grid covering eps^-1 * [-left, right] with endpoints included.

    The spacing is adjusted downward by at most 1% so that an integer number
    of cells fits.
    """
    vals = (epsilon, half_length_left, half_length_right, spacing)
    if not all(np.isfinite(v) for v in vals):
        raise GridError("grid parameters must be finite")
    if not 0.0 < epsilon < 1.0:
        raise GridError(f"epsilon must be in (0, 1), got {epsilon}")
    if half_length_left <= 0.0 or half_length_right <= 0.0:
        raise GridError("half-lengths must be positive")
    if not 0.0 < spacing <= MAX_SPACING:
        raise GridError(f"spacing must be in (0, {MAX_SPACING}], got {spacing}")

    a = -half_length_left / epsilon
    b = half_length_right / epsilon
    width = b - a
    n_cells = int(math.ceil(width / spacing - 1e-9))
    adjusted = width / n_cells
    if adjusted < 0.99 * spacing:
        raise GridError(
            f"spacing {spacing} cannot fit {width} within a 1% adjustment"
        )
    if n_cells + 1 > point_cap:
        raise GridError(f"grid would need {n_cells + 1} points (cap {point_cap})")
    if n_cells + 1 < 3:
        raise GridError("grid needs at least 3 points")
    points = a + adjusted * np.arange(n_cells + 1)
    points.setflags(write=False)
    return Grid(float(epsilon), float(half_length_left), float(half_length_right),
                float(adjusted), points)


def build_kernel(grid_spacing, shape="cos2") -> Kernel:
    """Sample a kernel shape at the grid spacing and renormalize discretely."""
    if shape not in KERNEL_SHAPES:
        raise GridError(f"unknown kernel shape {shape!r}")
    if not np.isfinite(grid_spacing) or grid_spacing <= 0:
        raise GridError("spacing must be positive and finite")
    n_half = int(math.ceil(KERNEL_RANGE / grid_spacing - 1e-9))
    if n_half < 10:
        raise GridError("need at least 10 kernel samples per unit range")
    offsets = grid_spacing * np.arange(-n_half, n_half + 1)
    samples = KERNEL_SHAPES[shape](offsets)
    trap = np.ones_like(samples)
    trap[0] = trap[-1] = 0.5
    weights = samples * trap * grid_spacing
    weights = weights / weights.sum()
    samples.setflags(write=False)
    weights.setflags(write=False)
    return Kernel(float(grid_spacing), shape, samples, weights)


def _check_match(kernel: Kernel, grid: Grid):
    if abs(kernel.spacing - grid.spacing) > 1e-12 * max(1.0, grid.spacing):
        raise GridError(
            f"kernel spacing {kernel.spacing} != grid spacing {grid.spacing}"
        )


def conv_values(kernel: Kernel, grid: Grid, values: np.ndarray,
                boundary: str = "neumann") -> np.ndarray:
    """Convolve raw sample values with the kernel.

    ``free`` treats the profile as 0 outside the domain; ``neumann`` adds the
    reflected images about both endpoints.  With trapezoid weights and a
    kernel vanishing at +-1 this equals the quadrature of the reflected-kernel
    integral exactly.
    """
    _check_match(kernel, grid)
    k = kernel.half_points
    if boundary == "neumann":
        if grid.b - grid.a < 2.0 * KERNEL_RANGE:
            raise GridError("neumann convolution needs half-widths >= kernel range")
        left_pad = values[1:k + 1][::-1]
        right_pad = values[-k - 1:-1][::-1]
    elif boundary == "free":
        left_pad = np.zeros(k)
        right_pad = np.zeros(k)
    else:
        raise GridError(f"unknown boundary mode {boundary!r}")
    padded = np.concatenate([left_pad, values, right_pad])
    return np.convolve(padded, kernel.weights, mode="valid")


def conv_values_filled(kernel: Kernel, values: np.ndarray,
                       left_fill: float, right_fill: float) -> np.ndarray:
    """Free-line convolution with constant extension on both sides."""
    k = kernel.half_points
    padded = np.concatenate(
        [np.full(k, left_fill), values, np.full(k, right_fill)]
    )
    return np.convolve(padded, kernel.weights, mode="valid")


def convolve(kernel: Kernel, profile: Profile, boundary: str = "neumann") -> Profile:
    """Profile-level wrapper around :func:`conv_values`."""
    out = conv_values(kernel, profile.grid, profile.values, boundary)
    return Profile(profile.grid, out)


def neumann_matrix(kernel: Kernel, grid: Grid) -> np.ndarray:
    """Dense matrix W with (W f)_i = trapezoid quadrature of J^neum(x_i, y) f(y).

    Matches :func:`conv_values` with ``boundary="neumann"`` to rounding.
    Intended for Newton solves and small dense spectral work; guarded to
    10^4 points.
    """
    _check_match(kernel, grid)
    if grid.n > 10_000:
        raise GridError("dense reflected-kernel matrix capped at 10^4 points")
    x = grid.points
    a2, b2 = 2.0 * grid.a, 2.0 * grid.b
    shape_fn = KERNEL_SHAPES[kernel.shape]
    diff = x[:, None] - x[None, :]
    w = shape_fn(diff) + shape_fn(x[:, None] + x[None, :] - b2) \
        + shape_fn(x[:, None] + x[None, :] - a2)
    trap = np.full(grid.n, grid.spacing)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    # renormalize exactly as the sampled kernel does
    norm = kernel.weights.sum() / (kernel.samples * _trap_weights(kernel)).sum()
    return w * trap[None, :] * norm


def _trap_weights(kernel: Kernel) -> np.ndarray:
    t = np.full(kernel.samples.size, kernel.spacing)
    t[0] *= 0.5
    t[-1] *= 0.5
    return t


def trapezoid(grid: Grid, values: np.ndarray) -> float:
    """Trapezoid integral of sampled values over the grid."""
    return float(np.trapezoid(values, dx=grid.spacing))


def cumulative_from_center(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Trapezoid antiderivative vanishing at the grid point closest to 0."""
    from scipy.integrate import cumulative_trapezoid

    c = cumulative_trapezoid(values, dx=grid.spacing, initial=0.0)
    return c - c[grid.center_index]
