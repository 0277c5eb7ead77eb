"""
Sampled functions on a shared grid.

A FuncTrace holds values (and optionally the derivative) of a function on a
strictly increasing grid. The cubic-spline interpolant is computed once and
cached on the instance.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid
from scipy.interpolate import CubicSpline


def make_grid(t0: float, t_end: float, size: int = 4000) -> np.ndarray:
    """Half uniform, half log-spaced in (t - t0 + 1); both ends exact."""
    if t_end <= t0:
        raise ValueError(f"horizon must exceed t0 ({t_end} <= {t0})")
    if size < 4:
        raise ValueError("grid needs at least 4 points")
    uniform = np.linspace(t0, t_end, size - size // 2)
    logspaced = t0 - 1.0 + np.geomspace(1.0, t_end - t0 + 1.0, size // 2)
    grid = np.unique(np.concatenate([uniform, logspaced]))
    # drop points closer than round-off to a neighbour
    keep = np.concatenate([[True], np.diff(grid) > 1e-12 * (1.0 + np.abs(grid[1:]))])
    grid = grid[keep]
    grid[0] = t0
    grid[-1] = t_end
    return grid


def doubling_increase(grid: np.ndarray, values: np.ndarray) -> float:
    """Relative increase of ``values`` over the last horizon doubling.

    Compares the value at T with the value at t0 + (T - t0)/2. A sequence
    that did not increase gives 0; growth from exactly zero gives inf.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    half = grid[0] + 0.5 * (grid[-1] - grid[0])
    k = int(np.searchsorted(grid, half, side="right") - 1)
    base, top = values[k], values[-1]
    if not np.isfinite(top):
        return np.inf
    if top <= base:
        return 0.0
    if base == 0:
        return np.inf
    return float((top - base) / abs(base))


def plateaus(grid: np.ndarray, values: np.ndarray, rel: float = 0.01) -> bool:
    return doubling_increase(grid, values) < rel


def cumulative_integral(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Running integral from grid[0] by composite Simpson on a possibly uneven grid.

    Complex values are integrated part by part.
    """
    values = np.asarray(values)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3:
        return cumulative_trapezoid(values, grid, initial=0)
    if np.iscomplexobj(values):
        return (cumulative_simpson(values.real, x=grid, initial=0)
                + 1j * cumulative_simpson(values.imag, x=grid, initial=0))
    return cumulative_simpson(values, x=grid, initial=0)


@dataclass(frozen=True, eq=False)
class FuncTrace:
    grid: np.ndarray
    values: np.ndarray
    derivative: Optional[np.ndarray] = None
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.grid.ndim != 1 or self.values.shape != self.grid.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")

    @property
    def t0(self) -> float:
        return float(self.grid[0])

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @cached_property
    def _splines(self) -> tuple[CubicSpline, Optional[CubicSpline]]:
        real = CubicSpline(self.grid, np.real(self.values))
        imag = None
        if self.is_complex and np.any(np.imag(self.values) != 0):
            imag = CubicSpline(self.grid, np.imag(self.values))
        return real, imag

    def interpolant(self) -> Callable[[float], complex | float]:
        """Cubic spline through the samples; complex traces spline Re and Im."""
        real, imag = self._splines
        if imag is None:
            if self.is_complex:
                return lambda t: real(t) + 0j
            return real
        return lambda t: real(t) + 1j * imag(t)

    def at(self, t):
        return self.interpolant()(t)

    def real(self) -> "FuncTrace":
        derivative = None if self.derivative is None else np.real(self.derivative)
        return FuncTrace(self.grid, np.real(self.values).copy(), derivative)

    def scaled(self, factor: float) -> "FuncTrace":
        derivative = None if self.derivative is None else self.derivative * factor
        return FuncTrace(self.grid, self.values * factor, derivative)

    def index_at(self, t: float) -> int:
        """Index of the last grid point <= t."""
        return int(np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 1))

    def restrict(self, t_end: float) -> "FuncTrace":
        stop = self.index_at(t_end) + 1
        derivative = None if self.derivative is None else self.derivative[:stop]
        return FuncTrace(self.grid[:stop], self.values[:stop], derivative)
