"""Periodic uniform grids, sampled fields and flat-background difference operators.

Two gradient discretizations are exposed:

* ``grad0`` -- centered differences on nodes, used for pointwise reporting.
* ``grad_fwd`` / ``div_bwd`` -- the staggered pair.  Forward differences live on
  the edge between node ``i`` and ``i+1``; the backward divergence brings them
  back to nodes.  ``laplace0 = div_bwd(grad_fwd(.))`` so that summation by
  parts holds exactly on the periodic grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import GridMismatch

MIN_POINTS = 8


@dataclass(frozen=True)
class Grid1D:
    n: int
    length: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise ValueError(f"Grid1D needs an integer n >= {MIN_POINTS}, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"Grid1D length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,)

    @property
    def spacings(self) -> tuple:
        return (self.spacing,)

    @property
    def cell_volume(self) -> float:
        return self.spacing

    @property
    def ndim(self) -> int:
        return 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    lx: float = 2 * np.pi
    ly: float = 2 * np.pi

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < MIN_POINTS:
                raise ValueError(f"Grid2D needs integer {name} >= {MIN_POINTS}, got {v}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("Grid2D lengths must be positive")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny)

    @property
    def spacings(self) -> tuple:
        return (self.hx, self.hy)

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy

    @property
    def ndim(self) -> int:
        return 2

    def mesh(self):
        """Coordinate arrays ``(X, Y)`` indexed ``[i, j]`` with x along axis 0."""
        x = np.arange(self.nx) * self.hx
        y = np.arange(self.ny) * self.hy
        return np.meshgrid(x, y, indexing="ij")


Grid = Union[Grid1D, Grid2D]


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.shape != tuple(shape):
        raise ValueError(f"value shape {arr.shape} does not match grid shape {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    def with_values(self, values, name=None) -> "ScalarField":
        return ScalarField(self.grid, values, self.name if name is None else name)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: tuple

    def __post_init__(self):
        comps = tuple(_frozen(c, self.grid.shape) for c in self.components)
        if len(comps) != self.grid.ndim:
            raise ValueError("component count must equal grid dimension")
        object.__setattr__(self, "components", comps)

    def dot(self, other: "VectorField") -> np.ndarray:
        check_same_grid(self.grid, other.grid)
        return sum(a * b for a, b in zip(self.components, other.components))


def check_same_grid(*grids):
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatch(f"grid mismatch: {first} vs {g}")


# -- array-level stencils (periodic along every axis) -------------------------

def d_center(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2.0 * h)


def d_fwd(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Forward difference; entry ``i`` sits on the edge ``(i, i+1)``."""
    return (np.roll(a, -1, axis) - a) / h


def d_bwd(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (a - np.roll(a, 1, axis)) / h


def d2(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    return (np.roll(a, -1, axis) - 2.0 * a + np.roll(a, 1, axis)) / (h * h)


def d_mixed(a: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Four-point centered cross derivative for 2-D arrays."""
    pp = np.roll(np.roll(a, -1, 0), -1, 1)
    pm = np.roll(np.roll(a, -1, 0), 1, 1)
    mp = np.roll(np.roll(a, 1, 0), -1, 1)
    mm = np.roll(np.roll(a, 1, 0), 1, 1)
    return (pp - pm - mp + mm) / (4.0 * hx * hy)


def lap(a: np.ndarray, spacings: Sequence[float]) -> np.ndarray:
    """3-point / 5-point Laplacian, i.e. ``div_bwd(grad_fwd(a))``."""
    out = np.zeros_like(a, dtype=float)
    for axis, h in enumerate(spacings):
        out += d_bwd(d_fwd(a, h, axis), h, axis)
    return out


def edge_sq_sum(a: np.ndarray, spacings: Sequence[float]) -> np.ndarray:
    """Per-node sum over axes of the squared forward differences."""
    out = np.zeros_like(a, dtype=float)
    for axis, h in enumerate(spacings):
        out += d_fwd(a, h, axis) ** 2
    return out


# -- field-level operators ----------------------------------------------------

def grad0(fld: ScalarField) -> VectorField:
    g = fld.grid
    return VectorField(g, tuple(d_center(fld.values, h, ax) for ax, h in enumerate(g.spacings)))


def grad_fwd(fld: ScalarField) -> VectorField:
    """Edge-staggered gradient (component ``i`` lives half a cell ahead)."""
    g = fld.grid
    return VectorField(g, tuple(d_fwd(fld.values, h, ax) for ax, h in enumerate(g.spacings)))


def div_bwd(vec: VectorField) -> ScalarField:
    g = vec.grid
    out = sum(d_bwd(c, h, ax) for ax, (c, h) in enumerate(zip(vec.components, g.spacings)))
    return ScalarField(g, out)


def div0(vec: VectorField) -> ScalarField:
    g = vec.grid
    out = sum(d_center(c, h, ax) for ax, (c, h) in enumerate(zip(vec.components, g.spacings)))
    return ScalarField(g, out)


def laplace0(fld: ScalarField) -> ScalarField:
    return ScalarField(fld.grid, lap(fld.values, fld.grid.spacings))


# -- reductions ---------------------------------------------------------------

def pairwise_sum(values) -> float:
    """Sum with a fixed pairwise tree over C-order indices.

    Zero-pads to a power of two and folds the upper half onto the lower half
    until one value remains, so the association order depends only on size.
    """
    a = np.ascontiguousarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    size = 1 << (a.size - 1).bit_length()
    if size != a.size:
        a = np.concatenate([a, np.zeros(size - a.size)])
    while a.size > 1:
        half = a.size // 2
        a = a[:half] + a[half:]
    return float(a[0])


def integrate(fld: ScalarField, weight: ScalarField | None = None) -> float:
    """Riemann sum of ``field * weight * cell volume``."""
    vals = fld.values
    if weight is not None:
        check_same_grid(fld.grid, weight.grid)
        if np.any(weight.values < 0):
            raise ValueError("integration weight must be non-negative")
        vals = vals * weight.values
    return pairwise_sum(vals) * fld.grid.cell_volume


def integrate_array(a: np.ndarray, grid: Grid) -> float:
    return pairwise_sum(a) * grid.cell_volume


def log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Logarithmic mean ``(a - b) / (log a - log b)``, equal to ``a`` when ``a == b``."""
    la, lb = np.log(a), np.log(b)
    diff = la - lb
    out = np.empty_like(a, dtype=float)
    small = np.abs(diff) < 1e-6
    # series (a b)^{1/2} (1 + diff^2/24) near the diagonal
    out[small] = np.sqrt(a[small] * b[small]) * (1.0 + diff[small] ** 2 / 24.0)
    out[~small] = (a[~small] - b[~small]) / diff[~small]
    return out


def fisher_logmean_sum(rho: np.ndarray, grid: Grid) -> float:
    """Flat ``int |grad rho|^2 / rho`` with rho at edges by its logarithmic mean.

    Equal to ``sum d_fwd(rho) * d_fwd(log rho)``, the form that pairs with the
    staggered Laplacian under summation by parts.
    """
    total = np.zeros(grid.shape)
    for axis, h in enumerate(grid.spacings):
        nxt = np.roll(rho, -1, axis)
        total += (nxt - rho) ** 2 / (h * h) / log_mean(nxt, rho)
    return pairwise_sum(total) * grid.cell_volume


def time_derivative(series, dt: float) -> np.ndarray:
    """Derivative along axis 0 of a uniformly sampled series.

    Fourth-order centered where two neighbours exist on each side,
    second-order centered at the second and penultimate samples and
    second-order one-sided at the two ends.
    """
    y = np.asarray(series, dtype=float)
    k = y.shape[0]
    if k < 3:
        raise ValueError("need at least three samples")
    out = np.empty_like(y)
    out[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt)
    out[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * dt)
    out[1] = (y[2] - y[0]) / (2.0 * dt)
    out[-2] = (y[-1] - y[-3]) / (2.0 * dt)
    if k >= 5:
        out[2:-2] = (-y[4:] + 8.0 * y[3:-1] - 8.0 * y[1:-3] + y[:-4]) / (12.0 * dt)
    return out


def convergence_order(err_coarse: float, err_fine: float, ratio: float = 2.0) -> float:
    return float(np.log(err_coarse / err_fine) / np.log(ratio))
