"""Riemannian structure on the conformal 2-torus and the round 2-sphere.

The torus metric is ``g = exp(2u) (dx^2 + dy^2)``.  In two dimensions
``sqrt(g) g^{ij} = delta^{ij}``, which is why most contractions below reduce to
flat stencils times a power of ``exp(-2u)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveRadius
from .gridcore import (
    Grid2D,
    ScalarField,
    check_same_grid,
    d2,
    d_center,
    d_mixed,
    edge_sq_sum,
    fisher_logmean_sum,
    lap,
    pairwise_sum,
)


@dataclass(frozen=True, eq=False)
class ConformalMetric:
    grid: Grid2D
    u: ScalarField

    def __post_init__(self):
        if not isinstance(self.grid, Grid2D):
            raise TypeError("ConformalMetric lives on a Grid2D")
        check_same_grid(self.grid, self.u.grid)

    @classmethod
    def from_array(cls, grid: Grid2D, u) -> "ConformalMetric":
        return cls(grid, ScalarField(grid, u, "u"))

    @classmethod
    def flat(cls, grid: Grid2D) -> "ConformalMetric":
        return cls.from_array(grid, np.zeros(grid.shape))

    @property
    def volume_element(self) -> np.ndarray:
        return np.exp(2.0 * self.u.values)

    def volume(self) -> float:
        return pairwise_sum(self.volume_element) * self.grid.cell_volume


@dataclass(frozen=True)
class SphereMetric:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise NonPositiveRadius(f"sphere radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return 4.0 * np.pi * self.radius**2


@dataclass(frozen=True, eq=False)
class SymTensorField:
    grid: Grid2D
    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray

    def __post_init__(self):
        for name in ("xx", "xy", "yy"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != self.grid.shape or not np.all(np.isfinite(a)):
                raise ValueError(f"tensor component {name} has bad shape or values")
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def __add__(self, other: "SymTensorField") -> "SymTensorField":
        check_same_grid(self.grid, other.grid)
        return SymTensorField(self.grid, self.xx + other.xx, self.xy + other.xy, self.yy + other.yy)


def conformal_preset(name: str, grid: Grid2D) -> ConformalMetric:
    """Named initial conformal exponents: ``flat``, ``bump1``, ``bump2``."""
    X, Y = grid.mesh()
    kx, ky = 2 * np.pi / grid.lx, 2 * np.pi / grid.ly
    if name == "flat":
        u = np.zeros(grid.shape)
    elif name == "bump1":
        u = 0.1 * np.sin(kx * X) * np.cos(ky * Y)
    elif name == "bump2":
        u = 0.1 * np.sin(kx * X) * np.cos(ky * Y) + 0.05 * np.cos(2 * kx * X + ky * Y)
    else:
        raise ValueError(f"unknown metric preset {name!r}")
    return ConformalMetric.from_array(grid, u)


def _check(m: ConformalMetric, fld: ScalarField):
    check_same_grid(m.grid, fld.grid)


def scalar_curvature(m: ConformalMetric) -> ScalarField:
    u = m.u.values
    return ScalarField(m.grid, -2.0 * np.exp(-2.0 * u) * lap(u, m.grid.spacings), "R")


def ricci_tensor(m: ConformalMetric) -> SymTensorField:
    d = -lap(m.u.values, m.grid.spacings)
    return SymTensorField(m.grid, d, np.zeros_like(d), d.copy())


def laplace_beltrami(m: ConformalMetric, phi: ScalarField) -> ScalarField:
    _check(m, phi)
    return ScalarField(m.grid, np.exp(-2.0 * m.u.values) * lap(phi.values, m.grid.spacings))


def grad_norm_sq(m: ConformalMetric, phi: ScalarField) -> ScalarField:
    """Pointwise ``|grad phi|_g^2`` from centered differences."""
    _check(m, phi)
    hx, hy = m.grid.spacings
    gx = d_center(phi.values, hx, 0)
    gy = d_center(phi.values, hy, 1)
    return ScalarField(m.grid, np.exp(-2.0 * m.u.values) * (gx * gx + gy * gy))


def hessian(m: ConformalMetric, f: ScalarField) -> SymTensorField:
    """Covariant Hessian with the conformal Christoffel symbols.

    Diagonal second derivatives use the 3-point stencil, so the trace equals
    ``laplace_beltrami`` up to round-off.
    """
    _check(m, f)
    hx, hy = m.grid.spacings
    fv, uv = f.values, m.u.values
    fx, fy = d_center(fv, hx, 0), d_center(fv, hy, 1)
    ux, uy = d_center(uv, hx, 0), d_center(uv, hy, 1)
    hxx = d2(fv, hx, 0) - ux * fx + uy * fy
    hyy = d2(fv, hy, 1) + ux * fx - uy * fy
    hxy = d_mixed(fv, hx, hy) - uy * fx - ux * fy
    return SymTensorField(m.grid, hxx, hxy, hyy)


def trace(m: ConformalMetric, T: SymTensorField) -> ScalarField:
    check_same_grid(m.grid, T.grid)
    return ScalarField(m.grid, np.exp(-2.0 * m.u.values) * (T.xx + T.yy))


def tensor_norm_sq(m: ConformalMetric, T: SymTensorField) -> ScalarField:
    check_same_grid(m.grid, T.grid)
    return ScalarField(
        m.grid, np.exp(-4.0 * m.u.values) * (T.xx**2 + 2.0 * T.xy**2 + T.yy**2)
    )


def sphere_quantities(s: SphereMetric) -> tuple[float, float, float]:
    """``(R, ricci_coeff, area)`` of the round sphere, with ``Ric = ricci_coeff * g``."""
    if not s.radius > 0:
        raise NonPositiveRadius(f"sphere radius must be positive, got {s.radius}")
    r2 = s.radius**2
    return 2.0 / r2, 1.0 / r2, 4.0 * np.pi * r2


def sphere_ricci_norm_sq(s: SphereMetric) -> float:
    # g^{ij} g_ij = 2 in two dimensions
    return 2.0 / s.radius**4


# -- integral forms built on the staggered pair -------------------------------

def sqrt_dirichlet(m: ConformalMetric, w: np.ndarray) -> float:
    """``4 * int |grad sqrt(w)|_g^2 dV``, the discrete ``int |grad log w|^2 w dV``.

    The conformal factor cancels in 2-D, leaving forward-difference squares.
    """
    s = np.sqrt(w)
    return 4.0 * pairwise_sum(edge_sq_sum(s, m.grid.spacings)) * m.grid.cell_volume


def fisher_logmean(m: ConformalMetric, rho: np.ndarray) -> float:
    """``int |grad rho|_g^2 / rho dV``; the conformal factor cancels in 2-D."""
    return fisher_logmean_sum(rho, m.grid)
