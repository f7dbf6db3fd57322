"""Weyl-geometry quantities built from a positive density on the model manifolds.

The Weyl vector ``phi = -grad log(rho)`` is reported with centered
differences.  Its divergence is always taken through the staggered pair,
``div phi = -lap log(rho)``.  The integral identities then hold by exact
summation by parts, while the two pointwise forms of the Weyl-Ricci
curvature differ at second order in h.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import NonPositiveDensity
from .geometry import ConformalMetric, SphereMetric, scalar_curvature, sphere_quantities, sqrt_dirichlet
from .gridcore import (
    ScalarField,
    VectorField,
    check_same_grid,
    d_center,
    fisher_logmean_sum,
    lap,
    pairwise_sum,
)
from .entropy import perelman_F
from .quantum import Density1D

NORM_TOL = 1e-8
BETA = 3.0


def alpha_constant(hbar: float, m: float) -> float:
    return -16.0 * m / hbar**2


@dataclass(frozen=True, eq=False)
class WeylDensity:
    """Normalized density on a conformal torus, or a uniform one on a sphere."""

    metric: Union[ConformalMetric, SphereMetric]
    rho_hat: Union[ScalarField, float]

    def __post_init__(self):
        if isinstance(self.metric, SphereMetric):
            total = float(self.rho_hat) * self.metric.area
            if not float(self.rho_hat) > 0:
                raise NonPositiveDensity("density must be positive")
        else:
            check_same_grid(self.metric.grid, self.rho_hat.grid)
            if np.any(self.rho_hat.values <= 0):
                raise NonPositiveDensity("density must be strictly positive")
            total = pairwise_sum(self.rho_hat.values * self.metric.volume_element) * (
                self.metric.grid.cell_volume
            )
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"density integrates to {total!r}, not 1")

    @classmethod
    def from_array(cls, metric: ConformalMetric, rho) -> "WeylDensity":
        """Normalize ``rho`` against ``sqrt(g)`` and wrap it."""
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0):
            raise NonPositiveDensity("density must be strictly positive")
        rho = rho / (pairwise_sum(rho * metric.volume_element) * metric.grid.cell_volume)
        return cls(metric, ScalarField(metric.grid, rho, "rho_hat"))

    @classmethod
    def uniform_sphere(cls, s: SphereMetric) -> "WeylDensity":
        return cls(s, 1.0 / s.area)


@dataclass(frozen=True, eq=False)
class WeylQuantities:
    phi: VectorField
    Rw: ScalarField
    Rdot: ScalarField
    Q: ScalarField
    Rw_discrepancy: float


DENSITY_PRESETS = ("uniform", "bump1", "bump2", "random-smooth")


def density_preset(name: str, metric: ConformalMetric, seed: int = 0) -> WeylDensity:
    """``uniform``, ``bump1`` (one cosine), ``bump2`` (two modes), ``random-smooth``.

    Random densities are ``1 + sum`` of Fourier modes with ``|kx|, |ky| <= 4``
    whose coefficients are rescaled to total 0.6 in absolute value, so the
    field stays above 0.4 before normalization.
    """
    g = metric.grid
    X, Y = g.mesh()
    ax, ay = 2 * np.pi * X / g.lx, 2 * np.pi * Y / g.ly
    if name == "uniform":
        rho = np.ones(g.shape)
    elif name == "bump1":
        rho = 1.0 + 0.3 * np.cos(ax)
    elif name == "bump2":
        rho = 1.0 + 0.2 * np.cos(ax) + 0.2 * np.cos(ay)
    elif name == "random-smooth":
        rng = np.random.default_rng(seed)
        modes = [(kx, ky) for kx in range(0, 5) for ky in range(-4, 5) if (kx, ky) > (0, 0)]
        coef = rng.standard_normal((len(modes), 2))
        coef *= 0.6 / np.sum(np.abs(coef))
        rho = np.ones(g.shape)
        for (kx, ky), (a, b) in zip(modes, coef):
            arg = kx * ax + ky * ay
            rho += a * np.cos(arg) + b * np.sin(arg)
    else:
        raise ValueError(f"unknown density preset {name!r}")
    return WeylDensity.from_array(metric, rho)


def _parts(d):
    """``(rho, grid, u)`` for a torus WeylDensity or a flat 1-D Density1D."""
    if isinstance(d, Density1D):
        return d.P.values, d.grid, np.zeros(d.grid.shape)
    if isinstance(d.metric, SphereMetric):
        raise TypeError("pointwise fields need a gridded density")
    return d.rho_hat.values, d.metric.grid, d.metric.u.values


def _check_positive(rho):
    if np.any(rho <= 0):
        raise NonPositiveDensity("density must be strictly positive")


def weyl_vector(d) -> VectorField:
    rho, grid, _ = _parts(d)
    _check_positive(rho)
    lr = np.log(rho)
    return VectorField(grid, tuple(-d_center(lr, h, ax) for ax, h in enumerate(grid.spacings)))


def weyl_divergence(d) -> ScalarField:
    """``div_g phi = -lap_g log(rho)`` through the staggered pair."""
    rho, grid, u = _parts(d)
    _check_positive(rho)
    return ScalarField(grid, -np.exp(-2.0 * u) * lap(np.log(rho), grid.spacings))


def weyl_ricci_two_ways(d) -> tuple[ScalarField, ScalarField, float]:
    """``2|phi|^2 - 4 div phi`` and ``8 lap sqrt(rho) / sqrt(rho)``, plus their max gap."""
    rho, grid, u = _parts(d)
    _check_positive(rho)
    conf = np.exp(-2.0 * u)
    phi = weyl_vector(d)
    phi_sq = conf * sum(c * c for c in phi.components)
    rw_div = 2.0 * phi_sq - 4.0 * weyl_divergence(d).values
    s = np.sqrt(rho)
    rw_sqrt = 8.0 * conf * lap(s, grid.spacings) / s
    gap = float(np.max(np.abs(rw_div - rw_sqrt)))
    return ScalarField(grid, rw_div, "Rw_div"), ScalarField(grid, rw_sqrt, "Rw_sqrt"), gap


def weyl_quantum_potential(d: WeylDensity, hbar: float = 1.0, m: float = 1.0):
    """``Q = -(hbar^2 / 16m) (R + 8 lap sqrt(rho) / sqrt(rho))``.

    Returns a float for the uniform sphere, a ScalarField otherwise.
    """
    c = -(hbar**2) / (16.0 * m)
    if isinstance(d.metric, SphereMetric):
        R, _, _ = sphere_quantities(d.metric)
        return c * R
    _, rw_sqrt, _ = weyl_ricci_two_ways(d)
    R = scalar_curvature(d.metric).values
    return ScalarField(d.metric.grid, c * (R + rw_sqrt.values), "Q")


def weyl_quantities(d: WeylDensity, hbar: float = 1.0, m: float = 1.0) -> WeylQuantities:
    rw_div, rw_sqrt, gap = weyl_ricci_two_ways(d)
    return WeylQuantities(
        phi=weyl_vector(d),
        Rw=rw_sqrt,
        Rdot=scalar_curvature(d.metric),
        Q=weyl_quantum_potential(d, hbar, m),
        Rw_discrepancy=gap,
    )


def divergence_identity(d) -> tuple[float, tuple[float, float]]:
    """``int rho div phi dV`` against ``(-int lap rho dV, int |grad rho|^2 / rho dV)``.

    Accepts a torus WeylDensity, a uniform sphere density or a 1-D Density1D.
    """
    if isinstance(d, WeylDensity) and isinstance(d.metric, SphereMetric):
        return 0.0, (0.0, 0.0)
    rho, grid, u = _parts(d)
    _check_positive(rho)
    vol = np.exp(2.0 * u)
    cell = grid.cell_volume
    div_phi = weyl_divergence(d).values
    lhs = pairwise_sum(rho * div_phi * vol) * cell
    lap_g_rho = np.exp(-2.0 * u) * lap(rho, grid.spacings)
    first = -pairwise_sum(lap_g_rho * vol) * cell
    second = fisher_logmean_sum(rho, grid)
    return lhs, (first, second)


def phi_sq_integral(d: WeylDensity) -> float:
    """``int |phi|_g^2 rho dV``, evaluated as ``4 int |grad sqrt(rho)|_g^2 dV``."""
    if isinstance(d.metric, SphereMetric):
        return 0.0
    return sqrt_dirichlet(d.metric, d.rho_hat.values)


def q_integral(d: WeylDensity, hbar: float = 1.0, m: float = 1.0) -> float:
    """``int Q rho dV`` with the Weyl quantum potential."""
    Q = weyl_quantum_potential(d, hbar, m)
    if isinstance(d.metric, SphereMetric):
        return float(Q * d.rho_hat * d.metric.area)
    dens = Q.values * d.rho_hat.values * d.metric.volume_element
    return pairwise_sum(dens) * d.metric.grid.cell_volume


def decompose_F(d: WeylDensity, hbar: float = 1.0, m: float = 1.0):
    """``(F_direct, F_decomposed, alpha, beta)``.

    ``F_direct`` is Perelman's functional at ``f = -log(rho)``.
    ``F_decomposed`` is ``alpha int Q rho dV + beta int |phi|^2 rho dV`` with
    ``alpha = -16 m / hbar^2`` and ``beta = 3``.
    """
    alpha = alpha_constant(hbar, m)
    if isinstance(d.metric, SphereMetric):
        f = -np.log(float(d.rho_hat))
    else:
        f = ScalarField(d.metric.grid, -np.log(d.rho_hat.values), "f")
    F_direct = perelman_F(d.metric, f)
    F_dec = alpha * q_integral(d, hbar, m) + BETA * phi_sq_integral(d)
    return F_direct, F_dec, alpha, BETA


def fit_decomposition_constants(densities, hbar: float = 1.0, m: float = 1.0) -> tuple[float, float]:
    """Least-squares ``(alpha, beta)`` in ``F = alpha int Q rho + beta int |phi|^2 rho`` over a family."""
    A = np.array([[q_integral(d, hbar, m), phi_sq_integral(d)] for d in densities])
    F = np.array([decompose_F(d, hbar, m)[0] for d in densities])
    sol, *_ = np.linalg.lstsq(A, F, rcond=None)
    return float(sol[0]), float(sol[1])


def quantum_mass(Q, m: float = 1.0):
    """``(m^2 exp(Q), m^2 (1 + Q), exp(Q))`` for a field or a scalar Q."""
    q = Q.values if isinstance(Q, ScalarField) else float(Q)
    omega_sq = np.exp(q)
    out = (m * m * omega_sq, m * m * (1.0 + q), omega_sq)
    if isinstance(Q, ScalarField):
        names = ("M_sq", "M_sq_linear", "Omega_sq")
        return tuple(ScalarField(Q.grid, a, n) for a, n in zip(out, names))
    return tuple(float(a) for a in out)
