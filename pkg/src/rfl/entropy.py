"""Conjugate heat flow along a stored Ricci flow and Perelman's functionals.

The backward solve evolves the mass density ``mu = exp(-f) sqrt(g)`` rather
than ``f`` itself.  Along the conformal flow ``d sqrt(g)/dt = -R sqrt(g)``
holds exactly at the discrete level, and the conjugate heat equation becomes
``dmu/dt = -lap0(mu exp(-2u))``, a pure flux form, so the total mass is
conserved by every RK4 stage up to round-off.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import CflViolation, GridMismatch, NonPositiveDensity, TooFewSteps
from .geometry import (
    ConformalMetric,
    SphereMetric,
    hessian,
    ricci_tensor,
    scalar_curvature,
    sphere_quantities,
    sphere_ricci_norm_sq,
    sqrt_dirichlet,
    tensor_norm_sq,
)
from .gridcore import ScalarField, check_same_grid, lap, pairwise_sum, time_derivative
from .ricciflow import FlowTrajectory, cfl_bound

FieldLike = Union[ScalarField, float]

BUMP_KAPPA = 1.0


@dataclass(frozen=True, eq=False)
class CoupledTrajectory:
    """A flow together with the potential ``f`` at every stored time."""

    flow: FlowTrajectory
    f: np.ndarray

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        if f.shape[0] != len(self.flow):
            raise ValueError("f must be aligned with the flow times")
        if not np.all(np.isfinite(f)):
            raise ValueError("f must be finite")
        f.flags.writeable = False
        object.__setattr__(self, "f", f)

    @property
    def times(self) -> np.ndarray:
        return self.flow.times

    def __len__(self) -> int:
        return len(self.flow)

    def potential(self, k: int) -> FieldLike:
        if self.flow.geometry == "sphere":
            return float(self.f[k])
        return ScalarField(self.flow.grid, self.f[k], "f")

    def pair(self, k: int):
        return self.flow.metric(k), self.potential(k)


@dataclass(frozen=True, eq=False)
class FunctionalSeries:
    times: np.ndarray
    F_values: np.ndarray
    N_values: np.ndarray
    mass_values: np.ndarray
    RHS13: np.ndarray


@dataclass(frozen=True)
class Eq13Report:
    dNdt: np.ndarray
    dFdt: np.ndarray
    res_N: np.ndarray
    res_F: np.ndarray
    max_res_N: float
    max_res_F: float
    mass_drift: float
    min_F_increment: float


# -- f_end presets --------------------------------------------------------------

def f_end_preset(name: str, metric) -> FieldLike:
    """Final potentials normalized to unit mass on ``metric``.

    ``bump`` is ``-log`` of a von-Mises-like density, ``uniform`` is constant.
    On the sphere only the constant potential exists.
    """
    if isinstance(metric, SphereMetric):
        if name not in ("uniform", "normalized", "bump"):
            raise ValueError(f"unknown sphere f_end preset {name!r}")
        return float(np.log(metric.area))
    g = metric.grid
    if name == "uniform":
        w = np.ones(g.shape)
    elif name == "bump":
        X, Y = g.mesh()
        w = np.exp(BUMP_KAPPA * (np.cos(2 * np.pi * X / g.lx) + np.cos(2 * np.pi * Y / g.ly)))
    else:
        raise ValueError(f"unknown torus f_end preset {name!r}")
    w = w / (pairwise_sum(w * metric.volume_element) * g.cell_volume)
    return ScalarField(g, -np.log(w), "f_end")


# -- conjugate heat equation ----------------------------------------------------

def _mu_rhs(mu: np.ndarray, u: np.ndarray, spacings) -> np.ndarray:
    # reversed time tau = t_K - t
    return lap(mu * np.exp(-2.0 * u), spacings)


def conjugate_heat_backward(
    flow: FlowTrajectory, f_end: FieldLike, cfl_limit: float = 1.0
) -> CoupledTrajectory:
    """Integrate ``df/dt = -lap_g f + |grad f|_g^2 - R`` from the last time to the first.

    The metric inside a step is the linear interpolant of the two stored
    endpoints.  Requires a stride-1 flow.
    """
    if flow.stride != 1:
        raise ValueError("the conjugate heat solve needs a stride-1 flow")
    K = len(flow) - 1
    dt = flow.dt

    if flow.geometry == "sphere":
        f = np.empty(K + 1)
        f[K] = float(f_end)
        s = flow.radii**2
        for k in range(K, 0, -1):
            # df/dtau = R = 2 / r^2, with r^2 linear in t inside the step
            s0, s1 = s[k], s[k - 1]
            k1 = 2.0 / s0
            k23 = 2.0 / (0.5 * (s0 + s1))
            k4 = 2.0 / s1
            f[k - 1] = f[k] + dt / 6.0 * (k1 + 4.0 * k23 + k4)
        return CoupledTrajectory(flow, f)

    if not isinstance(f_end, ScalarField):
        raise TypeError("torus trajectories need a ScalarField f_end")
    if f_end.grid != flow.grid:
        raise GridMismatch(f"f_end grid {f_end.grid} does not match flow grid {flow.grid}")
    sp = flow.grid.spacings
    u = flow.u
    f = np.empty_like(u)
    f[K] = f_end.values
    mu = np.exp(-f_end.values + 2.0 * u[K])
    for k in range(K, 0, -1):
        ua, ub = u[k], u[k - 1]
        bound = min(cfl_bound(ua, flow.grid, cfl_limit), cfl_bound(ub, flow.grid, cfl_limit))
        if dt > bound:
            raise CflViolation(
                f"CFL violated in backward solve at t={flow.times[k]:.6g}",
                time=float(flow.times[k]), dt=dt, bound=bound,
            )
        um = 0.5 * (ua + ub)
        k1 = _mu_rhs(mu, ua, sp)
        k2 = _mu_rhs(mu + 0.5 * dt * k1, um, sp)
        k3 = _mu_rhs(mu + 0.5 * dt * k2, um, sp)
        k4 = _mu_rhs(mu + dt * k3, ub, sp)
        mu = mu + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(mu <= 0):
            raise NonPositiveDensity(f"density lost positivity at t={flow.times[k - 1]:.6g}")
        f[k - 1] = -np.log(mu) + 2.0 * ub
    return CoupledTrajectory(flow, f)


def sphere_f_closed_form(r0: float, f0: float, t) -> np.ndarray:
    """Homogeneous potential on the shrinking sphere: ``f0 + log((r0^2 - 2t) / r0^2)``."""
    return f0 + np.log((r0 * r0 - 2.0 * np.asarray(t, dtype=float)) / (r0 * r0))


# -- functionals ------------------------------------------------------------------

def _torus_check(m: ConformalMetric, f: ScalarField):
    check_same_grid(m.grid, f.grid)


def mass(m, f: FieldLike) -> float:
    if isinstance(m, SphereMetric):
        return float(np.exp(-f) * m.area)
    _torus_check(m, f)
    return pairwise_sum(np.exp(-f.values) * m.volume_element) * m.grid.cell_volume


def perelman_F(m, f: FieldLike) -> float:
    """``int (R + |grad f|^2) exp(-f) dV``.

    The gradient term is evaluated as ``4 int |grad exp(-f/2)|^2 dV`` with
    forward differences, the form compatible with the staggered Laplacian.
    """
    if isinstance(m, SphereMetric):
        R, _, area = sphere_quantities(m)
        return float(R * np.exp(-f) * area)
    _torus_check(m, f)
    w = np.exp(-f.values)
    R = scalar_curvature(m).values
    curv = pairwise_sum(R * w * m.volume_element) * m.grid.cell_volume
    return curv + sqrt_dirichlet(m, w)


def fisher_form_F(m: ConformalMetric, f: ScalarField) -> float:
    """``int (R P + |grad P|^2 / P) dV`` with ``P = exp(-f)``, evaluated from P.

    Edge values of P use the square of the mean of the roots, the edge rule
    under which ``|grad P|^2 / P`` and ``4 |grad sqrt(P)|^2`` coincide.
    """
    _torus_check(m, f)
    P = np.exp(-f.values)
    R = scalar_curvature(m).values
    total = R * P * m.volume_element
    sq = np.sqrt(P)
    for axis, h in enumerate(m.grid.spacings):
        nxt = np.roll(P, -1, axis)
        edge = (0.5 * (np.roll(sq, -1, axis) + sq)) ** 2
        total = total + (nxt - P) ** 2 / (h * h) / edge
    return pairwise_sum(total) * m.grid.cell_volume


def nash_entropy(m, f: FieldLike) -> float:
    """``int u log u dV`` with ``u = exp(-f)``, i.e. ``-int f exp(-f) dV``."""
    if isinstance(m, SphereMetric):
        return float(-f * np.exp(-f) * m.area)
    _torus_check(m, f)
    fv = f.values
    return -pairwise_sum(fv * np.exp(-fv) * m.volume_element) * m.grid.cell_volume


def soliton_residual(m, f: FieldLike) -> float:
    """``int |Ric + Hess f|_g^2 exp(-f) dV``; zero exactly for steady solitons."""
    if isinstance(m, SphereMetric):
        # constant f: Hess f = 0
        return float(sphere_ricci_norm_sq(m) * np.exp(-f) * m.area)
    _torus_check(m, f)
    T = ricci_tensor(m) + hessian(m, f)
    dens = tensor_norm_sq(m, T).values * np.exp(-f.values) * m.volume_element
    return pairwise_sum(dens) * m.grid.cell_volume


def functional_series(ct: CoupledTrajectory) -> FunctionalSeries:
    n = len(ct)
    F, N, M, RHS = (np.empty(n) for _ in range(4))
    for k in range(n):
        m, f = ct.pair(k)
        F[k] = perelman_F(m, f)
        N[k] = nash_entropy(m, f)
        M[k] = mass(m, f)
        RHS[k] = 2.0 * soliton_residual(m, f)
    return FunctionalSeries(ct.times.copy(), F, N, M, RHS)


def _scale(a: np.ndarray) -> float:
    s = float(np.max(np.abs(a)))
    return s if s > 0 else 1.0


def eq13_residuals(ct: CoupledTrajectory) -> tuple[FunctionalSeries, Eq13Report]:
    """Check ``dN/dt = F`` and ``dF/dt = 2 int |Ric + Hess f|^2 exp(-f) dV``.

    Residuals are relative to the largest magnitude of the right-hand side
    over the trajectory; the two end samples are excluded from the maxima.
    """
    if len(ct) < 9:
        raise TooFewSteps(f"need at least 8 steps, got {len(ct) - 1}")
    s = functional_series(ct)
    dt = ct.flow.dt
    dN = time_derivative(s.N_values, dt)
    dF = time_derivative(s.F_values, dt)
    res_N = np.abs(dN - s.F_values) / _scale(s.F_values)
    res_F = np.abs(dF - s.RHS13) / _scale(s.RHS13)
    m0 = s.mass_values[0]
    report = Eq13Report(
        dNdt=dN,
        dFdt=dF,
        res_N=res_N,
        res_F=res_F,
        max_res_N=float(np.max(res_N[1:-1])),
        max_res_F=float(np.max(res_F[1:-1])),
        mass_drift=float(np.max(np.abs(s.mass_values - m0)) / abs(m0)),
        min_F_increment=float(np.min(np.diff(s.F_values))),
    )
    return s, report
