"""Ricci flow ``dg/dt = -2 Ric`` on the conformal torus and the round sphere.

On the torus the flow reduces to ``du/dt = exp(-2u) lap0(u)`` and is advanced
with classical RK4 behind a CFL guard.  The sphere stays round, and
``d(r^2)/dt = -2`` is integrated as an ODE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import CflViolation, ExtinctionReached, NonPositiveRadius
from .geometry import ConformalMetric, SphereMetric
from .gridcore import Grid2D, lap

Metric = Union[ConformalMetric, SphereMetric]


@dataclass(frozen=True)
class FlowConfig:
    dt: float
    t_end: float
    cfl_limit: float = 1.0
    resolution: Optional[tuple] = None
    stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.cfl_limit <= 1:
            raise ValueError(f"cfl_limit must lie in (0, 1], got {self.cfl_limit}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ValueError("stride must be a positive integer")

    def n_steps(self) -> int:
        """Number of steps; dt is shrunk to ``t_end / n_steps`` to land on t_end."""
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    def step(self) -> float:
        return self.t_end / self.n_steps()


@dataclass(frozen=True, eq=False)
class FlowTrajectory:
    """Metrics at uniformly spaced times.

    Torus trajectories keep the conformal exponents as one ``(K+1, nx, ny)``
    array; sphere trajectories keep the radii.
    """

    times: np.ndarray
    grid: Optional[Grid2D] = None
    u: Optional[np.ndarray] = None
    radii: Optional[np.ndarray] = None
    stride: int = 1

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a trajectory needs at least two times")
        steps = np.diff(t)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-12:
            raise ValueError("trajectory times must be increasing with a uniform step")
        if (self.u is None) == (self.radii is None):
            raise ValueError("exactly one of u / radii must be given")
        data = self.u if self.u is not None else self.radii
        if len(data) != t.size:
            raise ValueError("metric count must equal time count")
        for name, arr in (("times", t), ("u", self.u), ("radii", self.radii)):
            if arr is not None:
                arr = np.array(arr, dtype=float)
                arr.flags.writeable = False
                object.__setattr__(self, name, arr)

    @property
    def geometry(self) -> str:
        return "torus" if self.u is not None else "sphere"

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def __len__(self) -> int:
        return self.times.size

    def metric(self, k: int) -> Metric:
        if self.u is not None:
            return ConformalMetric.from_array(self.grid, self.u[k])
        return SphereMetric(float(self.radii[k]))

    @property
    def metrics(self) -> list:
        return [self.metric(k) for k in range(len(self))]


def cfl_bound(u: np.ndarray, grid: Grid2D, cfl_limit: float = 1.0) -> float:
    """Largest admissible explicit step; the diffusivity is ``exp(-2u)``."""
    return cfl_limit * min(grid.hx, grid.hy) ** 2 * float(np.min(np.exp(2.0 * u))) / 4.0


def _flow_rhs(u: np.ndarray, spacings) -> np.ndarray:
    return np.exp(-2.0 * u) * lap(u, spacings)


def _rk4(u: np.ndarray, dt: float, spacings) -> np.ndarray:
    k1 = _flow_rhs(u, spacings)
    k2 = _flow_rhs(u + 0.5 * dt * k1, spacings)
    k3 = _flow_rhs(u + 0.5 * dt * k2, spacings)
    k4 = _flow_rhs(u + dt * k3, spacings)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def ricci_step_torus(m: ConformalMetric, dt: float, cfl_limit: float = 1.0) -> ConformalMetric:
    """One RK4 step of the conformal Ricci flow; refuses steps above the CFL bound."""
    bound = cfl_bound(m.u.values, m.grid, cfl_limit)
    if dt > bound:
        raise CflViolation(f"dt={dt:.6g} exceeds CFL bound {bound:.6g}", dt=dt, bound=bound)
    return ConformalMetric.from_array(m.grid, _rk4(m.u.values, dt, m.grid.spacings))


def ricci_flow_sphere(r0: float, t: float) -> float:
    """Closed-form radius ``sqrt(r0^2 - 2t)`` of the shrinking round sphere."""
    if not r0 > 0:
        raise NonPositiveRadius(f"r0 must be positive, got {r0}")
    if t >= r0 * r0 / 2.0:
        raise ExtinctionReached(f"t={t} is at or beyond the extinction time {r0 * r0 / 2.0}")
    return math.sqrt(r0 * r0 - 2.0 * t)


def run_ricci_flow(m0: Metric, cfg: FlowConfig) -> FlowTrajectory:
    n = cfg.n_steps()
    dt = cfg.step()
    if cfg.stride > 1 and n % cfg.stride:
        raise ValueError(f"stride {cfg.stride} does not divide the step count {n}")
    times = np.arange(0, n + 1, cfg.stride) * dt

    if isinstance(m0, SphereMetric):
        if cfg.t_end >= m0.radius**2 / 2.0:
            raise ExtinctionReached(
                f"t_end={cfg.t_end} reaches the extinction time {m0.radius**2 / 2.0}"
            )
        s = m0.radius**2
        out = [s]
        for k in range(1, n + 1):
            # RK4 on d(r^2)/dt = -2; every stage slope is the constant -2
            s = s + dt / 6.0 * (-2.0 - 4.0 - 4.0 - 2.0)
            if k % cfg.stride == 0:
                out.append(s)
        return FlowTrajectory(times, radii=np.sqrt(out), stride=cfg.stride)

    grid = m0.grid
    if cfg.resolution is not None and tuple(cfg.resolution) != grid.shape:
        raise ValueError(f"config resolution {cfg.resolution} does not match grid {grid.shape}")
    u = m0.u.values.copy()
    stack = np.empty((times.size,) + grid.shape)
    stack[0] = u
    j = 1
    for k in range(1, n + 1):
        bound = cfl_bound(u, grid, cfg.cfl_limit)
        if dt > bound:
            raise CflViolation(
                f"CFL violated at t={(k - 1) * dt:.6g}: dt={dt:.6g} > {bound:.6g}",
                time=(k - 1) * dt, dt=dt, bound=bound,
            )
        u = _rk4(u, dt, grid.spacings)
        if k % cfg.stride == 0:
            stack[j] = u
            j += 1
    return FlowTrajectory(times, grid=grid, u=stack, stride=cfg.stride)
