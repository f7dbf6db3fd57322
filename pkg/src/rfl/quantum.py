"""Madelung decomposition, the quantum potential and Fisher-information identities in 1-D.

Amplitude derivatives are taken in log form,
``R''/R = (log R)'' + ((log R)')^2``.  The continuum operator is unchanged,
but the stencils never divide by a small amplitude.  They are also exact for
Gaussian amplitudes, whose logarithm is quadratic, away from the periodic
seam.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NodeEncountered, NonPositiveDensity, TooFewSteps
from .gridcore import (
    Grid1D,
    ScalarField,
    check_same_grid,
    d_bwd,
    d_center,
    d_fwd,
    d2,
    fisher_logmean_sum,
    lap,
    pairwise_sum,
    time_derivative,
)

NODE_FLOOR = 1e-10
NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid1D
    re: np.ndarray
    im: np.ndarray
    hbar: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.m > 0):
            raise ValueError("hbar and m must be positive")
        for name in ("re", "im"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != self.grid.shape or not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has bad shape or non-finite values")
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        norm = pairwise_sum(self.re**2 + self.im**2) * self.grid.spacing
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"wavefunction norm {norm!r} differs from 1")

    @classmethod
    def from_complex(cls, grid: Grid1D, psi, hbar=1.0, m=1.0, normalize=False) -> "WaveFunction":
        psi = np.asarray(psi, dtype=complex)
        if normalize:
            psi = psi / np.sqrt(pairwise_sum(np.abs(psi) ** 2) * grid.spacing)
        return cls(grid, psi.real, psi.imag, hbar, m)

    @property
    def psi(self) -> np.ndarray:
        return self.re + 1j * self.im


@dataclass(frozen=True, eq=False)
class MadelungPair:
    R: ScalarField
    S: ScalarField
    hbar: float = 1.0
    m: float = 1.0
    winding: int = 0

    def recombine(self) -> np.ndarray:
        return self.R.values * np.exp(1j * self.S.values / self.hbar)


@dataclass(frozen=True, eq=False)
class Density1D:
    grid: Grid1D
    P: ScalarField

    def __post_init__(self):
        check_same_grid(self.grid, self.P.grid)
        if np.any(self.P.values <= 0):
            raise NonPositiveDensity("density must be strictly positive")
        total = pairwise_sum(self.P.values) * self.grid.spacing
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"density integrates to {total!r}, not 1")

    @classmethod
    def from_array(cls, grid: Grid1D, P, normalize=True) -> "Density1D":
        P = np.asarray(P, dtype=float)
        if np.any(P <= 0):
            raise NonPositiveDensity("density must be strictly positive")
        if normalize:
            P = P / (pairwise_sum(P) * grid.spacing)
        return cls(grid, ScalarField(grid, P, "P"))


class MadelungResiduals(NamedTuple):
    hj_residual: float
    continuity_residual: float


# -- phase handling ---------------------------------------------------------------

def unwrap_periodic(phase: np.ndarray) -> tuple[np.ndarray, int]:
    """Sequential unwrap from index 0 plus the winding number around the circle."""
    closed = np.unwrap(np.append(phase, phase[0]))
    winding = int(np.rint((closed[-1] - closed[0]) / (2 * np.pi)))
    return closed[:-1], winding


def madelung_split(wf: WaveFunction, node_floor: float = NODE_FLOOR) -> MadelungPair:
    psi = wf.psi
    R = np.abs(psi)
    if np.min(R) < node_floor:
        i = int(np.argmin(R))
        raise NodeEncountered(f"|psi| = {R[i]:.3g} below floor {node_floor:g} at index {i}")
    theta, winding = unwrap_periodic(np.angle(psi))
    return MadelungPair(
        ScalarField(wf.grid, R, "R"),
        ScalarField(wf.grid, wf.hbar * theta, "S"),
        wf.hbar,
        wf.m,
        winding,
    )


# -- quantum potential --------------------------------------------------------------

def _log_curvature(logR: np.ndarray, h: float) -> np.ndarray:
    """``R''/R`` from ``log R``."""
    return d2(logR, h, 0) + d_center(logR, h, 0) ** 2


def quantum_potential(mp: MadelungPair, node_floor: float = NODE_FLOOR) -> ScalarField:
    """``Q = -(hbar^2 / 2m) R''/R``."""
    R = mp.R.values
    if np.min(R) < node_floor:
        raise NodeEncountered(f"amplitude {np.min(R):.3g} below floor {node_floor:g}")
    h = mp.R.grid.spacing
    Q = -(mp.hbar**2 / (2.0 * mp.m)) * _log_curvature(np.log(R), h)
    return ScalarField(mp.R.grid, Q, "Q")


def _support(amp: np.ndarray, node_floor: float) -> np.ndarray:
    """Points where every slice is above the floor; must form one periodic run."""
    mask = np.all(amp >= node_floor, axis=0)
    if not mask.any():
        raise NodeEncountered("amplitude below the node floor everywhere")
    if not mask.all():
        # count rising edges around the circle
        runs = int(np.sum(mask & ~np.roll(mask, 1)))
        if runs > 1:
            raise NodeEncountered(f"support splits into {runs} pieces: interior node")
    return mask


def madelung_residuals(
    states: Sequence[WaveFunction],
    dt: float,
    V: ScalarField | None = None,
    node_floor: float = NODE_FLOOR,
) -> MadelungResiduals:
    """Sup-norms of the Hamilton-Jacobi and continuity residuals.

    Evaluated over interior times and over the support, the points where
    ``|psi|`` stays above ``node_floor`` in every slice.  Closed-form states
    placed on a periodic window have far tails that fall below the floor.
    Those tails are excluded, and so is the seam where the window wraps.
    A node inside the support raises :class:`NodeEncountered`.
    """
    if len(states) < 3:
        raise TooFewSteps("need at least three time slices")
    grid = states[0].grid
    hbar, m = states[0].hbar, states[0].m
    for s in states[1:]:
        check_same_grid(grid, s.grid)
    psi = np.stack([s.psi for s in states])
    amp = np.abs(psi)
    mask = _support(amp, node_floor)

    h = grid.spacing
    theta = np.stack([unwrap_periodic(np.angle(p))[0] for p in psi])
    S = hbar * np.unwrap(theta, axis=0)
    logR = np.log(np.maximum(amp, np.finfo(float).tiny))
    V = np.zeros(grid.shape) if V is None else V.values

    S_t = time_derivative(S, dt)
    rho_t = time_derivative(amp**2, dt)
    S_x = d_center(S, h, 1)
    S_xx = d2(S, h, 1)
    logR_x = d_center(logR, h, 1)
    curv = d2(logR, h, 1) + logR_x**2
    Q = -(hbar**2 / (2.0 * m)) * curv

    hj = S_t + S_x**2 / (2.0 * m) + Q + V
    cont = rho_t + amp**2 * (S_xx + 2.0 * logR_x * S_x) / m
    inner = slice(1, -1)
    return MadelungResiduals(
        float(np.max(np.abs(hj[inner][:, mask]))),
        float(np.max(np.abs(cont[inner][:, mask]))),
    )


# -- Fisher information identities ---------------------------------------------------

def fisher_identity(P: Density1D, hbar: float = 1.0, m: float = 1.0) -> tuple[float, float, float]:
    """The three members of ``int P Q = -(hbar^2/8m) int [2 lap P - |P'|^2/P] = (hbar^2/8m) int |P'|^2/P``.

    ``lhs`` builds Q from ``R = sqrt(P)``; ``mid`` and ``rhs`` use P directly
    with ``|P'|^2 / P`` evaluated on edges (logarithmic-mean density).
    """
    p = P.P.values
    if np.any(p <= 0):
        raise NonPositiveDensity("density must be strictly positive")
    g = P.grid
    h = g.spacing
    c = hbar**2 / (8.0 * m)
    Q = -(hbar**2 / (2.0 * m)) * _log_curvature(0.5 * np.log(p), h)
    lhs = pairwise_sum(p * Q) * h
    fisher = fisher_logmean_sum(p, g)
    mid = -c * (2.0 * pairwise_sum(lap(p, g.spacings)) * h - fisher)
    rhs = c * fisher
    return lhs, mid, rhs


def weighted_fisher(P: Density1D, G: ScalarField) -> tuple[float, float]:
    """``(int sqrt(P) d(G d sqrt(P)), -int d sqrt(P) G d sqrt(P))`` with unit prefactor.

    The flux ``G d sqrt(P)`` lives on edges, with G averaged onto them, so the
    two sums are related by exact summation by parts.
    """
    check_same_grid(P.grid, G.grid)
    p = P.P.values
    if np.any(p <= 0):
        raise NonPositiveDensity("density must be strictly positive")
    h = P.grid.spacing
    r = np.sqrt(p)
    dr = d_fwd(r, h, 0)
    g_edge = 0.5 * (G.values + np.roll(G.values, -1))
    flux = g_edge * dr
    direct = pairwise_sum(r * d_bwd(flux, h, 0)) * h
    parts = -pairwise_sum(dr * flux) * h
    return direct, parts


def efmf_correspondence(f: ScalarField) -> tuple[Density1D, float]:
    """``P = exp(-f) / Z`` and the sup-norm of ``P' + f' P`` under centered differences."""
    fv = f.values
    w = np.exp(-(fv - np.min(fv)))
    dens = Density1D.from_array(f.grid, w)
    P = dens.P.values
    h = f.grid.spacing
    resid = float(np.max(np.abs(d_center(P, h, 0) + d_center(fv, h, 0) * P)))
    return dens, resid


# -- closed-form states ------------------------------------------------------------------

def gaussian_density(grid: Grid1D, sigma: float, mu: float | None = None) -> Density1D:
    mu = grid.length / 2.0 if mu is None else mu
    x = grid.x - mu
    P = np.exp(-(x**2) / (2.0 * sigma**2)) / np.sqrt(2.0 * np.pi * sigma**2)
    return Density1D.from_array(grid, P)


def ho_potential(grid: Grid1D, omega=1.0, m=1.0, mu=None) -> ScalarField:
    mu = grid.length / 2.0 if mu is None else mu
    return ScalarField(grid, 0.5 * m * omega**2 * (grid.x - mu) ** 2, "V")


def ho_ground_state(grid: Grid1D, t: float, omega=1.0, hbar=1.0, m=1.0, mu=None) -> WaveFunction:
    mu = grid.length / 2.0 if mu is None else mu
    a = m * omega / hbar
    x = grid.x - mu
    psi = (a / np.pi) ** 0.25 * np.exp(-a * x**2 / 2.0 - 0.5j * omega * t)
    return WaveFunction.from_complex(grid, psi, hbar, m, normalize=True)


def coherent_state(grid: Grid1D, t: float, q0=1.0, omega=1.0, hbar=1.0, m=1.0, mu=None) -> WaveFunction:
    """Displaced ground state of the oscillator, ``q(t) = q0 cos(wt)``."""
    mu = grid.length / 2.0 if mu is None else mu
    a = m * omega / hbar
    q = q0 * np.cos(omega * t)
    p = -m * omega * q0 * np.sin(omega * t)
    x = grid.x - mu
    phase = p * x / hbar - 0.5 * omega * t - p * q / (2.0 * hbar)
    psi = (a / np.pi) ** 0.25 * np.exp(-a * (x - q) ** 2 / 2.0 + 1j * phase)
    return WaveFunction.from_complex(grid, psi, hbar, m, normalize=True)


def free_packet(grid: Grid1D, t: float, sigma0=1.0, k0=1.0, hbar=1.0, m=1.0, x0=None) -> WaveFunction:
    """Spreading free Gaussian packet with mean momentum ``hbar k0``."""
    x0 = grid.length / 2.0 if x0 is None else x0
    x = grid.x - x0
    z = 1.0 + 1j * hbar * t / (2.0 * m * sigma0**2)
    expo = (
        -((x - hbar * k0 * t / m) ** 2) / (4.0 * sigma0**2 * z)
        + 1j * k0 * x
        - 1j * hbar * k0**2 * t / (2.0 * m)
    )
    psi = (2.0 * np.pi * sigma0**2) ** -0.25 / np.sqrt(z) * np.exp(expo)
    return WaveFunction.from_complex(grid, psi, hbar, m, normalize=True)
