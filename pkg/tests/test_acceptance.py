"""Acceptance suite: one test per criterion, each at its stated tolerance and runtime.

Every test records a one-line verdict that is printed in the terminal summary.
"""
import time

import numpy as np
import pytest

from oracles import gaussian_fisher, random_band_limited, spectral_weyl_columns
from rfl.entropy import conjugate_heat_backward, eq13_residuals, f_end_preset
from rfl.experiments import verify_all, weight_presets
from rfl.geometry import SphereMetric, conformal_preset
from rfl.gridcore import Grid1D, Grid2D, ScalarField, convergence_order
from rfl.quantum import (
    Density1D,
    fisher_identity,
    free_packet,
    gaussian_density,
    ho_ground_state,
    ho_potential,
    madelung_residuals,
    weighted_fisher,
)
from rfl.ricciflow import FlowConfig, run_ricci_flow
from rfl.weyl import (
    BETA,
    alpha_constant,
    decompose_F,
    density_preset,
    divergence_identity,
    quantum_mass,
    weyl_ricci_two_ways,
)

L2 = (2 * np.pi, 2 * np.pi)


def rel(a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def test_criterion_01_sphere_monotonicity(record):
    start = time.perf_counter()
    flow = run_ricci_flow(SphereMetric(1.0), FlowConfig(1e-4, 0.25))
    ct = conjugate_heat_backward(flow, f_end_preset("uniform", flow.metric(len(flow) - 1)))
    s, r = eq13_residuals(ct)
    r2 = flow.radii**2
    m0 = s.mass_values[0]
    F_exact, rhs_exact = 2 * m0 / r2, 4 * m0 / r2**2
    # residuals against the closed forms, over interior times
    dN_res = np.max(np.abs(r.dNdt - F_exact)[1:-1]) / np.max(np.abs(F_exact))
    dF_res = np.max(np.abs(r.dFdt - rhs_exact)[1:-1]) / np.max(np.abs(rhs_exact))
    elapsed = time.perf_counter() - start
    ok = max(dN_res, dF_res, r.max_res_N, r.max_res_F) <= 1e-6 and elapsed <= 5
    record(1, ok, f"sphere dN/dt res {dN_res:.2e}, dF/dt res {dF_res:.2e} (<= 1e-6), {elapsed:.2f}s")
    assert dN_res <= 1e-6 and dF_res <= 1e-6
    assert r.max_res_N <= 1e-6 and r.max_res_F <= 1e-6
    assert elapsed <= 5


def _torus(n):
    g = Grid2D(n, n)
    flow = run_ricci_flow(conformal_preset("bump1", g), FlowConfig(0.2 * g.hx**2 / 4, 0.05))
    ct = conjugate_heat_backward(flow, f_end_preset("bump", flow.metric(len(flow) - 1)))
    return eq13_residuals(ct)[1]


def test_criterion_02_torus_coupled_flow(record):
    start = time.perf_counter()
    r64 = _torus(64)
    elapsed = time.perf_counter() - start
    r128 = _torus(128)
    shrink_N = r64.max_res_N / r128.max_res_N
    shrink_F = r64.max_res_F / r128.max_res_F
    checks = [
        r64.mass_drift <= 1e-6,
        r64.min_F_increment >= -1e-10,
        r64.max_res_N <= 1e-3,
        r64.max_res_F <= 1e-2,
        shrink_N >= 2,
        shrink_F >= 2,
        elapsed <= 120,
    ]
    record(2, all(checks),
           f"mass drift {r64.mass_drift:.1e}, min dF {r64.min_F_increment:.1e}, "
           f"res_N {r64.max_res_N:.2e} (x{shrink_N:.1f}), res_F {r64.max_res_F:.2e} (x{shrink_F:.1f}), "
           f"{elapsed:.2f}s at 64^2")
    assert r64.mass_drift <= 1e-6
    assert r64.min_F_increment >= -1e-10
    assert r64.max_res_N <= 1e-3 and r64.max_res_F <= 1e-2
    assert shrink_N >= 2 and shrink_F >= 2
    assert elapsed <= 120


def test_criterion_03_fisher_identity(record):
    start = time.perf_counter()
    worst_pair = worst_exact = 0.0
    for sigma in (1.0, 2.0):
        lhs, mid, rhs = fisher_identity(gaussian_density(Grid1D(512, 16 * sigma), sigma))
        worst_pair = max(worst_pair, rel(lhs, mid), rel(lhs, rhs), rel(mid, rhs))
        exact = gaussian_fisher(sigma)
        worst_exact = max(worst_exact, *(rel(v, exact) for v in (lhs, mid, rhs)))
    elapsed = time.perf_counter() - start
    ok = worst_pair <= 1e-6 and worst_exact <= 1e-6 and elapsed <= 1
    record(3, ok, f"pairwise {worst_pair:.1e}, vs closed form {worst_exact:.1e} (<= 1e-6), {elapsed:.2f}s")
    assert worst_pair <= 1e-6 and worst_exact <= 1e-6
    assert elapsed <= 1


def test_criterion_04_madelung(record):
    start = time.perf_counter()
    dt = 1e-4
    g = Grid1D(512, 20.0)
    ho = madelung_residuals([ho_ground_state(g, k * dt) for k in range(5)], dt, ho_potential(g))
    g2 = Grid1D(1024, 40.0)
    free = [0.0, 0.0]
    for t0 in (0.0, 0.25, 0.5 - 4 * dt):
        r = madelung_residuals([free_packet(g2, t0 + k * dt) for k in range(5)], dt)
        free = [max(free[0], r.hj_residual), max(free[1], r.continuity_residual)]
    elapsed = time.perf_counter() - start
    ok = max(ho) <= 1e-6 and max(free) <= 1e-5 and elapsed <= 5
    record(4, ok, f"ground state {max(ho):.1e} (<= 1e-6), free packet {max(free):.1e} (<= 1e-5), {elapsed:.2f}s")
    assert max(ho) <= 1e-6
    assert max(free) <= 1e-5
    assert elapsed <= 5


def test_criterion_05_weighted_fisher(record):
    start = time.perf_counter()
    g = Grid1D(512, 16.0)
    densities = [
        gaussian_density(g, 1.0),
        gaussian_density(g, 2.0),
        Density1D.from_array(g, 1.0 + 0.5 * np.cos(2 * np.pi * g.x / 16.0)),
    ]
    worst = 0.0
    for seed in range(5):
        for G in weight_presets(g, seed).values():
            for d in densities:
                direct, parts = weighted_fisher(d, ScalarField(g, G))
                worst = max(worst, abs(direct - parts))
    elapsed = time.perf_counter() - start
    record(5, worst <= 1e-12 and elapsed <= 1, f"|direct - parts| {worst:.1e} (<= 1e-12), {elapsed:.2f}s")
    assert worst <= 1e-12
    assert elapsed <= 1


def test_criterion_06_weyl_ricci_two_forms(record):
    start = time.perf_counter()
    lines, ok = [], True
    for metric in ("flat", "bump1"):
        for name in ("bump1", "bump2"):
            gaps = [weyl_ricci_two_ways(density_preset(name, conformal_preset(metric, Grid2D(n, n))))[2]
                    for n in (64, 128)]
            order = convergence_order(*gaps)
            ok &= gaps[1] <= 1e-3 and order >= 1.9
            lines.append(f"{name}/{metric} {gaps[1]:.1e} p={order:.2f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 10
    record(6, ok, "; ".join(lines) + f" (<= 1e-3, p >= 1.9), {elapsed:.2f}s")
    assert ok


def test_criterion_07_divergence_identity(record):
    start = time.perf_counter()
    worst_first = worst_rel = 0.0
    for metric in ("flat", "bump1", "bump2"):
        m = conformal_preset(metric, Grid2D(64, 64))
        for name, seed in (("bump1", 0), ("bump2", 0), ("random-smooth", 1), ("random-smooth", 2)):
            lhs, (first, second) = divergence_identity(density_preset(name, m, seed))
            worst_first = max(worst_first, abs(first))
            worst_rel = max(worst_rel, rel(lhs, second))
    gauss_err = 0.0
    for sigma in (1.0, 2.0):
        lhs, _ = divergence_identity(gaussian_density(Grid1D(512, 16 * sigma), sigma))
        gauss_err = max(gauss_err, abs(lhs - 1 / sigma**2))
    elapsed = time.perf_counter() - start
    ok = worst_first <= 1e-10 and worst_rel <= 1e-8 and gauss_err <= 1e-6 and elapsed <= 2
    record(7, ok, f"|int lap rho| {worst_first:.1e}, rel {worst_rel:.1e}, "
                  f"Gaussian vs 1/sigma^2 {gauss_err:.1e}, {elapsed:.2f}s")
    assert worst_first <= 1e-10 and worst_rel <= 1e-8 and gauss_err <= 1e-6
    assert elapsed <= 2


def test_criterion_08_decomposition(record):
    start = time.perf_counter()
    # independent spectral sweep confirms the constants first
    rng = np.random.default_rng(7)
    n = 64
    X, Y = np.meshgrid(*(np.arange(n) * 2 * np.pi / n,) * 2, indexing="ij")
    u = 0.1 * np.sin(X) * np.cos(Y)
    rows, F = [], []
    for _ in range(10):
        f_val, q_int, phi_int = spectral_weyl_columns(u, random_band_limited((n, n), L2, rng, 3), L2)
        rows.append([q_int, phi_int])
        F.append(f_val)
    (a_fit, b_fit), *_ = np.linalg.lstsq(np.array(rows), np.array(F), rcond=None)
    confirmed = rel(a_fit, alpha_constant(1.0, 1.0)) <= 1e-8 and rel(b_fit, BETA) <= 1e-8

    worst = 0.0
    grid = Grid2D(128, 128)
    for metric in ("flat", "bump1"):
        m = conformal_preset(metric, grid)
        for seed in range(20):
            F_direct, F_dec, _, _ = decompose_F(density_preset("random-smooth", m, seed))
            worst = max(worst, rel(F_direct, F_dec))
    elapsed = time.perf_counter() - start
    ok = confirmed and worst <= 1e-6 and elapsed <= 30
    record(8, ok, f"sweep fit alpha={a_fit:.6f} beta={b_fit:.6f}; worst rel {worst:.1e} "
                  f"over 2x20 densities at 128^2 (<= 1e-6), {elapsed:.2f}s")
    assert confirmed
    assert worst <= 1e-6
    assert elapsed <= 30


def test_criterion_09_quantum_mass(record):
    start = time.perf_counter()
    g = Grid2D(64, 64)
    X, Y = g.mesh()
    shape = np.sin(X) * np.cos(2 * Y) + 0.5 * np.cos(3 * X + Y)
    shape /= np.max(np.abs(shape))
    ok, parts = True, []
    for m in (1.0, 2.5):
        for eps in (1e-2, 1e-1):
            M, Ml, O = quantum_mass(ScalarField(g, eps * shape), m)
            gap = np.max(np.abs(M.values - Ml.values))
            bound = m * m * eps**2 * np.exp(eps) / 2
            ok &= gap <= bound and np.all(O.values > 0)
            parts.append(f"{gap / bound:.3f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 1
    record(9, ok, f"gap / bound = {', '.join(parts)} (<= 1), Omega^2 > 0, {elapsed:.2f}s")
    assert ok


@pytest.mark.slow
def test_criterion_10_determinism(record, tmp_path):
    runs = []
    for tag in ("a", "b"):
        verify_all(root=tmp_path / tag)
        files = {p.relative_to(tmp_path / tag): p.read_bytes()
                 for p in sorted((tmp_path / tag).rglob("*")) if p.is_file() and p.name != "timing.json"}
        runs.append(files)
    same = runs[0] == runs[1]
    csvs = sum(1 for p in runs[0] if p.suffix == ".csv")
    record(10, same, f"verify-all twice: {len(runs[0])} files ({csvs} CSV) byte-identical = {same}")
    assert same
