"""Refinement study of the entropy-monotonicity residuals on the bump1 torus.

Usage: python scripts/torus_refinement.py [n ...]   (default 32 64 128)
"""
import sys
import time

from rfl.entropy import conjugate_heat_backward, eq13_residuals, f_end_preset
from rfl.geometry import conformal_preset
from rfl.gridcore import Grid2D, convergence_order
from rfl.ricciflow import FlowConfig, run_ricci_flow


def run(n, t_end=0.05):
    g = Grid2D(n, n)
    flow = run_ricci_flow(conformal_preset("bump1", g), FlowConfig(0.2 * g.hx**2 / 4, t_end))
    ct = conjugate_heat_backward(flow, f_end_preset("bump", flow.metric(len(flow) - 1)))
    return eq13_residuals(ct)[1]


def main(sizes):
    print(f"{'n':>5} {'res_N':>10} {'p_N':>6} {'res_F':>10} {'p_F':>6} {'mass':>9} {'sec':>7}")
    prev = None
    for n in sizes:
        start = time.perf_counter()
        r = run(n)
        sec = time.perf_counter() - start
        pN = pF = ""
        if prev is not None:
            pN = f"{convergence_order(prev.max_res_N, r.max_res_N):.2f}"
            pF = f"{convergence_order(prev.max_res_F, r.max_res_F):.2f}"
        print(f"{n:5d} {r.max_res_N:10.3e} {pN:>6} {r.max_res_F:10.3e} {pF:>6} {r.mass_drift:9.1e} {sec:7.2f}")
        prev = r


if __name__ == "__main__":
    main([int(a) for a in sys.argv[1:]] or [32, 64, 128])
