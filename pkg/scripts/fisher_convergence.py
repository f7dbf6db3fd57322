"""Convergence of the three Fisher-information forms for a Gaussian toward hbar^2 / (8 m sigma^2).

Usage: python scripts/fisher_convergence.py [sigma]   (default 1.0)
"""
import sys

from rfl.gridcore import Grid1D
from rfl.quantum import fisher_identity, gaussian_density


def main(sigma=1.0):
    exact = 1.0 / (8.0 * sigma**2)  # hbar = m = 1
    print(f"sigma = {sigma}, closed form {exact}")
    print(f"{'n':>6} {'lhs err':>10} {'middle err':>11} {'rhs err':>10}")
    for n in (32, 64, 128, 256, 512, 1024):
        lhs, mid, rhs = fisher_identity(gaussian_density(Grid1D(n, 16 * sigma), sigma))
        errs = [abs(v - exact) / exact for v in (lhs, mid, rhs)]
        print(f"{n:6d} {errs[0]:10.2e} {errs[1]:11.2e} {errs[2]:10.2e}")


if __name__ == "__main__":
    main(*(float(a) for a in sys.argv[1:]))
