"""Convergence of the Toeplitz entropy rate S_n/n towards the spectral integral.

    python3 scripts/rate_study.py --algebra CAR --c0 0.5 --c1 0.25 --sizes 16 32 64 128 256
"""

import argparse

from qfe.dynentropy import SymbolFunction, entropy_rate_empirical
from qfe.spectra import Algebra


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--algebra", default="CAR", choices=["CAR", "CCR"])
    parser.add_argument("--c0", type=float, default=0.5, help="constant term of the scalar symbol")
    parser.add_argument("--c1", type=float, default=0.25, help="amplitude of cos(theta)")
    parser.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    parser.add_argument("--grid", type=int, default=None, help="circle grid (default 4 * max size)")
    args = parser.parse_args()

    grid = args.grid or 4 * max(args.sizes)
    coeffs = {0: args.c0, 1: args.c1 / 2, -1: args.c1 / 2}
    symbol = SymbolFunction.from_fourier(coeffs, grid, Algebra.parse(args.algebra))
    rep = entropy_rate_empirical(symbol, args.sizes)

    print(f"symbol {args.c0} + {args.c1} cos(theta), {args.algebra}, grid {grid}")
    print(f"formula value      {rep.formula_value:.15f}")
    print(f"{'n':>6} {'S_n/n':>20} {'error':>12} {'n * error':>12}")
    for n, r, e in zip(rep.sizes, rep.rates, rep.errors):
        print(f"{n:>6} {r:>20.15f} {e:>12.3e} {n * e:>12.4f}")
    print(f"Aitken extrapolation {rep.extrapolated_rate:.15f} (error {rep.extrapolated_rate - rep.formula_value:.2e})")


if __name__ == "__main__":
    main()
