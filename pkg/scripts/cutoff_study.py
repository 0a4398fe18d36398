"""Truncated-Fock entropy gap and Weyl-relation defect as the cutoff doubles.

    python3 scripts/cutoff_study.py --lams 0.1 0.5 1 3 --cutoffs 8 16 32 64 128
"""

import argparse
import warnings

import numpy as np

from qfe import ccr
from qfe._linalg import von_neumann_entropy
from qfe.dynentropy import eccr
from qfe.errors import CutoffWarning


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lams", type=float, nargs="+", default=[0.1, 0.5, 1.0, 3.0])
    parser.add_argument("--cutoffs", type=int, nargs="+", default=[8, 16, 32, 64, 128])
    parser.add_argument("--f", type=complex, default=0.5)
    parser.add_argument("--g", type=complex, default=0.5j)
    args = parser.parse_args()

    warnings.simplefilter("ignore", CutoffWarning)
    print("entropy gap |S(rho_N) - eccr(lam)| / analytic bound")
    print(f"{'lam':>6} " + " ".join(f"{'N=' + str(n):>21}" for n in args.cutoffs))
    for lam in args.lams:
        cells = []
        for n in args.cutoffs:
            rho, _ = ccr.quasifree_density_ccr(np.array([[lam]]), cutoff=n)
            gap = abs(von_neumann_entropy(rho) - eccr(lam))
            cells.append(f"{gap:9.2e} / {ccr.truncated_entropy_gap_bound(lam, n):9.2e}")
        print(f"{lam:>6} " + " ".join(f"{c:>21}" for c in cells))

    print(f"\nWeyl defect for f={args.f}, g={args.g} on occupations < N/4")
    for n in args.cutoffs:
        fock = ccr.truncated_fock(1, n)
        print(f"  N={n:<4} {ccr.weyl_defect(fock, np.array([args.f]), np.array([args.g])):.3e}")


if __name__ == "__main__":
    main()
