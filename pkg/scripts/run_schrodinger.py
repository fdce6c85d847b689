#!/usr/bin/env python3
"""Full free-Schrodinger sweep: dimensions, route agreement, weight scan,
and the block structure of the top-order symmetry space.

Usage: python scripts/run_schrodinger.py [qmax]
"""

import sys
import time

from symkit.casestudies import (
    NONZERO_WEIGHT_GRID,
    cross_validate,
    schrodinger_dimension,
    schrodinger_space,
    weight_scan,
)
from symkit.structure import ansatz_dimensions, structured_basis


def main(qmax: int = 4) -> int:
    t0 = time.monotonic()
    print(f"== symmetry operators of the free Schrodinger equation, q <= {qmax} ==")
    print("q  dim  (q+1)(q+2)/2  routes-agree  bidegrees-ok")
    for q in range(qmax + 1):
        rep = cross_validate(q)
        print(
            f"{q}  {rep.dimension:3d}  {schrodinger_dimension(q):12d}"
            f"  {str(rep.spans_agree):>12s}  {str(rep.bidegrees_ok):>12s}"
        )

    print("\n== nonzero exponential weights (finite scan, evidence only) ==")
    scan = weight_scan(orders=(1, 2, 3), grid=NONZERO_WEIGHT_GRID)
    dims = sorted(set(scan.values()))
    print(f"{len(scan)} sample points, dimensions found: {dims}")

    print("\n== translation structure of the top space ==")
    space = schrodinger_space(min(qmax, 3))
    sb = structured_basis(space)
    for blk in sb.blocks:
        lam = ", ".join(f"lambda_{k}={v}" for k, v in blk.eigenvalues.items())
        ks = ", ".join(f"k_{k}={v}" for k, v in blk.bounds.items())
        print(f"block: r={blk.dim}  {lam}  {ks}")
    for q in range(min(qmax, 3) + 1):
        rep = ansatz_dimensions(space, q)
        print(f"q={q}: v={rep.v} rho={rep.rho} r={[b[0] for b in rep.blocks]}")

    print(f"\ndone in {time.monotonic() - t0:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 4))
