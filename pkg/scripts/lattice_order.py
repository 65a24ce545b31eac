"""Convergence of the sharp-position lattice propagator in the number of slices.

Prints relative errors against the free kernel and the oscillator (Mehler)
kernel, with the fitted slope of log error against log N.
"""
import argparse

import numpy as np

from metriq.path_integral import free_kernel, lattice_feynman_propagator, mehler_kernel
from metriq.symbols import parse_symbol


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[25, 50, 100, 200, 400])
    a = ap.parse_args(argv)
    cases = [("free", parse_symbol("0.5 p^2"), 1.0, free_kernel(0.0, 1.0, 1.0)),
             ("oscillator", parse_symbol("0.5 p^2 + 0.5 q^2"), np.pi / 4, mehler_kernel(0.0, 1.0, np.pi / 4))]
    print("case,N,relative_error")
    for name, H, T, ref in cases:
        err = []
        for N in a.N:
            e = abs(lattice_feynman_propagator(H, 0.0, 1.0, T, N) - ref) / abs(ref)
            err.append(e)
            print(f"{name},{N},{float(e)!r}")
        if min(err) > 1e-12:
            slope = -np.polyfit(np.log(a.N), np.log(err), 1)[0]
            print(f"# {name}: order {slope:.3f}")
        else:
            print(f"# {name}: errors at round-off level, no rate")


if __name__ == "__main__":
    main()
