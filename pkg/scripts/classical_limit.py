"""Gap between the anti-normal quantization of p^2 + q^2 + q^4 and P^2 + Q^2 + Q^4.

The gap is hbar + 3 hbar^2 / 4 + 3 hbar Q^2 exactly.  On number states Q^2 is
itself of order hbar n, so the halving ratio only approaches 2 once
3 hbar (2n + 1) / 2 is small against 1.
"""
import argparse

import numpy as np

from metriq.fock import build_canonical
from metriq.quantizer import antinormal_quantize_rule, block_deviation
from metriq.symbols import parse_symbol


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=60)
    ap.add_argument("--states", type=int, default=6)
    ap.add_argument("--norm", default="op", choices=["op", "max"])
    a = ap.parse_args(argv)
    h = parse_symbol("p^2 + q^2 + q^4")
    hbars = 2.0 ** -np.arange(0, 13)
    print("hbar,gap,halving_ratio")
    prev = None
    for hb in hbars:
        Q, P = build_canonical(a.dim, hb)
        g = block_deviation(antinormal_quantize_rule(h, a.dim, hb), Q ** 2 + P ** 2 + Q ** 4, a.states, a.norm)
        ratio = "" if prev is None else repr(float(prev / g))
        print(f"{float(hb)!r},{float(g)!r},{ratio}")
        prev = g


if __name__ == "__main__":
    main()
