"""Operator invariance under canonical maps, mapped-grid and (r, s)-grid quadratures."""
import argparse
import time

from metriq.canonical import make_cubic, make_scaling, quantize_in_transformed_coords
from metriq.fock import trust_dim
from metriq.quantizer import antinormal_quantize_quadrature, antinormal_quantize_rule, block_deviation
from metriq.symbols import parse_symbol


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=40)
    ap.add_argument("--skip-rs-cubic", action="store_true", help="the cubic (r, s) grid takes a few seconds per symbol")
    a = ap.parse_args(argv)
    D = a.dim
    n = trust_dim(D) // 2
    print("map,mode,symbol,deviation_vs_quadrature,deviation_vs_rule,seconds")
    for name, cmap in (("scaling", make_scaling(2.0)), ("cubic", make_cubic(0.1))):
        for mode in ("mapped", "rs"):
            if name == "cubic" and mode == "rs" and a.skip_rs_cubic:
                continue
            grid = (400, 3000) if (name, mode) == ("cubic", "rs") else None
            for text in ("1", "q", "p^2 + q^2", "q^4"):
                h = parse_symbol(text)
                t0 = time.time()
                new = quantize_in_transformed_coords(h, cmap, D, mode=mode, rs_grid=grid)
                dt = time.time() - t0
                ref = antinormal_quantize_quadrature(h, D=D)
                rule = antinormal_quantize_rule(h, D)
                print(f"{name},{mode},{text},{block_deviation(new, ref, n):.3e},"
                      f"{block_deviation(new, rule, n):.3e},{dt:.2f}")


if __name__ == "__main__":
    main()
