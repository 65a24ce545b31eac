"""Bias of the Wiener-regularized oscillator propagator along nu and N, as CSV.

    python3 scripts/wiener_convergence.py --samples 200000 --out wiener.csv
"""
import argparse
import sys

from metriq.path_integral import convergence_study, rows_to_csv
from metriq.symbols import parse_symbol


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--symbol", default="0.5 p^2 + 0.5 q^2")
    ap.add_argument("--start", type=float, nargs=2, default=(0.0, 0.0))
    ap.add_argument("--end", type=float, nargs=2, default=(1.0, 0.0))
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--nu", type=float, nargs="+", default=[5.0, 20.0, 50.0])
    ap.add_argument("--N", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sampler", default="auto", choices=["auto", "bridge", "deformed"])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="-")
    a = ap.parse_args(argv)
    rows = convergence_study(parse_symbol(a.symbol), tuple(a.start), tuple(a.end), a.T, a.nu, a.N,
                             a.samples, a.seed, sampler=a.sampler, workers=a.workers)
    text = rows_to_csv(rows)
    if a.out == "-":
        sys.stdout.write(text)
    else:
        with open(a.out, "w") as fh:
            fh.write(text)
    for r in rows:
        o = complex(r["oracle_re"], r["oracle_im"])
        v = complex(r["re"], r["im"])
        print(f"nu={r['nu']:<5g} N={r['N']:<4d} relative bias {abs(v - o) / abs(o):.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
