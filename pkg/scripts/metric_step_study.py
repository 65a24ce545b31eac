"""Flatness spread of the finite-difference Fubini-Study tensor against the difference step.

For random fiducials the exact tensor is constant over phase space; the spread
observed across sample points is estimator truncation error and falls by four
per step halving.
"""
import argparse

import numpy as np

from metriq.coherent import CoherentFamily, fd_metric, fubini_study_metric


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=40)
    ap.add_argument("--support", type=int, default=10)
    ap.add_argument("--fiducials", type=int, default=10)
    ap.add_argument("--points", type=int, default=5)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--steps", type=float, nargs="+", default=[4e-4, 2e-4, 1e-4, 5e-5, 2.5e-5])
    a = ap.parse_args(argv)
    rng = np.random.default_rng(a.seed)
    fams = [CoherentFamily.random(a.dim, a.support, rng) for _ in range(a.fiducials)]
    print("step,max_spread,max_deviation_from_moments")
    for h in a.steps:
        spread = dev = 0.0
        for i, fam in enumerate(fams):
            exact = fubini_study_metric(fam, n_points=1)
            ref = np.array([[exact.gpp, exact.gpq], [exact.gpq, exact.gqq]])
            pts = np.random.default_rng(i).uniform(-1, 1, size=(a.points, 2))
            g = np.array([fd_metric(fam, tuple(x), "tangent", h) for x in pts])
            spread = max(spread, float(np.max(g.max(axis=0) - g.min(axis=0))))
            dev = max(dev, float(np.max(np.abs(g - ref))))
        print(f"{h!r},{spread:.3e},{dev:.3e}")


if __name__ == "__main__":
    main()
