"""Command-line front end.

Every command prints a small table, optionally writes a JSON record
(``--json PATH``, ``-`` for stdout) and a CSV table (``--csv PATH``), and
exits 0 only if all of its checks pass.  Records embed the full run
configuration; output contains no timestamps, so identical inputs give
identical bytes.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import canonical, classical, coherent, path_integral, quantizer
from .config import ConfigError, RunConfig, load_config
from .fock import StateVector, eigh, trust_dim
from .symbols import PolySymbol, SymbolParseError, parse_symbol


class UsageError(ValueError):
    pass


def _point(text: str) -> tuple[float, float]:
    try:
        p, q = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'p,q', got {text!r}") from None
    return p, q


def _num(x) -> float | list | None:
    if x is None:
        return None
    if isinstance(x, complex) or np.iscomplexobj(x):
        return [float(np.real(x)), float(np.imag(x))]
    return float(x)


def _family(spec: str, D: int, hbar: float) -> coherent.CoherentFamily:
    if spec == "ground":
        return coherent.CoherentFamily.ground(D, hbar)
    if spec.startswith("number:"):
        return coherent.CoherentFamily.number(int(spec.split(":", 1)[1]), D, hbar)
    if spec.startswith("file:"):
        with open(spec.split(":", 1)[1]) as fh:
            v = StateVector.from_json(fh.read())
        if v.dim != D:
            raise UsageError(f"fiducial file has dim {v.dim}, run uses dim {D}")
        return coherent.CoherentFamily(v.normalize(), hbar)
    raise UsageError(f"unknown fiducial spec {spec!r} (use ground, number:n or file:path)")


# ------------------------------------------------------------------ commands

def cmd_spectrum(args, cfg: RunConfig) -> dict:
    h = parse_symbol(args.symbol)
    if not h.is_real:
        raise UsageError("symbol must be real to give a Hermitian operator")
    D, k = cfg.dim, cfg.k
    full = eigh(quantizer.antinormal_quantize_rule(h, D, cfg.hbar))[0][:k]
    half = eigh(quantizer.antinormal_quantize_rule(h, D // 2, cfg.hbar))[0][:k]
    rows = [{"n": i, "eig_D": float(a), "eig_half_D": float(b), "delta": float(abs(a - b))}
            for i, (a, b) in enumerate(zip(full, half))]
    checks = {}
    if cfg.tol is not None:
        checks["truncation_convergence"] = bool(max(r["delta"] for r in rows) <= cfg.tol)
    return {"command": "spectrum", "symbol": args.symbol, "rows": rows, "checks": checks,
            "columns": ["n", "eig_D", "eig_half_D", "delta"]}


def cmd_metric(args, cfg: RunConfig) -> dict:
    fam = _family(args.fiducial, cfg.dim, cfg.hbar)
    rep = coherent.fubini_study_metric(fam, seed=cfg.seed)
    tol = 1e-6 if cfg.tol is None else cfg.tol
    checks = {"fd_agreement": bool(rep.fd_max_deviation <= tol),
              "flatness": bool(rep.flatness_residual <= tol),
              "positive": bool(rep.gpp > 0 and rep.gqq > 0 and rep.gpp * rep.gqq - rep.gpq ** 2 >= -1e-10)}
    d = rep.to_dict()
    rows = [{"quantity": key, "value": d[key]} for key in ("gpp", "gpq", "gqq", "fd_max_deviation",
                                                            "flatness_residual", "physical_ratio")]
    return {"command": "metric", "fiducial": args.fiducial, "report": d, "rows": rows,
            "columns": ["quantity", "value"], "checks": checks}


def _lattice_oracle(h: PolySymbol, qa, qb, T, hbar):
    m, V = path_integral._kinetic_mass(h)
    if V.is_zero():
        return path_integral.free_kernel(qa, qb, T, m, hbar)
    if set(V.terms) == {(0, 2)} and V.terms[(0, 2)].real > 0:
        omega = np.sqrt(2 * V.terms[(0, 2)].real / m)
        if 0 < omega * T < np.pi:
            return path_integral.mehler_kernel(qa, qb, T, m, omega, hbar)
    return None


def cmd_propagate(args, cfg: RunConfig) -> dict:
    h = parse_symbol(args.symbol)
    pc = cfg.path
    a, b, T = args.start, args.end, pc.T
    rec = {"command": "propagate", "symbol": args.symbol, "method": args.method,
           "start": list(a), "end": list(b)}
    checks = {}
    if args.method == "feynman-lattice":
        value = path_integral.lattice_feynman_propagator(h, a[1], b[1], T, pc.N or 100,
                                                         (None, pc.n_x), cfg.hbar)
        oracle = _lattice_oracle(h, a[1], b[1], T, cfg.hbar)
        err = None
        tol = 1e-2 if cfg.tol is None else cfg.tol
    else:
        oracle = path_integral.exact_propagator(h, a, b, T, pc.oracle_dim, cfg.hbar)
        err = None
        tol = 0.1 if cfg.tol is None else cfg.tol
        if args.method == "exact":
            value, oracle = oracle, None
        elif args.method == "wiener-mc":
            est = path_integral.wiener_mc_propagator(h, a, b, T, pc.nu, pc.N, pc.n_samples, cfg.seed,
                                                     cfg.hbar, pc.sampler, pc.workers)
            value, err = est.value, list(est.std_error)
            rec["sampler"] = est.sampler
        elif args.method == "wiener-gaussian":
            value = path_integral.wiener_gaussian_propagator(h, a, b, T, pc.nu, pc.N, cfg.hbar)
        elif args.method == "wiener-lattice":
            value = path_integral.wiener_lattice_propagator(h, a, b, T, pc.nu, pc.N,
                                                            (pc.grid_L, pc.n_pq), cfg.hbar)
        else:
            raise UsageError(f"unknown method {args.method!r}")
    rec.update({"value": _num(value), "std_error": err, "oracle": _num(oracle)})
    row = {"re": float(np.real(value)), "im": float(np.imag(value))}
    if oracle is not None:
        rel = abs(value - oracle) / abs(oracle)
        rec["relative_deviation"] = float(rel)
        row.update({"oracle_re": float(np.real(oracle)), "oracle_im": float(np.imag(oracle)),
                    "relative_deviation": float(rel)})
        checks["oracle_agreement"] = bool(rel <= tol)
    rec["rows"] = [row]
    rec["columns"] = list(row)
    rec["checks"] = checks
    return rec


def cmd_transform_check(args, cfg: RunConfig) -> dict:
    h = parse_symbol(args.symbol)
    tc = cfg.transform
    cmap = canonical.map_from_spec(tc.spec())
    D, hb = cfg.dim, cfg.hbar
    n_check = trust_dim(D) // 2
    fam = coherent.CoherentFamily.ground(D, hb)
    L = cfg.quadrature.L if cfg.quadrature.L is not None else quantizer.tail_safe_L(h, fam, n_check)
    ref = quantizer.antinormal_quantize_quadrature(h, fam, L, cfg.quadrature.n_grid, n_check=n_check)
    new = canonical.quantize_in_transformed_coords(h, cmap, D, hb, L, cfg.quadrature.n_grid, tc.mode, n_check)
    dev = quantizer.block_deviation(new, ref, n_check)
    default_tol = {"identity": 1e-10, "scaling": 1e-5, "cubic": 1e-4}[tc.kind]
    tol = default_tol if cfg.tol is None else cfg.tol
    rt, det = canonical.check_roundtrip(cmap)
    row = {"map": tc.kind, "states": n_check, "deviation": dev, "tolerance": tol,
           "roundtrip": rt, "det_minus_one": det}
    return {"command": "transform-check", "symbol": args.symbol, "map": tc.spec(), "rows": [row],
            "columns": list(row), "checks": {"invariance": bool(dev <= tol), "canonical": bool(det <= 1e-8)}}


def cmd_resolution_check(args, cfg: RunConfig) -> dict:
    fam = _family(args.fiducial, cfg.dim, cfg.hbar)
    qc = cfg.quadrature
    n_check = args.states
    _, dev = coherent.resolution_check(fam, qc.L, qc.n_grid, n_check)
    tol = 1e-6 if cfg.tol is None else cfg.tol
    row = {"fiducial": args.fiducial, "L": qc.L if qc.L is not None else 8 * np.sqrt(cfg.hbar),
           "n_grid": qc.n_grid, "states": n_check if n_check else trust_dim(cfg.dim) // 2,
           "deviation": dev}
    return {"command": "resolution-check", "rows": [row], "columns": list(row),
            "checks": {"identity": bool(dev <= tol)}}


def cmd_classical(args, cfg: RunConfig) -> dict:
    h = parse_symbol(args.symbol)
    c = cfg.classical
    traj = classical.integrate_hamilton(h, args.start, c.T, c.dt, c.order)
    e0 = abs(traj.energy[0])
    drift = traj.energy_drift() / (e0 if e0 > 0 else 1.0)
    tol = 1e-4 if cfg.tol is None else cfg.tol
    rows = [{"t": float(t), "p": float(p), "q": float(q), "E": float(E)}
            for t, p, q, E in zip(traj.times, traj.p, traj.q, traj.energy)]
    return {"command": "classical", "symbol": args.symbol, "start": list(args.start),
            "relative_energy_drift": drift, "rows": rows, "columns": ["t", "p", "q", "E"],
            "checks": {"energy_drift": bool(drift <= tol)}, "summary_rows": 5}


COMMANDS = {"spectrum": cmd_spectrum, "metric": cmd_metric, "propagate": cmd_propagate,
            "transform-check": cmd_transform_check, "resolution-check": cmd_resolution_check,
            "classical": cmd_classical}


# ------------------------------------------------------------------ plumbing

def build_parser() -> argparse.ArgumentParser:
    # global options are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value configuration file")
    common.add_argument("--set", action="append", default=argparse.SUPPRESS, metavar="KEY=VALUE",
                        help="override a config entry, e.g. path.nu=20 (repeatable)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--dim", type=int, default=argparse.SUPPRESS)
    common.add_argument("--hbar", type=float, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="tolerance for the command's checks")
    common.add_argument("--json", metavar="PATH", default=argparse.SUPPRESS,
                        help="write the JSON record ('-' for stdout)")
    common.add_argument("--csv", metavar="PATH", default=argparse.SUPPRESS, help="write the result table as CSV")
    ap = argparse.ArgumentParser(prog="metriq", description="coherent-state quantization laboratory",
                                 parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    s = sub.add_parser("spectrum", help="lowest eigenvalues of the anti-normal quantization")
    s.add_argument("symbol")
    s.add_argument("-k", type=int, help="number of eigenvalues")

    s = sub.add_parser("metric", help="Fubini-Study metric of a coherent-state family")
    s.add_argument("fiducial", nargs="?", default="ground")

    s = sub.add_parser("propagate", help="coherent-state or position propagator")
    s.add_argument("symbol")
    s.add_argument("--method", default="exact",
                   choices=["exact", "wiener-mc", "wiener-gaussian", "wiener-lattice", "feynman-lattice"])
    s.add_argument("--start", type=_point, default=(0.0, 0.0), help="p,q (feynman-lattice uses q only)")
    s.add_argument("--end", type=_point, default=(1.0, 0.0))
    s.add_argument("--T", type=float)
    s.add_argument("--nu", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--sampler", choices=["auto", "bridge", "deformed"])

    s = sub.add_parser("transform-check", help="operator invariance under a canonical map")
    s.add_argument("symbol")
    s.add_argument("--map", dest="kind", choices=["identity", "scaling", "cubic"])
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--coefficient", type=float)
    s.add_argument("--bound", type=float)
    s.add_argument("--mode", choices=["mapped", "rs"])

    s = sub.add_parser("resolution-check", help="coherent-state resolution of identity")
    s.add_argument("fiducial", nargs="?", default="ground")
    s.add_argument("--L", type=float)
    s.add_argument("--n-grid", type=int)
    s.add_argument("--states", type=int, help="leading block size checked (default D_trust/2)")

    s = sub.add_parser("classical", help="integrate Hamilton's equations and export the trajectory")
    s.add_argument("symbol")
    s.add_argument("--start", type=_point, default=(0.0, 1.0))
    s.add_argument("--T", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--order", type=int, choices=[2, 4])
    return ap


def _normalize(args):
    for name in ("config", "seed", "dim", "hbar", "tol", "json", "csv"):
        if not hasattr(args, name):
            setattr(args, name, None)
    if not hasattr(args, "set"):
        args.set = []
    return args


def make_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        cfg.set(*item.split("=", 1))
    for name in ("seed", "dim", "hbar", "tol"):
        if getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    cmd = args.command
    over = {}
    if cmd == "spectrum":
        over = {"k": ("", args.k)}
    elif cmd == "propagate":
        over = {"T": ("path", args.T), "nu": ("path", args.nu), "N": ("path", args.N),
                "n_samples": ("path", args.samples), "workers": ("path", args.workers),
                "sampler": ("path", args.sampler)}
    elif cmd == "transform-check":
        over = {"kind": ("transform", args.kind), "lam": ("transform", args.lam),
                "coefficient": ("transform", args.coefficient), "bound": ("transform", args.bound),
                "mode": ("transform", args.mode)}
    elif cmd == "resolution-check":
        over = {"L": ("quadrature", args.L), "n_grid": ("quadrature", args.n_grid)}
    elif cmd == "classical":
        over = {"T": ("classical", args.T), "dt": ("classical", args.dt), "order": ("classical", args.order)}
    for name, (section, value) in over.items():
        if value is not None:
            setattr(getattr(cfg, section) if section else cfg, name, value)
    return cfg.validate()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def render_table(rec: dict, limit: int | None = None) -> str:
    cols = rec["columns"]
    rows = rec["rows"]
    if limit is not None and len(rows) > 2 * limit:
        rows = rows[:limit] + [{c: "..." for c in cols}] + rows[-limit:]
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(c), *(len(x[i]) for x in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(x.rjust(w) for x, w in zip(row, widths)) for row in cells]
    for name, ok in rec["checks"].items():
        lines.append(f"check {name}: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n"


def render_csv(rec: dict) -> str:
    cols = rec["columns"]
    out = [",".join(cols)]
    for r in rec["rows"]:
        out.append(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols))
    return "\n".join(out) + "\n"


def main(argv=None) -> int:
    ap = build_parser()
    args = _normalize(ap.parse_args(argv))
    try:
        cfg = make_config(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rec = COMMANDS[args.command](args, cfg)
    except SymbolParseError as e:
        print(f"error: cannot parse symbol: {e}", file=sys.stderr)
        return 2
    except (ConfigError, UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    rec["config"] = cfg.to_dict()
    rec["warnings"] = sorted({str(w.message) for w in caught})
    rec["passed"] = all(rec["checks"].values())
    for msg in rec["warnings"]:
        print(f"warning: {msg}", file=sys.stderr)
    show = {k: v for k, v in rec.items() if k != "summary_rows"}
    if args.json == "-":
        sys.stdout.write(json.dumps(show, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(render_table(rec, rec.get("summary_rows")))
        if args.json:
            with open(args.json, "w") as fh:
                fh.write(json.dumps(show, sort_keys=True, indent=2) + "\n")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(render_csv(rec))
    return 0 if rec["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
