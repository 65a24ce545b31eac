"""Canonical coordinate changes (p, q) -> (r, s) and coordinate-free quantization.

Built-in families:

* scaling, ``r = p / lam``, ``s = lam q``;
* point transforms, ``s = f(q)``, ``r = p / f'(q)``, including the cubic
  ``f(q) = q + c q^3`` with a closed-form (Cardano) inverse.

Both satisfy ``r ds = p dq`` exactly, so the generator F vanishes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coherent import CoherentFamily, TruncationWarning, midpoint_grid, projector_integral
from .fock import FockOperator, trust_dim
from .quantizer import _tail_estimate, tail_safe_L
from .symbols import PolySymbol


class DomainError(ValueError):
    pass


Map2 = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class CanonicalMap:
    """Invertible map with its derivative.

    ``domain`` bounds (p, q) as ``((p_lo, p_hi), (q_lo, q_hi))``; None means
    the whole plane along that axis.
    """
    forward: Map2
    inverse: Map2
    jacobian: Callable[[np.ndarray, np.ndarray], np.ndarray]  # shape (..., 2, 2): d(r,s)/d(p,q)
    domain: tuple = ((None, None), (None, None))
    kind: str = "user"
    params: dict = field(default_factory=dict)

    def in_domain(self, p, q) -> np.ndarray:
        p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
        ok = np.ones(np.broadcast(p, q).shape, dtype=bool)
        for x, (lo, hi) in zip((p, q), self.domain):
            if lo is not None:
                ok &= x >= lo
            if hi is not None:
                ok &= x <= hi
        return ok

    def check_domain(self, p, q):
        if not np.all(self.in_domain(p, q)):
            raise DomainError(f"points outside the {self.kind} map domain {self.domain}")

    def sample_domain(self, n: int, rng: np.random.Generator, box: float = 3.0):
        """n uniform points in the domain, clipped to [-box, box] along unbounded axes."""
        cols = []
        for lo, hi in self.domain:
            lo = -box if lo is None else lo
            hi = box if hi is None else hi
            cols.append(rng.uniform(lo, hi, n))
        return cols[0], cols[1]

    def det(self, p, q) -> np.ndarray:
        return np.linalg.det(self.jacobian(p, q))


def make_identity() -> CanonicalMap:
    def jac(p, q):
        shape = np.broadcast(np.asarray(p), np.asarray(q)).shape
        return np.broadcast_to(np.eye(2), shape + (2, 2)).copy()
    ident = lambda a, b: (np.asarray(a, dtype=float) + 0.0, np.asarray(b, dtype=float) + 0.0)
    return CanonicalMap(ident, ident, jac, kind="identity")


def make_scaling(lam: float) -> CanonicalMap:
    if lam == 0 or not np.isfinite(lam):
        raise ValueError(f"scaling factor must be finite and nonzero, got {lam!r}")
    lam = float(lam)

    def jac(p, q):
        shape = np.broadcast(np.asarray(p), np.asarray(q)).shape
        J = np.zeros(shape + (2, 2))
        J[..., 0, 0] = 1 / lam
        J[..., 1, 1] = lam
        return J

    return CanonicalMap(lambda p, q: (np.asarray(p) / lam, lam * np.asarray(q)),
                        lambda r, s: (lam * np.asarray(r), np.asarray(s) / lam),
                        jac, kind="scaling", params={"lambda": lam})


def make_point_transform(f, f_prime, f_inverse, domain: tuple[float, float], f_second=None,
                         n_check: int = 2001, kind: str = "point", params: dict | None = None) -> CanonicalMap:
    """``s = f(q)``, ``r = p / f'(q)`` for q in ``domain``.

    ``f_inverse`` must be supplied; ``f_second`` defaults to a central
    difference of ``f_prime`` (it only enters the off-diagonal Jacobian entry).
    """
    q_lo, q_hi = map(float, domain)
    if not q_lo < q_hi:
        raise ValueError("empty point-transform domain")
    grid = np.linspace(q_lo, q_hi, n_check)
    fp = np.asarray(f_prime(grid), dtype=float)
    if np.any(~np.isfinite(fp)) or np.min(fp) <= 1e-8:
        raise DomainError(f"f' must stay positive on [{q_lo}, {q_hi}] (min {np.min(fp):.3g})")
    if f_second is None:
        f_second = lambda q: (f_prime(q + 1e-5) - f_prime(q - 1e-5)) / 2e-5
    dom = ((None, None), (q_lo, q_hi))

    def fwd(p, q):
        q = np.asarray(q, dtype=float)
        return np.asarray(p, dtype=float) / f_prime(q), f(q)

    def inv(r, s):
        q = f_inverse(np.asarray(s, dtype=float))
        return np.asarray(r, dtype=float) * f_prime(q), q

    def jac(p, q):
        p, q = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
        d1 = f_prime(q)
        J = np.zeros(p.shape + (2, 2))
        J[..., 0, 0] = 1 / d1
        J[..., 0, 1] = -p * f_second(q) / d1 ** 2
        J[..., 1, 1] = d1
        return J

    return CanonicalMap(fwd, inv, jac, dom, kind, params or {})


def _cubic_inverse(c: float):
    def inv(s):
        s = np.asarray(s, dtype=float)
        if c == 0:
            return s + 0.0
        half = s / (2 * c)
        rad = np.sqrt(half ** 2 + 1 / (27 * c ** 3))
        q = np.cbrt(half + rad) + np.cbrt(half - rad)
        # one Newton polish against cancellation in the two cube roots
        return q - (q + c * q ** 3 - s) / (1 + 3 * c * q ** 2)
    return inv


def make_cubic(c: float = 0.1, bound: float = 16.0) -> CanonicalMap:
    """Point transform ``f(q) = q + c q^3`` on |q| <= bound (c >= 0)."""
    if c < 0:
        raise ValueError("cubic coefficient must be non-negative so that f is monotone everywhere")
    return make_point_transform(lambda q: q + c * q ** 3, lambda q: 1 + 3 * c * q ** 2, _cubic_inverse(c),
                                (-bound, bound), f_second=lambda q: 6 * c * q,
                                kind="cubic", params={"coefficient": c, "bound": bound})


def compose(second: CanonicalMap, first: CanonicalMap) -> CanonicalMap:
    """``second o first``."""
    def fwd(p, q):
        return second.forward(*first.forward(p, q))

    def inv(r, s):
        return first.inverse(*second.inverse(r, s))

    def jac(p, q):
        return second.jacobian(*first.forward(p, q)) @ first.jacobian(p, q)

    return CanonicalMap(fwd, inv, jac, first.domain, f"{second.kind}*{first.kind}",
                        {"second": second.params, "first": first.params})


def map_from_spec(spec: dict) -> CanonicalMap:
    kind = spec.get("kind")
    if kind == "identity":
        return make_identity()
    if kind == "scaling":
        return make_scaling(float(spec["lambda"]))
    if kind == "cubic":
        return make_cubic(float(spec.get("coefficient", 0.1)), float(spec.get("bound", 16.0)))
    raise ValueError(f"unknown map kind {kind!r} (expected identity, scaling or cubic)")


def transform_symbol(h, cmap: CanonicalMap) -> Callable:
    """Scalar rule ``hbar(r, s) = h(p(r, s), q(r, s))``."""
    def hbar_(r, s):
        p, q = cmap.inverse(r, s)
        if not np.all(cmap.in_domain(p, q)):
            raise DomainError("(r, s) outside the image of the map domain")
        return h(p, q)
    return hbar_


def check_roundtrip(cmap: CanonicalMap, n: int = 100, seed: int = 0, box: float = 3.0) -> tuple[float, float]:
    """(max round-trip error, max |det J - 1|) on n sampled domain points."""
    rng = np.random.default_rng(seed)
    p, q = cmap.sample_domain(n, rng, box)
    p2, q2 = cmap.inverse(*cmap.forward(p, q))
    rt = float(np.max(np.abs(p2 - p) + np.abs(q2 - q)))
    return rt, float(np.max(np.abs(cmap.det(p, q) - 1)))


def fd_area_ratio(cmap: CanonicalMap, p, q, step: float = 1e-5) -> np.ndarray:
    """``dr ^ ds / dp ^ dq`` from central differences of the forward map."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    rp = [(a - b) / (2 * step) for a, b in zip(cmap.forward(p + step, q), cmap.forward(p - step, q))]
    rq = [(a - b) / (2 * step) for a, b in zip(cmap.forward(p, q + step), cmap.forward(p, q - step))]
    return rp[0] * rq[1] - rq[0] * rp[1]


def loop_integral(cmap: CanonicalMap, center=(0.0, 0.0), radius: float = 1.0, n: int = 2048) -> float:
    """``closed loop integral of (r ds - p dq)`` around a circle, periodic trapezoid rule."""
    t = 2 * np.pi * np.arange(n) / n
    p = center[0] + radius * np.cos(t)
    q = center[1] + radius * np.sin(t)
    dp, dq = -radius * np.sin(t), radius * np.cos(t)
    cmap.check_domain(p, q)
    r, _ = cmap.forward(p, q)
    J = cmap.jacobian(p, q)
    ds = J[:, 1, 0] * dp + J[:, 1, 1] * dq
    return float(np.sum(r * ds - p * dq) * (2 * np.pi / n))


def quantize_in_transformed_coords(h: PolySymbol, cmap: CanonicalMap, D: int, hbar: float = 1.0,
                                   L: float | None = None, n_grid: int = 160, mode: str = "mapped",
                                   n_check: int | None = None, rs_grid: tuple[int, int] | None = None
                                   ) -> FockOperator:
    """``int hbar(r, s) |p(r,s), q(r,s)><p(r,s), q(r,s)| dr ds / (2 pi hbar)`` by quadrature in (r, s).

    ``mode="mapped"``: the nodes are the images of the regular (p, q) midpoint
    grid on [-L, L]^2, weighted by ``|det J| dp dq`` with J the map Jacobian.
    ``mode="rs"``: a regular midpoint grid on a rectangle in (r, s) enclosing
    the image of [-L, L]^2, uniform weights ``dr ds``; ``rs_grid`` gives its
    (n_r, n_s).
    """
    fam = CoherentFamily.ground(D, hbar)
    n_check = trust_dim(D) // 2 if n_check is None else n_check
    L = tail_safe_L(h, fam, n_check) if L is None else L
    tail = _tail_estimate(h, fam, L, n_check)
    if tail > 1e-8:
        warnings.warn(TruncationWarning(f"Gaussian mass outside [-L, L]^2 may reach {tail:.1e}", tail),
                      stacklevel=2)
    hb = transform_symbol(h.evaluate, cmap)
    if mode == "mapped":
        x, step = midpoint_grid(L, n_grid)
        P, Qg = np.meshgrid(x, x, indexing="ij")
        P, Qg = P.ravel(), Qg.ravel()
        cmap.check_domain(P, Qg)
        R, Sc = cmap.forward(P, Qg)
        w = np.abs(cmap.det(P, Qg)) * step * step
    elif mode == "rs":
        nr, ns = rs_grid if rs_grid is not None else (n_grid, 4 * n_grid)
        edge = np.linspace(-L, L, 401)
        E1, E2 = np.meshgrid(edge, edge, indexing="ij")
        sel = np.s_[[0, -1], :]
        bp = np.concatenate([E1[sel].ravel(), E1[:, [0, -1]].ravel()])
        bq = np.concatenate([E2[sel].ravel(), E2[:, [0, -1]].ravel()])
        cmap.check_domain(bp, bq)
        br, bs = cmap.forward(bp, bq)
        rlo, rhi, slo, shi = br.min(), br.max(), bs.min(), bs.max()
        dr, ds = (rhi - rlo) / nr, (shi - slo) / ns
        rr = rlo + dr * (np.arange(nr) + 0.5)
        ss = slo + ds * (np.arange(ns) + 0.5)
        R, Sc = (a.ravel() for a in np.meshgrid(rr, ss, indexing="ij"))
        w = np.full(R.shape, dr * ds)
    else:
        raise ValueError(f"unknown quadrature mode {mode!r}")
    Pb, Qb = cmap.inverse(R, Sc)
    f = np.real(hb(R, Sc)) if h.is_real else hb(R, Sc)
    M = projector_integral(fam, None, Pb, Qb, w * f)
    if h.is_real:
        return FockOperator(0.5 * (M + M.conj().T), hbar, hermitian=True)
    return FockOperator(M, hbar)


def gauge_phase_report(cmap: CanonicalMap, G, start, end, hbar: float = 1.0, path=None,
                       n_nodes: int = 200, seed: int = 0) -> dict:
    """Endpoint phases ``exp(i G / hbar)`` and the telescoping residual of ``sum dG`` on a path.

    ``start`` and ``end`` are (r, s) points; ``path`` is an (n, 2) array of
    (r, s) nodes, or None for a random path between them.
    """
    G = G if callable(G) else (lambda r, s, c=G: c + 0.0 * np.asarray(r))
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    if path is None:
        rng = np.random.default_rng(seed)
        t = np.linspace(0, 1, n_nodes)[:, None]
        path = start + t * (end - start)
        path[1:-1] += 0.3 * rng.standard_normal((n_nodes - 2, 2))
    path = np.asarray(path, dtype=float)
    g = np.asarray(G(path[:, 0], path[:, 1]), dtype=float)
    total = float(np.sum(np.diff(g)))
    g0, g1 = float(G(*start)), float(G(*end))
    return {"map": cmap.kind, "phase_start": complex(np.exp(1j * g0 / hbar)),
            "phase_end": complex(np.exp(1j * g1 / hbar)),
            "phase_ratio": complex(np.exp(1j * (g1 - g0) / hbar)),
            "sum_dG": total, "G_difference": g1 - g0, "telescoping_residual": abs(total - (g1 - g0))}
