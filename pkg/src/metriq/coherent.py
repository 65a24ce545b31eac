"""Canonical coherent states ``|p,q> = U[p,q]|eta>`` and the geometry they induce.

``U[p,q] = exp(i(pQ - qP)/hbar)`` equals the displacement ``D(alpha)`` with
``alpha = (q + ip)/sqrt(2 hbar)``.  Two realizations are provided:

* :func:`displacement` / :func:`coherent_state` exponentiate the truncated
  generator, so they are exactly unitary but only trustworthy inside the
  low-lying block;
* :func:`coherent_amplitudes` returns the leading ``D`` components of the
  infinite-dimensional vector, exact for any point.  Phase-space quadratures
  use this one, since their nodes reach far outside the trust region.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .fock import (FockOperator, StateVector, build_canonical, expm_matrix,
                   trust_dim)

TRUST_LEAK = 1e-8


class TruncationWarning(UserWarning):
    def __init__(self, message: str, leaked: float):
        super().__init__(message)
        self.leaked = leaked


@dataclass(frozen=True)
class PhasePoint:
    p: float
    q: float

    def __post_init__(self):
        if not (np.isfinite(self.p) and np.isfinite(self.q)):
            raise ValueError(f"phase point must be finite, got ({self.p}, {self.q})")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))

    def alpha(self, hbar: float = 1.0) -> complex:
        return (self.q + 1j * self.p) / np.sqrt(2 * hbar)

    def __iter__(self):
        yield self.p
        yield self.q


def as_point(pt) -> PhasePoint:
    return pt if isinstance(pt, PhasePoint) else PhasePoint(*pt)


@dataclass(frozen=True, eq=False)
class CoherentFamily:
    fiducial: StateVector
    hbar: float = 1.0

    def __post_init__(self):
        if abs(self.fiducial.norm() - 1.0) > 1e-12:
            raise ValueError(f"fiducial must be normalized, norm = {self.fiducial.norm()!r}")

    @classmethod
    def ground(cls, D: int, hbar: float = 1.0) -> "CoherentFamily":
        return cls(StateVector.number(0, D), hbar)

    @classmethod
    def number(cls, n: int, D: int, hbar: float = 1.0) -> "CoherentFamily":
        return cls(StateVector.number(n, D), hbar)

    @classmethod
    def random(cls, D: int, support: int, rng: np.random.Generator, hbar: float = 1.0):
        """Random fiducial supported on the first ``support`` number states."""
        v = np.zeros(D, dtype=complex)
        v[:support] = rng.standard_normal(support) + 1j * rng.standard_normal(support)
        return cls(StateVector(v).normalize(), hbar)

    @property
    def dim(self) -> int:
        return self.fiducial.dim

    @cached_property
    def QP(self) -> tuple[FockOperator, FockOperator]:
        return build_canonical(self.dim, self.hbar)

    @cached_property
    def support(self) -> int:
        """One past the highest number state carrying fiducial amplitude."""
        nz = np.nonzero(np.abs(self.fiducial.entries) > 1e-15)[0]
        return int(nz[-1]) + 1 if nz.size else 1


def _generator(pt: PhasePoint, Q: FockOperator, P: FockOperator) -> np.ndarray:
    return 1j * (pt.p * Q.matrix - pt.q * P.matrix) / Q.hbar


def displacement(pt, D: int, hbar: float = 1.0) -> FockOperator:
    pt = as_point(pt)
    Q, P = build_canonical(D, hbar)
    return FockOperator(expm_matrix(_generator(pt, Q, P)), hbar)


def _check_trust(v: np.ndarray, D: int, what: str) -> float:
    leak = float(np.sum(np.abs(v[trust_dim(D):]) ** 2))
    if leak > TRUST_LEAK:
        warnings.warn(TruncationWarning(
            f"{what}: weight {leak:.2e} beyond trust dimension {trust_dim(D)} of D={D}", leak),
            stacklevel=3)
    return leak


def coherent_state(family: CoherentFamily, pt, warn: bool = True) -> StateVector:
    pt = as_point(pt)
    Q, P = family.QP
    v = expm_matrix(_generator(pt, Q, P)) @ family.fiducial.entries
    if warn:
        _check_trust(v, family.dim, f"coherent state at ({pt.p}, {pt.q})")
    return StateVector(v / np.linalg.norm(v), normalized=True)


def overlap(family: CoherentFamily, pt1, pt2, warn: bool = True) -> complex:
    """<p1,q1|p2,q2>."""
    a = coherent_state(family, pt1, warn)
    b = coherent_state(family, pt2, warn)
    return a.inner(b)


def coherent_amplitudes(family: CoherentFamily, p, q, chunk: int = 4096) -> np.ndarray:
    """Leading ``D`` components of ``U[p,q]|eta>`` for arrays of points.

    Uses ``D(alpha)|n+1> = (A^dag - conj(alpha)) D(alpha)|n> / sqrt(n+1)``; only
    raising operators appear, so truncation never feeds back into the kept
    components and each one is the exact infinite-dimensional value (up to
    roundoff).  Shape ``(npts, D)``.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float)).ravel()
    q = np.atleast_1d(np.asarray(q, dtype=float)).ravel()
    D = family.dim
    eta = family.fiducial.entries
    nmax = family.support
    work = D
    sqrt_k = np.sqrt(np.arange(work, dtype=float))
    out = np.empty((p.size, D), dtype=complex)
    for lo in range(0, p.size, chunk):
        al = (q[lo:lo + chunk] + 1j * p[lo:lo + chunk]) / np.sqrt(2 * family.hbar)
        # |alpha> components by recursion to avoid overflow in alpha^k / sqrt(k!)
        v = np.empty((al.size, work), dtype=complex)
        v[:, 0] = np.exp(-0.5 * np.abs(al) ** 2)
        for k in range(1, work):
            v[:, k] = v[:, k - 1] * al / sqrt_k[k]
        acc = eta[0] * v
        for n in range(1, nmax):
            raised = np.zeros_like(v)
            raised[:, 1:] = v[:, :-1] * sqrt_k[1:]
            v = (raised - np.conj(al)[:, None] * v) / np.sqrt(n)
            if eta[n] != 0:
                acc = acc + eta[n] * v
        out[lo:lo + chunk] = acc
    return out


def midpoint_grid(L: float, n: int) -> tuple[np.ndarray, float]:
    h = 2 * L / n
    return -L + h * (np.arange(n) + 0.5), h


def projector_integral(family: CoherentFamily, weight, p, q, w) -> np.ndarray:
    """``sum_i w_i weight(p_i, q_i) |p_i,q_i><p_i,q_i| / (2 pi hbar)`` as a D x D array.

    ``weight`` is a callable of (p, q) arrays or None (meaning 1).  Points are
    accumulated in a fixed order so the result is deterministic.
    """
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    w = np.broadcast_to(np.asarray(w, dtype=float), p.shape).ravel()
    D = family.dim
    acc = np.zeros((D, D), dtype=complex)
    chunk = max(256, 2_000_000 // max(D, 1))
    for lo in range(0, p.size, chunk):
        sl = slice(lo, lo + chunk)
        c = coherent_amplitudes(family, p[sl], q[sl])
        f = w[sl] if weight is None else w[sl] * np.asarray(weight(p[sl], q[sl]))
        acc += (c.T * f) @ c.conj()
    return acc / (2 * np.pi * family.hbar)


def resolution_check(family: CoherentFamily, L: float | None = None, n_grid: int = 160,
                     n_check: int | None = None) -> tuple[FockOperator, float]:
    """Midpoint quadrature of the coherent-state resolution of identity on [-L, L]^2.

    Returns the quadrature operator and its max-norm deviation from the
    identity on the first ``n_check`` states (default ``D_trust // 2``).
    """
    if n_grid < 16:
        raise ValueError("n_grid must be at least 16")
    L = 8 * np.sqrt(family.hbar) if L is None else L
    if L <= 0:
        raise ValueError("L must be positive")
    n_check = trust_dim(family.dim) // 2 if n_check is None else n_check
    x, h = midpoint_grid(L, n_grid)
    P, Qg = np.meshgrid(x, x, indexing="ij")
    M = projector_integral(family, None, P, Qg, h * h)
    dev = float(np.max(np.abs(M[:n_check, :n_check] - np.eye(n_check))))
    return FockOperator(M, family.hbar), dev


def fiducial_moments(family: CoherentFamily) -> dict[str, float]:
    Q, P = family.QP
    eta = family.fiducial
    mQ = Q.expect(eta).real
    mP = P.expect(eta).real
    dQ = Q.matrix - mQ * np.eye(family.dim)
    dP = P.matrix - mP * np.eye(family.dim)
    v = eta.entries
    var_q = np.vdot(v, dQ @ dQ @ v).real
    var_p = np.vdot(v, dP @ dP @ v).real
    cov = np.vdot(v, (dP @ dQ + dQ @ dP) @ v).real
    return {"Q": float(mQ), "P": float(mP), "var_Q": float(var_q), "var_P": float(var_p),
            "sym_cov_PQ": float(cov)}


def symplectic_potential(family: CoherentFamily, pt) -> tuple[float, float]:
    """Coefficients (theta_p, theta_q) of ``theta = theta_p dp + theta_q dq``."""
    pt = as_point(pt)
    m = fiducial_moments(family)
    return -pt.q / 2 - m["Q"], pt.p / 2 + m["P"]


def _tangents(family: CoherentFamily, pt: PhasePoint, step: float):
    psi = coherent_state(family, pt).entries
    dp = (coherent_state(family, (pt.p + step, pt.q)).entries
          - coherent_state(family, (pt.p - step, pt.q)).entries) / (2 * step)
    dq = (coherent_state(family, (pt.p, pt.q + step)).entries
          - coherent_state(family, (pt.p, pt.q - step)).entries) / (2 * step)
    return psi, dp, dq


def fd_symplectic_potential(family: CoherentFamily, pt, step: float = 1e-4) -> tuple[float, float]:
    """``i hbar <p,q| d |p,q>`` by central differences of :func:`coherent_state`."""
    pt = as_point(pt)
    psi, dp, dq = _tangents(family, pt, step)
    hb = family.hbar
    return float((1j * hb * np.vdot(psi, dp)).real), float((1j * hb * np.vdot(psi, dq)).real)


def one_form_curl(family: CoherentFamily, pt, step: float = 1e-2, fd_step: float = 1e-4) -> float:
    """``d theta_q/dp - d theta_p/dq`` of the finite-difference one-form."""
    pt = as_point(pt)
    tq_plus = fd_symplectic_potential(family, (pt.p + step, pt.q), fd_step)[1]
    tq_minus = fd_symplectic_potential(family, (pt.p - step, pt.q), fd_step)[1]
    tp_plus = fd_symplectic_potential(family, (pt.p, pt.q + step), fd_step)[0]
    tp_minus = fd_symplectic_potential(family, (pt.p, pt.q - step), fd_step)[0]
    return (tq_plus - tq_minus) / (2 * step) - (tp_plus - tp_minus) / (2 * step)


def fd_metric(family: CoherentFamily, pt, method: str = "tangent", step: float | None = None) -> np.ndarray:
    """Fubini-Study tensor ``[[g_pp, g_pq], [g_pq, g_qq]]`` at ``pt`` by finite differences.

    ``tangent`` differentiates the state once (step 1e-4);
    ``overlap`` takes second differences of ``|<x|x+d>|^2`` (step 1e-3).
    """
    pt = as_point(pt)
    hb2 = 2 * family.hbar ** 2
    if method == "tangent":
        psi, dp, dq = _tangents(family, pt, 1e-4 if step is None else step)
        t = [dp, dq]
        G = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                G[i, j] = (np.vdot(t[i], t[j]) - np.vdot(t[i], psi) * np.vdot(psi, t[j])).real
        return hb2 * G
    if method == "overlap":
        h = 1e-3 if step is None else step
        base = coherent_state(family, pt).entries

        def F(dp_, dq_):
            v = coherent_state(family, (pt.p + dp_, pt.q + dq_)).entries
            return abs(np.vdot(base, v)) ** 2

        f0 = 1.0
        gpp = -(F(h, 0) - 2 * f0 + F(-h, 0)) / (2 * h * h)
        gqq = -(F(0, h) - 2 * f0 + F(0, -h)) / (2 * h * h)
        gpq = -(F(h, h) - F(h, -h) - F(-h, h) + F(-h, -h)) / (8 * h * h)
        return hb2 * np.array([[gpp, gpq], [gpq, gqq]])
    raise ValueError(f"unknown finite-difference method {method!r}")


@dataclass
class MetricReport:
    """Moment-formula metric and one-form coefficients, plus finite-difference checks.

    The line element is ``g_pp dp^2 + 2 g_pq dp dq + g_qq dq^2`` with
    ``g_pp = 2<dQ^2>``, ``g_qq = 2<dP^2>`` and ``g_pq = <dP dQ + dQ dP>``.
    """

    gpp: float
    gpq: float
    gqq: float
    theta_p: float
    theta_q: float
    at: tuple[float, float]
    moments: dict[str, float]
    hbar: float
    physical_ratio: float
    fd_points: list[tuple[float, float]] = field(default_factory=list)
    fd_max_deviation: float = float("nan")
    flatness_residual: float = float("nan")

    @property
    def tensor(self) -> np.ndarray:
        return np.array([[self.gpp, self.gpq], [self.gpq, self.gqq]])

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fubini_study_metric(family: CoherentFamily, n_points: int = 5, radius: float = 1.0,
                        seed: int = 0, at=(0.0, 0.0), method: str = "tangent") -> MetricReport:
    m = fiducial_moments(family)
    # d/dp acts as i dQ / hbar and d/dq as -i dP / hbar, so the cross term
    # enters with a minus sign
    gpp, gqq, gpq = 2 * m["var_Q"], 2 * m["var_P"], 0.0 - m["sym_cov_PQ"]
    at = as_point(at)
    tp, tq = symplectic_potential(family, at)
    report = MetricReport(gpp=gpp, gpq=gpq, gqq=gqq, theta_p=tp, theta_q=tq, at=(at.p, at.q),
                          moments=m, hbar=family.hbar,
                          physical_ratio=(m["var_Q"] + m["var_P"]) / family.hbar)
    if n_points > 0:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-radius, radius, size=(n_points, 2))
        fd = np.array([fd_metric(family, tuple(x), method) for x in pts])
        report.fd_points = [tuple(map(float, x)) for x in pts]
        report.fd_max_deviation = float(np.max(np.abs(fd - report.tensor)))
        report.flatness_residual = float(np.max(fd.max(axis=0) - fd.min(axis=0)))
    return report
