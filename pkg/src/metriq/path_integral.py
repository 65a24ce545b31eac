"""Phase-space path integrals and their exact Fock-space oracle.

Two regularizations of the propagator are provided:

* the sharp-position lattice for ``H = p^2/(2m) + V(q)``, momenta integrated
  out analytically and positions iterated on a grid;
* the Wiener-regularized coherent-state integral, either by Monte Carlo over
  Brownian bridges, by exact Gaussian integration (quadratic h), or by a
  deterministic transfer matrix on a phase-space grid.

Both are compared against ``<p'',q''| exp(-i H T / hbar) |p',q'>`` with H the
anti-normal quantization of h (:func:`exact_propagator`).

Time discretization of the Wiener branch: N interior nodes, S = N + 1 steps of
length eps = T / S, nodes indexed 0..S with both ends pinned.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .coherent import CoherentFamily, as_point, coherent_amplitudes, midpoint_grid
from .fock import propagator
from .paths import PhasePath
from .quantizer import antinormal_quantize_rule
from .symbols import PolySymbol

CHUNK = 1024


class PrecisionWarning(UserWarning):
    pass


class DomainError(ValueError):
    pass


def default_N(T: float, per_unit: int = 400, minimum: int = 16) -> int:
    return max(minimum, int(np.ceil(per_unit * T - 1e-9)))


# ---------------------------------------------------------------- oracles

def exact_propagator(h: PolySymbol, start, end, T: float, D: int = 60, hbar: float = 1.0) -> complex:
    """``<end| exp(-i H T / hbar) |start>`` with H the anti-normal quantization of h."""
    a, b = as_point(start), as_point(end)
    fam = CoherentFamily.ground(D, hbar)
    H = antinormal_quantize_rule(h, D, hbar)
    U = propagator(H, T).matrix
    c = coherent_amplitudes(fam, np.array([a.p, b.p]), np.array([a.q, b.q]))
    return complex(np.vdot(c[1], U @ c[0]))


def chapman_kolmogorov_check(h: PolySymbol, start, end, T: float, D: int = 60, hbar: float = 1.0,
                             L: float | None = None, n_grid: int = 160) -> tuple[complex, complex, float]:
    """Compose two half-time oracle kernels through a phase-space quadrature.

    Returns (composed, direct, |composed - direct|).
    """
    a, b = as_point(start), as_point(end)
    fam = CoherentFamily.ground(D, hbar)
    H = antinormal_quantize_rule(h, D, hbar)
    U = propagator(H, T / 2).matrix
    L = 8 * np.sqrt(hbar) + max(abs(a.p), abs(a.q), abs(b.p), abs(b.q)) if L is None else L
    x, step = midpoint_grid(L, n_grid)
    P, Qg = np.meshgrid(x, x, indexing="ij")
    cm = coherent_amplitudes(fam, P.ravel(), Qg.ravel())
    ends = coherent_amplitudes(fam, np.array([a.p, b.p]), np.array([a.q, b.q]))
    right = cm.conj() @ (U @ ends[0])          # K(m, T/2; a)
    left = (U.conj().T @ ends[1]).conj() @ cm.T  # K(b, T; m, T/2)
    composed = complex(np.sum(left * right) * step * step / (2 * np.pi * hbar))
    direct = complex(np.vdot(ends[1], U @ (U @ ends[0])))
    return composed, direct, abs(composed - direct)


def free_kernel(qa, qb, T: float, m: float = 1.0, hbar: float = 1.0):
    return np.sqrt(m / (2j * np.pi * hbar * T)) * np.exp(1j * m * (qb - qa) ** 2 / (2 * hbar * T))


def mehler_kernel(qa, qb, T: float, m: float = 1.0, omega: float = 1.0, hbar: float = 1.0):
    """Position kernel of ``p^2/(2m) + m omega^2 q^2 / 2`` (valid for 0 < omega T < pi)."""
    s, c = np.sin(omega * T), np.cos(omega * T)
    pre = np.sqrt(m * omega / (2j * np.pi * hbar * s))
    return pre * np.exp(1j * m * omega / (2 * hbar * s) * ((qa ** 2 + qb ** 2) * c - 2 * qa * qb))


# ---------------------------------------------------------------- sharp-position lattice

def _kinetic_mass(H: PolySymbol) -> tuple[float, PolySymbol]:
    if not (H.is_real and H.is_separable()):
        raise ValueError("lattice branch needs a real separable H = p^2/(2m) + V(q)")
    kin, V = H.split_separable()
    if set(kin.terms) != {(2, 0)} or kin.terms[(2, 0)].real <= 0:
        raise ValueError("kinetic part must be c p^2 with c > 0")
    return 1.0 / (2 * kin.terms[(2, 0)].real), V


def lattice_feynman_propagator(H: PolySymbol, qa: float, qb: float, T: float, N: int,
                               grid: tuple[float | None, int | None] = (None, None),
                               hbar: float = 1.0) -> complex:
    """N-slice lattice propagator ``<qb| e^{-iHT/hbar} |qa>`` with midpoint potential.

    The momentum integrals are done in closed form, giving the short-time
    kernel ``sqrt(m/(2 pi i hbar eps)) exp{i/hbar [m (a-b)^2/(2 eps) - eps V((a+b)/2)]}``.
    Each interior position integral runs along the line
    ``c_l + exp(i pi/4) y``, y in [-L, L], through the straight path c_l from
    qa to qb; for V of degree at most 2 the integrand is entire and decays
    there, so the value is the real-axis integral while the grid sum becomes
    a damped Gaussian quadrature.  Trapezoid weights in y.
    """
    if N < 1:
        raise ValueError("need at least one interior node")
    m, V = _kinetic_mass(H)
    if V.max_degree > 2:
        raise ValueError("lattice branch supports V of degree <= 2")
    S = N + 1
    eps = T / S
    width = np.sqrt(hbar * T / m)
    L, n_x = grid
    if L is None:
        L = max(4.0, max(abs(qa), abs(qb)) + 4 * width)
    if max(abs(qa), abs(qb)) > L - 2 * width:
        raise DomainError(f"endpoints lie within 2 sqrt(hbar T / m) = {2 * width:.3g} of the grid edge L = {L}")
    sigma = np.sqrt(hbar * eps / m)
    if n_x is None:
        n_x = 2 * int(np.ceil(2 * L / sigma)) + 1
    y = np.linspace(-L, L, n_x)
    dy = y[1] - y[0]
    if dy > sigma:
        raise DomainError(f"grid step {dy:.3g} does not resolve the short-time width {sigma:.3g}")
    rot = np.exp(0.25j * np.pi)
    w = np.full(n_x, dy) * rot
    w[0] *= 0.5
    w[-1] *= 0.5
    pre = np.sqrt(m / (2j * np.pi * hbar * eps))
    c = qa + (qb - qa) * np.arange(S + 1) / S

    def k(a, b):
        return pre * np.exp(1j / hbar * (m * (a - b) ** 2 / (2 * eps) - eps * V.evaluate(0.0, (a + b) / 2)))

    f = k(c[1] + rot * y, qa)
    for l in range(1, N):
        f = (k(c[l + 1] + rot * y[:, None], c[l] + rot * y[None, :]) * w[None, :]) @ f
    return complex(np.sum(w * k(qb, c[N] + rot * y) * f))


# ---------------------------------------------------------------- Wiener branch: sampling

def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    # counter-based stream: chunk c owns counter block [0, 0, c, 0]
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(chunk), 0]))


def _bridges(rng: np.random.Generator, m: int, start, end, S: int, s: float) -> tuple[np.ndarray, np.ndarray]:
    """m pinned bridges with step variance s; arrays of shape (m, S+1) for p and q."""
    inc = rng.standard_normal((m, 2, S)) * np.sqrt(s)
    W = np.concatenate([np.zeros((m, 2, 1)), np.cumsum(inc, axis=2)], axis=2)
    frac = np.arange(S + 1) / S
    x0 = np.array([start.p, start.q])[None, :, None]
    x1 = np.array([end.p, end.q])[None, :, None]
    B = x0 + W - frac * W[:, :, -1:] + frac * (x1 - x0)
    B[:, :, 0] = x0[:, :, 0]
    B[:, :, -1] = x1[:, :, 0]
    return B[:, 0], B[:, 1]


def sample_brownian_bridges(start, end, T: float, N: int, nu: float, n_paths: int,
                            rng_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """n_paths bridges from the same streams the Monte Carlo estimator uses."""
    if N < 2 or nu <= 0 or T <= 0:
        raise ValueError("need N >= 2, nu > 0, T > 0")
    a, b = as_point(start), as_point(end)
    S = N + 1
    out_p, out_q = [], []
    for c, lo in enumerate(range(0, n_paths, CHUNK)):
        p, q = _bridges(_chunk_rng(rng_seed, c), min(CHUNK, n_paths - lo), a, b, S, nu * T / S)
        out_p.append(p)
        out_q.append(q)
    return np.concatenate(out_p), np.concatenate(out_q)


def sample_brownian_bridge(start, end, T: float, N: int, nu: float, rng_seed: int = 0) -> PhasePath:
    p, q = sample_brownian_bridges(start, end, T, N, nu, 1, rng_seed)
    return PhasePath(T / (N + 1), p[0], q[0])


def stratonovich_area(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Midpoint discretization of ``int (p dq - q dp) / 2`` along the last axis."""
    pm, qm = 0.5 * (p[..., 1:] + p[..., :-1]), 0.5 * (q[..., 1:] + q[..., :-1])
    return 0.5 * np.sum(pm * np.diff(q, axis=-1) - qm * np.diff(p, axis=-1), axis=-1)


def midpoint_h_sum(h: PolySymbol, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    pm, qm = 0.5 * (p[..., 1:] + p[..., :-1]), 0.5 * (q[..., 1:] + q[..., :-1])
    return np.sum(h.evaluate(pm, qm), axis=-1)


# ---------------------------------------------------------------- Wiener branch: Gaussian algebra

def log_normalization(start, end, T: float, nu: float, S: int, hbar: float) -> float:
    """log of ``2 pi hbar (1 + s/(2 hbar))^S`` times the pinned heat-kernel mass.

    ``(1 + s/(2 hbar))^S``, s = nu T / S, is the inverse of the lowest
    eigenvalue of the one-step kernel restricted to the lowest Landau level;
    it tends to ``exp(nu T / (2 hbar))`` as S grows but is used at finite S
    so that h = 0 reproduces the coherent-state overlap without step bias.
    """
    a, b = as_point(start), as_point(end)
    s = nu * T / S
    d2 = (b.p - a.p) ** 2 + (b.q - a.q) ** 2
    return (np.log(2 * np.pi * hbar) + S * np.log1p(s / (2 * hbar))
            - np.log(2 * np.pi * nu * T) - d2 / (2 * nu * T))


@dataclass
class _Quadratic:
    S: int
    s: float
    B: np.ndarray      # path Laplacian on X = [p_0..p_S, q_0..q_S]
    A: np.ndarray      # X^T A X = sum (p_l q_{l+1} - q_l p_{l+1})
    Mp: np.ndarray     # midpoint averaging, (S, 2(S+1))
    Mq: np.ndarray
    fixed: list
    interior: list
    xF: np.ndarray


def _assemble(start, end, S: int, s: float) -> _Quadratic:
    a, b = as_point(start), as_point(end)
    n = S + 1
    lap = np.zeros((n, n))
    i = np.arange(S)
    np.add.at(lap, (i, i), 1.0)
    np.add.at(lap, (i + 1, i + 1), 1.0)
    lap[i, i + 1] -= 1.0
    lap[i + 1, i] -= 1.0
    B = np.zeros((2 * n, 2 * n))
    B[:n, :n] = lap
    B[n:, n:] = lap
    A = np.zeros((2 * n, 2 * n))
    A[i, n + i + 1] += 0.5
    A[n + i + 1, i] += 0.5
    A[n + i, i + 1] -= 0.5
    A[i + 1, n + i] -= 0.5
    avg = np.zeros((S, n))
    avg[i, i] = 0.5
    avg[i, i + 1] = 0.5
    Mp = np.zeros((S, 2 * n))
    Mq = np.zeros((S, 2 * n))
    Mp[:, :n] = avg
    Mq[:, n:] = avg
    fixed = [0, S, n, n + S]
    interior = [k for k in range(2 * n) if k not in fixed]
    xF = np.array([a.p, b.p, a.q, b.q], dtype=float)
    return _Quadratic(S, s, B, A, Mp, Mq, fixed, interior, xF)


def _quadratic_parts(h: PolySymbol, g: _Quadratic):
    """``sum_l h(midpoint_l) = X^T Hm X / 2 + J^T X + c0`` for h of degree <= 2."""
    t = {k: v.real for k, v in h.terms.items()}
    Mp, Mq = g.Mp, g.Mq
    Hm = (2 * t.get((2, 0), 0.0) * Mp.T @ Mp + 2 * t.get((0, 2), 0.0) * Mq.T @ Mq
          + t.get((1, 1), 0.0) * (Mp.T @ Mq + Mq.T @ Mp))
    J = t.get((1, 0), 0.0) * Mp.sum(0) + t.get((0, 1), 0.0) * Mq.sum(0)
    return Hm, J, g.S * t.get((0, 0), 0.0)


def _reduce(M: np.ndarray, J: np.ndarray, c0: complex, g: _Quadratic):
    """Stationary interior point and exponent of ``-X^T M X / 2 + J^T X + c0`` with ends fixed."""
    I, F, xF = g.interior, g.fixed, g.xF
    MII = M[np.ix_(I, I)]
    b = J[I] - M[np.ix_(I, F)] @ xF
    ystar = np.linalg.solve(MII, b)
    e = -0.5 * xF @ M[np.ix_(F, F)] @ xF + J[F] @ xF + c0 + 0.5 * b @ ystar
    return ystar, e


def _whitening(g: _Quadratic, M: np.ndarray):
    """Cholesky factor of the real bridge precision and eigen-split of the imaginary part of M."""
    I = g.interior
    Lc = np.linalg.cholesky(g.B[np.ix_(I, I)] / g.s)
    Im = M[np.ix_(I, I)].imag
    K = np.linalg.solve(Lc, np.linalg.solve(Lc, Im).T)
    kappa, U = np.linalg.eigh(0.5 * (K + K.T))
    return Lc, kappa, U


def wiener_gaussian_propagator(h: PolySymbol, start, end, T: float, nu: float = 50.0,
                               N: int | None = None, hbar: float = 1.0) -> complex:
    """Exact value of the discretized Wiener-regularized integral for h of degree <= 2.

    The lattice integrand is Gaussian in the interior nodes; the expectation
    over the normalized bridge is ``exp(e1 - e0) prod (1 + i kappa)^(-1/2)``.
    """
    if h.max_degree > 2 or not h.is_real:
        raise ValueError("exact Gaussian evaluation needs a real h of degree <= 2")
    N = default_N(T) if N is None else N
    S = N + 1
    g = _assemble(start, end, S, nu * T / S)
    eps = T / S
    Hm, Jh, c0 = _quadratic_parts(h, g)
    M = g.B / g.s - 1j / hbar * g.A + 1j * eps / hbar * Hm
    J = -1j * eps / hbar * Jh
    _, e1 = _reduce(M, J, -1j * eps / hbar * c0, g)
    _, e0 = _reduce(g.B / g.s, np.zeros(len(J)), 0.0, g)
    _, kappa, _ = _whitening(g, M)
    logR = e1 - e0 - 0.5 * np.sum(np.log1p(1j * kappa))
    return complex(np.exp(log_normalization(start, end, T, nu, S, hbar) + logR))


# ---------------------------------------------------------------- Wiener branch: Monte Carlo

@dataclass(frozen=True)
class MCEstimate:
    value: complex
    std_error: tuple[float, float]
    n_samples: int
    seed: int
    sampler: str = "bridge"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if min(self.std_error) < 0:
            raise ValueError("std_error must be non-negative")

    @property
    def abs_error(self) -> float:
        return float(np.hypot(*self.std_error))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = [self.value.real, self.value.imag]
        d["std_error"] = list(self.std_error)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class _BridgeChunks:
    """Plain sampler: the weight is the full phase of the integrand on real bridges."""

    def __init__(self, h, a, b, S, s, eps, hbar):
        self.h, self.a, self.b, self.S, self.s, self.eps, self.hbar = h, a, b, S, s, eps, hbar
        self.log_scale = 0.0

    def weights(self, rng, m):
        p, q = _bridges(rng, m, self.a, self.b, self.S, self.s)
        phase = stratonovich_area(p, q)
        if not self.h.is_zero():
            phase = phase - self.eps * np.real(midpoint_h_sum(self.h, p, q))
        return np.exp(1j * phase / self.hbar)


class _DeformedChunks:
    """Bridge integral over interior nodes shifted into the complex domain.

    The Gaussian part ``exp(-X^T (B/s - iA/hbar) X / 2)`` is integrated along
    its steepest-descent plane through the complex stationary point, where it
    is again a real standard normal after a complex linear change of
    variables; the remaining factor ``exp(-i eps sum h / hbar)`` is averaged
    over that normal.  The mean of the plain sampler's phase is strongly
    cancelling; here only the h factor fluctuates.
    """

    def __init__(self, h, a, b, S, s, eps, hbar):
        self.h, self.eps, self.hbar = h, eps, hbar
        g = _assemble(a, b, S, s)
        M = g.B / g.s - 1j / hbar * g.A
        ystar, e1 = _reduce(M, np.zeros(M.shape[0]), 0.0, g)
        _, e0 = _reduce(g.B / g.s, np.zeros(M.shape[0]), 0.0, g)
        Lc, kappa, U = _whitening(g, M)
        c = 1.0 + 1j * kappa
        self.sd = np.abs(c) ** -0.5
        self.VT = np.linalg.solve(Lc.T, U * np.exp(-0.5j * np.angle(c))).T
        self.ystar = ystar
        self.log_scale = complex(e1 - e0 - 0.5 * np.sum(np.log(c)))
        self.g = g
        self.n = S + 1

    def weights(self, rng, m):
        u = rng.standard_normal((m, len(self.g.interior))) * self.sd
        X = np.empty((m, 2 * self.n), dtype=complex)
        X[:, self.g.fixed] = self.g.xF
        X[:, self.g.interior] = self.ystar + u @ self.VT
        if self.h.is_zero():
            return np.ones(m, dtype=complex)
        hs = midpoint_h_sum(self.h, X[:, :self.n], X[:, self.n:])
        return np.exp(-1j * self.eps * hs / self.hbar)


def wiener_mc_propagator(h: PolySymbol, start, end, T: float, nu: float = 50.0, N: int | None = None,
                         n_samples: int = 200_000, rng_seed: int = 0, hbar: float = 1.0,
                         sampler: str = "auto", workers: int = 1) -> MCEstimate:
    """Monte Carlo estimate of the Wiener-regularized coherent-state propagator.

    ``sampler``: "bridge" averages the full phase over real Brownian bridges;
    "deformed" integrates the Gaussian part exactly on a shifted contour
    (h of degree <= 2 only); "auto" picks "deformed" when allowed.
    Samples are drawn in fixed chunks of CHUNK from counter-based streams and
    reduced in chunk order, so the result does not depend on ``workers``.
    """
    if not (T > 0 and nu > 0 and n_samples >= 1):
        raise ValueError("T, nu and n_samples must be positive")
    if not h.is_real:
        raise ValueError("h must be real")
    a, b = as_point(start), as_point(end)
    N = default_N(T) if N is None else N
    if N < 2:
        raise ValueError("need N >= 2 interior nodes")
    S = N + 1
    eps = T / S
    s = nu * eps
    if sampler == "auto":
        sampler = "deformed" if h.max_degree <= 2 else "bridge"
    if sampler == "deformed":
        if h.max_degree > 2:
            raise ValueError("deformed sampler needs h of degree <= 2")
        engine = _DeformedChunks(h, a, b, S, s, eps, hbar)
    elif sampler == "bridge":
        engine = _BridgeChunks(h, a, b, S, s, eps, hbar)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")

    starts = list(range(0, n_samples, CHUNK))

    scale = complex(np.exp(log_normalization(a, b, T, nu, S, hbar) + engine.log_scale))

    def run(c):
        w = scale * engine.weights(_chunk_rng(rng_seed, c), min(CHUNK, n_samples - starts[c]))
        return w.sum(), np.sum(w.real ** 2), np.sum(w.imag ** 2)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, range(len(starts))))
    else:
        parts = [run(c) for c in range(len(starts))]
    tot, sre, sim = 0j, 0.0, 0.0
    for z, r2, i2 in parts:
        tot += z
        sre += r2
        sim += i2
    n = n_samples
    mean = tot / n
    dof = max(n - 1, 1)
    var_re = max(sre - n * mean.real ** 2, 0.0) / dof
    var_im = max(sim - n * mean.imag ** 2, 0.0) / dof
    value = complex(mean)
    se = (float(np.sqrt(var_re / n)), float(np.sqrt(var_im / n)))
    est = MCEstimate(value, se, n, int(rng_seed), sampler,
                     {"T": T, "nu": nu, "N": N, "hbar": hbar, "start": [a.p, a.q], "end": [b.p, b.q]})
    if abs(value) > 0 and est.abs_error / abs(value) > 0.5:
        warnings.warn(PrecisionWarning(f"relative standard error {est.abs_error / abs(value):.2f} exceeds 0.5"),
                      stacklevel=2)
    return est


# ---------------------------------------------------------------- Wiener branch: transfer matrix

def wiener_lattice_propagator(h: PolySymbol, start, end, T: float, nu: float = 50.0, N: int | None = None,
                              grid: tuple[float, int] = (6.0, 128), hbar: float = 1.0) -> complex:
    """Deterministic evaluation of the same discretized integral on a phase-space grid.

    One step multiplies by the heat kernel of variance s = nu eps in p and in
    q times ``exp(i (p q' - q p') / (2 hbar))``; every node carries
    ``exp(-i eps h / hbar)``, halved at the two pinned ends (trapezoid split
    of the h integral).  Trapezoid weights on [-L, L]^2.
    """
    a, b = as_point(start), as_point(end)
    N = default_N(T) if N is None else N
    S = N + 1
    if S < 3:
        raise ValueError("need at least two interior nodes")
    eps = T / S
    s = nu * eps
    L, n = grid
    margin = 4 * np.sqrt(min(nu * T, hbar))
    if max(abs(a.p), abs(a.q), abs(b.p), abs(b.q)) > L - margin:
        raise DomainError(f"endpoints must lie at least {margin:.3g} inside the grid edge L = {L}")
    x = np.linspace(-L, L, n)
    dx = x[1] - x[0]
    if np.sqrt(s) < dx:
        raise DomainError(f"grid step {dx:.3g} exceeds the one-step diffusion width {np.sqrt(s):.3g}")
    w = np.full(n, dx)
    w[0] *= 0.5
    w[-1] *= 0.5

    def G(d):
        return np.exp(-d ** 2 / (2 * s)) / np.sqrt(2 * np.pi * s)

    P, Qg = np.meshgrid(x, x, indexing="ij")
    hv = lambda p, q: np.real(h.evaluate(p, q)) if not h.is_zero() else 0.0 * np.asarray(p)
    ph = np.exp(-1j * eps * hv(P, Qg) / hbar)
    f = G(P - a.p) * G(Qg - a.q) * np.exp(1j / (2 * hbar) * (a.p * Qg - a.q * P))
    f = f * np.exp(-0.5j * eps * hv(a.p, a.q) / hbar)
    Gm = G(x[:, None] - x[None, :]) * w[None, :]
    E = np.exp(1j / (2 * hbar) * x[:, None] * x[None, :])
    Mq = Gm[:, None, :] * np.conj(E).T[None, :, :]
    for _ in range(S - 2):
        f = f * ph
        # p-sweep then q-sweep of the separable step kernel
        g = np.matmul(Gm[None, :, :], E.T[:, :, None] * f[None, :, :])
        f = (Mq * g).sum(-1).T
    f = f * ph
    last = G(b.p - P) * G(b.q - Qg) * np.exp(1j / (2 * hbar) * (P * b.q - Qg * b.p))
    last = last * np.exp(-0.5j * eps * hv(b.p, b.q) / hbar)
    val = np.sum(w[:, None] * w[None, :] * last * f)
    return complex(2 * np.pi * hbar * np.exp(S * np.log1p(s / (2 * hbar))) * val)


# ---------------------------------------------------------------- convergence study

CSV_COLUMNS = ["nu", "N", "n_samples", "re", "im", "std_err_re", "std_err_im", "oracle_re", "oracle_im"]


def convergence_study(h: PolySymbol, start, end, T: float, nus, Ns, n_samples: int = 200_000,
                      rng_seed: int = 0, hbar: float = 1.0, D: int = 60, sampler: str = "auto",
                      workers: int = 1) -> list[dict]:
    oracle = exact_propagator(h, start, end, T, D, hbar)
    rows = []
    for nu in nus:
        for N in Ns:
            est = wiener_mc_propagator(h, start, end, T, nu, N, n_samples, rng_seed, hbar, sampler, workers)
            rows.append({"nu": nu, "N": N, "n_samples": n_samples, "re": est.value.real, "im": est.value.imag,
                         "std_err_re": est.std_error[0], "std_err_im": est.std_error[1],
                         "oracle_re": oracle.real, "oracle_im": oracle.imag})
    return rows


def rows_to_csv(rows: list[dict], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()
