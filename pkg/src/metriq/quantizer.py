"""Anti-normal (anti-Wick) quantization of polynomial symbols.

Two independent routes to the same operator:

* the ordering rule, ``(q+ip)^k (q-ip)^l -> (Q+iP)^k (Q-iP)^l``;
* the projector integral ``int h(p,q) |p,q><p,q| dp dq / (2 pi hbar)`` over
  ground-state coherent states, evaluated by midpoint quadrature.
"""
from __future__ import annotations

import warnings
from math import comb

import numpy as np

from .coherent import (CoherentFamily, TruncationWarning, as_point, coherent_state,
                       midpoint_grid, projector_integral)
from .fock import ContractError, FockOperator, ladder_matrices, trust_dim
from .symbols import PolySymbol

Holo = dict[tuple[int, int], complex]


def to_holomorphic_basis(h: PolySymbol) -> Holo:
    """Rewrite ``sum c p^a q^b`` as ``sum d_kl w^k wbar^l`` with ``w = q + ip``.

    Uses ``q = (w + wbar)/2`` and ``p = (w - wbar)/(2i)``.
    """
    out: Holo = {}
    for (a, b), c in h.terms.items():
        # p^a = (2i)^-a sum_j C(a,j) w^j (-wbar)^(a-j);  q^b = 2^-b sum_i C(b,i) w^i wbar^(b-i)
        pref = c / ((2j) ** a * 2 ** b)
        for j in range(a + 1):
            cj = comb(a, j) * (-1) ** (a - j)
            for i in range(b + 1):
                key = (j + i, (a - j) + (b - i))
                out[key] = out.get(key, 0) + pref * cj * comb(b, i)
    return {k: v for k, v in out.items() if v != 0}


def from_holomorphic_basis(coeffs: Holo) -> PolySymbol:
    w = PolySymbol({(0, 1): 1.0, (1, 0): 1j})
    wbar = PolySymbol({(0, 1): 1.0, (1, 0): -1j})
    out = PolySymbol()
    for (k, l), c in coeffs.items():
        out = out + c * (w ** k) * (wbar ** l)
    return out


def antinormal_quantize_rule(h: PolySymbol, D: int, hbar: float = 1.0,
                             check_degree: bool = True) -> FockOperator:
    """``sum d_kl (Q+iP)^k (Q-iP)^l`` with the (Q+iP) factors on the left.

    Products are formed in a basis padded by the symbol degree and then cut
    back to D, so the result is the exact compression of the
    infinite-dimensional operator onto the first D number states.
    """
    if check_degree and h.max_degree > D // 4:
        raise ContractError(f"degree {h.max_degree} too high for D={D} (limit D/4 = {D // 4})")
    coeffs = to_holomorphic_basis(h)
    pad = D + h.max_degree
    a, adag = ladder_matrices(pad)
    s = np.sqrt(2 * hbar)
    kmax = max((k for k, _ in coeffs), default=0)
    lmax = max((l for _, l in coeffs), default=0)
    apow = [np.eye(pad, dtype=complex)]
    for _ in range(kmax):
        apow.append(apow[-1] @ a)
    cpow = [np.eye(pad, dtype=complex)]
    for _ in range(lmax):
        cpow.append(cpow[-1] @ adag)
    M = np.zeros((pad, pad), dtype=complex)
    for (k, l), c in coeffs.items():
        M += c * s ** (k + l) * (apow[k] @ cpow[l])
    M = M[:D, :D]
    if h.is_real:
        nt = trust_dim(D)
        dev = np.max(np.abs(M[:nt, :nt] - M[:nt, :nt].conj().T)) if nt else 0.0
        if dev > 1e-10 * max(1.0, np.max(np.abs(M))):
            raise ContractError(f"real symbol produced a non-Hermitian operator ({dev:.2e})")
        return FockOperator(0.5 * (M + M.conj().T), hbar, hermitian=True)
    return FockOperator(M, hbar)


def default_L(h: PolySymbol, hbar: float) -> float:
    return 8 * np.sqrt(hbar) + h.max_degree * np.sqrt(hbar)


def tail_safe_L(h: PolySymbol, family: CoherentFamily, n_check: int, tol: float = 1e-8) -> float:
    """Smallest L (on a sqrt(hbar)/2 ladder, starting at :func:`default_L`) with tail estimate <= tol."""
    L = default_L(h, family.hbar)
    while _tail_estimate(h, family, L, n_check) > tol:
        L += 0.5 * np.sqrt(family.hbar)
    return L


def _tail_estimate(h: PolySymbol, family: CoherentFamily, L: float, n_check: int) -> float:
    """Rough bound of the integrand beyond |p| or |q| = L for the first n_check states."""
    hb = family.hbar
    r2 = L * L / (2 * hb)
    k = max(n_check - 1, 0)
    # |<k|alpha>|^2 on the boundary times symbol growth there, integrated over a
    # boundary layer of width hbar/L along the perimeter 8L, over 2 pi hbar
    logw = -r2 + k * np.log(max(r2, 1e-300)) - np.sum(np.log(np.arange(1, k + 1)))
    grow = sum(abs(c) * L ** (a + b) for (a, b), c in h.terms.items())
    return float(np.exp(logw) * max(grow, 1.0) * 4 / np.pi)


def antinormal_quantize_quadrature(h, family: CoherentFamily | None = None, L: float | None = None,
                                   n_grid: int = 160, D: int | None = None, hbar: float = 1.0,
                                   n_check: int | None = None) -> FockOperator:
    """Projector-integral quantization on [-L, L]^2 with an n_grid x n_grid midpoint rule.

    ``h`` may be a PolySymbol or a vectorized callable ``h(p, q)``.  The
    fiducial is the number ground state.
    """
    if family is None:
        if D is None:
            raise ValueError("give either a coherent family or D")
        family = CoherentFamily.ground(D, hbar)
    if family.support != 1 or abs(family.fiducial.entries[0]) < 1 - 1e-12:
        raise ContractError("anti-normal quadrature requires the ground-state fiducial")
    hb = family.hbar
    if isinstance(h, PolySymbol):
        n_check = trust_dim(family.dim) // 2 if n_check is None else n_check
        if L is None:
            L = tail_safe_L(h, family, n_check)
        tail = _tail_estimate(h, family, L, n_check)
        if tail > 1e-8:
            warnings.warn(TruncationWarning(f"quadrature tail beyond L={L} estimated at {tail:.1e}", tail),
                          stacklevel=2)
        weight = h.evaluate
    else:
        if L is None:
            L = 8 * np.sqrt(hb)
        weight = h
    x, step = midpoint_grid(L, n_grid)
    P, Qg = np.meshgrid(x, x, indexing="ij")
    M = projector_integral(family, weight, P, Qg, step * step)
    real = isinstance(h, PolySymbol) and h.is_real
    return FockOperator(0.5 * (M + M.conj().T), hb, hermitian=True) if real else FockOperator(M, hb)


def lower_symbol(H: FockOperator, family: CoherentFamily, pt) -> complex:
    """``<p,q|H|p,q>``."""
    pt = as_point(pt)
    psi = coherent_state(family, pt)
    return H.expect(psi)


def block_deviation(A: FockOperator, B: FockOperator, n: int, norm: str = "max") -> float:
    d = A.block(n) - B.block(n)
    if norm == "max":
        return float(np.max(np.abs(d)))
    if norm == "op":
        return float(np.linalg.norm(d, 2))
    raise ValueError(f"unknown norm {norm!r}")
