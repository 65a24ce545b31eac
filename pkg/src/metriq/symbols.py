"""Polynomial phase-space symbols.

A :class:`PolySymbol` stores ``sum c_ab p^a q^b`` as a dict keyed by ``(a, b)``
(power of p first).  The text grammar accepted by :func:`parse_symbol` is a
signed sum of terms such as ``"2.5 p^2 q^1 + q^4 - 0.5"``; exponents default
to 1, coefficients default to 1, and whitespace is ignored.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

Monomial = tuple[int, int]


class SymbolParseError(ValueError):
    """Raised when symbol text cannot be parsed; ``position`` is a 0-based column."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _clean(terms: Mapping[Monomial, complex], tol: float = 0.0) -> dict[Monomial, complex]:
    out = {}
    for (a, b), c in terms.items():
        if a < 0 or b < 0:
            raise ValueError(f"negative exponent in monomial {(a, b)}")
        c = complex(c)
        if not np.isfinite(c):
            raise ValueError(f"non-finite coefficient for monomial {(a, b)}")
        if abs(c) > tol:
            out[(int(a), int(b))] = c
    return out


@dataclass(frozen=True)
class PolySymbol:
    terms: dict[Monomial, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", _clean(self.terms))

    @classmethod
    def constant(cls, c: complex) -> "PolySymbol":
        return cls({(0, 0): c})

    @classmethod
    def p(cls) -> "PolySymbol":
        return cls({(1, 0): 1.0})

    @classmethod
    def q(cls) -> "PolySymbol":
        return cls({(0, 1): 1.0})

    @classmethod
    def monomial(cls, a: int, b: int, c: complex = 1.0) -> "PolySymbol":
        return cls({(a, b): c})

    @classmethod
    def parse(cls, text: str) -> "PolySymbol":
        return parse_symbol(text)

    @property
    def max_degree(self) -> int:
        return max((a + b for a, b in self.terms), default=0)

    def degree_in(self, variable: str) -> int:
        idx = {"p": 0, "q": 1}[variable]
        return max((m[idx] for m in self.terms), default=0)

    @property
    def is_real(self) -> bool:
        return all(abs(c.imag) <= 1e-14 * max(1.0, abs(c)) for c in self.terms.values())

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def is_separable(self) -> bool:
        """True when the symbol splits as T(p) + V(q) (no mixed monomials)."""
        return all(a == 0 or b == 0 for a, b in self.terms)

    def split_separable(self) -> tuple["PolySymbol", "PolySymbol"]:
        if not self.is_separable():
            raise ValueError("symbol has mixed p-q monomials")
        kinetic = {m: c for m, c in self.terms.items() if m[0] > 0}
        potential = {m: c for m, c in self.terms.items() if m[0] == 0}
        return PolySymbol(kinetic), PolySymbol(potential)

    def __call__(self, p, q):
        return self.evaluate(p, q)

    def evaluate(self, p, q):
        """Vectorized evaluation; p and q may be real or complex arrays."""
        p = np.asarray(p)
        q = np.asarray(q)
        out = np.zeros(np.broadcast(p, q).shape, dtype=complex)
        for (a, b), c in self.terms.items():
            out = out + c * p**a * q**b
        if self.is_real and not (np.iscomplexobj(p) or np.iscomplexobj(q)):
            return out.real
        return out

    def diff(self, variable: str) -> "PolySymbol":
        out: dict[Monomial, complex] = {}
        for (a, b), c in self.terms.items():
            if variable == "p" and a > 0:
                out[(a - 1, b)] = out.get((a - 1, b), 0) + a * c
            elif variable == "q" and b > 0:
                out[(a, b - 1)] = out.get((a, b - 1), 0) + b * c
        return PolySymbol(out)

    def conj(self) -> "PolySymbol":
        return PolySymbol({m: c.conjugate() for m, c in self.terms.items()})

    def __add__(self, other):
        other = _as_symbol(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return PolySymbol(out)

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_symbol(other))

    def __rsub__(self, other):
        return _as_symbol(other) - self

    def __mul__(self, other):
        other = _as_symbol(other)
        out: dict[Monomial, complex] = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (a1 + a2, b1 + b2)
                out[key] = out.get(key, 0) + c1 * c2
        return PolySymbol(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = PolySymbol.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return (self - _as_symbol(other)).is_zero(atol)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = ""
        for (a, b), c in sorted(self.terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), kv[0])):
            factors = ([f"p^{a}"] if a else []) + ([f"q^{b}"] if b else [])
            if abs(c.imag) <= 1e-15:
                sign, num = ("-", repr(-c.real)) if c.real < 0 else ("+", repr(c.real))
            else:
                sign, num = "+", str(c)
            term = " ".join([num] + factors)
            out = (f"-{term}" if sign == "-" else term) if not out else f"{out} {sign} {term}"
        return out


def _as_symbol(x) -> PolySymbol:
    if isinstance(x, PolySymbol):
        return x
    if np.isscalar(x):
        return PolySymbol.constant(x)
    raise TypeError(f"cannot combine PolySymbol with {type(x).__name__}")


_NUMBER = re.compile(r"(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)")
_FACTOR = re.compile(r"([pq])(?:\^(\d+))?")


def parse_symbol(text: str) -> PolySymbol:
    """Parse ``"2.5 p^2 q^1 + 1 q^4 - 0.5"`` style text into a PolySymbol."""
    src = text.replace("−", "-")
    # strip whitespace but remember original columns for error reporting
    chars = [(i, ch) for i, ch in enumerate(src) if not ch.isspace()]
    s = "".join(ch for _, ch in chars)
    cols = [i for i, _ in chars] + [len(src)]
    if not s:
        raise SymbolParseError("empty symbol", 0)

    terms: dict[Monomial, complex] = {}
    pos = 0
    first = True
    while pos < len(s):
        sign = 1.0
        if s[pos] in "+-":
            sign = -1.0 if s[pos] == "-" else 1.0
            pos += 1
        elif not first:
            raise SymbolParseError(f"expected '+' or '-', found {s[pos]!r}", cols[pos])
        first = False
        start = pos
        coef = 1.0
        m = _NUMBER.match(s, pos)
        if m:
            coef = float(m.group(1))
            pos = m.end()
            if pos < len(s) and s[pos] == "*":
                pos += 1
        a = b = 0
        seen = False
        while pos < len(s):
            f = _FACTOR.match(s, pos)
            if not f:
                break
            exp = int(f.group(2)) if f.group(2) is not None else 1
            if f.group(1) == "p":
                a += exp
            else:
                b += exp
            seen = True
            pos = f.end()
            if pos < len(s) and s[pos] == "*":
                pos += 1
        if not m and not seen:
            where = cols[pos] if pos < len(s) else len(src)
            found = repr(s[pos]) if pos < len(s) else "end of input"
            raise SymbolParseError(f"expected a number or p/q factor, found {found}", where)
        if pos < len(s) and s[pos] not in "+-":
            raise SymbolParseError(f"unexpected character {s[pos]!r}", cols[pos])
        if pos == start:
            raise SymbolParseError("empty term", cols[start])
        terms[(a, b)] = terms.get((a, b), 0) + sign * coef
    return PolySymbol(terms)
