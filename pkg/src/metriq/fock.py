"""Truncated Fock-space operator calculus.

Everything in the package is checked against the dense linear algebra here.
Conventions: ``A|n> = sqrt(n)|n-1>``, ``Q = sqrt(hbar/2)(A + A^dag)``,
``P = -i sqrt(hbar/2)(A - A^dag)``, so that ``Q + iP = sqrt(2 hbar) A`` kills
the number ground state exactly.

The canonical commutator fails on the top basis state of any truncation, so
infinite-dimensional identities are only asserted on the leading block; see
:func:`trust_dim`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-12


class DimensionError(ValueError):
    pass


class ContractError(ValueError):
    """Mixed dimensions or hbar, or a Hermitian-only routine given a non-Hermitian input."""


class NumericError(ArithmeticError):
    pass


def _check_dim(D: int) -> int:
    if int(D) != D or D < 2:
        raise DimensionError(f"dimension must be an integer >= 2, got {D!r}")
    return int(D)


def _check_hbar(hbar: float) -> float:
    if not np.isfinite(hbar) or hbar <= 0:
        raise ValueError(f"hbar must be positive and finite, got {hbar!r}")
    return float(hbar)


def trust_dim(D: int, margin: int | None = None) -> int:
    """Leading block on which truncated identities are trusted (default ``D - D//4``)."""
    margin = D // 4 if margin is None else margin
    return max(1, D - margin)


@dataclass(frozen=True, eq=False)
class FockOperator:
    matrix: np.ndarray
    hbar: float = 1.0
    hermitian: bool = False

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got shape {m.shape}")
        _check_dim(m.shape[0])
        _check_hbar(self.hbar)
        if self.hermitian and np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
            raise ContractError("operator flagged Hermitian but M - M^dag is not negligible")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def H(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.hbar, self.hermitian)

    def _compatible(self, other: "FockOperator"):
        if not isinstance(other, FockOperator):
            return
        if other.dim != self.dim:
            raise ContractError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if other.hbar != self.hbar:
            raise ContractError(f"hbar mismatch: {self.hbar} vs {other.hbar}")

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            if other.dim != self.dim:
                raise ContractError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return StateVector(self.matrix @ other.entries)
        self._compatible(other)
        return FockOperator(self.matrix @ other.matrix, self.hbar)

    def __add__(self, other):
        if np.isscalar(other):
            return FockOperator(self.matrix + other * np.eye(self.dim), self.hbar,
                                self.hermitian and np.imag(other) == 0)
        self._compatible(other)
        return FockOperator(self.matrix + other.matrix, self.hbar,
                            self.hermitian and other.hermitian)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return FockOperator(-self.matrix, self.hbar, self.hermitian)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            raise TypeError("use @ for operator products")
        return FockOperator(scalar * self.matrix, self.hbar,
                            self.hermitian and np.imag(scalar) == 0)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __pow__(self, n: int):
        return FockOperator(np.linalg.matrix_power(self.matrix, n), self.hbar, self.hermitian)

    def hermitian_part(self) -> "FockOperator":
        m = 0.5 * (self.matrix + self.matrix.conj().T)
        return FockOperator(m, self.hbar, True)

    def as_hermitian(self, tol: float = 1e-10) -> "FockOperator":
        """Flag as Hermitian after checking ``||M - M^dag||_max <= tol``."""
        dev = np.max(np.abs(self.matrix - self.matrix.conj().T))
        if dev > tol:
            raise ContractError(f"operator is not Hermitian (deviation {dev:.3e})")
        return self.hermitian_part()

    def block(self, k: int) -> np.ndarray:
        """Leading k x k block of the matrix."""
        return self.matrix[:k, :k]

    def expect(self, psi: "StateVector") -> complex:
        v = psi.entries
        return complex(np.vdot(v, self.matrix @ v))

    def to_dict(self) -> dict:
        flat = self.matrix.reshape(-1)
        return {"dim": self.dim, "hbar": self.hbar,
                "entries": [[float(z.real), float(z.imag)] for z in flat]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, hermitian: bool = False) -> "FockOperator":
        D = int(d["dim"])
        e = np.asarray(d["entries"], dtype=float)
        if e.shape != (D * D, 2):
            raise DimensionError(f"expected {D * D} [re, im] pairs, got shape {e.shape}")
        return cls((e[:, 0] + 1j * e[:, 1]).reshape(D, D), float(d["hbar"]), hermitian)

    @classmethod
    def from_json(cls, text: str, hermitian: bool = False) -> "FockOperator":
        return cls.from_dict(json.loads(text), hermitian)


@dataclass(frozen=True, eq=False)
class StateVector:
    entries: np.ndarray
    normalized: bool = field(default=False)

    def __post_init__(self):
        v = np.array(self.entries, dtype=complex).reshape(-1)
        _check_dim(v.shape[0])
        if not np.all(np.isfinite(v)):
            raise NumericError("state vector has non-finite entries")
        if self.normalized and abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ContractError(f"vector flagged normalized has norm {np.linalg.norm(v)!r}")
        v.setflags(write=False)
        object.__setattr__(self, "entries", v)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise NumericError("cannot normalize the zero vector")
        return StateVector(self.entries / n, normalized=True)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.dim != self.dim:
            raise ContractError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.entries, other.entries))

    def tail_weight(self, k: int) -> float:
        """Probability carried by basis states with index >= k."""
        return float(np.sum(np.abs(self.entries[k:]) ** 2))

    @classmethod
    def number(cls, n: int, D: int) -> "StateVector":
        D = _check_dim(D)
        if not 0 <= n < D:
            raise DimensionError(f"number state {n} outside truncation {D}")
        v = np.zeros(D, dtype=complex)
        v[n] = 1.0
        return cls(v, normalized=True)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "entries": [[float(z.real), float(z.imag)] for z in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "StateVector":
        e = np.asarray(d["entries"], dtype=float)
        if e.ndim != 2 or e.shape[1] != 2 or e.shape[0] != int(d["dim"]):
            raise DimensionError(f"malformed state entries, shape {e.shape}")
        return cls(e[:, 0] + 1j * e[:, 1])

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        return cls.from_dict(json.loads(text))


def ladder_matrices(D: int) -> tuple[np.ndarray, np.ndarray]:
    D = _check_dim(D)
    a = np.diag(np.sqrt(np.arange(1, D, dtype=float)), k=1).astype(complex)
    return a, a.conj().T


def build_ladder(D: int, hbar: float = 1.0) -> tuple[FockOperator, FockOperator]:
    a, adag = ladder_matrices(D)
    return FockOperator(a, hbar), FockOperator(adag, hbar)


def build_canonical(D: int, hbar: float = 1.0) -> tuple[FockOperator, FockOperator]:
    hbar = _check_hbar(hbar)
    a, adag = ladder_matrices(D)
    c = np.sqrt(hbar / 2)
    Q = FockOperator(c * (a + adag), hbar, hermitian=True)
    P = FockOperator(-1j * c * (a - adag), hbar, hermitian=True)
    return Q, P


def number_operator(D: int, hbar: float = 1.0) -> FockOperator:
    return FockOperator(np.diag(np.arange(D, dtype=float)), hbar, hermitian=True)


def identity(D: int, hbar: float = 1.0) -> FockOperator:
    return FockOperator(np.eye(_check_dim(D)), hbar, hermitian=True)


def commutator(X: FockOperator, Y: FockOperator) -> FockOperator:
    return X @ Y - Y @ X


def _as_matrix(M) -> tuple[np.ndarray, float]:
    if isinstance(M, FockOperator):
        return M.matrix, M.hbar
    return np.asarray(M, dtype=complex), 1.0


def expm_matrix(m: np.ndarray) -> np.ndarray:
    """Exponential of a square complex matrix.

    Hermitian and anti-Hermitian inputs go through ``eigh``; everything else
    through scipy's scaling-and-squaring Pade routine.
    """
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix exponential of non-finite input")
    scale = max(1.0, np.max(np.abs(m)))
    herm_dev = np.max(np.abs(m - m.conj().T))
    anti_dev = np.max(np.abs(m + m.conj().T))
    if herm_dev <= 1e-14 * scale:
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
        return (v * np.exp(w)) @ v.conj().T
    if anti_dev <= 1e-14 * scale:
        # m = iK with K Hermitian
        k = -0.5j * (m - m.conj().T)
        w, v = np.linalg.eigh(k)
        return (v * np.exp(1j * w)) @ v.conj().T
    return scipy.linalg.expm(m)


def expm(M: FockOperator) -> FockOperator:
    return FockOperator(expm_matrix(M.matrix), M.hbar)


def eigh(H: FockOperator) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian operator."""
    if not H.hermitian:
        raise ContractError("eigh requires a Hermitian-flagged operator")
    w, v = np.linalg.eigh(H.matrix)
    return w, v


def propagator(H: FockOperator, T: float) -> FockOperator:
    """``exp(-i H T / hbar)``."""
    if not H.hermitian:
        raise ContractError("time evolution requires a Hermitian Hamiltonian")
    w, v = np.linalg.eigh(H.matrix)
    return FockOperator((v * np.exp(-1j * w * T / H.hbar)) @ v.conj().T, H.hbar)


def schrodinger_evolve(psi0: StateVector, H: FockOperator, T: float) -> StateVector:
    if psi0.dim != H.dim:
        raise ContractError(f"dimension mismatch: state {psi0.dim} vs operator {H.dim}")
    return propagator(H, T) @ psi0


def heisenberg_evolve(X0: FockOperator, H: FockOperator, T: float) -> FockOperator:
    """``exp(iHT/hbar) X0 exp(-iHT/hbar)``."""
    if X0.dim != H.dim:
        raise ContractError(f"dimension mismatch: {X0.dim} vs {H.dim}")
    U = propagator(H, T)
    X = FockOperator(U.matrix.conj().T @ X0.matrix @ U.matrix, H.hbar)
    return X.hermitian_part() if X0.hermitian else X
