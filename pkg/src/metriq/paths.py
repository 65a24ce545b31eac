"""Time-discretized phase-space paths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class PhasePath:
    """Discretized path with uniform step ``eps``.

    ``paired``: p and q both hold nodes 0..N+1 with both ends pinned.
    ``lattice``: p holds the N+1 half-step momenta, q the N+2 positions.
    """
    eps: float
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        q = np.array(self.q, dtype=float)
        if p.ndim != 1 or q.ndim != 1 or q.size < 2:
            raise ValueError("path needs 1-D arrays with at least two positions")
        if p.size not in (q.size, q.size - 1):
            raise ValueError(f"p has {p.size} entries, q has {q.size}: neither paired nor lattice layout")
        if not (self.eps > 0 and np.isfinite(self.eps)):
            raise ValueError(f"eps must be positive, got {self.eps!r}")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("path has non-finite entries")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "eps", float(self.eps))

    @classmethod
    def from_nodes(cls, p, q, T: float) -> "PhasePath":
        q = np.asarray(q, dtype=float)
        return cls(T / (q.size - 1), p, q)

    @property
    def kind(self) -> str:
        return "paired" if self.p.size == self.q.size else "lattice"

    @property
    def N(self) -> int:
        """Number of interior nodes."""
        return self.q.size - 2

    @property
    def T(self) -> float:
        return self.eps * (self.N + 1)

    @property
    def times(self) -> np.ndarray:
        return self.eps * np.arange(self.q.size)
