"""Classical Hamiltonian mechanics on polynomial symbols.

Bracket convention ``{A, B} = A_q B_p - A_p B_q``, so that ``{q, p} = 1`` and
``W' = {W, H}`` along the flow ``q' = H_p``, ``p' = -H_q``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .coherent import PhasePoint, as_point
from .paths import PhasePath
from .symbols import PolySymbol

# Yoshida's triple-jump weights for a fourth-order composition of Strang steps
_CBRT2 = 2.0 ** (1.0 / 3.0)
_YOSHIDA = (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2))


class IntegrationError(RuntimeError):
    pass


def poisson_bracket(A: PolySymbol, B: PolySymbol) -> PolySymbol:
    return A.diff("q") * B.diff("p") - A.diff("p") * B.diff("q")


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    p: np.ndarray
    q: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        for name in ("times", "p", "q", "energy"):
            a = np.array(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(a)):
                raise IntegrationError(f"trajectory {name} has non-finite entries")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.times.shape == self.p.shape == self.q.shape == self.energy.shape):
            raise ValueError("trajectory arrays must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be ascending")

    @property
    def points(self) -> list[PhasePoint]:
        return [PhasePoint(float(a), float(b)) for a, b in zip(self.p, self.q)]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "p", "q", "E"])
        for row in zip(self.times, self.p, self.q, self.energy):
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _strang(dTdp, dVdq, p, q, h):
    p = p - 0.5 * h * dVdq(q)
    q = q + h * dTdp(p)
    p = p - 0.5 * h * dVdq(q)
    return p, q


def _midpoint(Hp, Hq, p, q, h, tol=1e-14, max_iter=100):
    p1, q1 = p, q
    for _ in range(max_iter):
        pm, qm = 0.5 * (p + p1), 0.5 * (q + q1)
        p2 = p - h * Hq(pm, qm)
        q2 = q + h * Hp(pm, qm)
        if not (np.isfinite(p2) and np.isfinite(q2)):
            break
        done = abs(p2 - p1) + abs(q2 - q1) <= tol * (1.0 + abs(p2) + abs(q2))
        p1, q1 = p2, q2
        if done:
            return p1, q1
    raise IntegrationError(f"implicit midpoint iteration did not converge at (p, q) = ({p}, {q}), dt = {h}")


def hamilton_step(H: PolySymbol, order: int = 2):
    """One-step map ``(p, q, h) -> (p, q)`` for H.

    Separable symbols use Strang splitting (order 2) or its Yoshida
    composition (order 4); others use the implicit midpoint rule.
    """
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    if H.is_separable():
        T, V = H.split_separable()
        dT, dV = T.diff("p"), V.diff("q")
        dTdp = lambda p: np.real(dT.evaluate(p, 0.0))
        dVdq = lambda q: np.real(dV.evaluate(0.0, q))
        base = lambda p, q, h: _strang(dTdp, dVdq, p, q, h)
    else:
        Hp_s, Hq_s = H.diff("p"), H.diff("q")
        Hp = lambda p, q: float(np.real(Hp_s.evaluate(p, q)))
        Hq = lambda p, q: float(np.real(Hq_s.evaluate(p, q)))
        base = lambda p, q, h: _midpoint(Hp, Hq, p, q, h)
    if order == 2:
        return base

    def step4(p, q, h):
        for w in _YOSHIDA:
            p, q = base(p, q, w * h)
        return p, q
    return step4


def integrate_hamilton(H: PolySymbol, start, T: float, dt: float, order: int = 2) -> Trajectory:
    """Integrate Hamilton's equations from ``start`` over [0, T].

    The step is shrunk to ``T / ceil(T / dt)`` so the grid ends exactly at T.
    """
    if not H.is_real:
        raise ValueError("Hamiltonian symbol must be real")
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    start = as_point(start)
    n = int(np.ceil(T / dt - 1e-9))
    h = T / n
    step = hamilton_step(H, order)
    p = np.empty(n + 1)
    q = np.empty(n + 1)
    p[0], q[0] = start.p, start.q
    for k in range(n):
        p[k + 1], q[k + 1] = step(p[k], q[k], h)
        if not (np.isfinite(p[k + 1]) and np.isfinite(q[k + 1])):
            raise IntegrationError(f"trajectory blew up at step {k + 1}")
    times = h * np.arange(n + 1)
    return Trajectory(times, p, q, H.evaluate(p, q))


def step_jacobian(H: PolySymbol, pt, dt: float, order: int = 2, fd: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian d(p', q')/d(p, q) of one integrator step."""
    pt = as_point(pt)
    step = hamilton_step(H, order)
    J = np.empty((2, 2))
    for j, (dp, dq) in enumerate(((fd, 0.0), (0.0, fd))):
        a = np.array(step(pt.p + dp, pt.q + dq, dt))
        b = np.array(step(pt.p - dp, pt.q - dq, dt))
        J[:, j] = (a - b) / (2 * fd)
    return J


def _paired(path: PhasePath) -> PhasePath:
    if path.kind != "paired":
        raise ValueError("the action functional needs a path with paired p and q nodes")
    if path.q.size < 3:
        raise ValueError("path needs at least three nodes")
    return path


def evaluate_action(path: PhasePath, H: PolySymbol, G: PolySymbol | None = None) -> float:
    """Midpoint discretization of ``int (p q' + G' - H) dt``.

    The G term is summed as ``sum (G(x_{l+1}) - G(x_l))``, which telescopes.
    """
    path = _paired(path)
    p, q, eps = path.p, path.q, path.eps
    pm, qm = 0.5 * (p[1:] + p[:-1]), 0.5 * (q[1:] + q[:-1])
    I = np.sum(pm * np.diff(q)) - eps * np.sum(np.real(H.evaluate(pm, qm)))
    if G is not None:
        g = np.real(G.evaluate(p, q))
        I += np.sum(np.diff(g))
    return float(I)


def action_gradient(path: PhasePath, H: PolySymbol, G: PolySymbol | None = None) -> np.ndarray:
    """Gradient of :func:`evaluate_action` with respect to interior nodes, shape (N, 2) as (d/dp, d/dq)."""
    path = _paired(path)
    p, q, eps = path.p, path.q, path.eps
    pm, qm = 0.5 * (p[1:] + p[:-1]), 0.5 * (q[1:] + q[:-1])
    Hp = np.real(H.diff("p").evaluate(pm, qm))
    Hq = np.real(H.diff("q").evaluate(pm, qm))
    # step l depends on nodes l and l+1; accumulate per-step partials onto nodes
    n = p.size
    gp = np.zeros(n)
    gq = np.zeros(n)
    dq = np.diff(q)
    gp[:-1] += 0.5 * dq - 0.5 * eps * Hp
    gp[1:] += 0.5 * dq - 0.5 * eps * Hp
    gq[:-1] += -pm - 0.5 * eps * Hq
    gq[1:] += pm - 0.5 * eps * Hq
    if G is not None:
        Gp = np.real(G.diff("p").evaluate(p, q))
        Gq = np.real(G.diff("q").evaluate(p, q))
        gp[:-1] -= Gp[:-1]
        gp[1:] += Gp[1:]
        gq[:-1] -= Gq[:-1]
        gq[1:] += Gq[1:]
    return np.stack([gp[1:-1], gq[1:-1]], axis=1)


def bracket_evolution_check(W: PolySymbol, H: PolySymbol, traj: Trajectory) -> float:
    """Max |dW/dt - {W, H}| over interior trajectory nodes (central differences in t)."""
    if traj.times.size < 3:
        raise ValueError("need at least three trajectory nodes")
    w = np.real(W.evaluate(traj.p, traj.q))
    t = traj.times
    dwdt = (w[2:] - w[:-2]) / (t[2:] - t[:-2])
    br = np.real(poisson_bracket(W, H).evaluate(traj.p[1:-1], traj.q[1:-1]))
    return float(np.max(np.abs(dwdt - br)))
