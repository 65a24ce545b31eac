import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metriq.classical import (IntegrationError, Trajectory, action_gradient, bracket_evolution_check,
                              evaluate_action, integrate_hamilton, poisson_bracket, step_jacobian)
from metriq.paths import PhasePath
from metriq.symbols import parse_symbol

OSC = parse_symbol("0.5 p^2 + 0.5 q^2")
QUARTIC = parse_symbol("p^2 + q^2 + q^4")


def test_oscillator_returns():
    tr = integrate_hamilton(OSC, (0.0, 1.0), 2 * np.pi, 1e-3)
    assert abs(tr.p[-1]) <= 1e-6 and abs(tr.q[-1] - 1) <= 1e-6
    assert abs(tr.times[-1] - 2 * np.pi) < 1e-12


def test_free_flow_exact():
    tr = integrate_hamilton(parse_symbol("0.5 p^2"), (1.0, 0.0), 1.0, 1e-2)
    assert np.max(np.abs(tr.q - tr.times)) <= 1e-12
    assert np.all(tr.p == 1.0)


@pytest.mark.parametrize("order", [2, 4])
@pytest.mark.parametrize("H", [QUARTIC, parse_symbol("p^2 + p^2 q^2 + q^2")], ids=["separable", "mixed"])
def test_drift_order(order, H):
    T = 5.0
    d1 = integrate_hamilton(H, (0.3, 0.8), T, 0.02, order).energy_drift()
    d2 = integrate_hamilton(H, (0.3, 0.8), T, 0.01, order).energy_drift()
    r = d1 / d2
    assert 0.7 * 2 ** order <= r <= 1.3 * 2 ** order


def test_energy_drift_long_run():
    tr = integrate_hamilton(OSC, (0.0, 1.0), 100.0, 1e-2)
    assert tr.energy_drift() <= 1e-4 * tr.energy[0]


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([2, 4]), st.sampled_from(["sep", "mixed"]))
def test_step_symplectic(p, q, order, kind):
    H = QUARTIC if kind == "sep" else parse_symbol("p^2 + p^2 q^2 + q^2")
    J = step_jacobian(H, (p, q), 0.01, order)
    assert abs(np.linalg.det(J) - 1) <= 1e-8


def test_bracket_energy_order4():
    tr = integrate_hamilton(QUARTIC, (0.2, 0.9), 2.0, 1e-3, order=4)
    assert bracket_evolution_check(QUARTIC, QUARTIC, tr) <= 1e-8


def test_bracket_energy_order2_fails_tolerance():
    # the second-order integrator's energy error oscillates at O(dt^2): not enough for 1e-8
    tr = integrate_hamilton(QUARTIC, (0.2, 0.9), 2.0, 1e-3, order=2)
    assert bracket_evolution_check(QUARTIC, QUARTIC, tr) > 1e-8


def test_bracket_examples():
    tr = integrate_hamilton(OSC, (0.5, 1.0), 3.0, 1e-3)
    assert poisson_bracket(parse_symbol("q"), OSC).allclose(parse_symbol("p"))
    assert poisson_bracket(parse_symbol("p q"), OSC).allclose(parse_symbol("p^2 - q^2"))
    assert bracket_evolution_check(parse_symbol("q"), OSC, tr) <= 1e-6
    assert bracket_evolution_check(parse_symbol("p q"), OSC, tr) <= 1e-5


def test_action_constant_path():
    path = PhasePath(0.1, np.ones(5), np.ones(5))
    assert evaluate_action(path, parse_symbol("0"), None) == 0.0


def _true_path(dt=1e-3, T=2 * np.pi):
    n = int(round(T / dt))
    t = np.linspace(0, T, n + 1)
    return PhasePath(T / n, -np.sin(t), np.cos(t))


def test_action_stationary_on_solution():
    path = _true_path()
    g = action_gradient(path, OSC)
    assert np.max(np.abs(g)) <= 1e-6
    assert np.max(np.abs(g)) <= 1e-4 * path.eps ** 2


def test_action_gradient_gauge_independent():
    path = _true_path(dt=1e-2)
    g0 = action_gradient(path, OSC)
    g1 = action_gradient(path, OSC, parse_symbol("p q"))
    assert np.max(np.abs(g1 - g0)) <= 1e-12


def test_action_gauge_telescopes():
    rng = np.random.default_rng(0)
    path = PhasePath(0.05, rng.standard_normal(30), rng.standard_normal(30))
    G = parse_symbol("p q + q^3")
    dI = evaluate_action(path, OSC, G) - evaluate_action(path, OSC)
    ref = G.evaluate(path.p[-1], path.q[-1]) - G.evaluate(path.p[0], path.q[0])
    assert abs(dI - ref.real) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_action_gradient_matches_fd(seed):
    rng = np.random.default_rng(seed)
    n = 8
    p, q = rng.standard_normal(n), rng.standard_normal(n)
    H, G = QUARTIC, parse_symbol("p q^2")
    path = PhasePath(0.1, p, q)
    g = action_gradient(path, H, G)
    h = 1e-6
    for i in range(1, n - 1):
        for j, arr in enumerate((p, q)):
            up, dn = arr.copy(), arr.copy()
            up[i] += h
            dn[i] -= h
            pu = PhasePath(0.1, up, q) if j == 0 else PhasePath(0.1, p, up)
            pd = PhasePath(0.1, dn, q) if j == 0 else PhasePath(0.1, p, dn)
            fd = (evaluate_action(pu, H, G) - evaluate_action(pd, H, G)) / (2 * h)
            assert abs(fd - g[i - 1, j]) < 1e-6


def test_trajectory_csv(tmp_path):
    tr = integrate_hamilton(OSC, (0.0, 1.0), 0.05, 0.01)
    text = tr.to_csv(tmp_path / "t.csv")
    lines = text.splitlines()
    assert lines[0] == "t,p,q,E" and len(lines) == 7
    assert (tmp_path / "t.csv").read_text() == text
    assert float(lines[-1].split(",")[2]) == tr.q[-1]


def test_trajectory_validation():
    with pytest.raises(IntegrationError):
        Trajectory([0, 1], [0, np.nan], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        Trajectory([1, 0], [0, 0], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        integrate_hamilton(parse_symbol("p q"), (0, 0), 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_hamilton(OSC, (0, 0), 1.0, 0.1, order=3)


def test_blowup_raises():
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(IntegrationError):
        integrate_hamilton(parse_symbol("p^2 - q^6"), (0.0, 3.0), 10.0, 0.1)
