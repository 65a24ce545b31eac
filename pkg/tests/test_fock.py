import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metriq.fock import (ContractError, DimensionError, FockOperator, StateVector, build_canonical,
                         build_ladder, commutator, eigh, expm, heisenberg_evolve, identity,
                         ladder_matrices, number_operator, propagator, schrodinger_evolve, trust_dim)


def test_ladder_smallest():
    a, _ = ladder_matrices(2)
    assert np.array_equal(a, np.array([[0, 1], [0, 0]], dtype=complex))


def test_number_operator_from_ladder():
    A, Ad = build_ladder(5)
    assert np.allclose((Ad @ A).matrix, np.diag(np.arange(5.0)), atol=1e-14)


def test_ladder_commutator_d40():
    A, Ad = build_ladder(40)
    C = commutator(A, Ad).matrix
    assert np.max(np.abs(C[:39, :39] - np.eye(39))) <= 1e-12


def test_fiducial_annihilated_exactly():
    Q, P = build_canonical(40)
    v = (Q + 1j * P).matrix @ StateVector.number(0, 40).entries
    assert np.all(v == 0)


@pytest.mark.parametrize("D", [10, 20, 40])
@pytest.mark.parametrize("hbar", [1.0, 0.5])
def test_truncated_commutator(D, hbar):
    Q, P = build_canonical(D, hbar)
    C = commutator(Q, P).matrix
    assert np.max(np.abs(C[:D - 1, :D - 1] - 1j * hbar * np.eye(D - 1))) <= 1e-10
    # the corner entry is the truncation artifact
    assert abs(C[D - 1, D - 1] - 1j * hbar) > 1


def test_ground_q_variance():
    Q, _ = build_canonical(40, 0.5)
    e0 = StateVector.number(0, 40)
    assert abs((Q @ Q).expect(e0) - 0.25) < 1e-14


def test_expm_trivial():
    D = 6
    assert np.allclose(expm(FockOperator(np.zeros((D, D)))).matrix, np.eye(D), atol=1e-15)
    th = np.linspace(0, 3, D)
    U = expm(FockOperator(np.diag(1j * th))).matrix
    assert np.allclose(U, np.diag(np.exp(1j * th)), atol=1e-14)


def test_expm_general_matches_series():
    rng = np.random.default_rng(3)
    M = 0.3 * (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
    ref = np.eye(5, dtype=complex)
    term = np.eye(5, dtype=complex)
    for k in range(1, 40):
        term = term @ M / k
        ref = ref + term
    assert np.max(np.abs(expm(FockOperator(M)).matrix - ref)) < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=30), st.integers(min_value=0, max_value=2**32 - 1),
       st.floats(min_value=0.1, max_value=50.0))
def test_expm_unitary(D, seed, scale):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    K = scale * (X - X.conj().T) / 2
    U = expm(FockOperator(K)).matrix
    assert np.max(np.abs(U.conj().T @ U - np.eye(D))) <= 1e-11


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=40), st.integers(min_value=0, max_value=2**32 - 1))
def test_spectral_reconstruction(D, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    H = X + X.conj().T
    H = H * (1e3 / np.linalg.norm(H, 2))
    w, V = eigh(FockOperator(H, hermitian=True))
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(V @ np.diag(w) @ V.conj().T - H)) <= 1e-9
    assert np.max(np.abs(V.conj().T @ V - np.eye(D))) <= 1e-12


def test_eigh_examples():
    A, Ad = build_ladder(10)
    w, _ = eigh((Ad @ A).as_hermitian())
    assert np.allclose(w, np.arange(10), atol=1e-12)
    w, _ = eigh(identity(7))
    assert np.allclose(w, 1.0, atol=1e-15)
    Q, P = build_canonical(60)
    w, _ = eigh(Q ** 2 + P ** 2)
    assert np.max(np.abs(w[:10] - (2 * np.arange(10) + 1))) <= 1e-8


def test_eigh_needs_hermitian_flag():
    with pytest.raises(ContractError):
        eigh(FockOperator(np.eye(3)))


def test_schrodinger_trivial_and_eigenstate():
    Q, P = build_canonical(40)
    H = Q ** 2 + P ** 2
    psi = StateVector.number(0, 40)
    assert np.allclose(schrodinger_evolve(psi, H, 0.0).entries, psi.entries, atol=0)
    for T in (0.3, 2.0, 11.0):
        out = schrodinger_evolve(psi, H, T)
        assert abs(abs(psi.inner(out)) - 1) <= 1e-10
        assert abs(psi.inner(out) - np.exp(-1j * T)) <= 1e-10


def test_ehrenfest_quadratic():
    from metriq.coherent import CoherentFamily, coherent_state
    D = 80
    fam = CoherentFamily.ground(D)
    Q, P = fam.QP
    H = (Q ** 2 + P ** 2) * 0.5
    for p0, q0 in [(0.0, 2.0), (1.5, -1.0), (-2.0, 2.0)]:
        psi0 = coherent_state(fam, (p0, q0))
        for t in (0.5, 1.7, 4.0):
            qt = Q.expect(schrodinger_evolve(psi0, H, t)).real
            assert abs(qt - (q0 * np.cos(t) + p0 * np.sin(t))) <= 1e-6


def test_heisenberg_examples():
    D = 40
    Q, P = build_canonical(D)
    H = (Q ** 2 + P ** 2) * 0.5
    N = number_operator(D)
    assert np.max(np.abs(heisenberg_evolve(N, N, 1.3).matrix - N.matrix)) <= 1e-10
    assert np.max(np.abs(heisenberg_evolve(Q, H, 0.0).matrix - Q.matrix)) <= 1e-14
    T = 0.9
    QT = heisenberg_evolve(Q, H, T).matrix
    ref = Q.matrix * np.cos(T) + P.matrix * np.sin(T)
    k = trust_dim(D)
    assert np.max(np.abs(QT[:k, :k] - ref[:k, :k])) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(min_value=-5, max_value=5))
def test_evolution_pictures_agree(seed, T):
    rng = np.random.default_rng(seed)
    D = 12
    X = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    H = FockOperator(X + X.conj().T, hermitian=True)
    Y = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    X0 = FockOperator(Y + Y.conj().T, hermitian=True)
    psi = StateVector(rng.standard_normal(D) + 1j * rng.standard_normal(D)).normalize()
    lhs = X0.expect(schrodinger_evolve(psi, H, T))
    rhs = heisenberg_evolve(X0, H, T).expect(psi)
    assert abs(lhs - rhs) <= 1e-9


def test_propagator_unitary():
    Q, P = build_canonical(30)
    U = propagator(Q ** 4 + P ** 2, 0.7).matrix
    assert np.max(np.abs(U.conj().T @ U - np.eye(30))) < 1e-12


def test_mixing_dimensions_or_hbar_is_error():
    Q1, _ = build_canonical(10)
    Q2, _ = build_canonical(12)
    Q3, _ = build_canonical(10, 0.5)
    with pytest.raises(ContractError):
        Q1 @ Q2
    with pytest.raises(ContractError):
        Q1 + Q3


def test_bad_inputs():
    with pytest.raises(DimensionError):
        FockOperator(np.ones((2, 3)))
    with pytest.raises(ValueError):
        build_canonical(10, -1.0)
    with pytest.raises(ContractError):
        FockOperator(np.array([[0, 1], [0, 0]]), hermitian=True)


def test_json_roundtrip():
    Q, P = build_canonical(6, 0.3)
    X = Q @ P
    Y = FockOperator.from_json(X.to_json())
    assert Y.hbar == X.hbar and np.array_equal(Y.matrix, X.matrix)
    v = StateVector(np.arange(6) + 1j)
    assert np.array_equal(StateVector.from_json(v.to_json()).entries, v.entries)


def test_trust_dim():
    assert trust_dim(60) == 45
    assert trust_dim(40) == 30
    assert trust_dim(60, margin=10) == 50
