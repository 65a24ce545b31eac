import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metriq.classical import poisson_bracket
from metriq.quantizer import from_holomorphic_basis, to_holomorphic_basis
from metriq.symbols import PolySymbol, SymbolParseError, parse_symbol

p, q = PolySymbol.p(), PolySymbol.q()

coef = st.floats(min_value=-3, max_value=3, allow_nan=False).filter(lambda x: abs(x) > 1e-3)
symbols = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef,
                          min_size=1, max_size=5).map(PolySymbol)


def test_parse_basic():
    h = parse_symbol("2.5 p^2 q^1 + 1 q^4 - 0.5")
    assert h.terms == {(2, 1): 2.5, (0, 4): 1.0, (0, 0): -0.5}
    assert parse_symbol("p^2+q^2").terms == {(2, 0): 1, (0, 2): 1}
    assert parse_symbol("  -p q ").terms == {(1, 1): -1}
    assert parse_symbol("1").terms == {(0, 0): 1}
    assert parse_symbol("p^2 − q").terms == {(2, 0): 1, (0, 1): -1}
    assert parse_symbol("3e-1 q^2").terms == {(0, 2): 0.3}


@pytest.mark.parametrize("text,pos", [("p^2 + + q", 6), ("", 0), ("2 x", 2), ("p q^-1", 3)])
def test_parse_error_position(text, pos):
    with pytest.raises(SymbolParseError) as err:
        parse_symbol(text)
    assert err.value.position == pos


def test_holomorphic_examples():
    assert to_holomorphic_basis(q) == {(1, 0): 0.5, (0, 1): 0.5}
    hp = to_holomorphic_basis(p)
    assert set(hp) == {(1, 0), (0, 1)}
    assert abs(hp[(1, 0)] - 1 / 2j) < 1e-15 and abs(hp[(0, 1)] + 1 / 2j) < 1e-15
    hh = to_holomorphic_basis(p * p + q * q)
    assert set(hh) == {(1, 1)} and abs(hh[(1, 1)] - 1) < 1e-15


@settings(max_examples=60, deadline=None)
@given(symbols)
def test_holomorphic_roundtrip(h):
    assert from_holomorphic_basis(to_holomorphic_basis(h)).allclose(h, 1e-12)


@settings(max_examples=60, deadline=None)
@given(symbols)
def test_real_symbol_conjugate_symmetric(h):
    c = to_holomorphic_basis(h)
    for (k, l), v in c.items():
        assert abs(v - np.conj(c.get((l, k), 0))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(symbols, st.floats(-2, 2), st.floats(-2, 2))
def test_text_roundtrip_and_evaluate(h, x, y):
    g = parse_symbol(str(h))
    assert g.allclose(h, 1e-12)
    ref = sum(c * x ** a * y ** b for (a, b), c in h.terms.items())
    assert abs(h.evaluate(x, y) - ref) < 1e-9


def test_algebra_and_diff():
    h = (p + q) ** 2
    assert h.terms == {(2, 0): 1, (1, 1): 2, (0, 2): 1}
    assert h.diff("p").allclose(2 * p + 2 * q)
    assert (p * q).diff("q").allclose(p)
    assert PolySymbol.constant(3).diff("p").is_zero()
    assert h.max_degree == 2 and h.degree_in("q") == 2


def test_separable_split():
    h = parse_symbol("p^2 + q^4 + 3")
    assert h.is_separable()
    T, V = h.split_separable()
    assert (T + V).allclose(h)
    assert not parse_symbol("p q").is_separable()


def test_bad_terms():
    with pytest.raises(ValueError):
        PolySymbol({(-1, 0): 1})
    with pytest.raises(ValueError):
        PolySymbol({(0, 0): np.inf})


def test_bracket_examples():
    assert poisson_bracket(q, p).allclose(1)
    H = parse_symbol("p^2 + q^2 + q^4")
    assert poisson_bracket(H, H).is_zero()
    A, B, C = p ** 2, q ** 3, p * q
    jac = (poisson_bracket(A, poisson_bracket(B, C)) + poisson_bracket(B, poisson_bracket(C, A))
           + poisson_bracket(C, poisson_bracket(A, B)))
    assert jac.is_zero()


small = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)).filter(lambda t: sum(t) <= 3),
                        coef, min_size=1, max_size=4).map(PolySymbol)


@settings(max_examples=50, deadline=None)
@given(small, small)
def test_bracket_antisymmetric(A, B):
    assert (poisson_bracket(B, A) + poisson_bracket(A, B)).is_zero(1e-12)


@settings(max_examples=50, deadline=None)
@given(small, small, small)
def test_bracket_leibniz(A, B, C):
    lhs = poisson_bracket(A * B, C)
    rhs = A * poisson_bracket(B, C) + poisson_bracket(A, C) * B
    assert lhs.allclose(rhs, 1e-9)


@settings(max_examples=30, deadline=None)
@given(small, small, small)
def test_bracket_jacobi(A, B, C):
    jac = (poisson_bracket(A, poisson_bracket(B, C)) + poisson_bracket(B, poisson_bracket(C, A))
           + poisson_bracket(C, poisson_bracket(A, B)))
    assert jac.is_zero(1e-9)
