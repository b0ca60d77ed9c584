from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nlphase.algebra import (AlgebraError, HeisenbergFrame, QuadPoly, S, Symbol, bs_apply,
                             closed_form_relation, derive_final_relation, gaussian_correct,
                             measure_x, poisson_bracket, qnd_apply, residual,
                             substitute_ancilla_nonlinearity)

P = QuadPoly.sym

SYMS = [Symbol("x_in"), Symbol("p_in"), Symbol("x_A", 2), Symbol("q", 3), Symbol("z", 2),
        Symbol("t", 1), Symbol("chi", 3)]


@st.composite
def polys(draw, max_terms=4):
    out = QuadPoly()
    for _ in range(draw(st.integers(0, max_terms))):
        c = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
        term = QuadPoly.const(c)
        for s in draw(st.lists(st.sampled_from(SYMS), max_size=3)):
            term = term * P(s, draw(st.integers(1, 2)))
        out = out + term
    return out


def test_symbol_parse_roundtrip():
    for s in (Symbol("x_A", 3), Symbol("x_in"), Symbol("chi", 4), Symbol("tan_theta")):
        assert Symbol.parse(str(s)) == s


def test_unknown_kind_rejected():
    with pytest.raises(AlgebraError):
        Symbol("w", 1)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero()


@settings(max_examples=60, deadline=None)
@given(polys())
def test_text_roundtrip(a):
    assert QuadPoly.from_text(a.to_text()) == a


def test_operator_inverse_rejected_classical_allowed():
    with pytest.raises(AlgebraError):
        P("x_in") ** -1
    q = S("q(2)")
    assert (q ** -2 * q ** 2) == QuadPoly.const(1)
    assert (q / q) == QuadPoly.const(1)


def test_evaluate_and_subs():
    e = QuadPoly.from_text("2*x_in^2 + 1/3*q(2)")
    assert e.evaluate({Symbol("x_in"): 3, Symbol("q", 2): 3}) == 19
    assert e.subs({Symbol("x_in"): S("q(2)")}) == QuadPoly.from_text("1/3*q(2) + 2*q(2)^2")


def test_derivative():
    e = QuadPoly.from_text("x_in^3*q(2)")
    assert e.derivative(Symbol("x_in")) == QuadPoly.from_text("3*x_in^2*q(2)")


def test_unit_pair_reduction():
    t, r = Symbol("t", 1), Symbol("r", 1)
    e = P(t) ** 2 + P(r) ** 2 - 1
    assert e.reduce_unit_pairs([(t, r)]).is_zero()


def test_qnd_map():
    f = qnd_apply(HeisenbergFrame.fresh(["s", "A1"]), "s", "A1", S("z(1)"))
    assert f.x("s") == P("x_in")
    assert f.p("s") == P("p_in") + S("z(1)") * S("p_A(1)")
    assert f.x("A1") == S("x_A(1)") - S("z(1)") * P("x_in")
    assert f.p("A1") == S("p_A(1)")


def test_beamsplitter_is_canonical():
    f = bs_apply(HeisenbergFrame.fresh(["s", "A1"]), "s", "A1", S("t(1)"), S("r(1)"))
    pairs = f.unit_pairs
    modes = ["s", "A1"]
    assert (poisson_bracket(f.x("s"), f.p("s"), modes) - 1).reduce_unit_pairs(pairs).is_zero()
    assert (poisson_bracket(f.x("A1"), f.p("A1"), modes) - 1).reduce_unit_pairs(pairs).is_zero()
    assert poisson_bracket(f.x("s"), f.p("A1"), modes).reduce_unit_pairs(pairs).is_zero()


def test_gaussian_correct():
    f = gaussian_correct(HeisenbergFrame.fresh(["s"]), "s", 2, displace_p=S("q(2)"))
    assert f.x("s") == QuadPoly.const(Fraction(1, 2)) * P("x_in")
    assert f.p("s") == 2 * P("p_in") + S("q(2)")


def test_measured_mode_cannot_be_reused():
    f = measure_x(HeisenbergFrame.fresh(["s", "A2"]), "A2", Symbol("q", 2))
    with pytest.raises(AlgebraError):
        measure_x(f, "A2", Symbol("q", 2))


def test_substitution_requires_measurement():
    f = HeisenbergFrame.fresh(["s", "A3"])
    with pytest.raises(AlgebraError):
        substitute_ancilla_nonlinearity(f, 3)


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_inline_matches_closed_form(N):
    x, p = derive_final_relation(N, "qnd-inline")
    assert x == P("x_in")
    assert p == closed_form_relation(N)


@pytest.mark.parametrize("scheme", ["qnd-inline", "qnd-measurement-induced", "beamsplitter"])
def test_signal_x_is_untouched(scheme):
    x, _ = derive_final_relation(4, scheme)
    assert x == P("x_in")


def test_closed_form_cubic_terms():
    # p_in + z1 + z2^2 x ... the x^2 coefficient of the cubic chain is z3^3
    p = closed_form_relation(3)
    assert p.coeff(Symbol("x_in"), 2) == S("z(3)") ** 3
    assert residual(p, 3, S("z(3)") ** 3).coeff(Symbol("x_in"), 2).is_zero()


def test_order_guards():
    with pytest.raises(AlgebraError):
        derive_final_relation(2)
    with pytest.raises(AlgebraError):
        derive_final_relation(9)
    with pytest.raises(AlgebraError):
        derive_final_relation(3, "teleport")
