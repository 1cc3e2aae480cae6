import cmath
import math
from fractions import Fraction

import gmpy2
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from scipy import optimize

from p1poles._prec import working_precision
from p1poles.ratfn import Poly, RationalFn
from p1poles.series import compute_h0_series
from p1poles.transasymptotic import (MatchingPoint, PoleProximityError, compute_Gm, eval_matched,
                                     g0, gm_from_json, gm_to_json, pole_array, solve_log_equation)


@pytest.fixture(scope="module")
def G():
    return compute_Gm(8)


def as_sympy(g, s):
    num = sum(sp.Rational(str(a)) * s ** i for i, a in enumerate(g.num.c))
    den = sum(sp.Rational(str(a)) * s ** i for i, a in enumerate(g.den.c))
    return num / den


def test_G0_closed_form(G):
    assert G[0] == RationalFn(Poly([0, 12]), Poly([1, -2, 1]))


def test_G1_closed_form(G):
    ref = RationalFn(-Poly([-2, 30, 175, 15]), Poly([0, 10]) * Poly([-1, 1]) ** 3)
    assert G[1] == ref
    assert G[1].to_json()["num_int"] == [-2, 30, 175, 15]


def test_G0_t_normalisation_identity():
    # t (t - 1/12)^-2 with t = s/12
    t_form = RationalFn(Poly([0, Fraction(1, 12)]), Poly([Fraction(-1, 12), Fraction(1, 12)]) ** 2)
    assert t_form == g0()
    s = sp.Symbol("s")
    t = s / 12
    assert sp.cancel(t / (t - sp.Rational(1, 12)) ** 2 - 12 * s / (s - 1) ** 2) == 0


def test_G0_times_s_tends_to_12(G):
    ex = G[0].expand_at_infinity(2)
    assert ex[1] == 12 and ex.get(0, 0) == 0


def test_resubstitution_cancels_low_orders(G):
    """Independent symbolic check: x^-m coefficients of the normal-form residual vanish for m <= 3.

    Each coefficient is a rational function of s; it is evaluated exactly at
    more rational points than its numerator degree can have roots.
    """
    s, t = sp.symbols("s t")  # t = 1/x
    M = 3
    h = sum(as_sympy(G[m], s) * t ** m for m in range(M + 1))

    def d(f):  # d/dx with s = 12 e^x x^(1/2) / C
        return -t ** 2 * sp.diff(f, t) + s * (1 + t / 2) * sp.diff(f, s)

    dh = d(h)
    r = d(dh) + t * dh - h - h ** 2 / 2 - sp.Rational(392, 625) * t ** 4
    points = [sp.Rational(j, 7) for j in range(-30, 31) if j not in (0, 7)]
    for s0 in points:
        poly = sp.Poly(sp.expand(r.subs(s, s0)), t)
        assert all(poly.coeff_monomial(t ** m) == 0 for m in range(M + 1)), s0


def test_only_pole_in_right_half_plane_is_one(G):
    for m, g in enumerate(G):
        # exact factorisation: the denominator is s^a (s - 1)^b with nothing left over
        po = g.pole_orders()
        assert po["other_degree"] == 0
        if m >= 1:
            assert po["s=1"] == m + 2 and po["s=0"] == m


def test_value_at_infinity_equals_h0_coefficient(G):
    # odd m and m < 4 decay; even m >= 4 tend to the h0 coefficient (nonzero)
    h0 = compute_h0_series(8)
    for m, g in enumerate(G):
        assert g.num.deg <= g.den.deg
        assert g.expand_at_infinity(0).get(0, 0) == h0[m]
    assert G[4].num.deg == G[4].den.deg


def test_json_round_trip(G):
    doc = gm_to_json(G)
    assert gm_from_json(doc) == G
    assert all({"m", "num", "den"} <= set(d) for d in doc)
    assert doc[1]["num"][0] == "-1/5" or doc[1]["num"][0].endswith("/5")


def test_eval_matched_examples(G):
    with working_precision(30):
        # s = 2
        p = MatchingPoint(x=5, C=12 * gmpy2.exp(5) * gmpy2.sqrt(5) / 2)
        assert abs(complex(eval_matched(p, 0, G).value) - 24) < 1e-20
        # s = 3, value 12*3/4 = 9
        x = 7.5
        p = MatchingPoint(x=x, C=12 * gmpy2.exp(x) * gmpy2.sqrt(x) / 3)
        assert abs(complex(p.s) - 3) < 1e-25
        assert abs(complex(eval_matched(p, 0, G).value) - 9) < 1e-20


def test_eval_matched_self_consistent(G):
    with working_precision(30):
        p = MatchingPoint(x=20, C=1)
        a = eval_matched(p, 2, G)
        b = eval_matched(p, 4, G)
        assert abs(complex(a.value) - complex(b.value)) <= a.error * (1 + 1e-9)


def test_eval_matched_flags():
    with working_precision(30):
        p = MatchingPoint(x=5, C=12 * gmpy2.exp(5) * gmpy2.sqrt(5) * (1 - 1e-4))
        with pytest.raises(PoleProximityError):
            eval_matched(p, 1)
        assert eval_matched(MatchingPoint(x=0.3, C=12 * math.exp(0.3) * math.sqrt(0.3) / 1.5), 3).asymptotic is False


@given(st.complex_numbers(min_magnitude=0.5, max_magnitude=40).filter(lambda x: x.real > 0.1),
       st.complex_numbers(min_magnitude=0.1, max_magnitude=1e4))
def test_matching_variable(x, C):
    with working_precision(30):
        p = MatchingPoint(x, C)
        assert abs(complex(gmpy2.exp(p.v) / p.s) - 1) < 1e-20


def test_pole_array_constructed():
    with working_precision(30):
        assert abs(complex(pole_array(12 * gmpy2.exp(1), 0)[0]) - 1) < 1e-20
        x = pole_array(12 * gmpy2.exp(10) * gmpy2.sqrt(10), 0)[0]
        assert abs(complex(x) - 10) < 1e-20


def test_pole_array_against_root_oracle():
    L = math.log(1e6 / 12) + 2j * math.pi

    def f(v):
        x = complex(*v)
        r = x + 0.5 * cmath.log(x) - L
        return [r.real, r.imag]

    ref = optimize.root(f, [L.real, L.imag], tol=1e-14).x
    with working_precision(30):
        xs = pole_array(1e6, 1)
    assert abs(complex(xs[2]) - complex(*ref)) < 1e-11
    assert abs(complex(xs[0]) - complex(*ref).conjugate()) < 1e-11
    with working_precision(30):
        for k, x in zip((-1, 0, 1), xs):
            assert abs(complex(x + gmpy2.log(x) / 2) - (math.log(1e6 / 12) + 2j * math.pi * k)) < 1e-12


def test_pole_array_needs_large_C():
    with pytest.raises(ValueError):
        pole_array(10, 1)


@given(st.floats(12 * math.e * 1.01, 1e12), st.floats(1.001, 100))
def test_root_increases_with_C(C, f):
    with working_precision(30):
        a = solve_log_equation(math.log(C / 12))
        b = solve_log_equation(math.log(C * f / 12))
    assert b.real > a.real
