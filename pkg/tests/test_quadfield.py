from __future__ import annotations

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import pell_oracle

from rmtorus.quadfield import (
    FieldElement,
    RationalThetaError,
    continued_fraction_period,
    default_theta,
    fixed_points_check,
    is_squarefree,
    period_matrix,
    unit_system,
)

D_STRAT = st.sampled_from([2, 3, 5, 6, 7, 13])


@st.composite
def elements(draw, d=None, nonzero=False):
    d = draw(D_STRAT) if d is None else d
    a = draw(st.integers(-50, 50))
    b = draw(st.integers(-50, 50))
    c = draw(st.integers(1, 30))
    if nonzero and a == 0 and b == 0:
        a = 1
    return FieldElement(a, b, c, d)


def test_golden_norm():
    t = FieldElement(1, 1, 2, 5)
    assert t * t.conj() == -1


def test_conj_example():
    assert FieldElement(3, 2, 1, 2).conj() == FieldElement(3, -2, 1, 2)


def test_epsilon_norm_d5():
    assert FieldElement(3, 1, 2, 5) * FieldElement(3, -1, 2, 5) == 1


def test_normalization_gcd():
    x = FieldElement(6, 4, 2, 2)
    assert (x.a, x.b, x.c) == (3, 2, 1)
    y = FieldElement(1, 1, -2, 5)
    assert y.c == 2 and y == FieldElement(-1, -1, 2, 5)


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        FieldElement(0, 0, 1, 5).inverse()


def test_mixed_fields_rejected():
    with pytest.raises(ValueError):
        FieldElement(1, 1, 1, 2) + FieldElement(1, 1, 1, 3)


@pytest.mark.parametrize(
    "theta, pre, period",
    [
        (FieldElement(0, 1, 1, 2), (1,), (2,)),
        (FieldElement(1, 1, 2, 5), (), (1,)),
        (FieldElement(0, 1, 1, 7), (2,), (1, 1, 1, 4)),
    ],
)
def test_continued_fractions(theta, pre, period):
    cf = continued_fraction_period(theta)
    assert cf.preperiod == pre and cf.period == period


def test_continued_fraction_against_integer_recurrence():
    # classical sqrt(n) recurrence m, d, a
    for n in (2, 3, 6, 7, 13, 19, 23):
        a0 = int(n**0.5)
        m, den, a = 0, 1, a0
        period = []
        while a != 2 * a0:
            m = den * a - m
            den = (n - m * m) // den
            a = (a0 + m) // den
            period.append(a)
        cf = continued_fraction_period(FieldElement(0, 1, 1, n))
        assert cf.preperiod == (a0,) and cf.period == tuple(period)


def test_rational_theta_rejected():
    with pytest.raises(RationalThetaError):
        continued_fraction_period(FieldElement(3, 0, 2, 5))
    with pytest.raises(RationalThetaError):
        unit_system(5, FieldElement(1, 0, 1, 5))


@pytest.mark.parametrize("d", [4, 8, 12, 1, 0, -3])
def test_bad_d_rejected(d):
    with pytest.raises(ValueError, match="squarefree"):
        unit_system(d)


def test_unit_system_examples():
    us = unit_system(5)
    assert us.epsilon == FieldElement(3, 1, 2, 5)
    assert us.phi == ((1, 1), (1, 2))
    us2 = unit_system(2)
    assert us2.epsilon == FieldElement(3, 2, 1, 2)
    assert us2.phi == ((3, 2), (4, 3))


@pytest.mark.parametrize("d", [2, 3, 5, 6, 7, 13, 17, 21])
def test_unit_matches_exhaustive_search(d):
    us = unit_system(d)
    th = default_theta(d)
    _, x, y = pell_oracle(d, (th.a, th.b, th.c))
    assert us.epsilon == th * y + x


def test_unit_system_invariants(us):
    (a, b), (c, d) = us.phi
    assert a * d - b * c == 1
    assert a + d == us.epsilon.trace()
    assert us.epsilon.norm() == 1 and us.epsilon.is_totally_positive() and us.epsilon.embed(1) > 1
    assert us.epsilon == us.theta * b + a
    assert us.epsilon * us.theta == us.theta * d + c
    assert fixed_points_check(us)


def test_fixed_points_identity_and_d2():
    us = unit_system(2)
    assert fixed_points_check(us, ((1, 0), (0, 1)))
    (a, b), (c, d) = us.phi
    x = FieldElement(0, 1, 2, 2)  # 1/sqrt 2
    assert (x * a + b) / (x * c + d) == x
    assert not fixed_points_check(us, ((2, 1), (1, 1)))


def test_finite_index_subgroup():
    us = unit_system(5, index=2)
    assert us.epsilon == unit_system(5).epsilon ** 2


def test_period_matrix_eigenvalue(us):
    """Folding the CF period gives a matrix whose eigenvalue is the CF unit (exact char poly)."""
    (p, q), (r, s) = period_matrix(us.cf.period)
    eta = us.fundamental_unit
    assert eta * eta - eta * (p + s) + (p * s - q * r) == 0
    assert eta**us.power == us.epsilon


@given(elements(), elements())
def test_norm_multiplicative(x, y):
    y = FieldElement(y.a, y.b, y.c, x.d)
    assert (x * y).norm() == x.norm() * y.norm()
    assert x.conj().conj() == x


@given(elements(nonzero=True))
def test_inverse_roundtrip(x):
    assert x * x.inverse() == 1


@given(elements(), st.sampled_from([1, 2]))
def test_sign_matches_high_precision(x, emb):
    with mpmath.workdps(100):
        r = mpmath.mpf(x.a) / x.c + (mpmath.mpf(x.b) / x.c) * (mpmath.sqrt(x.d) if emb == 1 else -mpmath.sqrt(x.d))
        expected = 0 if r == 0 else (1 if r > 0 else -1)
    assert x.sign(emb) == expected


def test_sign_exact_near_cancellation():
    # 99^2 - 70^2 * 2 = 1 so 99 - 70 sqrt 2 is tiny and positive
    assert FieldElement(99, -70, 1, 2).sign(1) == 1
    assert FieldElement(-99, 70, 1, 2).sign(1) == -1


def test_is_squarefree():
    assert [n for n in range(1, 20) if is_squarefree(n)] == [1, 2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19]


def test_str_forms():
    assert str(FieldElement(3, 1, 2, 5)) == "(3+√5)/2"
    assert str(FieldElement(0, -1, 1, 2)) == "-√2"
    assert str(FieldElement(1, -2, 3, 7)) == "(1-2√7)/3"
    assert str(FieldElement(4, 0, 2, 3)) == "2"
