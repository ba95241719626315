"""
Tests for base-field arithmetic, prime ideals and field invariants.
"""
from fractions import Fraction

import pytest

from app.errors import NonFundamentalDiscriminant, NotSquarefree, NotTotallyReal, PrecisionTooLow
from app.services.arith import is_fundamental
from app.services.quadfield import (
    BaseField,
    Ideal,
    PrimeIdeal,
    check_aprim,
    definite_class_number,
    euler_product_zeta2,
    fundamental_unit_coordinates,
    make_field,
    numeric_aprim,
    phi_of,
    psi_of,
    zeta_minus1,
)


# =============================================================================
# Construction and invariants
# =============================================================================

def test_rejects_bad_discriminants():
    with pytest.raises(NotTotallyReal):
        BaseField(-4)
    with pytest.raises(NonFundamentalDiscriminant):
        BaseField(20)


def test_omega_relation(q5, q8):
    w = q5.omega
    assert w * w == w + 1
    assert q5.sqrt_d * q5.sqrt_d == 5
    assert q8.omega * q8.omega == 2
    assert w.norm() == -1
    assert w.trace() == 1


def test_field_element_inverse_and_sqrt(q5):
    x = q5.element(3, 2)
    assert x * x.inverse() == 1
    assert (x * x).sqrt() in (x, -x)
    assert q5.element(5).sqrt() == q5.sqrt_d
    assert q5.element(2).sqrt() is None


@pytest.mark.parametrize("d,expected", [(5, (0, 1)), (8, (1, 1)), (12, (2, 1))])
def test_fundamental_units(d, expected):
    assert fundamental_unit_coordinates(d) == expected


def test_unit_norms(q5, q8, q12, rationals):
    assert q5.unit_norm == -1
    assert q8.unit_norm == -1
    assert q12.unit_norm == 1
    assert rationals.unit_norm == -1


@pytest.mark.parametrize("d,narrow,h", [(5, 1, 1), (8, 1, 1), (12, 2, 1), (40, 2, 2), (60, 4, 2)])
def test_class_numbers(d, narrow, h):
    F = make_field(d)
    assert F.narrow_class_number == narrow
    assert F.class_number == h


@pytest.mark.parametrize("disc,h", [(-3, 1), (-4, 1), (-16, 1), (-20, 2), (-23, 3), (-56, 4)])
def test_definite_class_numbers(disc, h):
    assert definite_class_number(disc) == h


@pytest.mark.parametrize(
    "d,value", [(1, Fraction(-1, 12)), (5, Fraction(1, 30)), (8, Fraction(1, 12)), (12, Fraction(1, 6))]
)
def test_zeta_minus_one(d, value):
    assert zeta_minus1(d) == value


def test_primitive_areas(rationals, q5, q8):
    assert rationals.aprim == Fraction(1, 6)
    assert q5.aprim == Fraction(1, 30)
    assert q8.aprim == Fraction(1, 12)


FUNDAMENTAL_UP_TO_100 = [1] + [d for d in range(5, 101) if is_fundamental(d)]


@pytest.mark.parametrize("d", FUNDAMENTAL_UP_TO_100)
def test_numeric_aprim_matches_exact(d):
    exact, numeric = check_aprim(d, precision=30)
    assert numeric == pytest.approx(float(exact), abs=1e-10)


def test_fundamental_list_up_to_100():
    assert len(FUNDAMENTAL_UP_TO_100) == 31
    assert FUNDAMENTAL_UP_TO_100[:6] == [1, 5, 8, 12, 13, 17]


def test_check_aprim_rejects_tiny_tolerance():
    with pytest.raises(PrecisionTooLow):
        check_aprim(5, precision=30, tolerance=0.0)


def test_euler_product_is_close(q5):
    value, tail = euler_product_zeta2(5, 2000)
    exact = float(q5.aprim) * (2 * 3.141592653589793) ** 4 / (4 * 5**1.5)
    assert abs(value - exact) / exact <= tail + 1e-12
    assert numeric_aprim(5) == pytest.approx(1 / 30)


# =============================================================================
# Primes and ideals
# =============================================================================

def test_prime_decomposition_in_q5(q5):
    (two,) = q5.split_prime(2)
    assert two.kind == "inert" and two.norm == 4
    (five,) = q5.split_prime(5)
    assert five.kind == "ramified"
    elevens = q5.split_prime(11)
    assert [p.label for p in elevens] == [4, 8]
    assert [str(p) for p in q5.primes_up_to(11)] == ["P4", "P5", "P9", "P11_4", "P11_8"]


def test_valuations(q5):
    p4, p5 = q5.split_prime(2)[0], q5.split_prime(5)[0]
    p11a, p11b = q5.split_prime(11)
    assert q5.valuation(q5.element(2), p4) == 1
    assert q5.valuation(q5.element(5), p5) == 2
    assert q5.valuation(q5.sqrt_d, p5) == 1
    assert q5.valuation(q5.omega - 4, p11a) == 1
    assert q5.valuation(q5.omega - 4, p11b) == 0
    assert q5.valuation(q5.element(Fraction(1, 2)), p4) == -1
    assert q5.element_ideal(q5.element(11)) == Ideal.of_primes([p11a, p11b])


def test_ideals_of_norm(q5, q8):
    assert q5.ideals_of_norm(2) == []
    assert len(q5.ideals_of_norm(4)) == 1
    assert len(q5.ideals_of_norm(121)) == 3
    assert [str(i) for i in q8.ideals_of_norm(1)] == ["(1)"]
    assert [str(i) for i in q8.ideals_of_norm(4)] == ["P2^2"]


def test_galois_action(q5):
    p11a, p11b = q5.split_prime(11)
    assert q5.conjugate_prime(p11a) == p11b
    square = Ideal.from_mapping({p11a: 2})
    assert not q5.is_galois_stable(square)
    assert q5.is_galois_stable(Ideal.of_primes([p11a, p11b]))
    assert q5.galois_class_key(square) == q5.galois_class_key(q5.conjugate(square))


def test_ideal_algebra(rationals):
    two, three = PrimeIdeal(2), PrimeIdeal(3)
    six = Ideal.of_primes([two, three])
    four = Ideal.from_mapping({two: 2})
    assert six.norm == 6 and four.norm == 4
    assert (six * four).exponent(two) == 3
    assert (six * four).quotient(four) == six
    assert Ideal().is_unit() and str(Ideal()) == "(1)"
    assert not four.is_squarefree()
    assert str(four * six) == "P2^3*P3"


def test_phi_and_psi():
    two, three = PrimeIdeal(2), PrimeIdeal(3)
    assert phi_of(Ideal.of_primes([two, three])) == 2
    assert psi_of(Ideal.from_mapping({two: 2})) == 6
    assert psi_of(Ideal.from_mapping({three: 1})) == 4
    with pytest.raises(NotSquarefree):
        phi_of(Ideal.from_mapping({two: 2}))
