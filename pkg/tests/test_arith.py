import cmath
import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from vvoldforms.arith import (
    CycNum,
    ScaledNum,
    cyclotomic_coeffs,
    embed_complex,
    euler_phi,
    gauss_sum,
    qmodz,
    root_of_unity,
    signature_from_gauss_sum,
)
from vvoldforms.errors import InvalidOrderError
from vvoldforms.fqm import from_jordan, trivial_module

from conftest import jordan_symbols

ORDERS = [1, 2, 3, 4, 5, 6, 8, 9, 12, 15, 16, 24, 40]


@st.composite
def cycnums(draw, order=None):
    L = order or draw(st.sampled_from(ORDERS))
    d = euler_phi(L)
    cs = draw(st.lists(st.fractions(min_value=-20, max_value=20, max_denominator=7), min_size=d, max_size=d))
    return CycNum(L, cs)


def close(a, b, tol=1e-9):
    return abs(complex(a) - complex(b)) <= tol * max(1.0, abs(complex(b)))


class TestQmodZ:
    def test_reduces_into_unit_interval(self):
        assert qmodz(Fraction(7, 3)) == Fraction(1, 3)
        assert qmodz(Fraction(-1, 4)) == Fraction(3, 4)
        assert qmodz(5) == 0

    @given(st.fractions(min_value=-100, max_value=100, max_denominator=50))
    def test_canonical(self, x):
        r = qmodz(x)
        assert 0 <= r < 1
        assert (x - r).denominator == 1


class TestCyclotomicTables:
    @pytest.mark.parametrize("L", range(1, 41))
    def test_polynomial_matches_sympy(self, L):
        x = sympy.Symbol("x")
        poly = sympy.Poly(sympy.cyclotomic_poly(L, x), x)
        assert tuple(int(c) for c in reversed(poly.all_coeffs())) == cyclotomic_coeffs(L)
        assert euler_phi(L) == int(sympy.totient(L))

    @pytest.mark.parametrize("L", ORDERS)
    def test_zeta_power_L_is_one(self, L):
        z = CycNum.zeta(L)
        assert z**L == 1
        for k in range(1, L):
            if math.gcd(k, L) == 1 or L % k == 0:
                assert (z**k == 1) == (k == L)


class TestRootOfUnity:
    def test_half(self):
        assert root_of_unity(Fraction(1, 2), 2) == -1

    def test_zero(self):
        assert root_of_unity(0, 1) == 1

    def test_third_sum(self):
        s = root_of_unity(Fraction(1, 3), 3) + root_of_unity(Fraction(2, 3), 3)
        assert s == -1

    def test_bad_order(self):
        with pytest.raises(InvalidOrderError):
            root_of_unity(Fraction(1, 3), 4)

    @given(st.integers(0, 59), st.integers(0, 59))
    def test_multiplicative(self, a, b):
        x, y = Fraction(a, 60), Fraction(b, 60)
        assert root_of_unity(x, 60) * root_of_unity(y, 60) == root_of_unity(x + y, 60)
        assert root_of_unity(x, 60) * root_of_unity(-x, 60) == 1

    @given(st.integers(0, 23))
    def test_against_cmath(self, k):
        assert close(root_of_unity(Fraction(k, 24), 24), cmath.exp(2j * math.pi * k / 24))


class TestCycArithmetic:
    def test_i_squared(self):
        i = CycNum.zeta(4)
        assert i * i == -1

    def test_norm_of_one_plus_zeta3(self):
        z = CycNum.zeta(3)
        assert (1 + z) * (1 + z * z) == 1

    def test_order_change(self):
        assert root_of_unity(Fraction(1, 4), 4).to_order(8) == CycNum.zeta(8) ** 2

    def test_mixed_orders_lift_to_lcm(self):
        s = CycNum.zeta(3) + CycNum.zeta(4)
        assert s.order == 12
        assert close(s, cmath.exp(2j * math.pi / 3) + 1j)

    @given(cycnums())
    def test_self_difference_is_zero(self, a):
        d = a - a
        assert d.is_zero()
        assert all(c == 0 for c in d.coeffs)

    @given(cycnums(order=24), cycnums(order=24), cycnums(order=24))
    def test_ring_axioms(self, a, b, c):
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c

    @given(cycnums(), cycnums())
    def test_consistent_with_embedding(self, a, b):
        assert close(a * b, complex(a) * complex(b), 1e-7)
        assert close(a + b, complex(a) + complex(b), 1e-7)
        assert close(a.conj(), complex(a).conjugate(), 1e-7)

    @given(cycnums(), cycnums())
    def test_equality_agrees_with_embedding(self, a, b):
        if a == b:
            assert close(a, b)
        elif a.order == b.order:
            assert not close(a, b, 1e-12) or a == b


class TestEmbedComplex:
    def test_one(self):
        assert embed_complex(CycNum.from_rational(1)) == 1 + 0j

    def test_i(self):
        assert abs(embed_complex(CycNum.zeta(4)) - 1j) < 1e-12

    def test_sqrt_minus_three(self):
        v = embed_complex(1 + 2 * root_of_unity(Fraction(1, 3), 3))
        assert abs(v - 1j * math.sqrt(3)) < 1e-9


class TestScaledNum:
    def test_even_powers_fold(self):
        x = ScaledNum(3, CycNum.from_rational(5), 4)
        assert x.k == 1
        assert x.value == CycNum.from_rational(Fraction(5, 4))

    def test_product_of_two_halves(self):
        # (1/sqrt 3)^2 = 1/3
        x = ScaledNum(1, CycNum.from_rational(1), 3)
        assert x * x == ScaledNum(0, CycNum.from_rational(Fraction(1, 3)), 3)

    def test_normalizing_constant(self):
        # c_D * gauss_sum = 1 for A_2: e(-2/8)/sqrt 3 * i sqrt 3
        D = from_jordan("3^1:a=2")
        c = ScaledNum(1, root_of_unity(Fraction(-2, 8), 8), 3)
        assert abs(complex(c * gauss_sum(D)) - 1) < 1e-12


class TestGaussSum:
    def test_trivial(self):
        assert gauss_sum(trivial_module()) == 1

    def test_hyperbolic_plane(self):
        assert gauss_sum(from_jordan("2^1:A")) == 2

    def test_a2(self):
        g = gauss_sum(from_jordan("3^1:a=2"))
        # i * sqrt(3) = zeta_12^3 (zeta_12 + zeta_12^-1)
        i_sqrt3 = CycNum.zeta(12, 4) + CycNum.zeta(12, 2)
        assert g.to_order(12) == i_sqrt3
        assert g * g == -3
        assert abs(complex(g) - 1j * math.sqrt(3)) < 1e-9

    @given(jordan_symbols(max_size=200))
    def test_against_numeric_sum(self, sym):
        D = from_jordan(sym)
        direct = sum(cmath.exp(2j * math.pi * float(q)) for q in D.all_q_values())
        assert abs(complex(gauss_sum(D)) - direct) < 1e-8

    @given(jordan_symbols(max_size=200))
    def test_milgram_squared(self, sym):
        D = from_jordan(sym)
        g = gauss_sum(D)
        s = D.signature
        assert g * g == root_of_unity(Fraction(s, 4), 4) * D.size
        assert abs(complex(g) - math.sqrt(D.size) * cmath.exp(2j * math.pi * s / 8)) < 1e-6

    def test_signature_rejects_non_milgram_value(self):
        with pytest.raises(ValueError):
            signature_from_gauss_sum(CycNum.from_rational(3), 4)
