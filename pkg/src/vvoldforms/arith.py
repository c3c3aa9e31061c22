"""Exact arithmetic in Q/Z and in cyclotomic fields.

Rationals are :class:`fractions.Fraction`.  Elements of Q/Z are Fractions
reduced into ``[0, 1)`` (see :func:`qmodz`).  Elements of ``Q(zeta_L)`` are
:class:`CycNum` instances stored in the power basis ``1, z, ..., z^(phi(L)-1)``
after reduction modulo the L-th cyclotomic polynomial, so equality is
coefficient equality.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np
import sympy

from .errors import DegenerateError, InvalidOrderError

__all__ = [
    "QmodZ",
    "qmodz",
    "euler_phi",
    "cyclotomic_coeffs",
    "rewrite_table",
    "CycNum",
    "ScaledNum",
    "root_of_unity",
    "gauss_sum",
    "embed_complex",
]

# Q/Z values are Fractions normalised into [0, 1).
QmodZ = Fraction


def qmodz(x) -> Fraction:
    """Return the canonical representative of ``x + Z`` in ``[0, 1)``."""
    x = Fraction(x)
    return x - (x.numerator // x.denominator)


def euler_phi(n: int) -> int:
    return int(sympy.totient(n))


@lru_cache(maxsize=None)
def cyclotomic_coeffs(L: int) -> tuple[int, ...]:
    """Coefficients of the L-th cyclotomic polynomial, constant term first."""
    x = sympy.Symbol("x")
    poly = sympy.Poly(sympy.cyclotomic_poly(L, x), x)
    return tuple(int(c) for c in reversed(poly.all_coeffs()))


@lru_cache(maxsize=None)
def rewrite_table(L: int) -> np.ndarray:
    """Integer ``(L, phi(L))`` array whose row k is ``zeta_L^k`` in the power basis."""
    phi_poly = cyclotomic_coeffs(L)
    d = len(phi_poly) - 1
    table = np.zeros((L, d), dtype=np.int64)
    cur = [0] * d
    cur[0] = 1
    for k in range(L):
        table[k] = cur
        # multiply by x and reduce x^d = -sum c_i x^i (Phi_L is monic)
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [c - top * phi_poly[i] for i, c in enumerate(cur)]
    return table


@lru_cache(maxsize=None)
def _conj_matrix(L: int) -> np.ndarray:
    # row a: coefficients of zeta^(-a)
    table = rewrite_table(L)
    d = table.shape[1]
    return np.stack([table[(-a) % L] for a in range(d)])


@lru_cache(maxsize=None)
def _product_table(L: int) -> np.ndarray:
    # row s (0 <= s <= 2d-2): coefficients of zeta^s
    table = rewrite_table(L)
    d = table.shape[1]
    return np.stack([table[s % L] for s in range(2 * d - 1)])


class CycNum:
    """An element of the cyclotomic field ``Q(zeta_L)``.

    >>> z4 = CycNum.zeta(4)
    >>> z4 * z4 == CycNum.from_rational(-1, 4)
    True
    """

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: Iterable):
        if order < 1:
            raise InvalidOrderError(f"order must be positive, got {order}")
        coeffs = tuple(Fraction(c) for c in coeffs)
        d = euler_phi(order)
        if len(coeffs) != d:
            raise InvalidOrderError(f"expected {d} coefficients for order {order}, got {len(coeffs)}")
        self.order = order
        self.coeffs = coeffs

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_rational(cls, x, order: int = 1) -> "CycNum":
        d = euler_phi(order)
        return cls(order, [Fraction(x)] + [Fraction(0)] * (d - 1))

    @classmethod
    def zeta(cls, order: int, k: int = 1) -> "CycNum":
        row = rewrite_table(order)[k % order]
        return cls(order, (int(c) for c in row))

    @classmethod
    def from_exponent_counts(cls, order: int, counts) -> "CycNum":
        """Build ``sum_k counts[k] * zeta^k`` for a length-``order`` sequence of rationals."""
        table = rewrite_table(order)
        acc = [Fraction(0)] * table.shape[1]
        for k, c in enumerate(counts):
            if c:
                for i, t in enumerate(table[k]):
                    if t:
                        acc[i] += c * int(t)
        return cls(order, acc)

    # -- order changes --------------------------------------------------
    def to_order(self, new_order: int) -> "CycNum":
        """Embed into ``Q(zeta_new_order)``; ``new_order`` must be a multiple of ``order``."""
        if new_order % self.order:
            raise InvalidOrderError(f"cannot embed order {self.order} into order {new_order}")
        if new_order == self.order:
            return self
        m = new_order // self.order
        counts = [Fraction(0)] * new_order
        for i, c in enumerate(self.coeffs):
            counts[(i * m) % new_order] += c
        return CycNum.from_exponent_counts(new_order, counts)

    def _common(self, other) -> tuple["CycNum", "CycNum"]:
        if not isinstance(other, CycNum):
            other = CycNum.from_rational(other, self.order)
        if other.order == self.order:
            return self, other
        L = math.lcm(self.order, other.order)
        return self.to_order(L), other.to_order(L)

    # -- field operations -----------------------------------------------
    def __add__(self, other):
        a, b = self._common(other)
        return CycNum(a.order, (x + y for x, y in zip(a.coeffs, b.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return CycNum(self.order, (-x for x in self.coeffs))

    def __sub__(self, other):
        return self + (-other if isinstance(other, CycNum) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, CycNum):
            c = Fraction(other)
            return CycNum(self.order, (x * c for x in self.coeffs))
        a, b = self._common(other)
        d = len(a.coeffs)
        prod = [Fraction(0)] * (2 * d - 1)
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        prod[i + j] += x * y
        table = _product_table(a.order)
        out = [Fraction(0)] * d
        for s, c in enumerate(prod):
            if c:
                for i, t in enumerate(table[s]):
                    if t:
                        out[i] += c * int(t)
        return CycNum(a.order, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        result = CycNum.from_rational(1, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conj(self) -> "CycNum":
        """Complex conjugate, i.e. the Galois automorphism ``zeta -> zeta^-1``."""
        cm = _conj_matrix(self.order)
        out = [Fraction(0)] * len(self.coeffs)
        for a, c in enumerate(self.coeffs):
            if c:
                for i, t in enumerate(cm[a]):
                    if t:
                        out[i] += c * int(t)
        return CycNum(self.order, out)

    def __eq__(self, other):
        if not isinstance(other, CycNum):
            try:
                other = CycNum.from_rational(other, self.order)
            except (TypeError, ValueError):
                return NotImplemented
        a, b = self._common(other)
        return a.coeffs == b.coeffs

    # equal numbers may be stored at different orders
    __hash__ = None

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __complex__(self):
        return embed_complex(self)

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if i == 0 else f"{c}*z^{i}")
        body = " + ".join(terms) if terms else "0"
        return f"CycNum(L={self.order}: {body})"


def root_of_unity(x, L: int | None = None) -> CycNum:
    """Return ``e(x) = exp(2 pi i x)`` as an element of ``Q(zeta_L)``.

    ``L`` defaults to the denominator of ``x`` and must be a multiple of it.
    """
    x = qmodz(x)
    if L is None:
        L = x.denominator
    if L < 1 or L % x.denominator:
        raise InvalidOrderError(f"order {L} is not a multiple of the denominator of {x}")
    return CycNum.zeta(L, int(x * L))


def embed_complex(a: CycNum) -> complex:
    """Numerical value under the embedding ``zeta_L -> exp(2 pi i / L)``."""
    z = cmath.exp(2j * math.pi / a.order)
    acc = 0j
    for i, c in enumerate(a.coeffs):
        if c:
            acc += float(c) * z**i
    return acc


class ScaledNum:
    """The number ``base^(-k/2) * value`` with ``k`` folded into ``{0, 1}``."""

    __slots__ = ("k", "value", "base")

    def __init__(self, k: int, value: CycNum, base: int):
        if base < 1:
            raise ValueError("base must be a positive integer")
        k_red = k % 2
        shift = (k - k_red) // 2  # base^(-k/2) = base^(-k_red/2) * base^(-shift)
        if shift:
            value = value * (Fraction(1, base**shift) if shift > 0 else Fraction(base ** (-shift)))
        self.k = k_red
        self.value = value
        self.base = base

    def __mul__(self, other):
        if isinstance(other, ScaledNum):
            if other.base != self.base:
                raise ValueError("cannot multiply scaled numbers with different bases")
            return ScaledNum(self.k + other.k, self.value * other.value, self.base)
        return ScaledNum(self.k, self.value * other, self.base)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, ScaledNum):
            return NotImplemented
        if self.base != other.base:
            return complex(self) == complex(other)
        if self.k == other.k:
            return self.value == other.value
        # sqrt(base) irrational or not, compare squares and signs numerically
        return abs(complex(self) - complex(other)) < 1e-9 and self.value * self.value * Fraction(
            1, self.base**self.k
        ) == other.value * other.value * Fraction(1, other.base**other.k)

    def __complex__(self):
        return embed_complex(self.value) / math.sqrt(self.base) ** self.k

    def __repr__(self):
        return f"ScaledNum({self.base}^(-{self.k}/2) * {self.value!r})"


def gauss_sum(D) -> CycNum:
    """``sum_{gamma in D} e(Q(gamma))`` for a finite quadratic module ``D``.

    The result lives in ``Q(zeta_m)`` with ``m`` the lcm of the denominators of
    the quadratic values that actually occur.
    """
    counts: dict[Fraction, int] = {}
    for v in D.all_q_values():
        counts[v] = counts.get(v, 0) + 1
    L = 1
    for v in counts:
        L = math.lcm(L, v.denominator)
    arr = [0] * L
    for v, c in counts.items():
        arr[int(v * L)] += c
    return CycNum.from_exponent_counts(L, arr)


def signature_from_gauss_sum(g: CycNum, size: int) -> int:
    """Recover ``s mod 8`` from ``g = sqrt(size) * e(s/8)``.

    The exact identity ``g^2 = size * e(s/4)`` fixes ``s mod 4``; the numerical
    value of ``g`` picks between ``s`` and ``s + 4``.
    """
    if g * g.conj() != size:
        raise DegenerateError(f"|gauss sum|^2 != |D| = {size}; the form is degenerate")
    sq = g * g
    s4 = None
    for s in range(4):
        if sq == root_of_unity(Fraction(s, 4), 4) * size:
            s4 = s
            break
    if s4 is None:
        raise DegenerateError("squared Milgram identity fails for every residue")
    approx = complex(g) / math.sqrt(size)
    # e(s4/8) and e((s4+4)/8) = -e(s4/8): decide by the sign of the projection
    ref = cmath.exp(2j * math.pi * s4 / 8)
    proj = (approx * ref.conjugate()).real
    if abs(proj) < 1e-6:
        raise DegenerateError("numerical sign disambiguation is inconclusive")
    return s4 if proj > 0 else s4 + 4
