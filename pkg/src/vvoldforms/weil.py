"""Weil representation of SL2(Z) on C[D] for even signature.

Matrices are :class:`ScaledMatrix` values ``base^(-k/2) * scale * M`` where
``M`` has integer coefficients in the power basis of ``Q(zeta_L)``.  All
equality tests are exact.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .arith import (
    CycNum,
    _conj_matrix,
    _product_table,
    euler_phi,
    gauss_sum,
    rewrite_table,
    root_of_unity,
)
from .errors import NotInSL2Error, UnsupportedSignatureError, ValidationError
from .fqm import FiniteQuadraticModule

_INT64_SAFE = 2**62


def _content(C: np.ndarray) -> int:
    g = 0
    for x in np.unique(np.abs(C)):
        g = math.gcd(g, int(x))
        if g == 1:
            break
    return g


def _fits_int64(C) -> bool:
    if C.dtype != object:
        return True
    return C.size == 0 or int(np.max(np.abs(C))) < _INT64_SAFE


class ScaledMatrix:
    """The matrix ``base^(-k/2) * scale * sum_t coeffs[:, :, t] zeta_L^t``."""

    __slots__ = ("k", "scale", "coeffs", "order", "base")

    def __init__(self, k: int, scale, coeffs: np.ndarray, order: int, base: int):
        if coeffs.ndim != 3 or coeffs.shape[2] != euler_phi(order):
            raise ValidationError("coefficient array must have shape (rows, cols, phi(order))")
        scale = Fraction(scale)
        # fold even powers of base into the rational scale
        k_red = k % 2
        if k - k_red:
            scale *= Fraction(1, base) ** ((k - k_red) // 2)
        r = math.isqrt(base)
        if k_red and r * r == base:
            scale /= r
            k_red = 0
        if coeffs.dtype == object and _fits_int64(coeffs):
            coeffs = coeffs.astype(np.int64)
        g = _content(coeffs) if coeffs.size else 0
        if g == 0:
            scale = Fraction(0)
            coeffs = np.zeros_like(coeffs)
        elif g > 1:
            coeffs = coeffs // g
            scale *= g
        self.k = k_red
        self.scale = scale
        self.coeffs = coeffs
        self.order = order
        self.base = base

    @property
    def shape(self):
        return self.coeffs.shape[:2]

    @classmethod
    def identity(cls, n: int, order: int, base: int) -> "ScaledMatrix":
        C = np.zeros((n, n, euler_phi(order)), dtype=np.int64)
        C[np.arange(n), np.arange(n), 0] = 1
        return cls(0, 1, C, order, base)

    @classmethod
    def from_integer(cls, A: np.ndarray, order: int, base: int) -> "ScaledMatrix":
        A = np.asarray(A)
        C = np.zeros(A.shape + (euler_phi(order),), dtype=np.int64)
        C[:, :, 0] = A
        return cls(0, 1, C, order, base)

    def to_order(self, order: int) -> "ScaledMatrix":
        if order % self.order:
            raise ValidationError(f"cannot embed order {self.order} into {order}")
        if order == self.order:
            return self
        m = order // self.order
        d = euler_phi(self.order)
        tab = rewrite_table(order)[[(i * m) % order for i in range(d)]]
        C = np.tensordot(self.coeffs, tab, axes=([2], [0]))
        return ScaledMatrix(self.k, self.scale, C, order, self.base)

    def _check_compatible(self, other: "ScaledMatrix"):
        if self.order != other.order or self.base != other.base:
            raise ValidationError("matrices live in different fields or scales")

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        self._check_compatible(other)
        A, B = self.coeffs, other.coeffs
        if A.shape[1] != B.shape[0]:
            raise ValidationError(f"shape mismatch {A.shape[:2]} @ {B.shape[:2]}")
        d = A.shape[2]
        table = _product_table(self.order)
        bound = 1
        if A.size and B.size:
            bound = int(np.max(np.abs(A))) * int(np.max(np.abs(B))) * A.shape[1] * d * (int(np.max(np.abs(table))) + 1)
        dtype = np.int64 if bound < _INT64_SAFE else object
        A = A.astype(dtype)
        B = B.astype(dtype)
        raw = np.zeros((A.shape[0], B.shape[1], 2 * d - 1), dtype=dtype)
        for a in range(d):
            Aa = A[:, :, a]
            if not Aa.any():
                continue
            for b in range(d):
                Bb = B[:, :, b]
                if Bb.any():
                    raw[:, :, a + b] += Aa @ Bb
        C = np.tensordot(raw, table.astype(dtype), axes=([2], [0]))
        return ScaledMatrix(self.k + other.k, self.scale * other.scale, C, self.order, self.base)

    def __pow__(self, n: int) -> "ScaledMatrix":
        if n < 0:
            raise ValueError("negative powers are not supported")
        out = ScaledMatrix.identity(self.shape[0], self.order, self.base)
        base = self
        while n:
            if n & 1:
                out = out @ base
            base = base @ base
            n >>= 1
        return out

    def transpose(self) -> "ScaledMatrix":
        return ScaledMatrix(self.k, self.scale, self.coeffs.transpose(1, 0, 2).copy(), self.order, self.base)

    def conj_transpose(self) -> "ScaledMatrix":
        cm = _conj_matrix(self.order)
        C = np.tensordot(self.coeffs, cm.astype(self.coeffs.dtype), axes=([2], [0]))
        return ScaledMatrix(self.k, self.scale, C.transpose(1, 0, 2).copy(), self.order, self.base)

    def __eq__(self, other):
        if not isinstance(other, ScaledMatrix):
            return NotImplemented
        if self.shape != other.shape:
            return False
        if self.order != other.order:
            L = math.lcm(self.order, other.order)
            return self.to_order(L) == other.to_order(L)
        if self.base != other.base:
            raise ValidationError("cannot compare matrices with different scale bases")
        if self.scale == 0 or other.scale == 0:
            return self.scale == other.scale
        if self.k != other.k:
            return self._eq_mixed(other) if self.k else other._eq_mixed(self)
        # coefficient arrays are primitive, so equality forces equal scales up to sign
        if self.scale == other.scale:
            return np.array_equal(self.coeffs, other.coeffs)
        if self.scale == -other.scale:
            return np.array_equal(self.coeffs, -other.coeffs)
        return False

    __hash__ = None

    def _eq_mixed(self, other: "ScaledMatrix") -> bool:
        # self carries base^(-1/2), other does not.  With a fixed nonzero
        # reference entry (A_0, B_0) the matrices agree iff A_ij B_0 = B_ij A_0
        # for all ij and lam = (sA A_0) / (sB B_0) equals +sqrt(base).
        # Proportionality and lam^2 = base are exact, the sign of lam is numeric.
        A, B = self.coeffs, other.coeffs
        if self.order != other.order:
            return False
        nz = np.argwhere(B.any(axis=2))
        if len(nz) == 0 or not np.array_equal(A.any(axis=2), B.any(axis=2)):
            return False
        i0, j0 = (int(x) for x in nz[0])
        L = self.order
        lhs = _cross(A, B[i0, j0], L)
        rhs = _cross(B, A[i0, j0], L)
        if not np.array_equal(lhs, rhs):
            return False
        a0, b0 = self.entry(i0, j0), other.entry(i0, j0)
        if a0 * a0 != b0 * b0 * self.base:
            return False
        lam = complex(a0) / complex(b0)
        target = math.sqrt(self.base)
        return abs(lam - target) < 1e-6 * target

    def entry(self, i: int, j: int) -> CycNum:
        """Entry ``(i, j)`` without the ``base^(-k/2)`` factor."""
        return CycNum(self.order, (Fraction(int(c)) * self.scale for c in self.coeffs[i, j]))

    def to_complex(self) -> np.ndarray:
        z = np.exp(2j * np.pi * np.arange(self.coeffs.shape[2]) / self.order)
        M = np.tensordot(self.coeffs.astype(float), z, axes=([2], [0]))
        return M * float(self.scale) / math.sqrt(self.base) ** self.k

    def first_difference(self, other: "ScaledMatrix"):
        """Index of the first differing entry, compared numerically; None if none found."""
        diff = np.abs(self.to_complex() - other.to_complex())
        idx = np.argwhere(diff > 1e-9)
        return tuple(int(x) for x in idx[0]) if len(idx) else None

    def __repr__(self):
        return f"ScaledMatrix(shape={self.shape}, k={self.k}, scale={self.scale}, L={self.order}, base={self.base})"


def _int_mult_matrix(c: np.ndarray, L: int) -> np.ndarray:
    """Row ``i`` holds the coefficients of ``zeta^i * c`` for an integer vector ``c``."""
    table = _product_table(L).astype(object)
    d = len(c)
    M = np.zeros((d, d), dtype=object)
    for a, x in enumerate(c):
        if x:
            M = M + int(x) * table[a : a + d]
    return M


def _cross(A: np.ndarray, c: np.ndarray, L: int) -> np.ndarray:
    """Coefficients of ``A_ij * c`` for every entry of an integer coefficient array."""
    M = _int_mult_matrix(c, L)
    bound = (int(np.max(np.abs(A))) if A.size else 0) * int(np.max(np.abs(M))) * max(len(c), 1)
    if bound < _INT64_SAFE:
        return np.tensordot(A.astype(np.int64), M.astype(np.int64), axes=([2], [0]))
    return np.tensordot(A.astype(object), M, axes=([2], [0]))


# ---------------------------------------------------------------------------
# generators


def weil_order(D: FiniteQuadraticModule) -> int:
    return math.lcm(D.level, 8)


def _require_even(D: FiniteQuadraticModule) -> int:
    s = D.signature
    if s % 2:
        raise UnsupportedSignatureError(f"signature {s} is odd; the metaplectic case is not supported")
    return s


def _root_coeffs(num: np.ndarray, L: int) -> np.ndarray:
    """Power-basis coefficients of ``zeta_L^num`` for an integer array ``num``."""
    return rewrite_table(L)[np.asarray(num, dtype=np.int64) % L]


def rho_T_power(D: FiniteQuadraticModule, q: int, order: int | None = None, base: int | None = None):
    L = order or weil_order(D)
    base = base or D.size
    num = D.q_numerators * (L // D.level) * q
    n = D.size
    C = np.zeros((n, n, euler_phi(L)), dtype=np.int64)
    C[np.arange(n), np.arange(n)] = _root_coeffs(num, L)
    return ScaledMatrix(0, 1, C, L, base)


def rho_generator(D: FiniteQuadraticModule, g: str, order: int | None = None, base: int | None = None) -> ScaledMatrix:
    """``rho(T)`` or ``rho(S)`` in the canonical element order.

    ``base`` may be any ``|D| * m^2``; the matrix is then written over
    ``sqrt(base)``, which lets representations of a module and of its
    quotients be compared directly.
    """
    s = _require_even(D)
    L = order or weil_order(D)
    if L % weil_order(D):
        raise ValidationError(f"order {L} is not a multiple of lcm(level, 8) = {weil_order(D)}")
    base = base or D.size
    if base % D.size or math.isqrt(base // D.size) ** 2 != base // D.size:
        raise ValidationError("base must be |D| times a square")
    if g == "T":
        return rho_T_power(D, 1, L, base)
    if g != "S":
        raise ValidationError(f"unknown generator {g!r}")
    m = math.isqrt(base // D.size)
    N = D.level
    # M[beta][gamma] = e(-sign/8) e(-(gamma, beta))
    num = -D.pairing_matrix() * (L // N) - s * (L // 8)
    C = _root_coeffs(num, L)
    return ScaledMatrix(1, m, C, L, base)


# ---------------------------------------------------------------------------
# SL2(Z) words


S_MAT = ((0, -1), (1, 0))
T_MAT = ((1, 1), (0, 1))
T_INV_MAT = ((1, -1), (0, 1))

_LETTER_MATS = {"S": S_MAT, "T": T_MAT, "T^-1": T_INV_MAT}


def _mul2(A, B):
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


@dataclass(frozen=True)
class SL2Word:
    matrix: tuple
    word: tuple[str, ...]

    def product(self):
        M = ((1, 0), (0, 1))
        for letter in self.word:
            M = _mul2(M, _LETTER_MATS[letter])
        return M

    def runs(self):
        """Collapse the word into ``("S", 1)`` and ``("T", q)`` runs."""
        out = []
        for letter in self.word:
            kind, step = ("S", 1) if letter == "S" else ("T", 1 if letter == "T" else -1)
            if out and out[-1][0] == kind == "T":
                out[-1] = ("T", out[-1][1] + step)
            else:
                out.append((kind, step))
        return [r for r in out if r != ("T", 0)]


def _t_letters(q: int) -> list[str]:
    return ["T"] * q if q >= 0 else ["T^-1"] * (-q)


def _as_matrix(M) -> tuple:
    try:
        (a, b), (c, d) = M
        M = ((int(a), int(b)), (int(c), int(d)))
    except (TypeError, ValueError) as exc:
        raise NotInSL2Error(f"not a 2x2 integer matrix: {M!r}") from exc
    if M[0][0] * M[1][1] - M[0][1] * M[1][0] != 1:
        raise NotInSL2Error(f"det {M!r} != 1")
    return M


def _upper_word(a: int, b: int) -> list[str]:
    # c = 0: M = T^b, or M = -T^-b = S^2 T^-b
    return _t_letters(b) if a == 1 else ["S", "S"] + _t_letters(-b)


def sl2_word(M, variant: str = "left") -> SL2Word:
    """Write ``M`` as a word in ``S``, ``T`` and ``T^-1``.

    ``variant="left"`` peels ``T^q S`` off the left (Euclid on the first
    column); ``"right"`` peels ``S T^q`` off the right (Euclid on the bottom
    row).  Both give words of length ``O(log max|entry|)`` up to ``T`` runs.
    """
    M = _as_matrix(M)
    if variant == "left":
        letters: list[str] = []
        (a, b), (c, d) = M
        while c:
            q = a // c
            letters += _t_letters(q) + ["S"]
            # M'' = S^-1 T^-q M
            a, b = a - q * c, b - q * d
            a, b, c, d = c, d, -a, -b
        letters += _upper_word(a, b)
    elif variant == "right":
        tail: list[list[str]] = []
        (a, b), (c, d) = M
        while c:
            q = d // c
            tail.append(["S"] + _t_letters(q))
            # M'' = M T^-q S^-1
            b, d = b - q * a, d - q * c
            a, b, c, d = -b, a, -d, c
        letters = _upper_word(a, b)
        for part in reversed(tail):
            letters += part
    else:
        raise ValidationError(f"unknown variant {variant!r}")
    w = SL2Word(M, tuple(letters))
    if w.product() != M:
        raise NotInSL2Error("word reconstruction failed; this is a bug")
    return w


def rho(D: FiniteQuadraticModule, M, variant: str = "left", order: int | None = None, base: int | None = None) -> ScaledMatrix:
    """``rho(M)`` as the product of generator images along ``sl2_word(M)``."""
    w = sl2_word(M, variant)
    L = order or weil_order(D)
    base = base or D.size
    S = rho_generator(D, "S", L, base)
    out = ScaledMatrix.identity(D.size, L, base)
    for kind, q in w.runs():
        out = out @ (S if kind == "S" else rho_T_power(D, q, L, base))
    return out


# ---------------------------------------------------------------------------
# verification reports


def _report(check: str, ok: bool, counterexample=None) -> dict:
    out = {"check": check, "status": "pass" if ok else "fail"}
    if not ok and counterexample is not None:
        out["counterexample"] = counterexample
    return out


def _compare(check: str, A: ScaledMatrix, B: ScaledMatrix) -> dict:
    ok = A == B
    ce = None
    if not ok:
        idx = A.first_difference(B)
        ce = {"entry": list(idx) if idx else None}
    return _report(check, ok, ce)


def verify_relations(D: FiniteQuadraticModule) -> list[dict]:
    """Exact checks of the defining relations, unitarity and the normalizing constant."""
    s = _require_even(D)
    S = rho_generator(D, "S")
    T = rho_generator(D, "T")
    I = ScaledMatrix.identity(D.size, S.order, S.base)
    S2 = S @ S
    ST = S @ T
    reports = [
        _compare("S^4 = I", S2 @ S2, I),
        _compare("(ST)^3 = S^2", ST @ ST @ ST, S2),
        _compare("S unitary", S.conj_transpose() @ S, I),
        _compare("T unitary", T.conj_transpose() @ T, I),
    ]
    # c_D * gauss_sum = 1, i.e. (e(-s/8) g)^2 = |D| with positive real part
    v = gauss_sum(D) * root_of_unity(Fraction(-s, 8), 8)
    ok = v * v == D.size and complex(v).real > 0
    reports.append(_report("Milgram constant", ok, None if ok else {"value": repr(v)}))
    return reports


def random_gamma(N: int, rng: random.Random, spread: int = 4):
    """A random element of ``Gamma(N)``.

    ``a = 1 + N r1`` and ``c = N r2`` with ``gcd(a, r2) = 1``; then
    ``a t - c s = -r1`` is solved for ``b = N s``, ``d = 1 + N t``, which gives
    ``ad - bc = 1 + N(r1 + a t - c s) = 1``.
    """
    while True:
        r1 = rng.randint(-spread, spread)
        r2 = rng.randint(-spread, spread)
        a = 1 + N * r1
        if a == 0 or math.gcd(a, r2) != 1:
            continue
        # a t - r2 N s = -r1 with gcd(a, r2 N) = 1 since a = 1 mod N
        g, x, y = _ext_gcd(a, -r2 * N)
        if g not in (1, -1):
            continue
        t, s = -r1 * x * g, -r1 * y * g
        if r2:
            # shift to a small representative
            k = t // (r2 * N) if r2 * N else 0
            t -= k * r2 * N
            s -= k * a
        M = ((a, N * s), (N * r2, 1 + N * t))
        if M[0][0] * M[1][1] - M[0][1] * M[1][0] == 1:
            return M


def _ext_gcd(a: int, b: int):
    # returns (g, x, y) with a x + b y = g, g = +-gcd
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    return old_r, old_x, old_y


def verify_gamma_trivial(D: FiniteQuadraticModule, samples: int = 5, seed: int = 0, extra: Sequence = ()) -> list[dict]:
    """Check ``rho(M) = I`` for seeded random ``M`` in ``Gamma(level(D))``."""
    _require_even(D)
    N = D.level
    rng = random.Random(seed)
    mats = [((1, 0), (0, 1)), ((1, N), (0, 1))] + [tuple(map(tuple, m)) for m in extra]
    mats += [random_gamma(N, rng) for _ in range(samples)]
    I = ScaledMatrix.identity(D.size, weil_order(D), D.size)
    out = []
    for M in mats:
        if (M[0][0] - 1) % N or M[0][1] % N or M[1][0] % N or (M[1][1] - 1) % N:
            raise ValidationError(f"{M} is not in Gamma({N})")
        rep = _compare(f"rho({[list(r) for r in M]}) = I", rho(D, M), I)
        rep["matrix"] = [list(r) for r in M]
        out.append(rep)
    return out
