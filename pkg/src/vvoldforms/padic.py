"""Finite-precision p-adic linear algebra for quadratic forms.

Matrices and vectors here are plain integer lists reduced modulo ``p^f``.
Everything that ends up as an element of a discriminant form is re-checked in
exact Q/Z arithmetic by the callers, so the precision only has to be large
enough for the constructions to go through.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

from . import linalg
from .errors import (
    NonUnimodularError,
    NotFoundError,
    PrimitivityError,
    RankError,
    UnsupportedPrimeError,
    UseRank1SplittingError,
    ValidationError,
)
from .fqm import FiniteQuadraticModule, weakly_independent


def reduce_mod(x: int, p: int, f: int) -> int:
    return int(x) % p**f


def valuation(x: int, p: int, f: int | None = None) -> float:
    """``nu_p(x)``, capped at ``f`` when a precision is given; ``inf`` for zero."""
    x = int(x)
    if f is not None:
        x %= p**f
    if x == 0:
        return math.inf
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v if f is None else min(v, f)


@dataclass
class PrecisionMatrix:
    p: int
    f: int
    entries: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if self.f < 1:
            raise ValidationError("precision exponent must be positive")
        m = self.modulus
        self.entries = [[int(x) % m for x in row] for row in self.entries]

    @property
    def modulus(self) -> int:
        return self.p**self.f

    @property
    def n(self) -> int:
        return len(self.entries)

    def is_symmetric(self) -> bool:
        E = self.entries
        return all(E[i][j] == E[j][i] for i in range(self.n) for j in range(self.n))

    def det(self) -> int:
        return linalg.det(self.entries) % self.modulus

    def _array(self) -> np.ndarray:
        return np.array(self.entries, dtype=object).reshape(self.n, self.n)

    def form(self, x, y) -> int:
        x = np.array([int(v) for v in x], dtype=object)
        y = np.array([int(v) for v in y], dtype=object)
        return int(x @ self._array() @ y) % self.modulus

    def congruent(self, S: list[list[int]]) -> "PrecisionMatrix":
        """Gram matrix of the vectors in ``S`` (``S[k]`` is the k-th column of the basis change)."""
        if not S:
            return PrecisionMatrix(self.p, self.f, [])
        X = np.array([[int(v) for v in col] for col in S], dtype=object)
        return PrecisionMatrix(self.p, self.f, (X @ self._array() @ X.T % self.modulus).tolist())

    def __eq__(self, other):
        return (
            isinstance(other, PrecisionMatrix)
            and (self.p, self.f) == (other.p, other.f)
            and self.entries == other.entries
        )


def columns_to_matrix(cols: list[list[int]]) -> list[list[int]]:
    """Convert a list of column vectors into a row-major matrix."""
    return [list(r) for r in zip(*cols)] if cols else []


def least_nonresidue(p: int) -> int:
    for t in range(2, p):
        if sympy.legendre_symbol(t, p) == -1:
            return t
    raise UnsupportedPrimeError(f"no quadratic nonresidue mod {p}")


def _is_square_unit(x: int, p: int) -> bool:
    return sympy.legendre_symbol(x % p, p) == 1


def _sqrt_mod(a: int, p: int, f: int) -> int:
    r = sympy.sqrt_mod(a % p**f, p**f)
    if r is None:
        raise ValidationError(f"{a} is not a square mod {p}^{f}")
    return int(r)


def _rank_mod_p(vectors, p) -> int:
    rows = [[int(x) % p for x in v] for v in vectors]
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [x * inv % p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                m = rows[i][c]
                rows[i] = [(a - m * b) % p for a, b in zip(rows[i], rows[r])]
        r += 1
    return r



# ---------------------------------------------------------------------------
# odd p: diagonalization and canonical forms


def diagonalize_unimodular_odd(G: PrecisionMatrix) -> tuple[PrecisionMatrix, PrecisionMatrix]:
    """Return ``(S, C)`` with ``S^T G S = C`` modulo ``p^f``.

    ``C`` is ``diag(1, ..., 1)`` or ``diag(1, ..., 1, t)`` with ``t`` the least
    positive quadratic nonresidue mod ``p``.  ``S`` is returned row-major.
    """
    p, f = G.p, G.f
    if p == 2:
        raise UnsupportedPrimeError("canonical forms are only implemented for odd p")
    if not G.is_symmetric():
        raise ValidationError("G must be symmetric")
    n = G.n
    m = G.modulus
    if n and G.det() % p == 0:
        raise NonUnimodularError("det(G) is not a unit mod p")
    t = least_nonresidue(p)
    cols = [[int(i == j) for i in range(n)] for j in range(n)]

    def gram():
        return G.congruent(cols).entries

    for k in range(n):
        M = gram()
        piv = next((i for i in range(k, n) if M[i][i] % p), None)
        if piv is None:
            # no unit on the diagonal: e_i + e_j has norm 2 M_ij + (non-units)
            i, j = next((i, j) for i in range(k, n) for j in range(i + 1, n) if M[i][j] % p)
            cols[i] = [(a + b) % m for a, b in zip(cols[i], cols[j])]
            piv = i
        cols[k], cols[piv] = cols[piv], cols[k]
        M = gram()
        inv = pow(M[k][k], -1, m)
        for j in range(k + 1, n):
            c = M[k][j] * inv % m
            if c:
                cols[j] = [(a - c * b) % m for a, b in zip(cols[j], cols[k])]

    diag = [gram()[i][i] for i in range(n)]
    kinds = []
    for i, d in enumerate(diag):
        if d == 1:
            kinds.append(1)
            continue
        target = 1 if _is_square_unit(d, p) else t
        eps = _sqrt_mod(target * pow(d, -1, m), p, f)
        cols[i] = [a * eps % m for a in cols[i]]
        kinds.append(target)

    order = sorted(range(n), key=lambda i: kinds[i] != 1)
    cols = [cols[i] for i in order]
    kinds = [kinds[i] for i in order]

    # diag(t, t) ~ diag(1, 1) via u = (A, C), v = (-C, A) with A^2 + C^2 = t^-1
    tinv = pow(t, -1, m)
    A = next(a for a in range(p) if _is_square_unit(tinv - a * a, p))
    C = _sqrt_mod(tinv - A * A, p, f)
    ts = [i for i, kd in enumerate(kinds) if kd != 1]
    while len(ts) >= 2:
        i, j = ts[0], ts[1]
        ci, cj = cols[i], cols[j]
        cols[i] = [(A * a + C * b) % m for a, b in zip(ci, cj)]
        cols[j] = [(-C * a + A * b) % m for a, b in zip(ci, cj)]
        kinds[i] = kinds[j] = 1
        ts = ts[2:]
    order = sorted(range(n), key=lambda i: kinds[i] != 1)
    cols = [cols[i] for i in order]

    canonical = PrecisionMatrix(p, f, [[0] * n for _ in range(n)])
    for i in range(n):
        canonical.entries[i][i] = 1
    if n and not _is_square_unit(G.det(), p):
        canonical.entries[n - 1][n - 1] = t
    if G.congruent(cols) != canonical:
        raise ValidationError("diagonalization failed to reach the canonical form; this is a bug")
    return PrecisionMatrix(p, f, columns_to_matrix(cols)), canonical


@lru_cache(maxsize=256)
def _diagonalize_cached(p, f, entries):
    return diagonalize_unimodular_odd(PrecisionMatrix(p, f, [list(r) for r in entries]))


def transform_to(G: PrecisionMatrix, T: PrecisionMatrix) -> list[list[int]]:
    """Columns of a basis change ``X`` with ``X^T G X = T`` (both unimodular, same det class)."""
    S1, C1 = diagonalize_unimodular_odd(G)
    S2, C2 = _diagonalize_cached(T.p, T.f, tuple(map(tuple, T.entries)))
    if C1 != C2:
        raise ValidationError("G and T are not equivalent")
    m = G.modulus
    n = G.n
    inv = sympy.Matrix(S2.entries).inv_mod(m)
    X = (sympy.Matrix(S1.entries) * inv).applyfunc(lambda x: x % m)
    return [[int(X[i, j]) for i in range(n)] for j in range(n)]


# ---------------------------------------------------------------------------
# splitting off a primitive vector of non-unit norm


def is_primitive(v, p) -> bool:
    return any(int(x) % p for x in v)


def split_primitive_pair(G: PrecisionMatrix, gamma) -> tuple[list[int], list[list[int]]]:
    """Split a hyperbolic-type plane containing ``gamma`` off orthogonally.

    Returns ``(delta, complement)`` with ``gamma^T G delta = 1`` and
    ``complement`` a list of ``n - 2`` vectors spanning the orthogonal
    complement of ``span(gamma, delta)``.
    """
    p, m, n = G.p, G.modulus, G.n
    gamma = [int(x) % m for x in gamma]
    if len(gamma) != n:
        raise ValidationError("vector length does not match the matrix")
    if not is_primitive(gamma, p):
        raise PrimitivityError("gamma is not primitive")
    if G.det() % p == 0:
        raise NonUnimodularError("G is not unimodular")
    if G.form(gamma, gamma) % p:
        raise UseRank1SplittingError("gamma has unit norm; split it off as a rank one block")
    if n < 2:
        raise RankError("need rank at least 2")
    w = [sum(G.entries[i][j] * gamma[j] for j in range(n)) % m for i in range(n)]
    i = next(k for k in range(n) if w[k] % p)
    delta = [0] * n
    delta[i] = pow(w[i], -1, m)
    a = G.form(gamma, gamma)
    b = G.form(delta, delta)
    det = (a * b - 1) % m
    dinv = pow(det, -1, m)
    # inverse of [[a, 1], [1, b]]
    Pinv = [[b * dinv % m, -dinv % m], [-dinv % m, a * dinv % m]]
    basis = [gamma, delta]
    chosen = []
    for k in range(n):
        e = [int(r == k) for r in range(n)]
        if _rank_mod_p(basis + [e], p) == len(basis) + 1:
            basis.append(e)
            chosen.append(e)
    complement = []
    for e in chosen:
        u = (G.form(gamma, e), G.form(delta, e))
        cg = (Pinv[0][0] * u[0] + Pinv[0][1] * u[1]) % m
        cd = (Pinv[1][0] * u[0] + Pinv[1][1] * u[1]) % m
        complement.append([(x - cg * g - cd * d) % m for x, g, d in zip(e, gamma, delta)])
    return delta, complement


# ---------------------------------------------------------------------------
# 2-adic isotropic search


def _search_vectors(n, q, max_support=None):
    # support size ascending, then index sets lexicographically, then values
    max_support = n if max_support is None else min(n, max_support)
    for s in range(1, max_support + 1):
        for supp in itertools.combinations(range(n), s):
            for vals in itertools.product(range(1, q), repeat=s):
                y = [0] * n
                for i, v in zip(supp, vals):
                    y[i] = v
                yield y


def find_isotropic_primitive_2(G: PrecisionMatrix, e: int | None = None, constraint=None, max_support=None):
    """Primitive ``y`` with ``y^T G y = 0`` mod ``2^(e+1)``.

    ``G`` holds ``2^(e+1) Q`` on the generators: odd entries ``a + v 2^e`` and
    even blocks ``[[x, 1], [1, x]]``.  Coordinates are searched modulo ``2^e``,
    which suffices since ``Q`` is well defined on the group.
    """
    if G.p != 2:
        raise UnsupportedPrimeError("this search is for p = 2")
    e = G.f - 1 if e is None else e
    if e < 1:
        raise ValidationError("e must be positive")
    mod = 2 ** (e + 1)
    for y in _search_vectors(G.n, 2**e, max_support):
        if not y or all(v % 2 == 0 for v in y):
            continue
        if G.form(y, y) % mod:
            continue
        if constraint is not None and not constraint(y):
            continue
        return y
    raise NotFoundError("no primitive isotropic vector; the rank hypotheses are violated")


# ---------------------------------------------------------------------------
# two isotropic orthogonal independent vectors


def homogeneous_parameters(D: FiniteQuadraticModule) -> tuple[int, int, int]:
    """``(p, e, n)`` for ``D = (Z_{p^e})^n``."""
    if D.rank == 0:
        raise RankError("trivial module")
    q = D.orders[0]
    if any(d != q for d in D.orders):
        raise ValidationError("underlying group is not (Z_q)^n")
    fac = sympy.factorint(q)
    if len(fac) != 1:
        raise ValidationError(f"{q} is not a prime power")
    (p, e), = fac.items()
    return int(p), int(e), D.rank


def bilinear_gram(D: FiniteQuadraticModule, p: int, e: int, f: int) -> PrecisionMatrix:
    """``q (g_i, g_j)`` as an integer matrix mod ``p^f``, ``q = p^e``."""
    q = p**e
    return PrecisionMatrix(p, f, [[int(x * q) for x in row] for row in D.gram])


def quadratic_gram_2(D: FiniteQuadraticModule, e: int) -> PrecisionMatrix:
    """``2^(e+1) Q`` as a symmetric integer matrix, so that ``Q(y) = y^T G y / 2^(e+1)``."""
    q2 = 2 ** (e + 1)
    r = D.rank
    ent = [[0] * r for _ in range(r)]
    for i in range(r):
        ent[i][i] = int(D.qvals[i] * q2)
        for j in range(r):
            if i != j:
                ent[i][j] = int(D.gram[i][j] * 2**e)
    return PrecisionMatrix(2, e + 1, ent)


def required_rank(p: int, e: int) -> int:
    if p == 2:
        return 7 if e <= 2 else 3
    return 5 if e == 1 else 2


def _is_isotropic_pair(D, x, y) -> bool:
    return (
        D.eval_q(x) == 0
        and D.eval_q(y) == 0
        and D.eval_b(x, y) == 0
        and weakly_independent(D, x, y)
    )


def _odd_e1(D: FiniteQuadraticModule, p: int, n: int):
    G = bilinear_gram(D, p, 1, 2)
    m = G.modulus
    E = G.entries
    # already diagonal: pair up entries with G_ii + G_jj = 0 mod p
    if all(E[i][j] % p == 0 for i in range(n) for j in range(n) if i != j):
        used, pairs = set(), []
        for i in range(n):
            if i in used:
                continue
            j = next((j for j in range(i + 1, n) if j not in used and (E[i][i] + E[j][j]) % p == 0), None)
            if j is not None:
                used |= {i, j}
                pairs.append((i, j))
            if len(pairs) == 2:
                (a, b), (c, d) = pairs
                x = tuple(int(k in (a, b)) for k in range(n))
                y = tuple(int(k in (c, d)) for k in range(n))
                if _is_isotropic_pair(D, x, y):
                    return x, y
                break
    # T = diag(1, -1, 1, -1, 1, ..., 1, s) with the last slot fixing the det class
    T = [[0] * n for _ in range(n)]
    for i in range(n):
        T[i][i] = 1
    T[1][1] = T[3][3] = m - 1
    if sympy.legendre_symbol(G.det() % p, p) != sympy.legendre_symbol(PrecisionMatrix(p, 2, T).det() % p, p):
        T[n - 1][n - 1] = least_nonresidue(p)
    X = transform_to(G, PrecisionMatrix(p, 2, T))
    x = D.reduce(tuple(a + b for a, b in zip(X[0], X[1])))
    y = D.reduce(tuple(a + b for a, b in zip(X[2], X[3])))
    return x, y


def _two_adic_small(D: FiniteQuadraticModule, e: int, n: int):
    G = quadratic_gram_2(D, e)
    q = 2**e
    B = [[int(x * q) for x in row] for row in D.gram]

    def orth(y1):
        return lambda y: sum(y1[i] * B[i][j] * y[j] for i in range(n) for j in range(n)) % q == 0

    def indep(y1):
        return lambda y: _rank_mod_p([y1, y], 2) == 2

    # orthogonal cut into two sub-sums, each searched on its own
    for k in range(1, n):
        if any(D.gram[i][j] for i in range(k) for j in range(k, n)):
            continue
        G1 = PrecisionMatrix(2, e + 1, [row[:k] for row in G.entries[:k]])
        G2 = PrecisionMatrix(2, e + 1, [row[k:] for row in G.entries[k:]])
        try:
            y1 = find_isotropic_primitive_2(G1, e)
            y2 = find_isotropic_primitive_2(G2, e)
        except NotFoundError:
            continue
        x = D.reduce(tuple(y1) + (0,) * (n - k))
        y = D.reduce((0,) * k + tuple(y2))
        if _is_isotropic_pair(D, x, y):
            return x, y
    y1 = find_isotropic_primitive_2(G, e)
    o, ind = orth(y1), indep(y1)
    y2 = find_isotropic_primitive_2(G, e, constraint=lambda y: o(y) and ind(y))
    return D.reduce(tuple(y1)), D.reduce(tuple(y2))


def find_two_isotropic(D: FiniteQuadraticModule, brute_force_bound: int = 10**4):
    """Two isotropic, orthogonal, weakly independent elements of ``D = (Z_{p^e})^n``.

    Runs the constructive path first; if that fails and ``|D|`` is at most
    ``brute_force_bound``, falls back to exhaustive search.
    """
    p, e, n = homogeneous_parameters(D)
    if n < required_rank(p, e):
        raise RankError(f"rank {n} is below {required_rank(p, e)} for p={p}, e={e}")
    try:
        if p != 2 and e >= 2:
            x = D.reduce((p ** (e - 1),) + (0,) * (n - 1))
            y = D.reduce((0, p ** (e - 1)) + (0,) * (n - 2))
        elif p != 2:
            x, y = _odd_e1(D, p, n)
        elif e >= 3:
            x = D.reduce((2 ** (e - 1),) + (0,) * (n - 1))
            y = D.reduce((0, 2 ** (e - 1)) + (0,) * (n - 2))
        else:
            x, y = _two_adic_small(D, e, n)
        if _is_isotropic_pair(D, x, y):
            return x, y
    except (NotFoundError, ValidationError):
        pass
    if D.size <= brute_force_bound:
        return brute_force_two_isotropic(D)
    raise NotFoundError("constructive search failed")


def brute_force_two_isotropic(D: FiniteQuadraticModule):
    """Exhaustive oracle: first pair ``(x, y)`` in element order that qualifies.

    Both elements are required to have the same order so that the pair can
    seed a nicely orthogonal sequence.
    """
    qn = D.q_numerators
    iso = [int(i) for i in range(1, D.size) if qn[i] == 0]
    elems = [D.element(i) for i in iso]
    orders = [D.element_order(x) for x in elems]
    for a, x in enumerate(elems):
        for b in range(a + 1, len(elems)):
            y = elems[b]
            if orders[a] == orders[b] and D.eval_b(x, y) == 0 and weakly_independent(D, x, y):
                return x, y
    raise NotFoundError("no two isotropic orthogonal independent elements exist")


def submodule(D: FiniteQuadraticModule, basis, order: int) -> FiniteQuadraticModule:
    """The module spanned by ``basis`` (elements of ``D``), each of the given order."""
    basis = [D.reduce(b) for b in basis]
    k = len(basis)
    gram = [[D.eval_b(basis[i], basis[j]) for j in range(k)] for i in range(k)]
    qvals = [D.eval_q(b) for b in basis]
    return FiniteQuadraticModule([order] * k, gram, qvals)


def combine(D: FiniteQuadraticModule, basis, coeffs):
    """``sum coeffs[i] * basis[i]`` reduced in ``D``."""
    r = D.rank
    return D.reduce(tuple(sum(c * b[t] for c, b in zip(coeffs, basis)) for t in range(r)))
