"""Exact integer and rational linear algebra.

Matrices are lists of lists of Python ints (or Fractions for the rational
routines).  Everything here is exact; the only numpy code is the modular rank,
which works over a prime field and is used as a certificate of full rank.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

Matrix = list[list[int]]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    if not A:
        return []
    k = len(B)
    m = len(B[0]) if B else 0
    return [[sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m)] for i in range(len(A))]


def transpose(A: Sequence[Sequence]) -> list[list]:
    return [list(r) for r in zip(*A)] if A else []


def smith_normal_form(A: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(U, S, V)`` with ``U A V = S`` diagonal, ``U`` and ``V`` unimodular.

    The diagonal satisfies ``S[i][i] | S[i+1][i+1]`` and is nonnegative.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    S = [[int(x) for x in row] for row in A]
    U = identity(m)
    V = identity(n)

    def swap_rows(i, j):
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in S:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, c):  # row_dst += c * row_src
        S[dst] = [a + c * b for a, b in zip(S[dst], S[src])]
        U[dst] = [a + c * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, c):
        for row in S:
            row[dst] += c * row[src]
        for row in V:
            row[dst] += c * row[src]

    t = 0
    while t < min(m, n):
        # pivot: smallest nonzero absolute value in the remaining block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if S[i][j] and (best is None or abs(S[i][j]) < abs(S[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        done = False
        while not done:
            done = True
            for i in range(t + 1, m):
                if S[i][t]:
                    q = S[i][t] // S[t][t]
                    add_row(i, t, -q)
                    if S[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if S[t][j]:
                    q = S[t][j] // S[t][t]
                    add_col(j, t, -q)
                    if S[t][j]:
                        swap_cols(t, j)
                        done = False
            if done:
                # divisibility condition on the rest of the block
                for i in range(t + 1, m):
                    for j in range(t + 1, n):
                        if S[i][j] % S[t][t]:
                            add_row(t, i, 1)
                            done = False
                            break
                    if not done:
                        break
        if S[t][t] < 0:
            S[t] = [-x for x in S[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return U, S, V


def integer_kernel(A: Sequence[Sequence[int]]) -> Matrix:
    """Basis of ``{x in Z^n : A x = 0}`` as a list of column vectors (lists)."""
    m = len(A)
    n = len(A[0]) if m else 0
    if m == 0:
        return [[int(i == j) for i in range(n)] for j in range(n)]
    _, S, V = smith_normal_form(A)
    rank = sum(1 for i in range(min(m, n)) if S[i][i])
    return [[V[i][j] for i in range(n)] for j in range(rank, n)]


def unimodular_inverse(U: Sequence[Sequence[int]]) -> Matrix:
    inv = rational_inverse(U)
    out = []
    for row in inv:
        if any(x.denominator != 1 for x in row):
            raise ValueError("matrix is not unimodular")
        out.append([int(x) for x in row])
    return out


def rational_inverse(A: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c]), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        M[c], M[p] = M[p], M[c]
        piv = M[c][c]
        M[c] = [x / piv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [row[n:] for row in M]


def _integer_rows(rows: Sequence[Sequence]) -> list[list[int]]:
    out = []
    for row in rows:
        den = 1
        for x in row:
            if isinstance(x, Fraction):
                den = math.lcm(den, x.denominator)
        out.append([int(Fraction(x) * den) for x in row])
    return out


def _primitive(row: list[int]) -> list[int]:
    g = 0
    for x in row:
        g = math.gcd(g, x)
    if g > 1:
        return [x // g for x in row]
    return row


def echelon(rows: Sequence[Sequence], ncols: int | None = None) -> tuple[list[list[int]], list[int]]:
    """Fraction-free reduced row echelon form.

    Rows are scaled to integers and kept primitive (divided by their content)
    after every elimination step, so entries never become fractions.  Returns
    the nonzero echelon rows and the pivot columns.  Pivot columns are zero in
    every other row.
    """
    M = [r for r in _integer_rows(rows)]
    if ncols is None:
        ncols = len(M[0]) if M else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = None
        for i in range(r, len(M)):
            if M[i][c]:
                if p is None or abs(M[i][c]) < abs(M[p][c]):
                    p = i
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pr = M[r]
        a = pr[c]
        for i in range(len(M)):
            if i != r and M[i][c]:
                b = M[i][c]
                g = math.gcd(a, b)
                fa, fb = a // g, b // g
                M[i] = _primitive([fa * x - fb * y for x, y in zip(M[i], pr)])
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    rows_out = [_primitive(row) for row in M[:r]]
    for row, c in zip(rows_out, pivots):
        if row[c] < 0:
            row[:] = [-x for x in row]
    return rows_out, pivots


def rank(rows: Sequence[Sequence], ncols: int | None = None) -> int:
    return len(echelon(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[int]]:
    """Basis of the rational right kernel ``{x : A x = 0}`` as primitive integer vectors."""
    E, pivots = echelon(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        # x_f = L, x_pivot = -L * E[row][f] / E[row][pivot] with L the lcm of pivots
        L = 1
        for row, c in zip(E, pivots):
            if row[f]:
                L = math.lcm(L, row[c])
        x = [0] * ncols
        x[f] = L
        for row, c in zip(E, pivots):
            if row[f]:
                x[c] = -L * row[f] // row[c]
        basis.append(_primitive(x))
    return basis


def det(A: Sequence[Sequence[int]]) -> int:
    """Integer determinant by fraction-free (Bareiss) elimination."""
    M = [[int(x) for x in row] for row in A]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k]), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1] if n else 1


def rank_mod_p(A: np.ndarray, p: int = 2_147_483_629) -> int:
    """Rank of an integer matrix over ``GF(p)``.

    This is a lower bound for the rational rank, so ``rank_mod_p(A) == ncols``
    certifies that ``A`` has trivial rational kernel.
    """
    M = np.array(A, dtype=np.int64) % p
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        inv = pow(int(M[r, c]), -1, p)
        M[r] = (M[r] * inv) % p
        col = M[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            # entries < p < 2^31 so products fit in int64
            M[nzr] = (M[nzr] - (col[nzr, None] * M[r][None, :]) % p) % p
        r += 1
    return r
