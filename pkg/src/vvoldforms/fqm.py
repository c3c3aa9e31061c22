"""Finite quadratic modules (discriminant forms).

A module is stored by generator orders ``d_1, ..., d_r``, the Gram matrix of
pairings ``(g_i, g_j)`` in Q/Z and the values ``Q(g_i)``.  Elements are integer
coordinate tuples; the full group is enumerated in mixed-radix order with the
last coordinate running fastest, and that order is the row/column order of
every matrix built downstream.

Internally all values are kept as integer numerators over the level ``N``, so
the bulk operations (enumerating Q, pairing matrices, complements) are numpy
integer arithmetic modulo ``N``.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
import sympy

from . import linalg
from .arith import gauss_sum, qmodz, signature_from_gauss_sum
from .errors import (
    DegenerateError,
    IsotropyError,
    NotEvenError,
    SizeBoundError,
    ValidationError,
)

DEFAULT_SIZE_BOUND = 10**7

Element = tuple[int, ...]


# ---------------------------------------------------------------------------
# Jordan symbols


@dataclass(frozen=True)
class OddComponent:
    p: int
    e: int
    a: int

    def __str__(self):
        return f"{self.p}^{self.e}:a={self.a}"


@dataclass(frozen=True)
class TwoOddComponent:
    e: int
    a: int
    v: int

    p = 2

    def __str__(self):
        return f"2^{self.e}:a={self.a},v={self.v}"


@dataclass(frozen=True)
class TwoEvenComponent:
    e: int
    kind: str  # "A" (x = 0) or "B" (x = 2)

    p = 2

    def __str__(self):
        return f"2^{self.e}:{self.kind}"


Component = Union[OddComponent, TwoOddComponent, TwoEvenComponent]

_COMPONENT_RE = re.compile(
    r"^\s*(?P<p>\d+)\^(?P<e>\d+)\s*:\s*(?:"
    r"(?P<kind>[ABab])"
    r"|a\s*=\s*(?P<a>[+-]?\d+)(?:\s*,\s*v\s*=\s*(?P<v>[01]))?"
    r")\s*$"
)


def _normalize(c: Component) -> Component:
    if isinstance(c, OddComponent):
        if c.p < 3 or not sympy.isprime(c.p):
            raise ValidationError(f"{c.p} is not an odd prime")
        if c.e < 1:
            raise ValidationError("exponent must be positive")
        q = c.p**c.e
        if c.a % c.p == 0:
            raise ValidationError(f"a={c.a} must be coprime to p={c.p}")
        return OddComponent(c.p, c.e, c.a % q)
    if isinstance(c, TwoOddComponent):
        if c.e < 1:
            raise ValidationError("exponent must be positive")
        if c.a % 2 == 0:
            raise ValidationError(f"a={c.a} must be odd")
        if c.v not in (0, 1):
            raise ValidationError("v must be 0 or 1")
        q = 2**c.e
        t = (c.a + c.v * q) % (2 * q)
        a = t % q
        return TwoOddComponent(c.e, a, (t - a) // q)
    if isinstance(c, TwoEvenComponent):
        if c.e < 1:
            raise ValidationError("exponent must be positive")
        if c.kind not in ("A", "B"):
            raise ValidationError("even 2-adic block kind must be A or B")
        return c
    raise ValidationError(f"unknown component {c!r}")


@dataclass(frozen=True)
class JordanSymbol:
    """An ordered orthogonal sum of Jordan components.

    Text grammar: components joined by ``+``; ``p^e:a=<int>`` for odd ``p``,
    ``2^e:a=<odd>,v=<0|1>`` and ``2^e:A`` / ``2^e:B`` for ``p = 2``.
    """

    components: tuple[Component, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(_normalize(c) for c in self.components))

    @classmethod
    def parse(cls, text: str) -> "JordanSymbol":
        text = text.strip()
        if not text:
            return cls(())
        comps = []
        for part in text.split("+"):
            m = _COMPONENT_RE.match(part)
            if not m:
                raise ValidationError(f"cannot parse Jordan component {part!r}")
            p, e = int(m["p"]), int(m["e"])
            if m["kind"]:
                if p != 2:
                    raise ValidationError(f"block kind A/B needs p=2: {part!r}")
                comps.append(TwoEvenComponent(e, m["kind"].upper()))
            elif p == 2:
                if m["v"] is None:
                    raise ValidationError(f"2-adic odd component needs v: {part!r}")
                comps.append(TwoOddComponent(e, int(m["a"]), int(m["v"])))
            else:
                if m["v"] is not None:
                    raise ValidationError(f"v is only allowed for p=2: {part!r}")
                comps.append(OddComponent(p, e, int(m["a"])))
        return cls(tuple(comps))

    def __str__(self):
        return "+".join(str(c) for c in self.components)

    def __add__(self, other: "JordanSymbol") -> "JordanSymbol":
        return JordanSymbol(self.components + other.components)

    def __mul__(self, k: int) -> "JordanSymbol":
        return JordanSymbol(self.components * k)

    def component_ranks(self) -> list[int]:
        """Number of generators contributed by each component."""
        return [2 if isinstance(c, TwoEvenComponent) else 1 for c in self.components]


def _component_data(c: Component):
    """(orders, gram, qvals) of a single Jordan block."""
    if isinstance(c, OddComponent):
        q = c.p**c.e
        inv2 = pow(2, -1, q)
        return [q], [[Fraction(c.a, q)]], [Fraction(inv2 * c.a, q)]
    if isinstance(c, TwoOddComponent):
        q = 2**c.e
        return [q], [[Fraction(c.a, q)]], [Fraction(c.a + c.v * q, 2 * q)]
    q = 2**c.e
    x = 0 if c.kind == "A" else 2
    gram = [[Fraction(x, q), Fraction(1, q)], [Fraction(1, q), Fraction(x, q)]]
    qv = Fraction(0) if x == 0 else Fraction(1, q)
    return [q, q], gram, [qv, qv]


# ---------------------------------------------------------------------------
# Subgroups


@dataclass(frozen=True)
class Subgroup:
    """A subgroup given by generators and its sorted element indices."""

    generators: tuple[Element, ...]
    elements: tuple[int, ...]

    def __len__(self):
        return len(self.elements)

    def __contains__(self, idx):
        return idx in self._set

    @cached_property
    def _set(self) -> frozenset:
        return frozenset(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    def key(self) -> tuple[int, ...]:
        return self.elements


# ---------------------------------------------------------------------------
# Finite quadratic modules


class FiniteQuadraticModule:
    """A discriminant form ``(D, Q)`` with an explicit generator list.

    Parameters
    ----------
    orders : sequence of int
        Orders ``d_i`` of the generators.
    gram : r x r matrix of rationals
        ``gram[i][j] = (g_i, g_j)`` modulo 1.
    qvals : sequence of rationals
        ``Q(g_i)`` modulo 1.
    """

    def __init__(self, orders, gram, qvals, *, check: bool = True, size_bound: int = DEFAULT_SIZE_BOUND):
        self.orders = tuple(int(d) for d in orders)
        r = len(self.orders)
        self.gram = tuple(tuple(qmodz(x) for x in row) for row in gram)
        self.qvals = tuple(qmodz(x) for x in qvals)
        self.size_bound = size_bound
        if len(self.gram) != r or any(len(row) != r for row in self.gram) or len(self.qvals) != r:
            raise ValidationError("orders, gram and qvals have inconsistent sizes")
        if any(d < 1 for d in self.orders):
            raise ValidationError("generator orders must be positive")
        N = 1
        for v in itertools.chain(self.qvals, *self.gram):
            N = math.lcm(N, v.denominator)
        self.level = N
        self._B = np.array([[int(x * N) for x in row] for row in self.gram], dtype=np.int64).reshape(r, r)
        self._q = np.array([int(x * N) for x in self.qvals], dtype=np.int64)
        if check:
            self._validate()

    def _validate(self):
        r = self.rank
        for i in range(r):
            if self.gram[i][i] != qmodz(2 * self.qvals[i]):
                raise ValidationError(f"(g_{i}, g_{i}) != 2 Q(g_{i})")
            if qmodz(self.orders[i] ** 2 * self.qvals[i]) != 0:
                raise ValidationError(f"d_{i}^2 Q(g_{i}) is not integral")
            for j in range(r):
                if self.gram[i][j] != self.gram[j][i]:
                    raise ValidationError("gram matrix is not symmetric")
                if qmodz(self.orders[i] * self.gram[i][j]) != 0:
                    raise ValidationError(f"d_{i} (g_{i}, g_{j}) is not integral")
        # Q(d_i g_i) = d_i^2 Q(g_i) = 0 is needed for Q to be well defined on
        # Z/d_i, together with d_i (g_i, g_j) = 0.
        if self.size <= 10**5:
            if self._radical_size() != 1:
                raise DegenerateError("the bilinear form is degenerate")

    # -- basic invariants ---------------------------------------------------
    @property
    def rank(self) -> int:
        return len(self.orders)

    @cached_property
    def size(self) -> int:
        return math.prod(self.orders)

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"FiniteQuadraticModule(orders={self.orders}, level={self.level})"

    def _check_size(self, bound=None):
        bound = self.size_bound if bound is None else bound
        if self.size > bound:
            raise SizeBoundError(f"|D| = {self.size} exceeds the enumeration bound {bound}")

    # -- element indexing -----------------------------------------------------
    @cached_property
    def _radix(self) -> np.ndarray:
        w = np.ones(self.rank, dtype=np.int64)
        for i in range(self.rank - 2, -1, -1):
            w[i] = w[i + 1] * self.orders[i + 1]
        return w

    @cached_property
    def coords(self) -> np.ndarray:
        """All elements as an ``(|D|, r)`` coordinate array in canonical order."""
        self._check_size()
        idx = np.arange(self.size, dtype=np.int64)
        out = np.zeros((self.size, self.rank), dtype=np.int64)
        for i in range(self.rank):
            out[:, i] = (idx // self._radix[i]) % self.orders[i]
        out.flags.writeable = False
        return out

    def elements(self) -> list[Element]:
        return [tuple(int(x) for x in row) for row in self.coords]

    def index(self, x) -> int:
        x = self.reduce(x)
        return int(np.dot(np.array(x, dtype=np.int64), self._radix)) if self.rank else 0

    def indices(self, X: np.ndarray) -> np.ndarray:
        """Vectorised index of coordinate rows (reduced first)."""
        X = np.asarray(X, dtype=np.int64)
        if self.rank == 0:
            return np.zeros(X.shape[:-1], dtype=np.int64)
        return (X % np.array(self.orders, dtype=np.int64)) @ self._radix

    def element(self, idx: int) -> Element:
        return tuple(int((idx // int(self._radix[i])) % self.orders[i]) for i in range(self.rank))

    def reduce(self, x) -> Element:
        if len(x) != self.rank:
            raise ValidationError(f"element {x!r} has {len(x)} coordinates, expected {self.rank}")
        return tuple(int(a) % d for a, d in zip(x, self.orders))

    def _check_element(self, x) -> Element:
        if len(x) != self.rank:
            raise ValidationError(f"element {x!r} has {len(x)} coordinates, expected {self.rank}")
        for a, d in zip(x, self.orders):
            if not 0 <= int(a) < d:
                raise ValidationError(f"coordinate {a} out of range [0, {d})")
        return tuple(int(a) for a in x)

    def add_indices(self, a, b):
        """Index of ``element(a) + element(b)``; broadcasts over numpy arrays."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for i in range(self.rank):
            w = int(self._radix[i])
            d = self.orders[i]
            out += (((a // w) % d + (b // w) % d) % d) * w
        return out

    def neg_indices(self, a):
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros(a.shape, dtype=np.int64)
        for i in range(self.rank):
            w = int(self._radix[i])
            d = self.orders[i]
            out += ((-((a // w) % d)) % d) * w
        return out

    def scale_indices(self, k, a):
        """Index of ``k * element(a)``; broadcasts over ``k`` and ``a``."""
        k = np.asarray(k, dtype=np.int64)
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros(np.broadcast(k, a).shape, dtype=np.int64)
        for i in range(self.rank):
            w = int(self._radix[i])
            d = self.orders[i]
            out += ((k * ((a // w) % d)) % d) * w
        return out

    def element_order(self, x) -> int:
        x = self.reduce(x)
        o = 1
        for a, d in zip(x, self.orders):
            o = math.lcm(o, d // math.gcd(a, d))
        return o

    # -- evaluation ---------------------------------------------------------
    def _q_num(self, X: np.ndarray) -> np.ndarray:
        """Numerators of Q over the level for coordinate rows ``X``."""
        X = np.asarray(X, dtype=np.int64)
        N = self.level
        Xr = X % N
        # Q(x) = sum x_i^2 q_i + sum_{i<j} x_i x_j b_ij ; reduce often to stay in int64
        acc = (((Xr * Xr) % N) * self._q).sum(axis=-1) % N
        for i in range(self.rank):
            for j in range(i + 1, self.rank):
                if self._B[i, j]:
                    acc = (acc + ((Xr[..., i] * Xr[..., j]) % N) * self._B[i, j]) % N
        return acc

    def _b_num(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Pairing numerators for all pairs of rows: shape ``(len(X), len(Y))``."""
        N = self.level
        X = np.asarray(X, dtype=np.int64) % N
        Y = np.asarray(Y, dtype=np.int64) % N
        XB = (X @ self._B) % N
        return (XB @ Y.T) % N

    def eval_q(self, x) -> Fraction:
        x = self._check_element(x)
        return Fraction(int(self._q_num(np.array([x]))[0]), self.level) if self.rank else Fraction(0)

    def eval_b(self, x, y) -> Fraction:
        x = self._check_element(x)
        y = self._check_element(y)
        if not self.rank:
            return Fraction(0)
        return Fraction(int(self._b_num(np.array([x]), np.array([y]))[0, 0]), self.level)

    @cached_property
    def q_numerators(self) -> np.ndarray:
        """``N * Q(gamma) mod N`` for all elements in canonical order."""
        if self.rank == 0:
            return np.zeros(1, dtype=np.int64)
        return self._q_num(self.coords)

    def all_q_values(self) -> list[Fraction]:
        N = self.level
        return [Fraction(int(v), N) for v in self.q_numerators]

    def pairing_matrix(self) -> np.ndarray:
        """``N * (gamma, beta) mod N`` for all pairs, in canonical order."""
        if self.rank == 0:
            return np.zeros((1, 1), dtype=np.int64)
        return self._b_num(self.coords, self.coords)

    def _radical_size(self) -> int:
        if self.rank == 0:
            return 1
        # gamma is in the radical iff (gamma, g_j) = 0 for every generator
        vals = (self.coords % self.level) @ self._B % self.level
        return int(np.count_nonzero(~vals.any(axis=1)))

    def is_nondegenerate(self) -> bool:
        return self._radical_size() == 1

    # -- invariants -----------------------------------------------------------
    @cached_property
    def signature(self) -> int:
        return signature_from_gauss_sum(gauss_sum(self), self.size)

    def gauss_sum(self):
        return gauss_sum(self)

    def p_parts(self) -> dict[int, int]:
        return {int(p): int(k) for p, k in sympy.factorint(self.size).items()}

    # -- JSON ---------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "orders": list(self.orders),
            "gram": [[str(x) for x in row] for row in self.gram],
            "qvals": [str(x) for x in self.qvals],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteQuadraticModule":
        return cls(
            data["orders"],
            [[Fraction(x) for x in row] for row in data["gram"]],
            [Fraction(x) for x in data["qvals"]],
        )


# ---------------------------------------------------------------------------
# Constructors


def trivial_module() -> FiniteQuadraticModule:
    return FiniteQuadraticModule((), (), ())


def from_jordan(symbol: Union[JordanSymbol, str]) -> FiniteQuadraticModule:
    """Orthogonal sum of the Jordan blocks of ``symbol``."""
    if isinstance(symbol, str):
        symbol = JordanSymbol.parse(symbol)
    D = trivial_module()
    blocks = [FiniteQuadraticModule(*_component_data(c), check=False) for c in symbol.components]
    for B in blocks:
        D = direct_sum(D, B, check=False)
    D._validate()
    D.jordan = symbol
    return D


def direct_sum(A: FiniteQuadraticModule, B: FiniteQuadraticModule, *, check: bool = True) -> FiniteQuadraticModule:
    ra, rb = A.rank, B.rank
    gram = [[Fraction(0)] * (ra + rb) for _ in range(ra + rb)]
    for i in range(ra):
        for j in range(ra):
            gram[i][j] = A.gram[i][j]
    for i in range(rb):
        for j in range(rb):
            gram[ra + i][ra + j] = B.gram[i][j]
    return FiniteQuadraticModule(A.orders + B.orders, gram, A.qvals + B.qvals, check=check)


def from_even_lattice(gram: Sequence[Sequence[int]]) -> FiniteQuadraticModule:
    """Discriminant form ``L'/L`` of an even lattice with Gram matrix ``gram``."""
    G = [[int(x) for x in row] for row in gram]
    n = len(G)
    if any(len(row) != n for row in G):
        raise ValidationError("Gram matrix must be square")
    for i in range(n):
        for j in range(n):
            if G[i][j] != G[j][i]:
                raise ValidationError("Gram matrix must be symmetric")
        if G[i][i] % 2:
            raise NotEvenError(f"diagonal entry {G[i][i]} is odd; the lattice is not even")
    if n == 0:
        return trivial_module()
    if sympy.Matrix(G).det() == 0:
        raise DegenerateError("Gram matrix is singular")
    U, S, V = linalg.smith_normal_form(G)
    Uinv = linalg.unimodular_inverse(U)
    Ginv = linalg.rational_inverse(G)
    orders, vecs = [], []
    for i in range(n):
        d = S[i][i]
        if d > 1:
            # y = U^-1 e_i generates a cyclic factor of Z^n / G Z^n; x = G^-1 y lies in L'
            y = [Uinv[r][i] for r in range(n)]
            x = [sum(Ginv[r][c] * y[c] for c in range(n)) for r in range(n)]
            orders.append(d)
            vecs.append((x, y))
    k = len(orders)
    gram_q = [[qmodz(sum(a * b for a, b in zip(vecs[i][0], vecs[j][1]))) for j in range(k)] for i in range(k)]
    qvals = [qmodz(sum(a * b for a, b in zip(vecs[i][0], vecs[i][1])) / 2) for i in range(k)]
    return FiniteQuadraticModule(orders, gram_q, qvals)


def load_lattice_json(path) -> FiniteQuadraticModule:
    with open(path) as fh:
        data = json.load(fh)
    if "gram" not in data:
        raise ValidationError("lattice JSON needs a 'gram' entry")
    return from_even_lattice(data["gram"])


# ---------------------------------------------------------------------------
# Subgroups


def subgroup_from_indices(D: FiniteQuadraticModule, gen_indices: Iterable[int]) -> Subgroup:
    elems = np.zeros(1, dtype=np.int64)
    gens = []
    for g in gen_indices:
        g = int(g)
        if g in set(elems.tolist()):
            continue
        o = D.element_order(D.element(g))
        multiples = D.scale_indices(np.arange(o), g) if o > 1 else np.zeros(1, dtype=np.int64)
        elems = np.unique(D.add_indices(elems[:, None], multiples[None, :]).ravel())
        gens.append(D.element(g))
    return Subgroup(tuple(gens), tuple(int(x) for x in elems))


def subgroup(D: FiniteQuadraticModule, generators: Iterable) -> Subgroup:
    """Subgroup generated by elements given as coordinate tuples."""
    return subgroup_from_indices(D, [D.index(g) for g in generators])


def trivial_subgroup(D: FiniteQuadraticModule) -> Subgroup:
    return Subgroup((), (0,))


def element_orders(D: FiniteQuadraticModule, idx) -> np.ndarray:
    """Orders of the elements with the given indices."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.ones(idx.shape, dtype=np.int64)
    for i, d in enumerate(D.orders):
        c = (idx // int(D._radix[i])) % d
        out = np.lcm(out, d // np.gcd(c, d))
    return out


def _greedy_generators(D: FiniteQuadraticModule, idx: np.ndarray) -> Subgroup:
    # prefer elements of large order so few generators are needed
    idx = np.asarray(idx, dtype=np.int64)
    orders = element_orders(D, idx)
    cand = idx[np.argsort(-orders, kind="stable")]
    target = set(int(i) for i in idx)
    span = {0}
    gens = []
    for c in cand:
        c = int(c)
        if len(span) == len(target):
            break
        if c not in span:
            gens.append(c)
            span = set(subgroup_from_indices(D, gens).elements)
    if span != target:
        raise ValidationError("index set is not a subgroup")
    return Subgroup(tuple(D.element(g) for g in gens), tuple(sorted(target)))


def weakly_independent(D: FiniteQuadraticModule, x, y) -> bool:
    """``a x = b y`` forces ``a x = b y = 0``, i.e. ``<x>`` and ``<y>`` meet trivially."""
    X = subgroup(D, [x])
    Y = subgroup(D, [y])
    return len(X._set & Y._set) == 1


def orthogonal_complement(D: FiniteQuadraticModule, S: Subgroup) -> Subgroup:
    """``{gamma : (gamma, s) = 0 for all s in S}``."""
    if D.rank == 0:
        return Subgroup((), (0,))
    gens = np.array(S.generators, dtype=np.int64).reshape(-1, D.rank)
    if len(gens) == 0:
        idx = np.arange(D.size, dtype=np.int64)
    else:
        vals = D._b_num(D.coords, gens)
        idx = np.nonzero(~vals.any(axis=1))[0]
    return _greedy_generators(D, idx)


def _perp_mask(D: FiniteQuadraticModule, S: Subgroup) -> np.ndarray:
    gens = np.array(S.generators, dtype=np.int64).reshape(-1, D.rank)
    if len(gens) == 0:
        return np.ones(D.size, dtype=bool)
    return ~D._b_num(D.coords, gens).any(axis=1)


def is_isotropic(D: FiniteQuadraticModule, S: Subgroup) -> bool:
    return not D.q_numerators[np.array(S.elements, dtype=np.int64)].any()


def isotropic_subgroups(
    D: FiniteQuadraticModule,
    include_trivial: bool = False,
    max_order: int | None = None,
    size_bound: int = 10**5,
) -> list[Subgroup]:
    """All isotropic subgroups of ``D``, sorted by order then element list.

    Built by breadth-first closure: start from the cyclic subgroups generated
    by isotropic elements and repeatedly adjoin an isotropic element that is
    orthogonal to the current subgroup.
    """
    D._check_size(size_bound)
    qn = D.q_numerators
    iso = np.nonzero(qn == 0)[0]
    iso = iso[iso != 0]
    found: dict[tuple, Subgroup] = {}
    frontier = []
    for x in iso:
        S = subgroup_from_indices(D, [int(x)])
        if max_order is not None and S.order > max_order:
            continue
        if S.key() not in found and is_isotropic(D, S):
            found[S.key()] = S
            frontier.append(S)
    while frontier:
        nxt = []
        for S in frontier:
            # a proper extension at least doubles the order
            if max_order is not None and 2 * S.order > max_order:
                continue
            perp = _perp_mask(D, S)
            for x in iso:
                x = int(x)
                if x in S or not perp[x]:
                    continue
                T = subgroup_from_indices(D, [D.index(g) for g in S.generators] + [x])
                if T.key() in found or (max_order is not None and T.order > max_order):
                    continue
                if is_isotropic(D, T):
                    found[T.key()] = T
                    nxt.append(T)
        frontier = nxt
    out = sorted(found.values(), key=lambda S: (S.order, S.elements))
    if include_trivial:
        out.insert(0, trivial_subgroup(D))
    return out


def all_subgroups_bruteforce(D: FiniteQuadraticModule) -> list[Subgroup]:
    """Every subgroup, by closing all subsets of a generating set; for small tests only."""
    D._check_size(256)
    seen: dict[tuple, Subgroup] = {}
    frontier = [trivial_subgroup(D)]
    seen[(0,)] = frontier[0]
    while frontier:
        nxt = []
        for S in frontier:
            # S + <x> depends only on the coset x + S
            covered = np.zeros(D.size, dtype=bool)
            members = np.array(S.elements, dtype=np.int64)
            covered[members] = True
            gens = [D.index(g) for g in S.generators]
            for x in range(D.size):
                if covered[x]:
                    continue
                covered[D.add_indices(x, members)] = True
                T = subgroup_from_indices(D, gens + [x])
                if T.key() not in seen:
                    seen[T.key()] = T
                    nxt.append(T)
        frontier = nxt
    return list(seen.values())


# ---------------------------------------------------------------------------
# Quotients


@dataclass
class Quotient:
    """``D_H = H^perp / H`` together with the class map.

    ``projection[gamma]`` is the index of ``gamma + H`` in ``module`` for
    ``gamma`` in ``H^perp`` and ``-1`` otherwise.
    """

    module: FiniteQuadraticModule
    projection: np.ndarray
    lifts: list[Element]
    perp: Subgroup
    subgroup: Subgroup

    def class_members(self) -> list[np.ndarray]:
        order = np.argsort(self.projection, kind="stable")
        vals = self.projection[order]
        start = np.searchsorted(vals, 0)
        members = order[start:]
        counts = np.bincount(vals[start:], minlength=self.module.size)
        return np.split(members, np.cumsum(counts)[:-1])


def _prime_power_split(D: FiniteQuadraticModule, gen: Element, order: int) -> list[tuple[Element, int]]:
    out = []
    for p, a in sorted(sympy.factorint(order).items()):
        q = int(p) ** int(a)
        k = order // q
        out.append((D.reduce(tuple(k * c for c in gen)), q))
    return out


def quotient(D: FiniteQuadraticModule, H: Subgroup) -> Quotient:
    """The quotient form ``D_H = H^perp / H`` with ``Q_H(gamma + H) = Q(gamma)``."""
    if not is_isotropic(D, H):
        raise IsotropyError("H is not isotropic, Q_H would be ill defined")
    if len(H) == 1:
        # D / {0} is D itself with the identity class map
        basis = [tuple(int(i == j) for i in range(D.rank)) for j in range(D.rank)]
        return Quotient(D, np.arange(D.size, dtype=np.int64), basis, _greedy_generators(D, np.arange(D.size)), H)
    perp = orthogonal_complement(D, H)
    r = D.rank
    s_gens = [list(g) for g in perp.generators]
    # generators rederived from the element set so class labels depend on H alone
    h_gens = [list(g) for g in _greedy_generators(D, np.array(H.elements)).generators]
    k = len(s_gens)
    if k == 0:
        proj = np.full(D.size, -1, dtype=np.int64)
        proj[0] = 0
        return Quotient(trivial_module(), proj, [], perp, H)
    # relations: integer c in Z^k with sum c_i s_i in H, from the kernel of [S | Hg | diag(orders)]
    cols = s_gens + h_gens + [[int(i == j) * D.orders[i] for i in range(r)] for j in range(r)]
    Mx = linalg.transpose(cols)
    ker = linalg.integer_kernel(Mx)
    rels = [v[:k] for v in ker]
    # Z^k / span(rels) ~ sum Z / d_i via U
    R = linalg.transpose(rels) if rels else [[0] for _ in range(k)]
    U, Sd, _ = linalg.smith_normal_form(R)
    Uinv = linalg.unimodular_inverse(U)
    diag = [Sd[i][i] if i < len(Sd[0]) else 0 for i in range(k)]
    gens = []
    for j in range(k):
        d = diag[j]
        if d == 0:
            raise ValidationError("quotient is infinite; relation lattice computation failed")
        if d == 1:
            continue
        coeff = [Uinv[i][j] for i in range(k)]
        g = D.reduce(tuple(sum(coeff[i] * s_gens[i][t] for i in range(k)) for t in range(r)))
        gens.extend(_prime_power_split(D, g, d))
    gens.sort(key=lambda t: t[1])
    lifts = [g for g, _ in gens]
    orders = [d for _, d in gens]
    m = len(lifts)
    gram = [[D.eval_b(lifts[i], lifts[j]) for j in range(m)] for i in range(m)]
    qvals = [D.eval_q(g) for g in lifts]
    DH = FiniteQuadraticModule(orders, gram, qvals, check=False)
    if len(perp) != DH.size * len(H):
        raise ValidationError("quotient size mismatch; this is a bug")
    DH._validate()
    # class map
    lift_coords = (DH.coords @ np.array(lifts, dtype=np.int64).reshape(m, r)) if m else np.zeros((1, r), np.int64)
    lift_idx = D.indices(lift_coords)
    Hidx = np.array(H.elements, dtype=np.int64)
    members = D.add_indices(lift_idx[:, None], Hidx[None, :])
    proj = np.full(D.size, -1, dtype=np.int64)
    proj[members.ravel()] = np.repeat(np.arange(DH.size, dtype=np.int64), len(Hidx))
    if np.count_nonzero(proj >= 0) != len(perp):
        raise ValidationError("class map does not cover H^perp; this is a bug")
    return Quotient(DH, proj, lifts, perp, H)
