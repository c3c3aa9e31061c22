"""Up and down maps between C[D] and the quotients C[H^perp / H].

For subgroups ``H_1, ..., H_n`` the down map sends ``e_gamma`` to the sum of
``[i, gamma + H_i]`` over the ``i`` with ``gamma`` in ``H_i^perp``; the up map
is its transpose.  Rows of the down matrix are the classes of the quotients,
block by block in list order, with classes in the order fixed by
:func:`vvoldforms.fqm.quotient`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np
import sympy

from . import linalg, padic
from .errors import CertificateError, HypothesisError, IsotropyError, ValidationError
from .fqm import (
    FiniteQuadraticModule,
    JordanSymbol,
    Quotient,
    Subgroup,
    TwoEvenComponent,
    from_jordan,
    is_isotropic,
    isotropic_subgroups,
    quotient,
    subgroup,
    weakly_independent,
)
from .weil import ScaledMatrix, rho_generator, weil_order


class QuotientCache:
    """Memoizes quotients of one module by subgroup element set."""

    def __init__(self, D: FiniteQuadraticModule):
        self.D = D
        self._store: dict[tuple, Quotient] = {}

    def get(self, H: Subgroup) -> Quotient:
        q = self._store.get(H.key())
        if q is None:
            q = quotient(self.D, H)
            self._store[H.key()] = q
        return q


@dataclass
class LiftSystem:
    base: FiniteQuadraticModule
    subgroups: list[Subgroup]
    quotients: list[Quotient]
    offsets: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.offsets = [0]
        for q in self.quotients:
            self.offsets.append(self.offsets[-1] + q.module.size)

    @property
    def n_rows(self) -> int:
        return self.offsets[-1]

    @property
    def n_cols(self) -> int:
        return self.base.size

    def row_of(self, block: int, cls: int) -> int:
        return self.offsets[block] + cls

    def row_label(self, row: int) -> tuple[int, int]:
        block = int(np.searchsorted(self.offsets, row, side="right")) - 1
        return block, row - self.offsets[block]

    def down_matrix(self) -> np.ndarray:
        M = np.zeros((self.n_rows, self.n_cols), dtype=np.int64)
        for i, q in enumerate(self.quotients):
            cols = np.nonzero(q.projection >= 0)[0]
            M[self.offsets[i] + q.projection[cols], cols] = 1
        return M

    def up_matrix(self) -> np.ndarray:
        return self.down_matrix().T.copy()

    def block_down(self, i: int) -> np.ndarray:
        q = self.quotients[i]
        M = np.zeros((q.module.size, self.n_cols), dtype=np.int64)
        cols = np.nonzero(q.projection >= 0)[0]
        M[q.projection[cols], cols] = 1
        return M

    def apply_up(self, zeta: Sequence) -> list[Fraction]:
        """``up(zeta)`` for a rational vector indexed by the rows."""
        zeta = [Fraction(z) for z in zeta]
        den = math.lcm(1, *(z.denominator for z in zeta))
        out = self.apply_up_int(np.array([int(z * den) for z in zeta], dtype=object))
        return [Fraction(int(x), den) for x in out]

    def apply_up_int(self, zeta: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_cols, dtype=zeta.dtype)
        for i, q in enumerate(self.quotients):
            mask = q.projection >= 0
            out[mask] += zeta[self.offsets[i] + q.projection[mask]]
        return out

    def up_is_basis_vector(self, zeta: Sequence, idx: int) -> bool:
        """``up(zeta) == e_idx`` exactly."""
        nz = [(r, Fraction(z)) for r, z in enumerate(zeta) if z]
        den = math.lcm(1, *(z.denominator for _, z in nz))
        ints = np.zeros(self.n_rows, dtype=object)
        for r, z in nz:
            ints[r] = int(z * den)
        out = self.apply_up_int(ints)
        target = np.zeros(self.n_cols, dtype=object)
        target[idx] = den
        return bool(np.array_equal(out, target))

    def apply_down(self, v: Sequence) -> list[Fraction]:
        out = [Fraction(0)] * self.n_rows
        for i, q in enumerate(self.quotients):
            off = self.offsets[i]
            for g in np.nonzero(q.projection >= 0)[0]:
                out[off + int(q.projection[g])] += v[int(g)]
        return out


def build_lift_system(
    D: FiniteQuadraticModule,
    subgroups: Iterable[Subgroup],
    include_trivial: bool = False,
    cache: QuotientCache | None = None,
) -> LiftSystem:
    subgroups = list(subgroups)
    cache = cache or QuotientCache(D)
    for H in subgroups:
        if len(H) == 1 and not include_trivial:
            raise ValidationError("the trivial subgroup needs include_trivial=True")
        if not is_isotropic(D, H):
            raise IsotropyError(f"subgroup generated by {list(H.generators)} is not isotropic")
    return LiftSystem(D, subgroups, [cache.get(H) for H in subgroups])


def all_isotropic_system(D: FiniteQuadraticModule, include_trivial: bool = False, max_order: int | None = None) -> LiftSystem:
    subs = isotropic_subgroups(D, include_trivial=include_trivial, max_order=max_order)
    return build_lift_system(D, subs, include_trivial=include_trivial)


def check_homomorphism(D: FiniteQuadraticModule, H: Subgroup) -> list[dict]:
    """Exact intertwining identities for ``down_H`` and ``up_H`` with ``g`` in ``{S, T}``."""
    q = quotient(D, H)
    L = weil_order(D)
    base = D.size
    down = ScaledMatrix.from_integer(LiftSystem(D, [H], [q]).down_matrix(), L, base)
    up = down.transpose()
    reports = []
    for g in ("S", "T"):
        r = rho_generator(D, g, L, base)
        e = rho_generator(q.module, g, L, base)
        for name, lhs, rhs in (
            (f"eta({g}) down = down rho({g})", e @ down, down @ r),
            (f"rho({g}) up = up eta({g})", r @ up, up @ e),
        ):
            ok = lhs == rhs
            rep = {"check": name, "status": "pass" if ok else "fail"}
            if not ok:
                idx = lhs.first_difference(rhs)
                rep["counterexample"] = {"g": g, "row": idx[0] if idx else None, "column": idx[1] if idx else None}
            reports.append(rep)
    return reports


def kernel_down(system: LiftSystem) -> list[list[int]]:
    """Rational basis of ``ker(down)`` as primitive integer vectors."""
    if not system.subgroups:
        n = system.n_cols
        return [[int(i == j) for i in range(n)] for j in range(n)]
    return linalg.nullspace(system.down_matrix().tolist(), system.n_cols)


def rank_up(system: LiftSystem) -> int:
    if not system.subgroups:
        return 0
    return linalg.rank(system.up_matrix().tolist(), system.n_rows)


def is_up_surjective(system: LiftSystem) -> bool:
    """``rank(up) = |D|``, cross-checked against ``ker(down) = 0``."""
    full = rank_up(system) == system.n_cols
    trivial_kernel = not kernel_down(system)
    if full != trivial_kernel:
        raise CertificateError("rank(up) and ker(down) disagree; this is a bug")
    return full


def gram_of_down(system: LiftSystem) -> np.ndarray:
    """``down^T down`` accumulated class by class; full rank iff up is surjective."""
    n = system.n_cols
    G = np.zeros((n, n), dtype=np.int64)
    for q in system.quotients:
        for members in q.class_members():
            G[np.ix_(members, members)] += 1
    return G


def is_up_surjective_mod_p(system: LiftSystem) -> bool:
    """Full rank of ``down^T down`` over a large prime field.

    Full rank mod a prime implies full rational rank, so a ``True`` here is a
    proof; ``False`` is inconclusive.
    """
    return linalg.rank_mod_p(gram_of_down(system)) == system.n_cols


# ---------------------------------------------------------------------------
# nicely orthogonal sequences


@dataclass
class NiceSequence:
    p: int
    order: int
    generators: list[tuple[int, ...]]
    subgroups: list[Subgroup]
    target: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "order": self.order,
            "generators": [list(g) for g in self.generators],
            "target": list(self.target),
        }


@dataclass
class NiceCheck:
    ok: bool
    condition: str | None = None

    def __bool__(self):
        return self.ok


def _scale(D, k, x):
    return D.reduce(tuple(k * c for c in x))


def _add(D, x, y):
    return D.reduce(tuple(a + b for a, b in zip(x, y)))


def nice_sequence(D: FiniteQuadraticModule, gamma, delta, mu, p: int, e: int) -> NiceSequence:
    """``p + 1`` subgroups generated by ``p^(e-1) mu`` and ``p^(e-1) (delta + j mu)``."""
    gamma, delta, mu = D.reduce(gamma), D.reduce(delta), D.reduce(mu)
    q = p**e
    if D.eval_q(delta) or D.eval_q(mu):
        raise ValidationError("delta and mu must be isotropic")
    if D.eval_b(delta, mu):
        raise ValidationError("delta and mu must be orthogonal")
    if D.eval_b(gamma, delta) or D.eval_b(gamma, mu):
        raise ValidationError("delta and mu must lie in the complement of gamma")
    if D.element_order(delta) != q or D.element_order(mu) != q or not weakly_independent(D, delta, mu):
        raise ValidationError(f"a delta + b mu = 0 must force a = b = 0 mod {q}")
    s = p ** (e - 1)
    gens = [_scale(D, s, mu)] + [_scale(D, s, _add(D, delta, _scale(D, j, mu))) for j in range(p)]
    subs = [subgroup(D, [g]) for g in gens]
    return NiceSequence(p, p, gens, subs, gamma)


def verify_nice(D: FiniteQuadraticModule, seq: NiceSequence) -> NiceCheck:
    """Exhaustive check of the four defining conditions and of ``gamma`` in every ``H_i^perp``."""
    subs = seq.subgroups
    n = seq.order
    if len(subs) != n + 1 or len(seq.generators) != n + 1:
        return NiceCheck(False, "(c)")
    for H in subs:
        if not is_isotropic(D, H):
            return NiceCheck(False, "isotropy")
    for g, H in zip(seq.generators, subs):
        if len(H) != n or subgroup(D, [g]).key() != H.key():
            return NiceCheck(False, "(c)")
    coords = [D.coords[np.array(H.elements)] for H in subs]
    for i in range(len(subs)):
        for j in range(i + 1, len(subs)):
            if D._b_num(coords[i], coords[j]).any():
                return NiceCheck(False, "(a)")
    union = set()
    for H in subs[1:]:
        union |= H._set
    h0 = np.array(subs[0].elements, dtype=np.int64)
    for H in subs[1:]:
        nz = np.array([x for x in H.elements if x != 0], dtype=np.int64)
        sums = D.add_indices(h0[:, None], nz[None, :]).ravel()
        if not set(int(x) for x in sums) <= union:
            return NiceCheck(False, "(b)")
    for i in range(len(subs)):
        for j in range(len(subs)):
            if i != j and not weakly_independent(D, seq.generators[i], seq.generators[j]):
                return NiceCheck(False, "(d)")
    for g in seq.generators:
        if D.eval_b(seq.target, g):
            return NiceCheck(False, "perp")
    return NiceCheck(True)


def preimage_basis_vector(
    D: FiniteQuadraticModule,
    gamma,
    seq: NiceSequence,
    system: LiftSystem | None = None,
) -> list[Fraction]:
    """Rational ``zeta`` on the rows of ``system`` with ``up(zeta) = e_gamma``.

    ``system`` defaults to the lift system of the sequence's subgroups, in
    order; block 0 must be ``H_0``.
    """
    gamma = D.reduce(gamma)
    system = system or build_lift_system(D, seq.subgroups)
    n = seq.order
    g = D.index(gamma)
    proj0 = system.quotients[0].projection
    translates = []
    for H in system.subgroups[1:]:
        hs = np.array([h for h in H.elements if h != 0], dtype=np.int64)
        translates.extend(int(x) for x in D.add_indices(g, hs))
    moved = set(translates)
    if len(moved) != len(translates) or not translates:
        raise CertificateError(f"the translates of gamma={gamma} are not disjoint; bad sequence")
    classes = sorted(set(int(proj0[x]) for x in translates))
    if any(c < 0 for c in classes):
        raise CertificateError("the translates leave H_0^perp; bad sequence")
    members = system.quotients[0].class_members()
    covered = set()
    for c in classes:
        covered |= set(int(x) for x in members[c])
    if len(classes) != n - 1 or covered != moved:
        raise CertificateError(f"the translates do not split into {n - 1} classes of H_0; bad sequence")
    zeta = [Fraction(0)] * system.n_rows
    for c in classes:
        zeta[system.row_of(0, c)] -= Fraction(1, n)
    for i in range(1, len(system.subgroups)):
        c = int(system.quotients[i].projection[g])
        if c < 0:
            raise CertificateError(f"gamma={gamma} is not orthogonal to H_{i}")
        zeta[system.row_of(i, c)] += Fraction(1, n)
    return zeta


# ---------------------------------------------------------------------------
# rank conditions that force surjectivity of up


@dataclass
class HypothesisResult:
    ok: bool
    case: str | None
    p: int | None = None
    j: int | None = None
    count: int = 0
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "satisfied": self.ok,
            "case": self.case,
            "p": self.p,
            "j": self.j,
            "count": self.count,
            "counts": self.counts,
        }


def _threshold(p: int, j: int) -> tuple[str, int]:
    if p != 2:
        return ("(i)", 7) if j == 1 else ("(ii)", 4)
    return ("(iii)", 9) if j <= 2 else ("(iv)", 5)


def jordan_counts(symbol: JordanSymbol) -> dict[tuple[int, int], dict[str, int]]:
    """Per ``(p, j)``: odd-prime count, or the even/odd 2-adic block counts."""
    out: dict[tuple[int, int], dict[str, int]] = {}
    for c in symbol.components:
        key = (c.p, c.e)
        d = out.setdefault(key, {"odd": 0, "even": 0})
        if isinstance(c, TwoEvenComponent):
            d["even"] += 1
        else:
            d["odd"] += 1
    return out


def check_hypotheses(symbol: Union[JordanSymbol, str]) -> HypothesisResult:
    """First ``(p, j)`` in sorted order meeting one of the four rank conditions."""
    if isinstance(symbol, str):
        symbol = JordanSymbol.parse(symbol)
    counts = jordan_counts(symbol)
    listing = {f"{p}^{j}": v["odd"] + v["even"] for (p, j), v in sorted(counts.items())}
    for (p, j), v in sorted(counts.items()):
        # 2-adic blocks are counted as blocks, so an even block counts once
        count = v["odd"] + v["even"]
        case, need = _threshold(p, j)
        if count >= need:
            return HypothesisResult(True, case, p, j, count, listing)
    return HypothesisResult(False, None, counts=listing)


def check_hypotheses_group(D: FiniteQuadraticModule) -> HypothesisResult:
    """Conservative test from the group structure alone.

    With ``o`` odd and ``e`` even 2-adic blocks only ``o + 2e`` is visible, and
    ``o + 2e >= 2 * need`` forces ``o + e >= need``.
    """
    counts: dict[tuple[int, int], int] = {}
    for d in D.orders:
        fac = sympy.factorint(d)
        if len(fac) != 1:
            continue
        (p, j), = fac.items()
        counts[(int(p), int(j))] = counts.get((int(p), int(j)), 0) + 1
    listing = {f"{p}^{j}": c for (p, j), c in sorted(counts.items())}
    for (p, j), c in sorted(counts.items()):
        case, need = _threshold(p, j)
        if c >= (need if p != 2 else 2 * need):
            return HypothesisResult(True, case, p, j, c, listing)
    return HypothesisResult(False, None, counts=listing)


def size_gate(symbol: Union[JordanSymbol, str]) -> dict:
    """The size bound ``|D| >= N^9`` next to the multiplicities it is meant to force."""
    if isinstance(symbol, str):
        symbol = JordanSymbol.parse(symbol)
    D = from_jordan(symbol)
    N = D.level
    mult: dict[str, int] = {}
    for c, r in zip(symbol.components, symbol.component_ranks()):
        k = f"{c.p}^{c.e}"
        mult[k] = mult.get(k, 0) + r
    hyp = check_hypotheses(symbol)
    return {
        "order": D.size,
        "level": N,
        "bound": N**9,
        "size_meets_bound": D.size >= N**9,
        "multiplicities": mult,
        "max_multiplicity": max(mult.values(), default=0),
        "multiplicity_at_least_9": max(mult.values(), default=0) >= 9,
        "theorem": hyp.to_dict(),
    }


# ---------------------------------------------------------------------------
# the certificate


@dataclass
class CertificateEntry:
    index: int
    gamma: tuple[int, ...]
    sequence: NiceSequence
    zeta: list[Fraction]

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "gamma": list(self.gamma),
            "subgroups": [list(g) for g in self.sequence.generators],
            "zeta": [str(x) for x in self.zeta],
        }


@dataclass
class Certificate:
    symbol: str
    hypothesis: HypothesisResult
    entries: list[CertificateEntry]
    kernel_down_zero: bool | None = None

    def to_dict(self) -> dict:
        return {
            "form": self.symbol,
            "hypothesis": self.hypothesis.to_dict(),
            "elements": len(self.entries),
            "kernel_down_zero": self.kernel_down_zero,
            "entries": [e.to_dict() for e in self.entries],
        }


class _Certifier:
    """Per-module state: the important part, its Gram data and caches."""

    def __init__(self, symbol: JordanSymbol, hyp: HypothesisResult):
        self.symbol = symbol
        self.D = from_jordan(symbol)
        self.p, self.j = hyp.p, hyp.j
        self.q = self.p**self.j
        coords, pos = [], 0
        for c, r in zip(symbol.components, symbol.component_ranks()):
            if (c.p, c.e) == (self.p, self.j):
                coords.extend(range(pos, pos + r))
            pos += r
        self.part_coords = coords
        r = self.D.rank
        self.basis = [tuple(int(t == i) for t in range(r)) for i in coords]
        self.part = padic.submodule(self.D, self.basis, self.q)
        self.G = padic.bilinear_gram(self.part, self.p, self.j, self.j + 1)
        self.cache = QuotientCache(self.D)
        self._pairs: dict[tuple, tuple] = {}

    def embed(self, x) -> tuple[int, ...]:
        return padic.combine(self.D, self.basis, x)

    def _complement_pair(self, basis) -> tuple:
        sub = padic.submodule(self.part, basis, self.q)
        x, y = padic.find_two_isotropic(sub)
        return padic.combine(self.part, basis, x), padic.combine(self.part, basis, y)

    def _rank_one_split(self, g) -> tuple:
        G, m = self.G, self.G.modulus
        n = G.n
        k = next(i for i in range(n) if g[i] % self.p)
        ninv = pow(G.form(g, g), -1, m)
        ws = []
        for i in range(n):
            if i == k:
                continue
            e = [int(t == i) for t in range(n)]
            c = G.form(e, g) * ninv % m
            ws.append(tuple((a - c * b) % self.q for a, b in zip(e, g)))
        return self._complement_pair(ws)

    def pair_for(self, g_imp) -> tuple:
        """Isotropic, mutually orthogonal, weakly independent pair orthogonal to ``g_imp``."""
        key = tuple(g_imp)
        if key in self._pairs:
            return self._pairs[key]
        g = list(key)
        if not any(g):
            # every element is orthogonal to 0; borrow the complement of a basis vector
            g = [1] + [0] * (len(g) - 1)
        if self.G.form(g, g) % self.p:
            pair = self._rank_one_split(g)
        else:
            s = min(padic.valuation(x, self.p, self.j) for x in g)
            mu = [(x // self.p**s) % self.q for x in g]
            if self.G.form(mu, mu) % self.p:
                pair = self._rank_one_split(mu)
            else:
                _, comp = padic.split_primitive_pair(self.G, mu)
                pair = self._complement_pair([tuple(x % self.q for x in v) for v in comp])
        self._pairs[key] = pair
        return pair

    def entry(self, idx: int) -> CertificateEntry:
        D = self.D
        gamma = D.element(idx)
        try:
            g_imp = tuple(gamma[i] for i in self.part_coords)
            x, y = self.pair_for(g_imp)
            delta, mu = self.embed(x), self.embed(y)
            e = round(math.log(D.element_order(delta), self.p))
            seq = nice_sequence(D, gamma, delta, mu, self.p, e)
            system = build_lift_system(D, seq.subgroups, cache=self.cache)
            zeta = preimage_basis_vector(D, gamma, seq, system)
        except (ValidationError, CertificateError, ArithmeticError, StopIteration) as exc:
            raise CertificateError(f"construction failed for gamma={gamma}: {exc}") from exc
        if not system.up_is_basis_vector(zeta, idx):
            raise CertificateError(f"up(zeta) != e_gamma for gamma={gamma}")
        return CertificateEntry(idx, gamma, seq, zeta)


def _certify_chunk(args):
    text, hyp, indices = args
    c = _Certifier(JordanSymbol.parse(text), hyp)
    return [c.entry(i) for i in indices]


def surjectivity_certificate(
    symbol: Union[JordanSymbol, str],
    jobs: int = 1,
    check_kernel: bool = True,
    indices: Sequence[int] | None = None,
) -> Certificate:
    """For every element a nicely orthogonal sequence and a verified preimage.

    With ``jobs > 1`` the elements are split into chunks and certified in
    worker processes; results are merged by element index.
    """
    if isinstance(symbol, str):
        symbol = JordanSymbol.parse(symbol)
    hyp = check_hypotheses(symbol)
    if not hyp.ok:
        raise HypothesisError(f"{symbol} meets none of the rank conditions: {hyp.counts}")
    cert = _Certifier(symbol, hyp)
    todo = list(range(cert.D.size)) if indices is None else [int(i) for i in indices]
    jobs = max(1, min(jobs, os.cpu_count() or 1, len(todo) or 1))
    if jobs == 1:
        entries = [cert.entry(i) for i in todo]
    else:
        chunks = [todo[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_certify_chunk, [(str(symbol), hyp, ch) for ch in chunks]))
        entries = sorted((e for part in parts for e in part), key=lambda e: e.index)
    result = Certificate(str(symbol), hyp, entries)
    if check_kernel and indices is None:
        result.kernel_down_zero = certificate_kernel_is_zero(cert.D, entries, cert.cache)
    return result


def certificate_system(D: FiniteQuadraticModule, entries: Sequence[CertificateEntry], cache: QuotientCache | None = None) -> LiftSystem:
    seen: dict[tuple, Subgroup] = {}
    for e in entries:
        for H in e.sequence.subgroups:
            seen.setdefault(H.key(), H)
    return build_lift_system(D, list(seen.values()), cache=cache)


def certificate_kernel_is_zero(D, entries, cache=None) -> bool:
    """``ker(down) = 0`` for the system of all subgroups used by the certificate."""
    system = certificate_system(D, entries, cache)
    if D.size <= 256:
        return not kernel_down(system)
    return is_up_surjective_mod_p(system)
