import json
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from vvoldforms.errors import ValidationError
from vvoldforms.fqm import from_jordan, isotropic_subgroups, quotient, subgroup, trivial_subgroup
from vvoldforms.lifts import build_lift_system
from vvoldforms.oldnew import (
    CoeffTable,
    down_table,
    is_oldform,
    lift_table,
    module_from_descriptor,
    newspace_basis,
    oldspace_basis,
    satisfies_matrix_criterion,
    split,
)

from conftest import random_lifted_table, random_table

GAMMA = (1, 0)
F_VEC = [Fraction(1), Fraction(-2), Fraction(3, 2)]


def plane_table(components, sturm=2):
    """Single-form table over the hyperbolic plane from per-element vectors."""
    return CoeffTable.from_forms("2^1:A", 2, sturm, [components])


def span_contains(basis, v):
    if not basis:
        return not any(v)
    B = sympy.Matrix(basis).T
    return sympy.Matrix.hstack(B, sympy.Matrix(v)).rank() == B.rank()


class TestDescriptors:
    def test_jordan_and_lattice(self):
        assert module_from_descriptor("2^1:A").size == 4
        assert module_from_descriptor({"gram": [[2, 1], [1, 2]]}).size == 3
        D = from_jordan("3^1:a=1")
        assert module_from_descriptor(D.to_dict()).size == 3

    def test_bad_descriptor(self):
        with pytest.raises(ValidationError):
            module_from_descriptor({"foo": 1})

    def test_level_checked(self):
        with pytest.raises(ValidationError):
            CoeffTable("2^1:A", 2, 4, 0, np.zeros((1, 4, 1), dtype=object))

    def test_shape_checked(self):
        with pytest.raises(ValidationError):
            CoeffTable("2^1:A", 2, 2, 1, np.zeros((1, 4, 1), dtype=object))


class TestLiftDown:
    def test_plane_lift(self):
        D = from_jordan("2^1:A")
        H = subgroup(D, [GAMMA])
        q = quotient(D, H)
        G = CoeffTable.from_forms(q.module.to_dict(), 2, 2, [[F_VEC]], module=q.module)
        F = lift_table(G, D, H)
        zero = [Fraction(0)] * 3
        assert F.coeffs[0].tolist() == [F_VEC, zero, F_VEC, zero]

    def test_trivial_is_identity(self):
        rng = random.Random(0)
        D = from_jordan("3^1:a=1+3^1:a=2")
        T = random_table(rng, D, 2, 3)
        assert np.array_equal(lift_table(T, D, trivial_subgroup(D)).coeffs, T.coeffs)

    def test_mismatch(self):
        D = from_jordan("2^1:A")
        with pytest.raises(ValidationError):
            lift_table(random_table(random.Random(0), D, 1, 1), D, subgroup(D, [GAMMA]))

    @pytest.mark.parametrize("sym", ["2^1:A+2^1:A", "3^1:a=1+3^1:a=2+3^1:a=1+3^1:a=2", "2^2:A"])
    def test_down_after_lift(self, sym):
        rng = random.Random(1)
        D = from_jordan(sym)
        for H in isotropic_subgroups(D):
            q = quotient(D, H)
            G = random_table(rng, q.module, 2, 2)
            back = down_table(lift_table(G, D, H), H)
            assert np.array_equal(back.coeffs, len(H) * G.coeffs)

    def test_down_plane(self):
        D = from_jordan("2^1:A")
        zero = [0] * 3
        F = plane_table([F_VEC, zero, zero, zero])
        assert down_table(F, subgroup(D, [GAMMA])).coeffs[0, 0].tolist() == F_VEC
        G = plane_table([zero, F_VEC, zero, F_VEC])
        assert not down_table(G, subgroup(D, [GAMMA])).coeffs.any()

    def test_adjoint_with_down_matrix(self):
        rng = random.Random(2)
        D = from_jordan("2^1:A+2^1:A")
        subs = isotropic_subgroups(D)
        S = build_lift_system(D, subs)
        F = random_table(rng, D, 1, 0)
        stacked = np.concatenate([down_table(F, H).coeffs[0, :, 0] for H in subs])
        assert stacked.tolist() == (S.down_matrix().astype(object) @ F.coeffs[0, :, 0]).tolist()


class TestDetection:
    def test_lift_is_old(self):
        D = from_jordan("2^1:A")
        H = subgroup(D, [GAMMA])
        F = random_lifted_table(random.Random(0), D, H, 3, 2)
        for lam in ([1, 0, 0], [2, -1, Fraction(1, 3)]):
            assert is_oldform(F, lam, [H])

    def test_plane_counterexample(self):
        D = from_jordan("2^1:A")
        zero = [0] * 3
        F = plane_table([F_VEC, zero, zero, zero])
        assert not is_oldform(F, [1], [subgroup(D, [GAMMA])])
        assert is_oldform(F, [0], [subgroup(D, [GAMMA])])

    def test_oldspace_full_for_lifts(self):
        D = from_jordan("3^1:a=1+3^1:a=2+3^1:a=1+3^1:a=2")
        H = isotropic_subgroups(D)[0]
        F = random_lifted_table(random.Random(3), D, H, 3, 2)
        assert len(oldspace_basis(F, [H])) == 3

    def test_offender_excluded(self):
        rng = random.Random(4)
        D = from_jordan("2^1:A+2^1:A")
        H = isotropic_subgroups(D)[0]
        L = random_lifted_table(rng, D, H, 2, 2)
        bad = L.coeffs[:1].copy()
        bad[0, 1, 0] += 1
        F = CoeffTable(L.form, 2, L.level, 2, np.concatenate([L.coeffs, bad]), module=D)
        basis = oldspace_basis(F, [H])
        assert len(basis) == 2
        assert all(v[2] == 0 for v in basis)

    def test_empty_subgroup_list(self):
        zero = [0] * 3
        F = CoeffTable.from_forms("2^1:A", 2, 2, [[F_VEC, zero, zero, zero], [zero] * 4])
        basis = oldspace_basis(F, [])
        assert len(basis) == 1 and basis[0][0] == 0

    @settings(max_examples=30)
    @given(st.integers(0, 10**6), st.lists(st.integers(-3, 3), min_size=3, max_size=3))
    def test_consistency(self, seed, lam):
        rng = random.Random(seed)
        D = from_jordan("2^1:A+2^1:A")
        subs = isotropic_subgroups(D)
        H = rng.choice(subs)
        L = random_lifted_table(rng, D, H, 2, 1)
        extra = random_table(rng, D, 1, 1, lo=-1, hi=1)
        F = CoeffTable(L.form, 2, L.level, 1, np.concatenate([L.coeffs, extra.coeffs]), module=D)
        basis = oldspace_basis(F, subs)
        assert is_oldform(F, lam, subs) == span_contains(basis, lam)


class TestNewSpace:
    def test_sum_zero_on_cosets(self):
        D = from_jordan("2^1:A")
        zero = [0] * 3
        neg = [-x for x in F_VEC]
        F = plane_table([F_VEC, zero, neg, zero])
        H = subgroup(D, [GAMMA])
        assert len(newspace_basis(F, [H])) == 1
        assert not is_oldform(F, [1], [H])

    def test_generic_lifts(self):
        D = from_jordan("2^1:A+2^1:A")
        H = isotropic_subgroups(D)[0]
        F = random_lifted_table(random.Random(5), D, H, 2, 3)
        assert newspace_basis(F, [H]) == []

    def test_zero_table(self):
        F = CoeffTable.from_forms("2^1:A", 2, 1, [[[0, 0]] * 4] * 3)
        assert len(newspace_basis(F, [subgroup(from_jordan("2^1:A"), [GAMMA])])) == 3

    @settings(max_examples=30)
    @given(st.integers(0, 10**6))
    def test_matrix_criterion(self, seed):
        rng = random.Random(seed)
        D = from_jordan("2^1:A+2^1:A")
        subs = isotropic_subgroups(D)
        S = build_lift_system(D, subs)
        F = random_table(rng, D, 3, 1, lo=-1, hi=1)
        basis = newspace_basis(F, subs)
        lam = [rng.randint(-2, 2) for _ in range(3)]
        assert satisfies_matrix_criterion(F, lam, S) == span_contains(basis, lam)
        for v in basis:
            assert satisfies_matrix_criterion(F, v, S)


class TestTruncation:
    @settings(max_examples=20)
    @given(st.integers(0, 10**6))
    def test_monotone(self, seed):
        rng = random.Random(seed)
        D = from_jordan("2^1:A+2^1:A")
        subs = isotropic_subgroups(D)[:2]
        F = random_table(rng, D, 4, 3, lo=-1, hi=1)
        spaces = []
        for S in range(4):
            T = CoeffTable(F.form, 2, F.level, S, F.coeffs[:, :, : S + 1].copy(), module=D)
            spaces.append((oldspace_basis(T, subs), newspace_basis(T, subs)))
        for (old0, new0), (old1, new1) in zip(spaces, spaces[1:]):
            assert len(old1) <= len(old0) and all(span_contains(old0, v) for v in old1)
            assert len(new1) <= len(new0) and all(span_contains(new0, v) for v in new1)


class TestSerialization:
    def test_round_trip(self):
        F = random_table(random.Random(6), from_jordan("3^1:a=1+3^1:a=2"), 2, 2)
        G = CoeffTable.from_json(json.dumps(F.to_json()))
        assert np.array_equal(F.coeffs, G.coeffs) and not G.float_mode

    def test_missing_component_is_zero(self):
        data = {"form": "2^1:A", "weight": 2, "level": 2, "sturm": 1, "basis": [{"components": {"2": ["1/2", "0"]}}]}
        T = CoeffTable.from_json(data)
        assert T.coeffs[0, 2, 0] == Fraction(1, 2) and T.coeffs[0, 0, 0] == 0

    @pytest.mark.parametrize(
        "patch",
        [
            {"level": 4},
            {"basis": [{"components": {"9": ["1", "0"]}}]},
            {"basis": [{"components": {"0": ["1"]}}]},
        ],
    )
    def test_invalid(self, patch):
        data = {"form": "2^1:A", "weight": 2, "level": 2, "sturm": 1, "basis": []}
        data.update(patch)
        with pytest.raises(ValidationError):
            CoeffTable.from_json(data)

    def test_missing_key(self):
        with pytest.raises(ValidationError):
            CoeffTable.from_json({"form": "2^1:A"})

    def test_lattice_descriptor(self):
        data = {"form": {"gram": [[2, 1], [1, 2]]}, "weight": 1, "level": 3, "sturm": 0, "basis": [{"components": {}}]}
        assert CoeffTable.from_json(data).module.size == 3


class TestSplit:
    def test_exact_report(self):
        D = from_jordan("2^1:A")
        H = subgroup(D, [GAMMA])
        zero = [0] * 3
        F = CoeffTable.from_forms("2^1:A", 2, 2, [[F_VEC, zero, F_VEC, zero], [F_VEC, zero, zero, zero]])
        out = split(F, [H])
        assert out["kernel_dim"] == 3 and out["truncated_at"] == 2
        assert out["old_basis"] == [["1", "0"]]
        # -F1 + 2 F2 = (f, 0, -f, 0) sums to zero on the coset
        assert out["new_basis"] == [["-1", "2"]]
        assert "float_mode" not in out

    def test_float_mode(self):
        D = from_jordan("2^1:A")
        H = subgroup(D, [GAMMA])
        v = [0.5, 1e-12, -1.25]
        zero = [0.0] * 3
        F = CoeffTable.from_forms("2^1:A", 2, 2, [[v, zero, v, zero]], float_mode=True)
        out = split(F, [H])
        assert out["float_mode"] is True and out["tolerance"] == 1e-9
        assert len(out["old_basis"]) == 1
        assert is_oldform(F, [1.0], [H])
        G = CoeffTable.from_json(json.dumps(F.to_json()))
        assert G.float_mode

    def test_float_exact_mixing_rejected(self):
        with pytest.raises(ValidationError):
            CoeffTable.from_forms("2^1:A", 2, 0, [[[0.5]] * 4])
