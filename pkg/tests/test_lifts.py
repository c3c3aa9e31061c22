from fractions import Fraction

import numpy as np
import pytest
import sympy

from vvoldforms import lifts
from vvoldforms.errors import CertificateError, HypothesisError, IsotropyError, ValidationError
from vvoldforms.fqm import (
    direct_sum,
    from_jordan,
    isotropic_subgroups,
    subgroup,
    trivial_subgroup,
)
from vvoldforms.lifts import (
    NiceSequence,
    build_lift_system,
    check_homomorphism,
    check_hypotheses,
    check_hypotheses_group,
    size_gate,
    is_up_surjective,
    is_up_surjective_mod_p,
    kernel_down,
    nice_sequence,
    preimage_basis_vector,
    rank_up,
    surjectivity_certificate,
    verify_nice,
)

from conftest import even_signature_symbols

# element order of the hyperbolic plane: 0, delta, gamma, gamma + delta
GAMMA, DELTA = (1, 0), (0, 1)
Z3_4 = "3^1:a=1+3^1:a=2+3^1:a=1+3^1:a=2"


@pytest.fixture
def plane():
    return from_jordan("2^1:A")


def brute_down(D, subs):
    """Down matrix straight from the definition: [i, gamma + H_i] for gamma in H_i^perp."""
    rows = []
    for H in subs:
        hs = [D.element(h) for h in H.elements]
        perp = [g for g in D.elements() if all(D.eval_b(g, h) == 0 for h in hs)]
        cosets = []
        for g in perp:
            c = frozenset(D.reduce(tuple(a + b for a, b in zip(g, h))) for h in hs)
            if c not in cosets:
                cosets.append(c)
        for c in cosets:
            rows.append([int(g in c) for g in D.elements()])
    return rows


class TestLiftSystem:
    def test_hyperbolic_row(self, plane):
        S = build_lift_system(plane, [subgroup(plane, [GAMMA])])
        assert S.down_matrix().tolist() == [[1, 0, 1, 0]]
        assert S.up_matrix().tolist() == [[1], [0], [1], [0]]

    def test_trivial_subgroup_identity_block(self, plane):
        S = build_lift_system(plane, [trivial_subgroup(plane), subgroup(plane, [GAMMA])], include_trivial=True)
        down = S.down_matrix()
        assert np.array_equal(down[:4], np.eye(4, dtype=int))
        assert is_up_surjective(S)

    def test_trivial_needs_flag(self, plane):
        with pytest.raises(ValidationError):
            build_lift_system(plane, [trivial_subgroup(plane)])

    def test_non_isotropic(self, plane):
        with pytest.raises(IsotropyError):
            build_lift_system(plane, [subgroup(plane, [(1, 1)])])

    @pytest.mark.parametrize("sym", ["2^1:A+2^1:A", "3^1:a=1+3^1:a=2", "2^2:A", Z3_4, "2^1:A+3^1:a=1+3^1:a=2"])
    def test_against_definition(self, sym):
        D = from_jordan(sym)
        subs = isotropic_subgroups(D)
        S = build_lift_system(D, subs)
        down = S.down_matrix()
        # classes within a block may be listed in any order; compare row sets per block
        ref = brute_down(D, subs)
        for i in range(len(subs)):
            a, b = S.offsets[i], S.offsets[i + 1]
            assert sorted(map(tuple, down[a:b].tolist())) == sorted(map(tuple, ref[a:b]))
        cols = down.sum(axis=0)
        for g in range(D.size):
            assert cols[g] == sum(1 for H in subs if all(D.eval_b(D.element(g), D.element(h)) == 0 for h in H.elements))

    def test_apply_up_down_adjoint(self):
        D = from_jordan("2^1:A+2^1:A")
        S = lifts.all_isotropic_system(D)
        rng = np.random.default_rng(0)
        z = [Fraction(int(x), 3) for x in rng.integers(-5, 5, S.n_rows)]
        v = [Fraction(int(x), 2) for x in rng.integers(-5, 5, S.n_cols)]
        lhs = sum(a * b for a, b in zip(S.apply_up(z), v))
        rhs = sum(a * b for a, b in zip(z, S.apply_down(v)))
        assert lhs == rhs
        assert S.apply_up(z) == list(sympy.Matrix(S.up_matrix().tolist()) * sympy.Matrix(z))

    def test_row_labels(self):
        D = from_jordan("2^1:A+2^1:A")
        S = lifts.all_isotropic_system(D)
        for r in range(S.n_rows):
            assert S.row_of(*S.row_label(r)) == r


class TestKernel:
    def test_single(self, plane):
        S = build_lift_system(plane, [subgroup(plane, [GAMMA])])
        K = sympy.Matrix(kernel_down(S)).T
        assert K.shape == (4, 3)
        for v in ([1, 0, -1, 0], [0, 1, 0, 0], [0, 0, 0, 1]):
            assert sympy.Matrix.hstack(K, sympy.Matrix(v)).rank() == 3

    def test_both(self, plane):
        S = build_lift_system(plane, [subgroup(plane, [GAMMA]), subgroup(plane, [DELTA])])
        K = kernel_down(S)
        assert len(K) == 2
        for c in K:
            assert c[0] + c[2] == 0 and c[0] + c[1] == 0
        assert not is_up_surjective(S)
        assert rank_up(S) == 2

    def test_empty(self, plane):
        S = build_lift_system(plane, [])
        assert len(kernel_down(S)) == 4
        assert rank_up(S) == 0

    @pytest.mark.parametrize("sym", ["2^1:A+2^1:A", Z3_4, "2^2:A", "2^1:A+2^1:B+2^1:a=1,v=0"])
    def test_duality(self, sym):
        D = from_jordan(sym)
        S = lifts.all_isotropic_system(D)
        assert np.array_equal(S.up_matrix(), S.down_matrix().T)
        up = sympy.Matrix(S.up_matrix().tolist())
        K = kernel_down(S)
        assert len(K) + up.rank() == D.size
        for c in K:
            assert (sympy.Matrix([c]) * up).is_zero_matrix

    def test_mod_p_agrees(self):
        D = from_jordan("2^1:A+2^1:A+2^1:A")
        S = lifts.all_isotropic_system(D)
        assert is_up_surjective_mod_p(S) == is_up_surjective(S)


class TestHomomorphism:
    def test_trivial(self, plane):
        assert all(r["status"] == "pass" for r in check_homomorphism(plane, trivial_subgroup(plane)))

    def test_plane_T(self, plane):
        reps = check_homomorphism(plane, subgroup(plane, [GAMMA]))
        assert len(reps) == 4 and all(r["status"] == "pass" for r in reps)

    def test_two_planes(self):
        D = direct_sum(from_jordan("2^1:A"), from_jordan("2^1:A"))
        for H in isotropic_subgroups(D):
            assert all(r["status"] == "pass" for r in check_homomorphism(D, H))

    @pytest.mark.parametrize("sym", even_signature_symbols(30)[::9])
    def test_sample(self, sym):
        D = from_jordan(sym)
        for H in isotropic_subgroups(D):
            assert all(r["status"] == "pass" for r in check_homomorphism(D, H))


def two_planes():
    D = from_jordan("2^1:A+2^1:A")
    return D, (0, 0, 0, 0), (1, 0, 0, 0), (0, 0, 1, 0)


def z3_example():
    D = from_jordan(Z3_4)
    return D, (0, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1)


class TestNiceSequence:
    def test_two_adic(self):
        D, g, d, m = two_planes()
        seq = nice_sequence(D, g, d, m, 2, 1)
        assert seq.generators == [m, d, (1, 0, 1, 0)]
        assert verify_nice(D, seq)

    def test_three_adic(self):
        D, g, d, m = z3_example()
        seq = nice_sequence(D, g, d, m, 3, 1)
        assert len(seq.subgroups) == 4
        assert all(len(H) == 3 for H in seq.subgroups)
        assert verify_nice(D, seq)

    def test_degenerate_rejected(self):
        D, g, d, _ = z3_example()
        with pytest.raises(ValidationError):
            nice_sequence(D, g, d, (2, 2, 0, 0), 3, 1)

    def test_non_isotropic_rejected(self):
        D, g, d, _ = z3_example()
        with pytest.raises(ValidationError):
            nice_sequence(D, g, d, (0, 0, 1, 0), 3, 1)

    def _replace(self, D, seq, i, gen):
        gens = list(seq.generators)
        gens[i] = gen
        return NiceSequence(seq.p, seq.order, gens, [subgroup(D, [x]) for x in gens], seq.target)

    def test_fails_orthogonality(self):
        D, g, d, m = z3_example()
        seq = nice_sequence(D, g, d, m, 3, 1)
        # (1, 2, 0, 0) is isotropic but pairs nontrivially with delta
        bad = self._replace(D, seq, 3, (1, 2, 0, 0))
        chk = verify_nice(D, bad)
        assert not chk and chk.condition == "(a)"

    def test_fails_closure(self):
        D, g, d, m = z3_example()
        seq = nice_sequence(D, g, d, m, 3, 1)
        # a repeated subgroup leaves delta + 2 mu uncovered
        bad = self._replace(D, seq, 3, seq.generators[1])
        chk = verify_nice(D, bad)
        assert not chk and chk.condition == "(b)"

    def test_target_outside_perp(self):
        D, _, d, m = z3_example()
        seq = nice_sequence(D, (0, 0, 0, 0), d, m, 3, 1)
        seq.target = (1, 0, 0, 0)
        assert verify_nice(D, seq).condition == "perp"


class TestPreimage:
    def test_two_adic_zero(self):
        D, g, d, m = two_planes()
        seq = nice_sequence(D, g, d, m, 2, 1)
        S = build_lift_system(D, seq.subgroups)
        zeta = preimage_basis_vector(D, g, seq)
        nz = sorted(z for z in zeta if z)
        assert nz == [Fraction(-1, 2), Fraction(1, 2), Fraction(1, 2)]
        neg = [r for r, z in enumerate(zeta) if z < 0]
        assert all(S.row_label(r)[0] == 0 for r in neg)
        assert S.apply_up(zeta) == [Fraction(int(i == 0)) for i in range(D.size)]

    def test_every_admitted_gamma(self):
        D, _, d, m = z3_example()
        seq0 = nice_sequence(D, (0, 0, 0, 0), d, m, 3, 1)
        S = build_lift_system(D, seq0.subgroups)
        up = sympy.Matrix(S.up_matrix().tolist())
        admitted = 0
        for idx, g in enumerate(D.elements()):
            if any(D.eval_b(g, h) for h in seq0.generators):
                continue
            seq = nice_sequence(D, g, d, m, 3, 1)
            zeta = preimage_basis_vector(D, g, seq)
            e = [0] * D.size
            e[idx] = 1
            assert up * sympy.Matrix(zeta) == sympy.Matrix(e)
            admitted += 1
        assert admitted == 9

    def test_corrupted_sequence(self):
        D, g, d, m = z3_example()
        seq = nice_sequence(D, g, d, m, 3, 1)
        gens = [seq.generators[1]] * 4
        bad = NiceSequence(3, 3, gens, [subgroup(D, [x]) for x in gens], g)
        with pytest.raises(CertificateError):
            preimage_basis_vector(D, g, bad)


class TestHypotheses:
    @pytest.mark.parametrize(
        "sym,case",
        [
            ("+".join(["3^1:a=1"] * 7), "(i)"),
            ("+".join(["3^2:a=1"] * 4), "(ii)"),
            ("+".join(["2^1:a=1,v=0"] * 9), "(iii)"),
            ("+".join(["2^3:a=5,v=0"] * 5), "(iv)"),
            ("+".join(["3^1:a=1"] * 6), None),
            ("+".join(["2^1:A"] * 5), None),
        ],
    )
    def test_cases(self, sym, case):
        hyp = check_hypotheses(sym)
        assert hyp.case == case and hyp.ok == (case is not None)

    def test_group_fallback_is_conservative(self):
        # five even blocks are ten cyclic factors, one short of the doubled count
        assert not check_hypotheses_group(from_jordan("+".join(["2^1:A"] * 5))).ok
        assert check_hypotheses_group(from_jordan("+".join(["3^1:a=1"] * 7))).ok

    def test_gate_counts_factors(self):
        gate = size_gate("+".join(["2^1:A"] * 5))
        assert gate["size_meets_bound"] and gate["multiplicity_at_least_9"]
        assert not gate["theorem"]["satisfied"]


class TestCertificate:
    def test_hypothesis_error(self):
        with pytest.raises(HypothesisError):
            surjectivity_certificate("3^1:a=1")

    @pytest.mark.parametrize(
        "sym",
        [
            "+".join(["3^1:a=1"] * 7),
            "+".join(["3^2:a=1"] * 4),
            "+".join(["2^1:a=1,v=0"] * 9),
            "+".join(["2^3:a=5,v=0"] * 5),
        ],
    )
    def test_subset(self, sym):
        D = from_jordan(sym)
        idx = list(range(0, D.size, max(1, D.size // 25)))
        cert = surjectivity_certificate(sym, indices=idx)
        assert [e.index for e in cert.entries] == idx
        for e in cert.entries:
            assert verify_nice(D, e.sequence)
            S = build_lift_system(D, e.sequence.subgroups)
            assert S.up_is_basis_vector(e.zeta, e.index)
        assert cert.kernel_down_zero is None

    def test_full_small(self):
        sym = "+".join(["2^1:a=1,v=0"] * 9)
        cert = surjectivity_certificate(sym)
        assert len(cert.entries) == 512
        assert cert.kernel_down_zero is True
        d = cert.to_dict()
        assert d["elements"] == 512 and d["hypothesis"]["case"] == "(iii)"
