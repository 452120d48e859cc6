import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmseq.blocks import (
    Block,
    BlockRepresentation,
    block_bound,
    block_norm_r_equals_p,
    block_norm_upper,
    canonical_representation,
    damping_probe,
    default_max_level,
    extremal_block,
    is_block,
    single_block_bound,
    solve_block_program,
)
from bmseq.core import DyadicInterval, Params, SparseSeq, local_lp, lp_norm
from bmseq.duality import block_norm_lower_certificate, pairing
from bmseq.norms import c_pq_constant
from strategies import random_seq, sparse_seqs

e = SparseSeq.unit
I = DyadicInterval
P242 = Params(2, 4, 2)
P243 = Params(2, 4, 3)


class TestIsBlock:
    def test_examples(self):
        assert is_block(e(0), I(0, 0), P242)
        assert not is_block(e(0) * 2, I(0, 0), P242)
        y = (e(0) + e(1)) * 2 ** -0.75
        assert is_block(y, I(1, 0), P242)
        assert lp_norm(y, 2) == pytest.approx(block_bound(I(1, 0), P242), rel=1e-14)

    def test_support_must_fit(self):
        assert not is_block(e(2) * 0.1, I(1, 0), P242)
        assert is_block(SparseSeq.zero(), I(3, 5), P242)

    def test_needs_finite_q(self):
        with pytest.raises(ValueError):
            is_block(e(0), I(0, 0), Params(2, "inf", 2))

    def test_p_one_blocks_use_sup_norm(self):
        P = Params(1, 2, 2)  # p' = inf, bound |I|^(-1/2)
        assert is_block((e(0) - e(1)) * 2**-0.5, I(1, 0), P)
        assert not is_block((e(0) - e(1)) * 0.75, I(1, 0), P)

    @pytest.mark.parametrize("P", [Params(1, 2, 2), Params(2, 4, 1)])
    def test_solver_needs_interior_params(self, P):
        with pytest.raises(ValueError):
            block_norm_upper(e(0), P)

    def test_block_constructor_validates(self):
        with pytest.raises(ValueError):
            Block(I(0, 0), e(1), P242)
        with pytest.raises(ValueError):
            Block(I(0, 0), e(0) * 1.5, P242)


class TestSingleBlockBound:
    def test_examples(self):
        assert single_block_bound(e(0), I(0, 0), P242) == 1.0
        # 2^(1/4) * ||e0 + e1||_2 = 2^(3/4)
        assert single_block_bound(e(0) + e(1), I(1, 0), P242) == pytest.approx(2**0.75, rel=1e-14)

    def test_rejects_escape(self):
        with pytest.raises(ValueError):
            single_block_bound(e(5), I(1, 0), P242)

    @given(sparse_seqs(max_size=6, lo=0, hi=15), st.floats(-5, 5))
    def test_homogeneous(self, y, lam):
        a = single_block_bound(y * lam, I(4, 0), P243)
        assert a == pytest.approx(abs(lam) * single_block_bound(y, I(4, 0), P243), rel=1e-12, abs=1e-300)


class TestRepresentations:
    def test_canonical(self):
        rep = canonical_representation(e(0), P243)
        assert len(rep) == 1 and rep.coefficient_norm == 1.0
        rep = canonical_representation(e(0) + e(5), P243)
        assert rep.coefficient_norm == pytest.approx(2 ** (1 / P243.r_conj))
        rep = canonical_representation(SparseSeq.zero(), P243)
        assert len(rep) == 0 and rep.coefficient_norm == 0.0

    @given(sparse_seqs(max_size=10))
    def test_canonical_reconstructs(self, y):
        rep = canonical_representation(y, P243)
        assert rep.value == y
        assert rep.coefficient_norm == pytest.approx(lp_norm(y, P243.r_conj), rel=1e-12)

    def test_merge_same_interval(self):
        a = Block(I(1, 0), e(0) * 0.5, P242)
        b = Block(I(1, 0), e(1) * 0.5, P242)
        rep = BlockRepresentation([(1.0, a), (1.0, b)], P242)
        assert len(rep) == 1
        assert rep.value.to_dict() == pytest.approx({0: 0.5, 1: 0.5}, rel=1e-14)
        # merged coefficient is the one-term bound of the sum, never above the unmerged norm
        assert rep.coefficient_norm <= math.sqrt(2) + 1e-12

    def test_zero_terms_dropped(self):
        rep = BlockRepresentation([(0.0, Block(I(0, 0), e(0), P242))], P242)
        assert len(rep) == 0 and rep.value.is_zero()

    def test_json_round_trip(self):
        rep = canonical_representation(SparseSeq([-3, 4], [2.0, -1.0]), P242)
        obj = json.loads(json.dumps(rep.to_json_obj()))
        assert set(obj[0]) == {"j", "k", "lambda", "block_entries"}
        back = BlockRepresentation.from_json_obj(obj, P242)
        assert back.value == rep.value and back.coefficient_norm == rep.coefficient_norm


class TestBlockNormUpper:
    def test_unit_vector_sandwich(self):
        val, rep = block_norm_upper(e(0), P242)
        exact = 1 / c_pq_constant(P242)
        assert val <= 1.0
        lower = block_norm_lower_certificate(e(0), P242, [e(0)]).certified_value
        assert lower == pytest.approx(exact, rel=1e-12)
        assert lower <= val + 1e-9
        assert (val - exact) / exact <= 0.1
        assert rep.value.to_dict() == pytest.approx(e(0).to_dict(), abs=1e-12)

    def test_zero(self):
        val, rep = block_norm_upper(SparseSeq.zero(), P242)
        assert val == 0.0 and len(rep) == 0

    def test_rejects_bad_iterations_and_level(self):
        with pytest.raises(ValueError):
            block_norm_upper(e(0), P242, iterations=0)
        with pytest.raises(ValueError):
            block_norm_upper(e(0), P242, max_level=-1)

    def test_default_max_level(self):
        assert default_max_level(e(0)) == 8
        assert default_max_level(e(0) + e(7)) == 3 + 8

    @settings(max_examples=25)
    @given(sparse_seqs(max_size=6, lo=-10, hi=10, allow_zero=False))
    def test_never_worse_than_simple_representations(self, y):
        val, rep = block_norm_upper(y, P243)
        assert val <= canonical_representation(y, P243).coefficient_norm + 1e-12
        for j in range(default_max_level(y) + 1):
            if (y.support_min >> j) == (y.support_max >> j):
                assert val <= single_block_bound(y, I(j, y.support_min >> j), P243) * (1 + 1e-12)
                break
        # the representation really reconstructs y
        d = (rep.value - y).to_dict()
        assert max(map(abs, d.values()), default=0.0) <= 1e-9 * np.max(np.abs(y.values))
        assert rep.coefficient_norm == pytest.approx(val, rel=1e-12)

    @settings(max_examples=15)
    @given(sparse_seqs(max_size=5, lo=-6, hi=6, allow_zero=False))
    def test_monotone_in_max_level(self, y):
        vals = [block_norm_upper(y, P243, max_level=L)[0] for L in range(0, 6)]
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-9 * a

    @settings(max_examples=15)
    @given(sparse_seqs(max_size=5, lo=-6, hi=6, allow_zero=False))
    def test_negation_invariant(self, y):
        assert block_norm_upper(-y, P243)[0] == block_norm_upper(y, P243)[0]

    @settings(max_examples=15)
    @given(sparse_seqs(max_size=5, lo=-6, hi=6, allow_zero=False))
    def test_sandwich_with_lower_certificate(self, y):
        up = block_norm_upper(y, P243)[0]
        lo = block_norm_lower_certificate(y, P243, count=16).certified_value
        assert lo <= up + 1e-9

    def test_solver_multipliers_are_a_good_dual_candidate(self, rng):
        y = random_seq(rng, max_size=6, lo=0, hi=16)
        val, _, mult = solve_block_program(y, P243)
        cert = block_norm_lower_certificate(y, P243, [mult]).certified_value
        assert cert <= val + 1e-9
        assert cert >= 0.9 * val

    def test_r_equals_p_closed_form(self, rng):
        for _ in range(5):
            y = random_seq(rng, max_size=6, lo=-8, hi=8)
            exact = block_norm_r_equals_p(y, P242)
            up = block_norm_upper(y, P242)[0]
            assert exact <= up + 1e-9 and (up - exact) / exact <= 0.1
        with pytest.raises(ValueError):
            block_norm_r_equals_p(e(0), P243)


class TestExtremalBlock:
    def test_examples(self):
        b = extremal_block(e(0), I(0, 0), P242)
        assert b.values == e(0) and pairing(e(0), b.values) == 1.0
        x = e(0) + e(1)
        b = extremal_block(x, I(1, 0), P242)
        assert b.values.to_dict() == pytest.approx({0: 2**-0.75, 1: 2**-0.75}, rel=1e-14)
        assert pairing(x, b.values) == pytest.approx(2**0.25, rel=1e-14)
        b = extremal_block(e(0) - e(1), I(1, 0), P242)
        assert b.values.to_dict()[1] == pytest.approx(-(2**-0.75), rel=1e-14)

    def test_vanishing_interval(self):
        with pytest.raises(ValueError):
            extremal_block(e(5), I(1, 0), P242)
        assert extremal_block(e(5), I(1, 0), P242, allow_zero=True).values.is_zero()

    @given(
        sparse_seqs(max_size=8, lo=-20, hi=20, allow_zero=False),
        st.integers(0, 6),
        st.sampled_from([Params(2, 4, 2), Params(1.5, 3, 4), Params(3, 7, 1.5)]),
    )
    def test_equality_in_admissibility_and_pairing(self, x, j, P):
        k = x.support_min >> j
        J = I(j, k)
        b = extremal_block(x, J, P)
        assert lp_norm(b.values, P.p_conj) == pytest.approx(block_bound(J, P), rel=1e-12)
        want = block_bound(J, P) * local_lp(x, J, P.p)
        assert pairing(x, b.values) == pytest.approx(want, rel=1e-12)


class TestDampingProbe:
    @pytest.mark.parametrize("P", [Params(2, 4, 2), Params(1.5, 3, 4), Params(2, 4, 3)])
    def test_growth_per_level_at_most_one_and_a_half(self, P):
        ratios = [damping_probe(P, J, seeds=4) for J in range(4, 11)]
        assert all(r > 0 for r in ratios)
        for a, b in zip(ratios, ratios[1:]):
            assert b <= 1.5 * a

    def test_deterministic(self):
        assert damping_probe(P242, 5, seed=3) == damping_probe(P242, 5, seed=3)
