"""Hypothesis strategies and seeded random generators shared by the tests."""

import numpy as np
from hypothesis import strategies as st

from bmseq.core import Params, SparseSeq

# --- hypothesis strategies -----------------------------------------------------------------

exponent = st.floats(min_value=1.0, max_value=8.0, allow_nan=False)


@st.composite
def params(draw, q_inf: bool = False, interior: bool = False):
    lo = 1.05 if interior else 1.0
    p = draw(st.floats(min_value=lo, max_value=6.0))
    if q_inf:
        q = float("inf")
    else:
        q = p * draw(st.floats(min_value=1.05, max_value=20.0))
    r = draw(st.floats(min_value=lo, max_value=8.0))
    return Params(p, q, r)


@st.composite
def sparse_seqs(draw, max_size: int = 12, lo: int = -40, hi: int = 40, allow_zero: bool = True):
    idx = draw(st.lists(st.integers(lo, hi), min_size=0 if allow_zero else 1, max_size=max_size, unique=True))
    vals = draw(
        st.lists(
            st.floats(min_value=-10, max_value=10, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-6),
            min_size=len(idx),
            max_size=len(idx),
        )
    )
    x = SparseSeq(idx, vals)
    if not allow_zero and x.is_zero():
        x = SparseSeq.unit(idx[0], 1.0)
    return x


def random_seq(rng, max_size=16, lo=-32, hi=32, amplitude=10.0) -> SparseSeq:
    size = int(rng.integers(1, max_size + 1))
    idx = rng.choice(np.arange(lo, hi), size=min(size, hi - lo), replace=False)
    return SparseSeq(idx, rng.uniform(-amplitude, amplitude, size=idx.size))


def random_params(rng, interior=False, q_inf=False) -> Params:
    lo = 1.05 if interior else 1.0
    p = float(rng.uniform(lo, 5.0))
    q = float("inf") if q_inf else p * float(rng.uniform(1.1, 12.0))
    r = float(rng.uniform(lo, 8.0))
    return Params(p, q, r)


def random_representation(rng, P: Params, terms: int = 6, max_level: int = 5, lo: int = -32, hi: int = 32):
    """Random admissible block representation: blocks filled to a random fraction of the bound."""
    from bmseq.blocks import Block, BlockRepresentation, block_bound
    from bmseq.core import DyadicInterval, lp_norm

    out = []
    for _ in range(int(rng.integers(1, terms + 1))):
        j = int(rng.integers(0, max_level + 1))
        k = int(rng.integers(lo, hi)) >> j
        I = DyadicInterval(j, k)
        size = int(rng.integers(1, I.size + 1))
        idx = rng.choice(np.arange(I.start, I.stop), size=size, replace=False)
        v = SparseSeq(idx, rng.standard_normal(size))
        v = v * (block_bound(I, P) * float(rng.uniform(0.05, 1.0)) / lp_norm(v, P.p_conj))
        out.append((float(rng.normal(scale=3.0)), Block(I, v, P)))
    return BlockRepresentation(out, P)
