"""Canonical pairing, the Hölder chain behind the pairing bound, and dual certificates.

All statements are made against the dyadic norm. A certificate is a finite
witness whose pairing ratio is a one-sided bound valid regardless of how it
was found: test vectors give lower bounds on the block norm, block
representations give lower bounds on the sequence-space norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .blocks import (
    BlockRepresentation,
    block_bound,
    extremal_block,
    require_block_params,
    require_interior,
    solve_block_program,
)
from .core import DyadicInterval, Params, SparseSeq, local_lp, lp_norm
from .norms import dnorm

LOWER_ON_BLOCK = "lower_bound_on_block_norm"
LOWER_ON_BM = "lower_bound_on_bm_norm"

CHAIN_TOL = 1e-10


def pairing(x: SparseSeq, y: SparseSeq) -> float:
    """<x, y> = sum_n x(n) y(n) over the common support."""
    if x.is_zero() or y.is_zero():
        return 0.0
    _, ix, iy = np.intersect1d(x.indices, y.indices, assume_unique=True, return_indices=True)
    return float(np.dot(x.values[ix], y.values[iy]))


@dataclass(frozen=True)
class DualCertificate:
    test_vector: Union[SparseSeq, BlockRepresentation]
    certified_value: float
    direction: str

    def to_json_obj(self) -> dict:
        tv = self.test_vector
        return {
            "direction": self.direction,
            "certified_value": self.certified_value,
            "test_vector": tv.to_json_obj(),
        }


def lr_duality_extremal(beta: Sequence[float], r: float) -> tuple[np.ndarray, float]:
    """Hölder-extremal alpha with ||alpha||_r = 1 and sum alpha*beta = ||beta||_{r'}.

    alpha = sgn(beta) |beta|^(r'-1) / ||beta||_{r'}^(r'-1). For r = 1 use
    :func:`linf_extremal`.
    """
    if not r > 1:
        raise ValueError("r must exceed 1 (use linf_extremal for r = 1)")
    b = np.asarray(beta, dtype=np.float64)
    rc = r / (r - 1.0) if math.isfinite(r) else 1.0
    if not np.any(b):
        return np.zeros_like(b), 0.0
    mx = float(np.max(np.abs(b)))
    bn = b / mx
    norm_rc = float(np.sum(np.abs(bn) ** rc) ** (1.0 / rc))
    alpha = np.sign(bn) * (np.abs(bn) / norm_rc) ** (rc - 1.0)
    return alpha, mx * norm_rc


def linf_extremal(beta: Sequence[float]) -> tuple[np.ndarray, float]:
    """r = 1 case: the signed indicator of the largest |beta_k|, value max |beta|."""
    b = np.asarray(beta, dtype=np.float64)
    alpha = np.zeros_like(b)
    if b.size == 0 or not np.any(b):
        return alpha, 0.0
    k = int(np.argmax(np.abs(b)))
    alpha[k] = np.sign(b[k])
    return alpha, float(abs(b[k]))


def holder_chain_check(x: SparseSeq, rep: BlockRepresentation, P: Params) -> dict:
    """Evaluate the pairing bound link by link.

        |<x, y>| <= sum |l_I| ||x||_{p,I} ||a_I||_{p',I}       (Hölder per block)
                 <= sum |l_I| |I|^(1/q-1/p) ||x||_{p,I}          (block condition)
                 <= ||l||_{r'} * dyadic_norm(x)                  (Hölder over intervals)

    Returns the four chain terms and the three slacks (each should be >= -1e-10).
    """
    require_block_params(P)
    y = rep.value
    t0 = abs(pairing(x, y))
    t1 = t2 = 0.0
    for lam, blk in rep.terms:
        lx = local_lp(x, blk.interval, P.p)
        t1 += abs(lam) * lx * lp_norm(blk.values, P.p_conj)
        t2 += abs(lam) * block_bound(blk.interval, P) * lx
    t3 = rep.coefficient_norm * dnorm(x, P)
    slacks = [t1 - t0, t2 - t1, t3 - t2]
    return {
        "terms": [t0, t1, t2, t3],
        "slacks": slacks,
        "ok": all(s >= -CHAIN_TOL for s in slacks),
    }


def _intervals_meeting(x: SparseSeq, max_level: int) -> list[DyadicInterval]:
    out = []
    for j in range(max_level + 1):
        out.extend(DyadicInterval(j, int(k)) for k in np.unique(x.indices >> j))
    return out


def _testing_certificate(x: SparseSeq, P: Params, K, s: np.ndarray, blocks) -> DualCertificate:
    z, _ = lr_duality_extremal(s, P.r_conj)
    terms = [(float(zi), blocks[I]) for zi, I in zip(z, K) if zi != 0.0]
    rep = BlockRepresentation(terms, P)
    coef = rep.coefficient_norm
    value = pairing(x, rep.value) / coef if coef > 0 else 0.0
    return DualCertificate(rep, value, LOWER_ON_BM)


def bm_certificate_ladder(x: SparseSeq, P: Params, levels: Sequence[int]) -> list[DualCertificate]:
    """:func:`bm_norm_lower_certificate` for several max levels, sharing the extremal blocks."""
    require_block_params(P)
    if x.is_zero():
        raise ValueError("certificate needs x != 0")
    levels = [int(J) for J in levels]
    if not levels:
        return []
    if min(levels) < 0:
        raise ValueError("max_level must be nonnegative")
    K_all = _intervals_meeting(x, max(levels))
    s_all = np.array([block_bound(I, P) * local_lp(x, I, P.p) for I in K_all])
    blocks = {I: extremal_block(x, I, P) for I in K_all}
    lv = np.array([I.j for I in K_all])
    out = []
    for J in levels:
        keep = np.nonzero(lv <= J)[0]
        out.append(_testing_certificate(x, P, [K_all[i] for i in keep], s_all[keep], blocks))
    return out


def bm_norm_lower_certificate(x: SparseSeq, P: Params, max_level: int) -> DualCertificate:
    """Lower bound on dyadic_norm(x) from extremal blocks on intervals up to ``max_level``.

    With s_I = |I|^(1/q-1/p) ||x||_{p,I} and z Hölder-extremal for s in l^{r'},
    y_K = sum z_I b_I has coefficient norm 1 and <x, y_K> = (sum s_I^r)^(1/r).
    """
    return bm_certificate_ladder(x, P, [max_level])[0]


def block_norm_lower_certificate(
    y: SparseSeq, P: Params, candidates: Sequence[SparseSeq] | None = None, **kw
) -> DualCertificate:
    """max over candidates x of |<x, y>| / dyadic_norm(x), a lower bound on the block norm.

    Without explicit candidates, :func:`default_candidates` supplies them (kw
    are forwarded). Ties keep the earliest candidate.
    """
    require_block_params(P)
    if y.is_zero():
        return DualCertificate(SparseSeq.zero(), 0.0, LOWER_ON_BLOCK)
    if candidates is None:
        candidates = default_candidates(y, P, **kw)
    if len(candidates) == 0:
        raise ValueError("candidate list is empty")
    best, best_x = -1.0, None
    for x in candidates:
        if x.is_zero():
            raise ValueError("candidates must be nonzero")
        val = abs(pairing(x, y)) / dnorm(x, P)
        if val > best:
            best, best_x = val, x
    return DualCertificate(best_x, best, LOWER_ON_BLOCK)


def default_candidates(
    y: SparseSeq,
    P: Params,
    count: int = 64,
    seed: int = 0,
    max_level: int | None = None,
    iterations: int = 500,
) -> list[SparseSeq]:
    """Hölder-shaped start sgn(y)|y|^(p'-1), the block solver's multipliers, then a
    seeded multiplicative hill-climb around the best so far.

    Only values on supp(y) matter: mass elsewhere can only raise dyadic_norm(x).
    """
    require_interior(P)
    rng = np.random.default_rng(seed)
    holder = y.map_values(lambda v: np.sign(v) * np.abs(v) ** (P.p_conj - 1.0))
    _, _, mult = solve_block_program(y, P, max_level, iterations)
    cands = [holder]
    if not mult.is_zero():
        cands.append(mult)

    def score(x):
        return abs(pairing(x, y)) / dnorm(x, P)

    best = max(cands, key=score)
    best_s = score(best)
    sigma = 0.3
    while len(cands) < count:
        noise = np.exp(sigma * rng.standard_normal(best.nnz))
        trial = SparseSeq(best.indices, best.values * noise, _trusted=True)
        cands.append(trial)
        s = score(trial)
        if s > best_s:
            best, best_s = trial, s
        else:
            sigma = max(sigma * 0.9, 1e-4)
    return cands
