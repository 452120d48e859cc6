"""Reproducible numerical studies: sequences given by formulas on long index
ranges, truncation ladders for the harmonic and power heads, and random corpora.

Long heads (millions to billions of points) never become a SparseSeq. They are
streamed in chunks aligned to 2^c so that every dyadic cell of level <= c lies
inside one chunk; coarser levels are assembled from the per-chunk totals and
closed off with the same exact geometric tail as :func:`bmseq.norms.dyadic_norm`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Params, SparseSeq

ValueFn = Callable[[np.ndarray], np.ndarray]


def harmonic_head(n: np.ndarray) -> np.ndarray:
    """x(k) = 1/k on k >= 1 (zero elsewhere)."""
    out = np.zeros(n.shape)
    pos = n >= 1
    out[pos] = 1.0 / n[pos]
    return out


def power_head(s: float) -> ValueFn:
    """x(k) = |k|^(-1/s) for k != 0."""

    def f(n: np.ndarray) -> np.ndarray:
        out = np.zeros(n.shape)
        nz = n != 0
        out[nz] = np.abs(n[nz]).astype(np.float64) ** (-1.0 / s)
        return out

    def g(n: np.ndarray) -> np.ndarray:
        if n.size and (n[0] > 0 or n[-1] < 0):
            return np.abs(n).astype(np.float64) ** (-1.0 / s)
        return f(n)

    return g


def _coarse_levels(ids: np.ndarray, w: np.ndarray, c: int, P: Params) -> float:
    """sum_{j > c} 2^(j beta) sum_k (cell p-sum)^(r/p), given level-c cells ``ids`` with p-sums ``w``."""
    e = P.r / P.p
    beta = P.beta
    total = 0.0
    j = c + 1
    while True:
        cells = ids >> (j - c)
        if cells.size == 0 or (cells.min() >= -1 and cells.max() <= 0):
            s_neg = float(w[ids < 0].sum())
            s_pos = float(w[ids >= 0].sum())
            tail = s_neg**e + s_pos**e
            return total + tail * 2.0 ** (j * beta) / (1.0 - 2.0**beta)
        uniq, start = np.unique(cells, return_index=True)
        sums = np.add.reduceat(w, start)
        total += 2.0 ** (j * beta) * float(np.sum(sums**e))
        j += 1


class StreamedHead:
    """Dyadic statistics of n -> f(n) restricted to integer ranges, chunk by chunk.

    Per-chunk results are cached by (chunk, clipped range), so a ladder of
    nested ranges only pays for the chunks it has not seen. Chunk results are
    always combined in increasing chunk order, which keeps output bit-identical
    with or without the cache.
    """

    def __init__(self, f: ValueFn, P: Params, chunk_level: int = 20):
        if chunk_level < 0:
            raise ValueError("chunk_level must be nonnegative")
        self.f = f
        self.P = P
        self.c = int(chunk_level)
        self._cache: dict[tuple[int, int, int], tuple[np.ndarray, float]] = {}

    def _chunk(self, cid: int, lo: int, hi: int) -> tuple[np.ndarray, float]:
        key = (cid, lo, hi)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        c, P = self.c, self.P
        e = P.r / P.p
        start = cid << c
        v = self.f(np.arange(lo, hi + 1, dtype=np.int64))
        v = v * v if P.p == 2.0 else np.abs(v) ** P.p
        if hi - lo + 1 == 1 << c:
            arr = v
        else:
            arr = np.zeros(1 << c)
            arr[lo - start : hi - start + 1] = v
        acc = np.empty(c + 1)
        for j in range(c + 1):
            acc[j] = float(np.dot(arr, arr)) if e == 2.0 else float(np.sum(arr**e))
            if j < c:
                arr = arr[0::2] + arr[1::2]
        out = (acc, float(arr[0]))
        self._cache[key] = out
        return out

    def stats(self, a: int, b: int):
        c = self.c
        acc = np.zeros(c + 1)
        ids, totals = [], []
        for cid in range(a >> c, (b >> c) + 1):
            lo, hi = max(a, cid << c), min(b, ((cid + 1) << c) - 1)
            part, tot = self._chunk(cid, lo, hi)
            acc += part
            if tot > 0:
                ids.append(cid)
                totals.append(tot)
        return acc, np.asarray(ids, dtype=np.int64), np.asarray(totals)

    def dyadic_norm(self, a: int, b: int) -> float:
        if b < a:
            return 0.0
        acc, ids, totals = self.stats(a, b)
        if ids.size == 0:
            return 0.0
        P = self.P
        fine = float(np.sum(acc * 2.0 ** (P.beta * np.arange(self.c + 1))))
        return (fine + _coarse_levels(ids, totals, self.c, P)) ** (1.0 / P.r)

    def lr_norm(self, a: int, b: int) -> float:
        """||x||_r on [a, b]: the level-0 accumulator already holds sum |x|^r."""
        if b < a:
            return 0.0
        acc, _, _ = self.stats(a, b)
        return float(acc[0]) ** (1.0 / self.P.r)


def streamed_dyadic_norm(f: ValueFn, a: int, b: int, P: Params, chunk_level: int = 20) -> float:
    """Exact dyadic norm of the sequence n -> f(n) on [a, b] (zero outside).

    Agrees with ``dyadic_norm`` on the materialised sequence; the cost is
    O(b - a) time and O(2^chunk_level) memory.
    """
    return StreamedHead(f, P, chunk_level).dyadic_norm(a, b)


def streamed_lp_norm(f: ValueFn, a: int, b: int, p: float, chunk: int = 1 << 22) -> float:
    if b < a:
        return 0.0
    parts = []
    for lo in range(a, b + 1, chunk):
        n = np.arange(lo, min(lo + chunk, b + 1), dtype=np.int64)
        v = np.abs(f(n))
        parts.append(float(np.max(v)) if math.isinf(p) else float(np.sum(v**p)))
    if math.isinf(p):
        return max(parts)
    return math.fsum(parts) ** (1.0 / p)


def materialise(f: ValueFn, a: int, b: int) -> SparseSeq:
    n = np.arange(a, b + 1, dtype=np.int64)
    return SparseSeq(n, f(n), _trusted=True)


# --- truncation ladders ----------------------------------------------------------------


@dataclass(frozen=True)
class LadderRow:
    M: int
    lp_norm: float
    dyadic_norm: float
    lower_bound: float | None = None

    def as_dict(self) -> dict:
        d = {"M": self.M, "lp_norm": self.lp_norm, "dyadic_norm": self.dyadic_norm}
        if self.lower_bound is not None:
            d["dyadic_lower_bound"] = self.lower_bound
        return d


def _check_sizes(sizes) -> list[int]:
    sizes = [int(M) for M in sizes]
    if any(M < 1 or M & (M - 1) for M in sizes):
        raise ValueError("truncation sizes must be powers of two")
    if sizes != sorted(set(sizes)):
        raise ValueError("truncation sizes must be strictly increasing")
    return sizes


def harmonic_ladder(P: Params, sizes, chunk_level: int = 20) -> list[LadderRow]:
    """x_M(k) = 1/k on 1..M: l^1 partial norms versus dyadic partial norms (needs r > 1)."""
    if not P.r > 1:
        raise ValueError("the harmonic study needs r > 1")
    head = StreamedHead(harmonic_head, P, chunk_level)
    rows = []
    for M in _check_sizes(sizes):
        rows.append(LadderRow(M, streamed_lp_norm(harmonic_head, 1, M, 1.0), head.dyadic_norm(1, M)))
    return rows


def power_lower_bound(P: Params, s: float, M: int) -> float:
    """Per-level witness for x_s on 1 <= |k| <= M.

    On I(j,1) = [2^j, 2^(j+1)) the head is at least 2^(-(j+1)/s), so the level-j
    term is at least 2^(j r (1/q - 1/s)) 2^(-r/s); the mirror cell I(j,-2)
    contributes the same. Summed over the levels fully inside [1, M], returned
    as an r-th root.
    """
    top = (M + 1).bit_length() - 2
    if top < 0:
        return 0.0
    invq = 0.0 if math.isinf(P.q) else 1.0 / P.q
    j = np.arange(top + 1)
    total = 2.0 * 2.0 ** (-P.r / s) * float(np.sum(2.0 ** (j * P.r * (invq - 1.0 / s))))
    return total ** (1.0 / P.r)


def power_ladder(P: Params, s: float, sizes, chunk_level: int = 20) -> list[LadderRow]:
    """x_s(k) = |k|^(-1/s) on 1 <= |k| <= M with q <= s < r: l^r partial norms versus dyadic ones."""
    if not (P.q <= s < P.r):
        raise ValueError(f"the power study needs q <= s < r, got q={P.q}, s={s}, r={P.r}")
    head = StreamedHead(power_head(s), P, chunk_level)
    rows = []
    for M in _check_sizes(sizes):
        rows.append(LadderRow(M, head.lr_norm(-M, M), head.dyadic_norm(-M, M), power_lower_bound(P, s, M)))
    return rows


def last_increment(values) -> float | None:
    return None if len(values) < 2 else values[-1] - values[-2]


def increasing(values, tol: float = 0.0) -> bool:
    return all(b >= a - tol for a, b in zip(values, values[1:]))


def random_corpus(n: int, seed: int, max_support: int = 64, spread: int = 256, amplitude: float = 10.0) -> list[SparseSeq]:
    """n nonzero random sequences with |supp| <= max_support inside [-spread, spread)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        size = int(rng.integers(1, max_support + 1))
        idx = rng.choice(2 * spread, size=size, replace=False) - spread
        vals = rng.uniform(-amplitude, amplitude, size=size)
        out.append(SparseSeq(idx, vals))
    return out
