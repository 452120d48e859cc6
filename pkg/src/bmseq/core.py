"""Exponents, finitely supported sequences on the integers, and interval geometry."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

INF = math.inf


def parse_exponent(e) -> float:
    """Exponent from a number or a string such as "3/2" or "inf"."""
    if isinstance(e, str):
        s = e.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        return float(Fraction(s))
    return float(e)


def conjugate(e) -> float:
    """Hölder conjugate with 1' = inf and inf' = 1."""
    e = parse_exponent(e)
    if math.isnan(e) or e < 1:
        raise ValueError(f"exponent must be >= 1, got {e}")
    if e == 1:
        return INF
    if e == INF:
        return 1.0
    return e / (e - 1.0)


def _recip(e: float) -> float:
    return 0.0 if e == INF else 1.0 / e


@dataclass(frozen=True)
class Params:
    """Exponent triple (p, q, r) with 1 <= p < q <= inf and 1 <= r < inf.

    Accepts floats, ints, Fractions or strings ("3/2", "inf").
    """

    p: float
    q: float
    r: float

    def __post_init__(self):
        p, q, r = (parse_exponent(v) for v in (self.p, self.q, self.r))
        if not (1 <= p < INF):
            raise ValueError(f"p must lie in [1, inf), got {p}")
        if not (p < q):
            raise ValueError(f"q must exceed p, got p={p}, q={q}")
        if not (1 <= r < INF):
            raise ValueError(f"r must lie in [1, inf), got {r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)

    @property
    def p_conj(self) -> float:
        return conjugate(self.p)

    @property
    def q_conj(self) -> float:
        return conjugate(self.q)

    @property
    def r_conj(self) -> float:
        return conjugate(self.r)

    @property
    def beta(self) -> float:
        """Damping exponent r(1/q - 1/p) weighting |I| in the r-th power of the norm."""
        return self.r * (_recip(self.q) - 1.0 / self.p)

    @property
    def scale_exponent(self) -> float:
        """1/q - 1/p, the exponent of |I| multiplying local l^p norms."""
        return _recip(self.q) - 1.0 / self.p

    @property
    def q_finite(self) -> bool:
        return self.q < INF

    def as_dict(self) -> dict:
        enc = lambda v: "inf" if v == INF else v  # noqa: E731
        return {"p": enc(self.p), "q": enc(self.q), "r": enc(self.r)}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class SparseSeq:
    """Finitely supported real sequence on Z.

    Backed by two sorted numpy arrays (indices, values); only true zeros are
    dropped. Instances are immutable.
    """

    __slots__ = ("_idx", "_val")

    def __init__(self, indices=(), values=(), *, _trusted: bool = False):
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        val = np.asarray(values, dtype=np.float64).reshape(-1)
        if not _trusted:
            if idx.shape != val.shape:
                raise ValueError("indices and values must have the same length")
            if not np.all(np.isfinite(val)):
                raise ValueError("sequence values must be finite")
            order = np.argsort(idx, kind="stable")
            idx, val = idx[order], val[order]
            if idx.size > 1 and np.any(idx[1:] == idx[:-1]):
                raise ValueError("duplicate indices")
        keep = val != 0.0
        if not np.all(keep):
            idx, val = idx[keep], val[keep]
        self._idx = _frozen(np.array(idx, dtype=np.int64))
        self._val = _frozen(np.array(val, dtype=np.float64))

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls) -> "SparseSeq":
        return cls()

    @classmethod
    def unit(cls, n: int, value: float = 1.0) -> "SparseSeq":
        """The canonical unit sequence e^n (optionally scaled)."""
        return cls([int(n)], [value])

    @classmethod
    def from_dict(cls, d: Mapping[int, float]) -> "SparseSeq":
        items = list(d.items())
        return cls([k for k, _ in items], [v for _, v in items])

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "SparseSeq":
        pairs = list(pairs)
        for pr in pairs:
            if len(pr) != 2:
                raise ValueError(f"entry must be an [index, value] pair, got {pr!r}")
            if isinstance(pr[0], bool) or int(pr[0]) != pr[0]:
                raise ValueError(f"index must be an integer, got {pr[0]!r}")
        return cls([int(k) for k, _ in pairs], [float(v) for _, v in pairs])

    @classmethod
    def from_dense(cls, start: int, values) -> "SparseSeq":
        values = np.asarray(values, dtype=np.float64)
        return cls(np.arange(start, start + values.size, dtype=np.int64), values, _trusted=True)

    @classmethod
    def _sum_duplicates(cls, idx: np.ndarray, val: np.ndarray) -> "SparseSeq":
        if idx.size == 0:
            return cls()
        uniq, inv = np.unique(idx, return_inverse=True)
        acc = np.zeros(uniq.size)
        np.add.at(acc, inv, val)
        return cls(uniq, acc, _trusted=True)

    # accessors ------------------------------------------------------------

    @property
    def indices(self) -> np.ndarray:
        return self._idx

    @property
    def values(self) -> np.ndarray:
        return self._val

    @property
    def nnz(self) -> int:
        return int(self._idx.size)

    def __len__(self) -> int:
        return self.nnz

    def is_zero(self) -> bool:
        return self._idx.size == 0

    @property
    def support_min(self) -> int:
        if self.is_zero():
            raise ValueError("the zero sequence has no support")
        return int(self._idx[0])

    @property
    def support_max(self) -> int:
        if self.is_zero():
            raise ValueError("the zero sequence has no support")
        return int(self._idx[-1])

    def __getitem__(self, n: int) -> float:
        pos = np.searchsorted(self._idx, n)
        if pos < self._idx.size and self._idx[pos] == n:
            return float(self._val[pos])
        return 0.0

    def items(self) -> Iterator[tuple[int, float]]:
        return zip(self._idx.tolist(), self._val.tolist())

    def to_dict(self) -> dict[int, float]:
        return dict(self.items())

    def dense(self, lo: int, hi: int) -> np.ndarray:
        """Values on lo..hi inclusive as a dense array."""
        out = np.zeros(hi - lo + 1)
        m = (self._idx >= lo) & (self._idx <= hi)
        out[self._idx[m] - lo] = self._val[m]
        return out

    # arithmetic -------------------------------------------------------------

    def __add__(self, other: "SparseSeq") -> "SparseSeq":
        if not isinstance(other, SparseSeq):
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return SparseSeq._sum_duplicates(
            np.concatenate([self._idx, other._idx]), np.concatenate([self._val, other._val])
        )

    def __neg__(self) -> "SparseSeq":
        return SparseSeq(self._idx, -self._val, _trusted=True)

    def __sub__(self, other: "SparseSeq") -> "SparseSeq":
        if not isinstance(other, SparseSeq):
            return NotImplemented
        return self + (-other)

    def __mul__(self, c: float) -> "SparseSeq":
        if isinstance(c, SparseSeq):
            return NotImplemented
        return SparseSeq(self._idx, self._val * float(c), _trusted=True)

    __rmul__ = __mul__

    def __abs__(self) -> "SparseSeq":
        return SparseSeq(self._idx, np.abs(self._val), _trusted=True)

    def map_values(self, f) -> "SparseSeq":
        """Apply a vectorised map to the stored values (entries outside the support stay 0)."""
        return SparseSeq(self._idx, np.asarray(f(self._val), dtype=np.float64), _trusted=True)

    def restrict(self, mask: np.ndarray) -> "SparseSeq":
        return SparseSeq(self._idx[mask], self._val[mask], _trusted=True)

    def restrict_range(self, lo: int, hi: int) -> "SparseSeq":
        """Restriction to lo <= n <= hi."""
        return self.restrict((self._idx >= lo) & (self._idx <= hi))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseSeq):
            return NotImplemented
        return np.array_equal(self._idx, other._idx) and np.array_equal(self._val, other._val)

    def __hash__(self):
        return hash((self._idx.tobytes(), self._val.tobytes()))

    def __repr__(self) -> str:
        if self.nnz <= 8:
            return f"SparseSeq({self.to_dict()!r})"
        return f"SparseSeq(nnz={self.nnz}, support=[{self.support_min}, {self.support_max}])"

    # serialisation ----------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {"entries": [[k, v] for k, v in self.items()]}

    @classmethod
    def from_json_obj(cls, obj) -> "SparseSeq":
        if not isinstance(obj, dict) or "entries" not in obj:
            raise ValueError('sequence JSON must be an object with an "entries" list')
        entries = obj["entries"]
        if not isinstance(entries, list):
            raise ValueError('"entries" must be a list of [index, value] pairs')
        return cls.from_pairs(entries)


def load_seq(path) -> SparseSeq:
    with open(path, encoding="utf-8") as fh:
        return SparseSeq.from_json_obj(json.load(fh))


def save_seq(x: SparseSeq, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(x.to_json_obj(), fh)


# interval geometry ------------------------------------------------------------


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """I(j, k) = [2^j k, 2^j (k+1)) intersected with Z."""

    j: int
    k: int

    def __post_init__(self):
        if self.j < 0:
            raise ValueError("dyadic level must be nonnegative")

    @property
    def start(self) -> int:
        return self.k << self.j

    @property
    def stop(self) -> int:
        """Exclusive right end."""
        return (self.k + 1) << self.j

    @property
    def size(self) -> int:
        return 1 << self.j

    def __contains__(self, n: int) -> bool:
        return self.start <= n < self.stop

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        if self.j == 0:
            raise ValueError("level-0 intervals have no children")
        return DyadicInterval(self.j - 1, 2 * self.k), DyadicInterval(self.j - 1, 2 * self.k + 1)

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.j + 1, self.k >> 1)

    def members(self) -> range:
        return range(self.start, self.stop)


@dataclass(frozen=True)
class CenteredInterval:
    """S_{m,N} = {m-N, ..., m+N}."""

    m: int
    N: int

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("radius must be nonnegative")

    @property
    def start(self) -> int:
        return self.m - self.N

    @property
    def stop(self) -> int:
        return self.m + self.N + 1

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    def __contains__(self, n: int) -> bool:
        return self.start <= n < self.stop

    def translate(self, t: int) -> "CenteredInterval":
        return CenteredInterval(self.m + t, self.N)

    def members(self) -> range:
        return range(self.start, self.stop)


def _pth_power_sum(vals: np.ndarray, p: float) -> float:
    a = np.abs(vals)
    if p == 1:
        return float(a.sum())
    if p == 2:
        return float(np.dot(a, a))
    return float(np.sum(a**p))


def local_lp(x: SparseSeq, S, p: float) -> float:
    """(sum_{l in S} |x(l)|^p)^(1/p) over the stored entries of x inside S."""
    if p < 1:
        raise ValueError("p must be >= 1")
    lo = np.searchsorted(x.indices, S.start, side="left")
    hi = np.searchsorted(x.indices, S.stop, side="left")
    vals = x.values[lo:hi]
    if vals.size == 0:
        return 0.0
    if p == INF:
        return float(np.max(np.abs(vals)))
    return _pth_power_sum(vals, p) ** (1.0 / p)


def intersecting_dyadic(x: SparseSeq, j: int) -> list[DyadicInterval]:
    """Level-j dyadic intervals meeting supp(x), ordered by position."""
    if j < 0:
        raise ValueError("dyadic level must be nonnegative")
    if x.is_zero():
        raise ValueError("the zero sequence meets no interval")
    ks = np.unique(x.indices >> j)
    return [DyadicInterval(j, int(k)) for k in ks]


def lp_norm(x: SparseSeq, p: float) -> float:
    """Classical l^p norm; p = inf gives the sup norm."""
    p = parse_exponent(p)
    if x.is_zero():
        return 0.0
    if p == INF:
        return float(np.max(np.abs(x.values)))
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(x.values)
    if p == 1:
        return float(a.sum())
    # scale by the max to avoid overflow for large p
    mx = float(a.max())
    return mx * float(np.sum((a / mx) ** p)) ** (1.0 / p)
