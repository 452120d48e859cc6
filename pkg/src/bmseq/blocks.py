"""Block space (the predual): (q',p')-blocks, block representations, norm upper bounds.

A (q',p')-block for a dyadic interval I is a sequence supported in I with
||a||_{p'} <= |I|^(1/q - 1/p). The block norm of y is the infimal l^{r'} norm of
coefficient arrays over representations y = sum_I lambda_I a_I.

Writing y_I = lambda_I a_I, the optimal coefficient for a fixed piece y_I is
|I|^(1/p - 1/q) ||y_I||_{p'}, so the infimum becomes the convex program

    minimise  ( sum_I ( |I|^(1/p-1/q) ||y_I||_{p'} )^{r'} )^{1/r'}
    subject to  sum_I y_I = y,  supp y_I in I,

which :func:`block_norm_upper` solves over the intervals meeting supp(y) up
to a level cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import INF, DyadicInterval, Params, SparseSeq, local_lp, lp_norm
from .norms import dnorm

ADMISSIBILITY_TOL = 1e-12


def require_block_params(P: Params) -> None:
    """Blocks, representations and certificates need q < inf (so q' > 1)."""
    if not P.q < INF:
        raise ValueError(f"block space needs q < inf, got {P.as_dict()}")


def require_interior(P: Params) -> None:
    """The smooth block program needs 1 < p < q < inf and 1 < r < inf."""
    if not (P.p > 1 and P.q < INF and P.r > 1):
        raise ValueError(f"block program needs 1 < p < q < inf and 1 < r < inf, got {P.as_dict()}")


def block_bound(I: DyadicInterval, P: Params) -> float:
    """|I|^(1/p' - 1/q') = |I|^(1/q - 1/p)."""
    return float(I.size) ** P.scale_exponent


def _inside(y: SparseSeq, I: DyadicInterval) -> bool:
    return y.is_zero() or (I.start <= y.support_min and y.support_max < I.stop)


def is_block(y: SparseSeq, I: DyadicInterval, P: Params) -> bool:
    """True iff supp(y) is inside I and ||y||_{p'} <= |I|^(1/p'-1/q') (+1e-12)."""
    require_block_params(P)
    if not _inside(y, I):
        return False
    return lp_norm(y, P.p_conj) <= block_bound(I, P) + ADMISSIBILITY_TOL


@dataclass(frozen=True)
class Block:
    interval: DyadicInterval
    values: SparseSeq
    P: Params

    def __post_init__(self):
        if not _inside(self.values, self.interval):
            raise ValueError(f"block support escapes {self.interval}")
        if not is_block(self.values, self.interval, self.P):
            raise ValueError(
                f"block violates admissibility on {self.interval}: "
                f"||a||_p' = {lp_norm(self.values, self.P.p_conj)!r} > {block_bound(self.interval, self.P)!r}"
            )


def single_block_bound(y: SparseSeq, I: DyadicInterval, P: Params) -> float:
    """|I|^(1/p-1/q) ||y||_{p'}: the coefficient of the one-term representation y = lambda * (y/lambda)."""
    require_block_params(P)
    if not _inside(y, I):
        raise ValueError(f"support of y escapes {I}")
    return float(I.size) ** (-P.scale_exponent) * lp_norm(y, P.p_conj)


def _normalised_block(piece: SparseSeq, I: DyadicInterval, P: Params) -> tuple[float, Block]:
    lam = single_block_bound(piece, I, P)
    vals = piece * (1.0 / lam)
    # rounding can push the normalised piece a hair past the bound
    nrm = lp_norm(vals, P.p_conj)
    bound = block_bound(I, P)
    if nrm > bound:
        vals = vals * (bound / nrm)
        lam *= nrm / bound
    return lam, Block(I, vals, P)


class BlockRepresentation:
    """Finite sum of coefficient * block, at most one term per interval.

    Terms sharing an interval are merged into the one-term representation of
    their sum, which never increases the coefficient norm.
    """

    def __init__(self, terms, P: Params):
        require_block_params(P)
        self.P = P
        groups: dict[DyadicInterval, list[tuple[float, Block]]] = {}
        for lam, blk in terms:
            groups.setdefault(blk.interval, []).append((float(lam), blk))
        merged: list[tuple[float, Block]] = []
        for I in sorted(groups):
            ts = groups[I]
            if len(ts) == 1:
                lam, blk = ts[0]
                if lam != 0.0 and not blk.values.is_zero():
                    merged.append((lam, blk))
                continue
            piece = SparseSeq.zero()
            for lam, blk in ts:
                piece = piece + blk.values * lam
            if not piece.is_zero():
                merged.append(_normalised_block(piece, I, P))
        self.terms: tuple[tuple[float, Block], ...] = tuple(merged)

    @classmethod
    def from_pieces(cls, pieces: dict[DyadicInterval, SparseSeq], P: Params) -> "BlockRepresentation":
        """Representation with y_I = pieces[I], each rescaled to a maximal block."""
        terms = [_normalised_block(v, I, P) for I, v in pieces.items() if not v.is_zero()]
        return cls(terms, P)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([lam for lam, _ in self.terms])

    @property
    def coefficient_norm(self) -> float:
        if not self.terms:
            return 0.0
        return lp_norm(SparseSeq(np.arange(len(self.terms)), self.coefficients), self.P.r_conj)

    @property
    def value(self) -> SparseSeq:
        if not self.terms:
            return SparseSeq.zero()
        idx = np.concatenate([b.values.indices for _, b in self.terms])
        val = np.concatenate([lam * b.values.values for lam, b in self.terms])
        return SparseSeq._sum_duplicates(idx, val)

    def __len__(self) -> int:
        return len(self.terms)

    def to_json_obj(self) -> list:
        return [
            {
                "j": b.interval.j,
                "k": b.interval.k,
                "lambda": lam,
                "block_entries": [[n, v] for n, v in b.values.items()],
            }
            for lam, b in self.terms
        ]

    @classmethod
    def from_json_obj(cls, obj, P: Params) -> "BlockRepresentation":
        terms = []
        for t in obj:
            I = DyadicInterval(int(t["j"]), int(t["k"]))
            terms.append((float(t["lambda"]), Block(I, SparseSeq.from_pairs(t["block_entries"]), P)))
        return cls(terms, P)


def canonical_representation(y: SparseSeq, P: Params) -> BlockRepresentation:
    """One singleton block per support point, lambda_k = y(k); coefficient norm ||y||_{r'}."""
    require_block_params(P)
    terms = [(v, Block(DyadicInterval(0, n), SparseSeq.unit(n), P)) for n, v in y.items()]
    return BlockRepresentation(terms, P)


def default_max_level(y: SparseSeq) -> int:
    """ceil(log2(support width)) + 8."""
    if y.is_zero():
        return 8
    width = y.support_max - y.support_min + 1
    return int(width - 1).bit_length() + 8


# --- upper bound solver -------------------------------------------------------------


class _BlockProgram:
    """The convex program over pieces V[i, j] = y_{I(j, n_i >> j)}(n_i), j = 0..L.

    Reduced variables Z = V[:, 1:]; V[:, 0] = y - Z.sum(axis=1) enforces the
    reconstruction constraint exactly.
    """

    def __init__(self, y: SparseSeq, P: Params, L: int):
        self.P = P
        self.L = L
        self.n = y.indices
        self.scale = float(np.max(np.abs(y.values)))
        self.y = y.values / self.scale
        self.pp = P.p_conj
        self.rr = P.r_conj
        s = len(self.n)
        self.cell_id = np.empty((s, L + 1), dtype=np.int64)
        self.cells: list[DyadicInterval] = []
        self.level_of_cell: list[int] = []
        for j in range(L + 1):
            ks = self.n >> j
            uniq, inv = np.unique(ks, return_inverse=True)
            self.cell_id[:, j] = inv + len(self.cells)
            self.cells.extend(DyadicInterval(j, int(k)) for k in uniq)
            self.level_of_cell.extend([j] * len(uniq))
        lv = np.array(self.level_of_cell, dtype=np.float64)
        # (|I|^(1/p-1/q))^{r'}
        self.cw = 2.0 ** (lv * (-P.scale_exponent) * self.rr)
        self.flat = self.cell_id.ravel()

    def pieces(self, z: np.ndarray) -> np.ndarray:
        s = len(self.n)
        Z = z.reshape(s, self.L)
        V = np.empty((s, self.L + 1))
        V[:, 1:] = Z
        V[:, 0] = self.y - Z.sum(axis=1)
        return V

    def objective(self, V: np.ndarray) -> tuple[float, np.ndarray]:
        """F = sum_I cw_I A_I^(r'/p'), A_I = sum_{i in I} |V|^{p'}, and dF/dV."""
        aV = np.abs(V)
        powV = aV**self.pp
        A = np.bincount(self.flat, weights=powV.ravel(), minlength=len(self.cells))
        e = self.rr / self.pp
        F = float(np.sum(self.cw * A**e))
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(A > 0, self.rr * self.cw * A ** (e - 1.0), 0.0)
        G = coef[self.cell_id] * aV ** (self.pp - 1.0) * np.sign(V)
        return F, G

    def fun(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        V = self.pieces(z)
        F, G = self.objective(V)
        grad = G[:, 1:] - G[:, [0]]
        return F, grad.ravel()

    def representation(self, V: np.ndarray) -> BlockRepresentation:
        pieces: dict[DyadicInterval, SparseSeq] = {}
        Vs = V * self.scale
        for c, I in enumerate(self.cells):
            rows, cols = np.nonzero(self.cell_id == c)
            vals = Vs[rows, cols]
            if np.any(vals != 0):
                pieces[I] = SparseSeq(self.n[rows], vals)
        return BlockRepresentation.from_pieces(pieces, self.P)


def solve_block_program(
    y: SparseSeq, P: Params, max_level: int | None = None, iterations: int = 500
) -> tuple[float, BlockRepresentation, SparseSeq]:
    """Best representation found plus the solver's multiplier vector (a dual candidate)."""
    require_interior(P)
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    L = default_max_level(y) if max_level is None else int(max_level)
    if L < 0:
        raise ValueError("max_level must be nonnegative")
    if y.is_zero():
        return 0.0, BlockRepresentation([], P), SparseSeq.zero()

    canon = canonical_representation(y, P)
    best_val, best_rep = canon.coefficient_norm, canon

    # smallest single dyadic interval (level <= L) holding the whole support
    single = None
    for j in range(L + 1):
        if (y.support_min >> j) == (y.support_max >> j):
            single = DyadicInterval(j, y.support_min >> j)
            break
    if single is not None:
        lam, blk = _normalised_block(y, single, P)
        if lam < best_val:
            best_val, best_rep = lam, BlockRepresentation([(lam, blk)], P)

    dual = y.map_values(lambda v: np.sign(v) * np.abs(v) ** (P.p_conj - 1.0))
    if L > 0:
        prog = _BlockProgram(y, P, L)
        z0 = np.zeros(len(prog.n) * L)
        res = minimize(prog.fun, z0, jac=True, method="L-BFGS-B",
                       options={"maxiter": iterations, "ftol": 1e-15, "gtol": 1e-12})
        V = prog.pieces(res.x)
        rep = prog.representation(V)
        val = rep.coefficient_norm
        if val < best_val:
            best_val, best_rep = val, rep
        _, G = prog.objective(V)
        mult = G[:, 0]
        if np.any(mult != 0):
            dual = SparseSeq(prog.n, mult)
    return best_val, best_rep, dual


def block_norm_upper(
    y: SparseSeq, P: Params, max_level: int | None = None, iterations: int = 500
) -> tuple[float, BlockRepresentation]:
    """Upper bound on the block norm of y with the representation attaining it.

    Never worse than the canonical (singleton) representation or the best
    single-interval representation.
    """
    val, rep, _ = solve_block_program(y, P, max_level, iterations)
    return val, rep


def extremal_block(x: SparseSeq, I: DyadicInterval, P: Params, allow_zero: bool = False) -> Block:
    """b_I = |I|^(1/q-1/p) ||x||_{p,I}^(1-p) |x|^(p-1) sgn(x) on I.

    b_I is a block with equality in the admissibility bound and pairs with x to
    |I|^(1/q-1/p) ||x||_{p,I}. Where x vanishes on I this raises, unless
    ``allow_zero`` is set, in which case the zero block is returned.
    """
    require_block_params(P)
    local = local_lp(x, I, P.p)
    if local == 0.0:
        if allow_zero:
            return Block(I, SparseSeq.zero(), P)
        raise ValueError(f"x vanishes on {I}")
    xi = x.restrict_range(I.start, I.stop - 1)
    c = block_bound(I, P) * local ** (1.0 - P.p)
    vals = c * np.abs(xi.values) ** (P.p - 1.0) * np.sign(xi.values)
    b = SparseSeq(xi.indices, vals, _trusted=True)
    nrm = lp_norm(b, P.p_conj)
    if nrm > block_bound(I, P):
        b = b * (block_bound(I, P) / nrm)
    return Block(I, b, P)


# --- damping probe ---------------------------------------------------------------------


def damping_ratio(P: Params, J: int, rng: np.random.Generator, signed: bool = True) -> float:
    """||sum_I lambda_I |I|^(1/q-1/p) u_I|| / ||lambda||_r for one random draw.

    I runs over all dyadic intervals inside [0, 2^J); each u_I has unit
    l^p norm on I.
    """
    size = 1 << J
    x = np.zeros(size)
    lams = []
    for j in range(J + 1):
        w = float(1 << j) ** P.scale_exponent
        for k in range(size >> j):
            u = rng.standard_normal(1 << j) if signed else rng.random(1 << j)
            u /= np.sum(np.abs(u) ** P.p) ** (1.0 / P.p)
            lam = rng.standard_normal() if signed else rng.random()
            lams.append(lam)
            x[k << j:(k + 1) << j] += lam * w * u
    lam_norm = float(np.sum(np.abs(lams) ** P.r) ** (1.0 / P.r))
    return dnorm(SparseSeq.from_dense(0, x), P) / lam_norm


def damping_probe(P: Params, J: int, seeds: int = 8, seed: int = 0) -> float:
    """Maximum damping ratio over ``seeds`` signed and nonnegative draws."""
    rng = np.random.default_rng([seed, J])
    out = 0.0
    for s in range(seeds):
        out = max(out, damping_ratio(P, J, rng, signed=bool(s % 2)))
    return out


def block_norm_r_equals_p(y: SparseSeq, P: Params) -> float:
    """C_{p,q}^{-1} ||y||_{p'}: the block norm when r = p (dual of a multiple of l^p)."""
    if not math.isclose(P.r, P.p):
        raise ValueError("closed form only for r = p")
    from .norms import c_pq_constant

    return lp_norm(y, P.p_conj) / c_pq_constant(P)
