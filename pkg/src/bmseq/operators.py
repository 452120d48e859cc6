"""Translations, convolutions, multipliers, projections and solvers for (I - T_k) x = f.

All solver tolerances and error bounds are measured in the dyadic norm. That
norm is not translation invariant (e.g. e^0 + e^1 and e^1 + e^2 have different
norms), so l^1-convolution bounds pick up the translation constant

    T(p, r) = (2 max(1, 2^(r/p - 1)))^(1/r),   ||x(. - t)|| <= T ||x||,

because a shifted dyadic interval is covered by two dyadic intervals of the
same level. A priori bounds below carry this factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .core import Params, SparseSeq, lp_norm
from .norms import dnorm


class PreconditionError(ValueError):
    """A contraction or invertibility hypothesis fails."""


class ToleranceError(RuntimeError):
    """A requested tolerance cannot be met within the given budget."""


def translation_constant(P: Params) -> float:
    """Sup over t of ||x(. - t)|| / ||x|| is at most this, for the dyadic norm."""
    e = P.r / P.p
    return (2.0 * max(1.0, 2.0 ** (e - 1.0))) ** (1.0 / P.r)


def translate(x: SparseSeq, t: int) -> SparseSeq:
    """y(n) = x(n - t)."""
    return SparseSeq(x.indices + int(t), x.values, _trusted=True)


def convolve(x: SparseSeq, y: SparseSeq) -> SparseSeq:
    """Finite convolution (x * y)(n) = sum_m x(m) y(n - m)."""
    if x.is_zero() or y.is_zero():
        return SparseSeq.zero()
    if x.nnz == 1:
        return translate(y, x.support_min) * float(x.values[0])
    if y.nnz == 1:
        return translate(x, y.support_min) * float(y.values[0])
    a0, b0 = x.support_min, y.support_min
    dx = x.dense(a0, x.support_max)
    dy = y.dense(b0, y.support_max)
    return SparseSeq.from_dense(a0 + b0, np.convolve(dx, dy))


def convolution_bound(x: SparseSeq, y: SparseSeq, P: Params) -> float:
    """||y||_1 * max_{t in supp y} ||x(. - t)||: an exact-input bound on ||x * y||."""
    if x.is_zero() or y.is_zero():
        return 0.0
    worst = max(dnorm(translate(x, int(t)), P) for t in y.indices)
    return lp_norm(y, 1) * worst


def diag_multiply(a: Callable | Mapping[int, float], x: SparseSeq) -> SparseSeq:
    """(M_a x)(n) = a(n) x(n). ``a`` is a vectorised callable on index arrays or a mapping."""
    if x.is_zero():
        return x
    if callable(a):
        av = np.asarray(a(x.indices), dtype=np.float64) * np.ones(x.nnz)
    else:
        av = np.array([a[n] for n in x.indices.tolist()], dtype=np.float64)
    if not np.all(np.isfinite(av)):
        raise ValueError("multiplier must be finite on supp(x)")
    return SparseSeq(x.indices, av * x.values, _trusted=True)


def project(x: SparseSeq, N: int) -> SparseSeq:
    """P_N x = x restricted to |n| <= N."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    return x.restrict_range(-N, N)


# --- kernels and symbols -------------------------------------------------------------


@dataclass(frozen=True)
class Kernel:
    """Finitely supported convolution kernel.

    ``tail_mass`` is a caller-supplied bound on the l^1 mass discarded when an
    infinite kernel was truncated; it is added into solver error bounds.
    """

    seq: SparseSeq
    tail_mass: float = 0.0
    l1_norm: float = field(init=False)

    def __post_init__(self):
        if self.tail_mass < 0:
            raise ValueError("tail_mass must be nonnegative")
        object.__setattr__(self, "l1_norm", lp_norm(self.seq, 1))

    @property
    def width(self) -> int:
        if self.seq.is_zero():
            return 0
        return self.seq.support_max - self.seq.support_min + 1


def geometric_kernel(lam: float, alpha: float, cutoff: int) -> Kernel:
    """k(n) = lam (1 - alpha) alpha^|n| for |n| <= cutoff, with its analytic l^1 tail."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    n = np.arange(-cutoff, cutoff + 1)
    vals = lam * (1.0 - alpha) * alpha ** np.abs(n)
    tail = 2.0 * abs(lam) * alpha ** (cutoff + 1)
    return Kernel(SparseSeq(n, vals), tail)


@dataclass(frozen=True)
class SymbolGrid:
    M: int
    values: np.ndarray
    min_gap: float

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.M) / self.M

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _fold(seq: SparseSeq, M: int) -> np.ndarray:
    buf = np.zeros(M)
    np.add.at(buf, np.mod(seq.indices, M), seq.values)
    return buf


def symbol(k: Kernel, M: int) -> SymbolGrid:
    """k^(theta) = sum_n k(n) e^{-i n theta} at theta = 2 pi m / M, m = 0..M-1."""
    if M < max(1, 4 * k.width):
        raise ValueError(f"resolution M={M} below the oversampling floor 4 * width = {4 * k.width}")
    vals = np.fft.fft(_fold(k.seq, M))
    vals.setflags(write=False)
    gap = float(np.min(np.abs(1.0 - vals)))
    return SymbolGrid(M, vals, gap)


def default_resolution(k: Kernel) -> int:
    """Smallest power of two >= 16 * kernel width (at least 16)."""
    need = max(16, 16 * k.width)
    return 1 << (need - 1).bit_length()


# --- solvers -----------------------------------------------------------------------------


@dataclass
class SolveReport:
    solution: SparseSeq
    error_bound: float
    residual: float
    iterations: int
    symbol_min_gap: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        out = {
            "solution": self.solution.to_json_obj(),
            "error_bound": self.error_bound,
            "residual": self.residual,
            "iterations": self.iterations,
            "symbol_min_gap": self.symbol_min_gap,
        }
        out.update(self.diagnostics)
        return out


def apply_I_minus_T(k: Kernel, x: SparseSeq) -> SparseSeq:
    return x - convolve(k.seq, x)


def _kernel_tail_error(k: Kernel, x: SparseSeq, P: Params, stability: float) -> float:
    """Bound on the change in solution if k's discarded tail were restored."""
    if k.tail_mass == 0.0 or x.is_zero():
        return 0.0
    return stability * translation_constant(P) * k.tail_mass * dnorm(x, P)


def neumann_solve(k: Kernel, f: SparseSeq, P: Params, tol: float = 1e-8, max_terms: int = 10_000) -> SolveReport:
    """x_N = sum_{m=0..N} k^{*m} * f with N fixed a priori by
    T ||k||_1^{N+1} / (1 - ||k||_1) * ||f|| < tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = k.l1_norm
    if a >= 1.0:
        raise PreconditionError(f"Neumann series needs ||k||_1 < 1, got {a!r}")
    T = translation_constant(P)
    fn = dnorm(f, P)
    if fn == 0.0:
        return SolveReport(SparseSeq.zero(), 0.0, 0.0, 0, diagnostics={"kernel_l1": a, "increments": []})

    def tail(N):
        return T * a ** (N + 1) / (1.0 - a) * fn

    N = 0
    if a > 0.0:
        while tail(N) >= tol:
            N += 1
            if N > max_terms:
                raise ToleranceError(f"tolerance {tol} needs more than max_terms={max_terms} terms")
    term = f
    x = f
    increments = []
    for _ in range(N):
        term = convolve(k.seq, term)
        increments.append(dnorm(term, P))
        x = x + term
    res = dnorm(apply_I_minus_T(k, x) - f, P)
    bound = tail(N) if a > 0.0 else 0.0
    if res > 2.0 * tol:
        raise ToleranceError(f"residual {res!r} exceeds 2*tol")
    stability = 1.0 + T * (a + k.tail_mass) / (1.0 - a - k.tail_mass) if a + k.tail_mass < 1 else np.inf
    bound += _kernel_tail_error(k, x, P, stability)
    return SolveReport(
        x, bound, res, N,
        diagnostics={
            "kernel_l1": a,
            "translation_constant": T,
            "stability_bound": 1.0 + T * a / (1.0 - a),
            "increments": increments,
        },
    )


@dataclass(frozen=True)
class InverseKernel:
    """g with (I - T_k)^{-1} = I + T_g, recovered on an M-point grid and truncated."""

    g: Kernel
    M: int
    min_gap: float
    truncated_mass: float
    edge_mass: float


def inverse_kernel(k: Kernel, M: int | None = None, tail_tol: float = 1e-12, max_M: int = 1 << 22) -> InverseKernel:
    """Discrete Fourier inversion of k^/(1 - k^).

    ``edge_mass`` is the l^1 mass of the grid inverse on |n| >= M/4, the part
    contaminated first by aliasing. It must stay below ``tail_tol``; with
    ``M=None`` the grid is doubled from the default until it does. Coefficients
    are then dropped from the outside in while the dropped mass stays within
    ``tail_tol``.
    """
    auto = M is None
    M = default_resolution(k) if auto else int(M)
    while True:
        grid = symbol(k, M)
        if grid.min_gap == 0.0 or not np.isfinite(grid.min_gap):
            raise PreconditionError("1 - k^ vanishes on the grid: I - T_k is not invertible")
        ghat = grid.values / (1.0 - grid.values)
        g = np.fft.ifft(ghat).real
        n = np.arange(M)
        n = np.where(n < M // 2, n, n - M)
        edge = float(np.sum(np.abs(g[np.abs(n) >= M // 4])))
        if edge <= tail_tol:
            break
        if not auto:
            raise PreconditionError(f"grid M={M} too coarse: edge mass {edge!r} exceeds tail_tol {tail_tol!r}")
        if M >= max_M:
            raise ToleranceError(f"inverse kernel not resolved by M={M} (edge mass {edge!r})")
        M *= 2
    order = np.argsort(-np.abs(n), kind="stable")
    dropped = np.cumsum(np.abs(g[order]))
    ndrop = int(np.searchsorted(dropped, tail_tol, side="right"))
    keep = np.ones(M, dtype=bool)
    keep[order[:ndrop]] = False
    trunc = float(dropped[ndrop - 1]) if ndrop else 0.0
    gk = SparseSeq(n[keep], g[keep])
    return InverseKernel(Kernel(gk, trunc), M, grid.min_gap, trunc, edge)


def wiener_solve(
    k: Kernel, f: SparseSeq, P: Params, M: int | None = None, tail_tol: float = 1e-12
) -> SolveReport:
    """x = f + g * f with (I - T_k)^{-1} = I + T_g.

    The reported error bound is a posteriori:
    (1 + T (||g||_1 + truncated mass)) * ||x - k*x - f||, plus the kernel-tail term.
    """
    inv = inverse_kernel(k, M, tail_tol)
    g = inv.g
    x = f + convolve(g.seq, f)
    res = dnorm(apply_I_minus_T(k, x) - f, P)
    T = translation_constant(P)
    g1 = g.l1_norm + inv.truncated_mass
    stability = 1.0 + T * g1
    bound = stability * res + _kernel_tail_error(k, x, P, stability)
    return SolveReport(
        x, bound, res, 1, inv.min_gap,
        diagnostics={
            "M": inv.M,
            "inverse_kernel_l1": g.l1_norm,
            "truncated_mass": inv.truncated_mass,
            "edge_mass": inv.edge_mass,
            "operator_bound": 1.0 + g1,
            "dyadic_operator_bound": stability,
            "inverse_kernel": g.seq,
        },
    )


def nonlinear_solve(
    k: Kernel,
    F: Callable[[np.ndarray], np.ndarray],
    lipschitz: float,
    f: SparseSeq,
    P: Params,
    tol: float = 1e-10,
    max_iter: int = 500,
    tail_tol: float = 1e-14,
) -> SolveReport:
    """Fixed point of x = k*x + F(x) + f for a pointwise map F with F(0) = 0.

    Iterates x <- (I - T_k)^{-1}(F(x) + f); the contraction factor
    L * ||(I - T_k)^{-1}|| (dyadic norm) must be < 1. Since F acts pointwise,
    ||F(x) - F(y)|| <= L ||x - y|| in any lattice norm.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if float(np.asarray(F(np.zeros(1)))[0]) != 0.0:
        raise ValueError("F must fix 0")
    inv = inverse_kernel(k, None, tail_tol)
    T = translation_constant(P)
    op = 1.0 + T * (inv.g.l1_norm + inv.truncated_mass)
    if k.l1_norm < 1.0:
        op = min(op, 1.0 + T * k.l1_norm / (1.0 - k.l1_norm))
    c = lipschitz * op
    if not c < 1.0:
        raise PreconditionError(f"contraction factor L*||(I-T_k)^-1|| = {c!r} is not < 1")

    def step(x):
        h = x.map_values(F) + f
        return h + convolve(inv.g.seq, h)

    x = SparseSeq.zero()
    gaps = []
    for it in range(1, max_iter + 1):
        nxt = step(x)
        gap = dnorm(nxt - x, P)
        if gaps and gap > gaps[-1] * (1.0 + 1e-9) + 1e-300 and gaps[-1] > tol:
            raise ToleranceError(f"iteration gaps stopped decreasing at step {it}")
        gaps.append(gap)
        x = nxt
        if gap < tol:
            break
    else:
        raise ToleranceError(f"no convergence to tol={tol} in {max_iter} iterations")
    res = dnorm(apply_I_minus_T(k, x) - x.map_values(F) - f, P)
    allowed = tol * (1.0 + lipschitz) / (1.0 - c)
    if res > allowed:
        raise ToleranceError(f"a posteriori residual {res!r} exceeds {allowed!r}")
    return SolveReport(
        x, gaps[-1] * c / (1.0 - c), res, len(gaps), inv.min_gap,
        diagnostics={"contraction": c, "gaps": gaps, "M": inv.M},
    )
