import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmseq.core import Params, SparseSeq, lp_norm
from bmseq.norms import centered_norm, dnorm
from bmseq.operators import (
    Kernel,
    PreconditionError,
    ToleranceError,
    apply_I_minus_T,
    convolution_bound,
    convolve,
    default_resolution,
    diag_multiply,
    geometric_kernel,
    inverse_kernel,
    neumann_solve,
    nonlinear_solve,
    project,
    symbol,
    translate,
    translation_constant,
    wiener_solve,
)
from strategies import params, random_seq, sparse_seqs

e = SparseSeq.unit
P242 = Params(2, 4, 2)


def half_e1():
    return Kernel(e(1, 0.5))


class TestTranslate:
    def test_examples(self):
        assert translate(e(0), 5) == e(5)
        assert dnorm(translate(e(0), 1), P242) == dnorm(e(0), P242)

    @given(sparse_seqs(), st.integers(-1000, 1000), st.floats(1, 8))
    def test_lp_invariant(self, x, t, p):
        assert lp_norm(translate(x, t), p) == lp_norm(x, p)

    @given(sparse_seqs(allow_zero=False), st.integers(-300, 300), params())
    def test_dyadic_translation_constant(self, x, t, P):
        assert dnorm(translate(x, t), P) <= translation_constant(P) * dnorm(x, P) * (1 + 1e-12)

    def test_dyadic_norm_is_not_translation_invariant(self):
        # at r = p the norm is a multiple of the l^p norm; off the diagonal it is not invariant
        P = Params(1, 2, 2)
        x = e(0) + e(1)
        assert dnorm(translate(x, 1), P) ** 2 == pytest.approx(5.0, rel=1e-12)
        assert dnorm(x, P) ** 2 == pytest.approx(6.0, rel=1e-12)

    @settings(max_examples=20)
    @given(sparse_seqs(max_size=4, lo=-6, hi=6, allow_zero=False), st.integers(-50, 50))
    def test_centered_norm_invariant(self, x, t):
        P = Params(1, 2, 6)
        a, b = centered_norm(x, P, tol=1e-10), centered_norm(translate(x, t), P, tol=1e-10)
        assert abs(a.value**6 - b.value**6) <= a.remainder_bound + b.remainder_bound + 1e-12 * a.value**6


class TestConvolve:
    def test_examples(self):
        y = SparseSeq([-2, 3], [1.5, -4.0])
        assert convolve(e(0), y) == y
        assert convolve(e(1), e(1)) == e(2)
        assert convolve(e(0) + e(1), e(0) + e(1)) == SparseSeq([0, 1, 2], [1, 2, 1])
        assert convolve(SparseSeq.zero(), y).is_zero()

    @given(sparse_seqs(max_size=8), sparse_seqs(max_size=8))
    def test_matches_direct_sum(self, x, y):
        z = convolve(x, y)
        want: dict[int, float] = {}
        for m, a in x.items():
            for n, b in y.items():
                want[m + n] = want.get(m + n, 0.0) + a * b
        got = z.to_dict()
        for n, v in want.items():
            assert got.get(n, 0.0) == pytest.approx(v, abs=1e-9)
        if not z.is_zero():
            assert x.support_min + y.support_min <= z.support_min
            assert z.support_max <= x.support_max + y.support_max

    @given(sparse_seqs(max_size=6), sparse_seqs(max_size=6))
    def test_commutative(self, x, y):
        a, b = convolve(x, y).to_dict(), convolve(y, x).to_dict()
        assert a.keys() == b.keys()
        for n in a:
            assert a[n] == pytest.approx(b[n], rel=1e-12, abs=1e-12)


class TestConvolutionInequality:
    def test_plain_bound_fails_off_diagonal(self):
        # ||x * y|| = sqrt 6 > ||y||_1 ||x|| = sqrt 5 for p=1, q=r=2
        P = Params(1, 2, 2)
        x, y = e(1) + e(2), e(-1)
        assert dnorm(convolve(x, y), P) ** 2 == pytest.approx(6.0, rel=1e-12)
        assert dnorm(x, P) ** 2 == pytest.approx(5.0, rel=1e-12)
        assert dnorm(convolve(x, y), P) > lp_norm(y, 1) * dnorm(x, P) + 1e-10

    @given(sparse_seqs(max_size=6, allow_zero=False), sparse_seqs(max_size=6, allow_zero=False), params())
    def test_translation_corrected_bound(self, x, y, P):
        lhs = dnorm(convolve(x, y), P)
        assert lhs <= convolution_bound(x, y, P) * (1 + 1e-12) + 1e-10
        assert convolution_bound(x, y, P) <= translation_constant(P) * lp_norm(y, 1) * dnorm(x, P) * (1 + 1e-12)

    @given(sparse_seqs(max_size=6, allow_zero=False), sparse_seqs(max_size=6), st.floats(1, 5), st.floats(1.1, 10))
    def test_plain_bound_holds_when_r_equals_p(self, x, y, p, ratio):
        P = Params(p, p * ratio, p)
        assert dnorm(convolve(x, y), P) <= lp_norm(y, 1) * dnorm(x, P) * (1 + 1e-12) + 1e-10

    def test_kernel_truncation(self, rng):
        P = Params(2, 4, 3)
        T = translation_constant(P)
        full = geometric_kernel(0.3, 0.5, 64)
        for _ in range(5):
            x = random_seq(rng)
            kx = convolve(full.seq, x)
            for N in (1, 2, 4, 8, 16, 32):
                kN = full.seq.restrict_range(-N, N)
                diff = dnorm(kx - convolve(kN, x), P)
                assert diff <= T * lp_norm(full.seq - kN, 1) * dnorm(x, P) * (1 + 1e-12) + 1e-14


class TestMultipliers:
    def test_examples(self, rng):
        x = random_seq(rng)
        assert diag_multiply(lambda n: np.ones_like(n), x) == x
        alt = diag_multiply(lambda n: np.where(n % 2 == 0, 1.0, -1.0), x)
        assert dnorm(alt, P242) == dnorm(x, P242)
        assert dnorm(diag_multiply(lambda n: 0.5, x), P242) == pytest.approx(0.5 * dnorm(x, P242), rel=1e-15)

    def test_mapping_and_nonfinite(self):
        x = e(0) + e(3)
        assert diag_multiply({0: 2.0, 3: 0.0}, x) == e(0, 2.0)
        with pytest.raises(ValueError):
            diag_multiply(lambda n: np.full(n.shape, np.inf), x)

    @given(sparse_seqs(allow_zero=False), params(), st.integers(0, 2**31))
    def test_bound(self, x, P, seed):
        a = np.random.default_rng(seed).uniform(-3, 3, size=x.nnz)
        y = diag_multiply(dict(zip(x.indices.tolist(), a)), x)
        assert dnorm(y, P) <= np.max(np.abs(a)) * dnorm(x, P) * (1 + 1e-12)


class TestProject:
    def test_examples(self):
        assert project(e(5), 4).is_zero()
        x = SparseSeq([-3, 2], [1.0, 1.0])
        assert project(x, 3) == x
        with pytest.raises(ValueError):
            project(x, -1)

    @given(sparse_seqs(), st.integers(0, 50), params())
    def test_contractive(self, x, N, P):
        assert dnorm(project(x, N), P) <= dnorm(x, P) * (1 + 1e-12)

    @given(sparse_seqs(allow_zero=False), params())
    def test_converges(self, x, P):
        R = max(abs(x.support_min), abs(x.support_max))
        assert dnorm(x - project(x, R), P) == 0.0
        errs = [dnorm(x - project(x, N), P) for N in range(R + 1)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))


class TestSymbol:
    def test_geometric_kernel(self):
        k = geometric_kernel(0.3, 0.5, 64)
        assert k.l1_norm == pytest.approx(0.45, abs=1e-15)
        grid = symbol(k, 1024)
        # lam (1 - a)(1 - a^2) / (1 - 2a cos t + a^2) at t = 0 and t = pi, truncation below 1e-19
        assert grid.values[0].real == pytest.approx(0.45, abs=1e-15)
        assert grid.values[512].real == pytest.approx(0.05, abs=1e-15)
        assert grid.min_gap == pytest.approx(0.55, abs=1e-15)
        assert abs(grid.values[0].imag) < 1e-15
        assert grid.sup <= k.l1_norm + 1e-15

    def test_zero_and_shift(self):
        z = symbol(Kernel(SparseSeq.zero()), 8)
        assert z.min_gap == 1.0 and not np.any(z.values)
        s = symbol(half_e1(), 64)
        assert s.min_gap == pytest.approx(0.5, abs=1e-15)
        assert np.allclose(s.values, 0.5 * np.exp(-1j * s.angles), atol=1e-15)

    def test_undersampled(self):
        with pytest.raises(ValueError):
            symbol(geometric_kernel(0.3, 0.5, 64), 512)

    def test_default_resolution(self):
        assert default_resolution(Kernel(SparseSeq.zero())) == 16
        assert default_resolution(geometric_kernel(0.3, 0.5, 64)) == 4096

    def test_kernel_rejects_negative_tail(self):
        with pytest.raises(ValueError):
            Kernel(e(0), -1.0)


class TestNeumann:
    def test_closed_form(self):
        rep = neumann_solve(half_e1(), e(0), P242, tol=1e-8)
        x = rep.solution.to_dict()
        for n in range(21):
            assert x[n] == pytest.approx(2.0**-n, abs=1e-12)
        assert rep.residual <= 2e-8

    def test_zero_kernel_and_rhs(self):
        f = SparseSeq([0, 4], [1.0, -2.0])
        assert neumann_solve(Kernel(SparseSeq.zero()), f, P242).solution == f
        assert neumann_solve(half_e1(), SparseSeq.zero(), P242).solution.is_zero()

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            neumann_solve(Kernel(e(1, 1.0)), e(0), P242)
        with pytest.raises(ToleranceError):
            neumann_solve(Kernel(e(1, 0.99)), e(0), P242, tol=1e-12, max_terms=10)
        with pytest.raises(ValueError):
            neumann_solve(half_e1(), e(0), P242, tol=0)

    def test_stability_and_contraction(self, rng):
        k = geometric_kernel(0.3, 0.5, 64)
        P = Params(2, 4, 3)
        T = translation_constant(P)
        a = k.l1_norm
        for _ in range(5):
            f = random_seq(rng, max_size=8)
            rep = neumann_solve(k, f, P, tol=1e-8)
            assert dnorm(rep.solution, P) <= (1 + T * a / (1 - a)) * dnorm(f, P) + 1e-8
            inc = rep.diagnostics["increments"]
            for u, v in zip(inc, inc[1:]):
                assert v <= T * a * u + 1e-10


class TestWiener:
    def test_inverse_of_shift(self):
        inv = inverse_kernel(half_e1())
        g = inv.g.seq.to_dict()
        for n in range(1, 30):
            assert g[n] == pytest.approx(2.0**-n, abs=1e-13)
        assert all(abs(v) < 1e-12 for n, v in g.items() if n <= 0)

    def test_zero_kernel(self):
        f = SparseSeq([0, 2], [1.0, 3.0])
        rep = wiener_solve(Kernel(SparseSeq.zero()), f, P242)
        assert rep.solution == f and rep.diagnostics["inverse_kernel_l1"] == 0.0

    def test_agrees_with_neumann(self, rng):
        k = geometric_kernel(0.3, 0.5, 64)
        for _ in range(5):
            f = random_seq(rng, max_size=8)
            a = neumann_solve(k, f, P242, tol=1e-8)
            b = wiener_solve(k, f, P242)
            assert dnorm(a.solution - b.solution, P242) <= a.error_bound + b.error_bound

    def test_beyond_neumann(self):
        k = Kernel(SparseSeq([-1, 1], [0.55, 0.6]))
        assert k.l1_norm == pytest.approx(1.15)
        with pytest.raises(PreconditionError):
            neumann_solve(k, e(0), P242)
        rep = wiener_solve(k, e(0), P242)
        assert rep.symbol_min_gap > 0 and rep.residual < 1e-10

    def test_not_invertible(self):
        with pytest.raises(PreconditionError):
            wiener_solve(Kernel(e(0)), e(0), P242)
        # 0.5 (e1 + e-1) has symbol cos(t), equal to 1 at t = 0
        k = Kernel(SparseSeq([-1, 1], [0.5, 0.5]))
        with pytest.raises(PreconditionError):
            wiener_solve(k, e(0), P242)

    def test_coarse_grid_rejected(self):
        k = Kernel(SparseSeq([-1, 1], [0.45, 0.45]))
        with pytest.raises(PreconditionError):
            wiener_solve(k, e(0), P242, M=16)
        assert wiener_solve(k, e(0), P242).residual < 1e-10

    def test_report_json(self):
        obj = wiener_solve(half_e1(), e(0), P242).to_json_obj()
        for key in ("solution", "error_bound", "residual", "iterations", "symbol_min_gap"):
            assert key in obj


class TestNonlinear:
    def test_zero_map_is_wiener(self):
        k = geometric_kernel(0.3, 0.5, 64)
        f = SparseSeq([0, 3], [1.0, -0.5])
        a = nonlinear_solve(k, lambda v: 0.0 * v, 0.0, f, P242)
        b = wiener_solve(k, f, P242, tail_tol=1e-14)
        assert dnorm(a.solution - b.solution, P242) <= 1e-10

    def test_sine(self):
        rep = nonlinear_solve(half_e1(), lambda v: 0.01 * np.sin(v), 0.01, e(0), P242)
        c = rep.diagnostics["contraction"]
        gaps = rep.diagnostics["gaps"]
        assert c < 1
        for u, v in zip(gaps[1:], gaps[2:]):
            assert v <= c * u + 1e-15
        x = rep.solution
        F = x.map_values(lambda v: 0.01 * np.sin(v))
        assert dnorm(apply_I_minus_T(half_e1(), x) - F - e(0), P242) <= 1e-9

    def test_zero_rhs(self):
        rep = nonlinear_solve(half_e1(), np.tanh, 0.2, SparseSeq.zero(), P242)
        assert rep.solution.is_zero()

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            nonlinear_solve(half_e1(), np.sin, 1.0, e(0), P242)
        with pytest.raises(ValueError):
            nonlinear_solve(half_e1(), np.cos, 0.1, e(0), P242)
        with pytest.raises(ValueError):
            nonlinear_solve(half_e1(), np.sin, 0.1, e(0), P242, tol=-1)


def test_translation_constant_values():
    assert translation_constant(Params(2, 4, 2)) == pytest.approx(math.sqrt(2))
    assert translation_constant(Params(1, 2, 2)) == pytest.approx(2.0)
    assert translation_constant(Params(2, 4, 1)) == pytest.approx(2.0)
