import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bulkrate import kernels
from bulkrate.kernels import DomainError, Ensemble, KernelSpec

RAW_ENSEMBLES = [e for e in Ensemble if e is not Ensemble.SINE]


def _raw_points(ens, n, rng):
    hi = 2 * math.pi if ens is Ensemble.U else math.pi
    return rng.uniform(0, hi, n), rng.uniform(0, hi, n)


class TestDirichletRatio:
    @pytest.mark.parametrize("N", [1, 2, 5, 17])
    def test_zero(self, N):
        assert float(kernels.dirichlet_ratio(N, 0.0)) == N

    def test_examples(self):
        assert float(kernels.dirichlet_ratio(2, math.pi / 2)) == pytest.approx(math.sqrt(2), rel=1e-15)
        assert abs(float(kernels.dirichlet_ratio(3, 2 * math.pi / 3))) < 1e-15

    @pytest.mark.parametrize("N", [1, 2, 7, 40])
    def test_taylor_continuity(self, N):
        eps = 1e-5
        ref = N * (1 - (N * N - 1) * eps**2 / 24)
        assert abs(float(kernels.dirichlet_ratio(N, eps)) - ref) <= 1e-10

    @pytest.mark.parametrize("N", [2, 3, 8, 33])
    @pytest.mark.parametrize("m", [1, 2, -1])
    def test_limit_at_multiples_of_2pi(self, N, m):
        x0 = 2 * math.pi * m
        expected = (-1) ** ((N - 1) * m) * N
        assert float(kernels.dirichlet_ratio(N, x0)) == pytest.approx(expected, rel=1e-12)
        # just outside the guard both branches must agree
        for d in (3e-6, -3e-6):
            direct = math.sin(N * (x0 + d) / 2) / math.sin((x0 + d) / 2)
            assert float(kernels.dirichlet_ratio(N, x0 + d)) == pytest.approx(direct, rel=1e-9)

    def test_branches_agree_across_guard(self):
        N = 11
        for e in np.geomspace(2.2e-6, 1e-4, 20):
            taylor = N * (1 - (N * N - 1) * e**2 / 24 + (N * N - 1) * (3 * N * N - 7) * e**4 / 5760)
            assert float(kernels.dirichlet_ratio(N, e)) == pytest.approx(taylor, rel=1e-12)

    def test_broadcasts(self):
        out = kernels.dirichlet_ratio(4, np.zeros((3, 2)))
        assert out.shape == (3, 2)
        assert np.all(out == 4)


class TestRawKernels:
    @pytest.mark.parametrize("ens", RAW_ENSEMBLES)
    def test_symmetric(self, ens):
        rng = np.random.default_rng(1)
        x, y = _raw_points(ens, 500, rng)
        spec = KernelSpec(ens, 6, "raw")
        assert np.array_equal(spec(x, y), spec(y, x))

    @pytest.mark.parametrize("ens", RAW_ENSEMBLES)
    @pytest.mark.parametrize("N", [1, 4, 9])
    def test_diagonal_nonnegative(self, ens, N):
        spec = KernelSpec(ens, N, "raw")
        lo, hi = spec.domain
        x = np.linspace(lo, hi, 2001, endpoint=False)
        assert np.all(spec(x, x) >= -1e-12)

    @pytest.mark.parametrize("ens", RAW_ENSEMBLES)
    @pytest.mark.parametrize("N", [1, 3, 8, 20])
    def test_normalization(self, ens, N):
        spec = KernelSpec(ens, N, "raw")
        lo, hi = spec.domain
        t, w = np.polynomial.legendre.leggauss(200)
        x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        total = 0.5 * (hi - lo) * float(np.sum(w * spec(x, x)))
        assert total == pytest.approx(N, rel=1e-8)

    def test_examples(self):
        N = 5
        assert float(KernelSpec(Ensemble.U, N, "raw")(1.3, 1.3)) == pytest.approx(N / (2 * math.pi), rel=1e-15)
        assert float(KernelSpec(Ensemble.SO_EVEN, N, "raw")(0.0, 0.0)) == pytest.approx((2 * N - 1) / math.pi)
        assert float(KernelSpec(Ensemble.SP, N, "raw")(0.0, 0.0)) == 0.0

    def test_sp_and_sominus_even_share_formula(self):
        rng = np.random.default_rng(2)
        x, y = _raw_points(Ensemble.SP, 200, rng)
        a = KernelSpec(Ensemble.SP, 7, "raw")(x, y)
        b = KernelSpec(Ensemble.SOMINUS_EVEN, 7, "raw")(x, y)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("ens, bad", [(Ensemble.U, 2 * math.pi), (Ensemble.SO_EVEN, math.pi),
                                          (Ensemble.SP, -0.1), (Ensemble.SO_ODD, float("nan"))])
    def test_domain_violation(self, ens, bad):
        with pytest.raises(DomainError):
            kernels.ensemble_kernel(KernelSpec(ens, 3, "raw"), bad, 0.5)


class TestBulkKernels:
    @pytest.mark.parametrize("N", [1, 8, 64])
    def test_unitary_diagonal(self, N):
        x = np.linspace(-N / 2 + 0.01, N / 2 - 0.01, 50)
        assert np.allclose(KernelSpec(Ensemble.U, N)(x, x), 1.0, rtol=0, atol=1e-14)

    def test_unitary_closed_form(self):
        N = 12
        rng = np.random.default_rng(3)
        x, y = rng.uniform(-5.9, 5.9, (2, 300))
        d = x - y
        ref = np.sin(math.pi * d) / (N * np.sin(math.pi * d / N))
        assert np.allclose(KernelSpec(Ensemble.U, N)(x, y), ref, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("ens", RAW_ENSEMBLES)
    def test_matches_rescaled_raw(self, ens):
        N = 9
        rng = np.random.default_rng(4)
        x, y = rng.uniform(-4.4, 4.4, (2, 300))
        raw = KernelSpec(ens, N, "raw")
        ax = kernels.bulk_to_angle(ens, N, x)
        ay = kernels.bulk_to_angle(ens, N, y)
        factor = 2 * math.pi / N if ens is Ensemble.U else math.pi / N
        ref = factor * raw(ax, ay)
        assert np.allclose(KernelSpec(ens, N)(x, y), ref, rtol=1e-11, atol=1e-13)

    def test_unitary_minus_sine_example(self):
        # N sin(u / N) < u, so the unitary kernel sits just above the sine kernel
        diff = float(KernelSpec(Ensemble.U, 64)(0.5, 0.0) - kernels.sine_kernel(0.5, 0.0))
        assert 1e-5 < diff < 1e-3
        assert diff == pytest.approx(float(kernels.cue_difference_series(64, 10, 0.5, 0.0)), abs=1e-15)

    @pytest.mark.parametrize("x", [4.0, -4.0, 4.5])
    def test_strict_bulk_domain(self, x):
        with pytest.raises(DomainError):
            KernelSpec(Ensemble.SP, 8)(x, 0.0)

    def test_bulk_converges_to_sine(self):
        x = np.linspace(-1, 1, 21)
        X, Y = np.meshgrid(x, x)
        errs = [np.max(np.abs(KernelSpec(Ensemble.SO_EVEN, N)(X, Y) - kernels.sine_kernel(X, Y)))
                for N in (16, 64, 256)]
        assert errs[0] > errs[1] > errs[2]


class TestSineKernel:
    def test_examples(self):
        assert float(kernels.sine_kernel(0, 0)) == 1.0
        assert abs(float(kernels.sine_kernel(1, 0))) < 1e-16
        assert float(kernels.sine_kernel(0.5, 0)) == pytest.approx(2 / math.pi, rel=1e-15)
        assert float(KernelSpec(Ensemble.SINE)(0.5, 0.0)) == pytest.approx(2 / math.pi, rel=1e-15)

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_symmetric(self, x, y):
        assert kernels.sine_kernel(x, y) == kernels.sine_kernel(y, x)


class TestBuildingBlocks:
    def test_cj_sj_examples(self):
        y = np.linspace(-2, 2, 11)
        assert np.allclose(kernels.cj_kernel(0, 2.0, 0.0, y), 0.5, atol=0)
        for j in (1, 2, 5):
            assert np.all(kernels.sj_kernel(j, 1.5, 0.0, y) == 0.0)
        assert float(kernels.cj_kernel(1, 1.0, 1.0, 1.0)) == pytest.approx(-math.pi / math.sqrt(2), rel=1e-15)

    def test_a_kernels(self):
        x = np.linspace(-1, 1, 13)
        for k in range(4):
            assert np.all(kernels.a_kernel(k, x, x) == 0.0)
            assert np.allclose(kernels.a_prime_kernel(k, x, -x), 0.0, atol=0)
        assert float(kernels.a_kernel(0, 0.5, 0.0)) == pytest.approx(math.pi / 2, rel=1e-15)
        assert float(kernels.a_prime_kernel(0, 0.25, 0.25)) == pytest.approx(math.pi / 2, rel=1e-15)


class TestSoEvenSplit:
    @pytest.mark.parametrize("N", [4, 9, 16])
    def test_residual(self, N):
        rng = np.random.default_rng(N)
        x, y = rng.uniform(-N / 2 + 1e-9, N / 2 - 1e-9, (2, 1000))
        k1, k2, k3, k4 = kernels.so_even_bulk_split(N, x, y)
        sgn = (-1) ** N
        total = k1 - k2 - sgn * k3 - sgn * k4
        assert np.max(np.abs(total - KernelSpec(Ensemble.SO_EVEN, N)(x, y))) < 1e-12

    def test_diagonal_values(self):
        N = 6
        x = np.array([-1.0, 0.0, 2.5])
        k1, k2, _, _ = kernels.so_even_bulk_split(N, x, x)
        assert np.all(k1 == 1.0)
        assert np.allclose(k2, 1 / (2 * N), atol=0)


class TestDifferenceSeries:
    def test_vanishes_on_diagonal(self):
        assert float(kernels.cue_difference_series(16, 5, 0.3, 0.3)) == 0.0

    def test_example_point(self):
        N = 16
        direct = float(KernelSpec(Ensemble.U, N)(0.7, -0.3) - kernels.sine_kernel(0.7, -0.3))
        assert float(kernels.cue_difference_series(N, 12, 0.7, -0.3)) == pytest.approx(direct, abs=1e-14)

    @pytest.mark.parametrize("N", [8, 16, 32])
    def test_within_tail_bound(self, N):
        s, K = 1.0, 6
        x = np.linspace(-s, s, 41)
        X, Y = np.meshgrid(x, x)
        direct = KernelSpec(Ensemble.U, N)(X, Y) - kernels.sine_kernel(X, Y)
        approx = kernels.cue_difference_series(N, K, X, Y)
        # first omitted term, inflated by the geometric factor 1 / (1 - (2s/N)^2)
        q = (2 * s / N) ** 2
        c = float(kernels.series.csc_coeff(K + 1))
        tail = c * (2 * math.pi * s) ** (2 * K + 3) / N ** (2 * K + 4) / (1 - q)
        assert np.max(np.abs(direct - approx)) <= tail + 1e-15

    def test_truncation_error_ratio(self):
        N, s = 16, 1.0
        x = np.linspace(-s, s, 21)
        X, Y = np.meshgrid(x, x)
        direct = KernelSpec(Ensemble.U, N)(X, Y) - kernels.sine_kernel(X, Y)
        errs = [np.max(np.abs(direct - kernels.cue_difference_series(N, K, X, Y))) for K in range(4)]
        for a, b in zip(errs, errs[1:]):
            assert b / a <= 1.05 * (2 * s / N) ** 2

    @pytest.mark.parametrize("N", [8, 12])
    def test_k1_and_k4_series(self, N):
        rng = np.random.default_rng(5)
        x, y = rng.uniform(-1, 1, (2, 200))
        k1, _, _, k4 = kernels.so_even_bulk_split(N, x, y)
        assert np.allclose(kernels.so_even_k1_series(N, 14, x, y), k1 - kernels.sine_kernel(x, y), atol=1e-13)
        assert np.allclose(kernels.so_even_k4_series(N, 14, x, y), k4, atol=1e-13)

    def test_errors(self):
        with pytest.raises(ValueError):
            kernels.cue_difference_series(8, -1, 0.0, 0.0)
        with pytest.raises(DomainError):
            kernels.cue_difference_series(4, 3, 3.0, -1.5)
        with pytest.raises(DomainError):
            kernels.so_even_k4_series(4, 3, 2.0, 2.5)


class TestKernelSpec:
    def test_parse(self):
        assert Ensemble.parse("sp") is Ensemble.SP
        assert KernelSpec("SO_even", 3).ensemble is Ensemble.SO_EVEN
        with pytest.raises(ValueError):
            Ensemble.parse("GUE")

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            KernelSpec(Ensemble.U, 0)
        with pytest.raises(ValueError):
            KernelSpec(Ensemble.U, 4, "edge")

    def test_domains(self):
        assert KernelSpec(Ensemble.U, 4, "raw").domain == (0.0, 2 * math.pi)
        assert KernelSpec(Ensemble.SP, 4, "raw").domain == (0.0, math.pi)
        assert KernelSpec(Ensemble.SP, 4).domain == (-2.0, 2.0)
