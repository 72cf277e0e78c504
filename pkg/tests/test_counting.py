import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bulkrate import counting
from bulkrate.counting import ClampError, IntegerLaw, spectrum_to_law, tv_integer, w1_integer
from bulkrate.kernels import Ensemble, KernelSpec

from oracles import poisson_binomial_enumerate

probs = st.lists(st.floats(0.0, 1.0), min_size=0, max_size=12)
laws = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8).filter(lambda v: sum(v) > 1e-3).map(
    lambda v: IntegerLaw(np.asarray(v) / sum(v))
)


def bern(p):
    return IntegerLaw([1 - p, p])


class TestIntegerLaw:
    def test_validation(self):
        with pytest.raises(ValueError):
            IntegerLaw([0.5, 0.4])
        with pytest.raises(ValueError):
            IntegerLaw([1.1, -0.1])
        with pytest.raises(ValueError):
            IntegerLaw([])

    def test_tiny_negative_clamped(self):
        law = IntegerLaw([1.0 + 1e-16, -1e-16])
        assert np.all(law.pmf >= 0)

    def test_immutable(self):
        law = bern(0.3)
        with pytest.raises(ValueError):
            law.pmf[0] = 0.0

    def test_from_counts(self):
        law = IntegerLaw.from_counts([0, 2, 2, 1])
        assert np.allclose(law.pmf, [0.25, 0.25, 0.5])
        assert law.mean == pytest.approx(1.25)


class TestSpectrumToLaw:
    def test_examples(self):
        assert np.allclose(spectrum_to_law([0.5]).pmf, [0.5, 0.5])
        assert np.allclose(spectrum_to_law([1.0, 1.0]).pmf, [0, 0, 1])
        assert np.allclose(spectrum_to_law([0.3, 0.6]).pmf, [0.28, 0.54, 0.18], atol=1e-15)

    def test_empty_spectrum(self):
        assert np.array_equal(spectrum_to_law([]).pmf, [1.0])

    @settings(max_examples=200, deadline=None)
    @given(probs)
    def test_matches_enumeration(self, lam):
        assert np.max(np.abs(spectrum_to_law(lam).pmf - poisson_binomial_enumerate(lam))) <= 1e-13

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=60))
    def test_mean_variance(self, lam):
        law = spectrum_to_law(lam)
        lam = np.asarray(lam)
        assert law.mean == pytest.approx(lam.sum(), abs=1e-10)
        assert law.variance == pytest.approx(float(np.sum(lam * (1 - lam))), abs=1e-10)

    def test_clamp_band(self):
        law = spectrum_to_law([-5e-9, 1 + 5e-9])
        assert np.allclose(law.pmf, [0, 1, 0])
        with pytest.raises(ClampError, match="1.001"):
            spectrum_to_law([0.5, 1.001])
        with pytest.raises(ClampError):
            spectrum_to_law([-1e-6])


class TestDistances:
    def test_w1_examples(self):
        assert w1_integer(bern(0.4), bern(0.4)) == 0.0
        assert w1_integer(IntegerLaw.point_mass(0), IntegerLaw.point_mass(3)) == 3.0
        assert w1_integer(bern(0.2), bern(0.7)) == pytest.approx(0.5)

    def test_tv_examples(self):
        assert tv_integer(bern(0.4), bern(0.4)) == 0.0
        assert tv_integer(IntegerLaw.point_mass(1), IntegerLaw.point_mass(4)) == 1.0
        assert tv_integer(bern(0.2), bern(0.7)) == pytest.approx(0.5)

    @settings(max_examples=200, deadline=None)
    @given(laws, laws, laws)
    def test_w1_metric(self, a, b, c):
        assert w1_integer(a, b) == pytest.approx(w1_integer(b, a), abs=1e-14)
        assert w1_integer(a, c) <= w1_integer(a, b) + w1_integer(b, c) + 1e-12
        assert w1_integer(a, a) == 0.0

    @settings(max_examples=200, deadline=None)
    @given(laws, laws)
    def test_tv_range_and_tv_below_w1(self, a, b):
        tv = tv_integer(a, b)
        assert 0.0 <= tv <= 1.0 + 1e-15
        # on the integers every coupling moves mass at least one step
        assert tv <= w1_integer(a, b) + 1e-14

    def test_w1_zero_iff_equal(self):
        a = IntegerLaw([0.2, 0.3, 0.5])
        b = IntegerLaw([0.2, 0.3, 0.5, 0.0])
        assert w1_integer(a, b) == 0.0
        assert w1_integer(a, IntegerLaw([0.2, 0.31, 0.49])) > 0


class TestDppCountLaw:
    @pytest.mark.parametrize("N", [4, 16, 64])
    def test_unitary_mean(self, N):
        law, summary = counting.dpp_count_law(KernelSpec(Ensemble.U, N), (-1, 1))
        assert law.mean == pytest.approx(2.0, rel=1e-8)
        assert summary.trace == pytest.approx(float(np.sum(summary.eigenvalues)), abs=1e-10)

    def test_sine_mean(self):
        law, _ = counting.dpp_count_law(KernelSpec(Ensemble.SINE), (-0.5, 0.5))
        assert law.mean == pytest.approx(1.0, rel=1e-8)

    @pytest.mark.parametrize("ens", [Ensemble.SO_EVEN, Ensemble.SP, Ensemble.SOMINUS_ODD])
    def test_mean_is_diagonal_integral(self, ens):
        spec = KernelSpec(ens, 8)
        lo, hi = -0.7, 1.9
        t, w = np.polynomial.legendre.leggauss(200)
        x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        ref = 0.5 * (hi - lo) * float(np.sum(w * spec(x, x)))
        law, _ = counting.dpp_count_law(spec, (lo, hi))
        assert law.mean == pytest.approx(ref, rel=1e-8)

    def test_spectrum_in_unit_interval(self):
        _, summary = counting.dpp_count_law(KernelSpec(Ensemble.SO_ODD, 32), (-1, 1))
        assert summary.eigenvalues.min() >= 0 and summary.eigenvalues.max() <= 1

    def test_zero_length_interval(self):
        law, summary = counting.dpp_count_law(KernelSpec(Ensemble.U, 8), (0.3, 0.3))
        assert np.array_equal(law.pmf, [1.0])
        assert summary.trace == 0.0

    def test_bulk_restriction(self):
        with pytest.raises(ValueError, match="bulk restriction"):
            counting.dpp_count_law(KernelSpec(Ensemble.U, 4), (-2, 2))


class TestChain:
    def test_unitary_32(self):
        r = counting.distance_chain_check(KernelSpec(Ensemble.U, 32), 1.0)
        assert r.holds
        assert r.dtv <= r.w1 <= r.tnorm + 1e-9

    def test_decreasing_in_n(self):
        a = counting.distance_chain_check(KernelSpec(Ensemble.U, 32), 1.0)
        b = counting.distance_chain_check(KernelSpec(Ensemble.U, 64), 1.0)
        assert b.dtv < a.dtv and b.w1 < a.w1 and b.tnorm < a.tnorm

    def test_sine_vs_sine(self):
        r = counting.distance_chain_check(KernelSpec(Ensemble.SINE), 1.0)
        assert tuple(r) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("ens", [e for e in Ensemble if e is not Ensemble.SINE])
    @pytest.mark.parametrize("N", [8, 16, 33])
    def test_holds_everywhere(self, ens, N):
        assert counting.distance_chain_check(KernelSpec(ens, N), 1.0).holds

    def test_sub_interval(self):
        r = counting.distance_chain_check(KernelSpec(Ensemble.SO_ODD, 16), interval=(0.0, 0.5))
        assert r.holds and r.w1 > 0
