import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import rowex._backend as backend
from rowex import (
    InputError,
    UniformStream,
    UnitUniform,
    builtin_models,
    collapse,
    digit,
    rep_from_model,
    sample_array_rep,
    sample_array_separate,
    split_uniform,
)
from rowex._bits import NS_REPLICA_A, NS_REPLICA_B, subseed
from rowex.diagnostics import chi_square_two_sample
from rowex.representation import sample_patch_arrays

U64 = st.integers(min_value=0, max_value=2**64 - 1)


def u(x: float) -> UnitUniform:
    return UnitUniform.from_float(x)


class TestDigit:
    def test_worked_examples(self):
        assert digit(1, u(0.75)) == 1
        assert digit(2, u(0.75)) == 1
        assert digit(1, u(0.25)) == 0
        assert digit(2, u(0.25)) == 1

    def test_range_validation(self):
        with pytest.raises(InputError):
            digit(0, u(0.5))
        with pytest.raises(InputError):
            digit(65, u(0.5))

    @given(U64)
    def test_digits_reconstruct_fraction(self, frac):
        x = UnitUniform(frac)
        rebuilt = sum(digit(n, x) << (64 - n) for n in range(1, 65))
        assert rebuilt == frac


class TestSplitUniform:
    def test_worked_example_11_16(self):
        a, b = split_uniform(u(11 / 16))
        assert (a.value, b.value) == (0.75, 0.25)

    def test_dyadic_convention_half(self):
        # terminating expansion: .1000... splits to (.1, .0)
        a, b = split_uniform(u(0.5))
        assert (a.value, b.value) == (0.5, 0.0)

    @given(U64)
    def test_bijection_on_64_bit_fractions(self, frac):
        a, b = split_uniform(UnitUniform(frac))
        assert a.frac % (1 << 32) == 0 and b.frac % (1 << 32) == 0
        rebuilt = 0
        for k in range(1, 33):
            rebuilt |= digit(k, a) << (64 - (2 * k - 1))
            rebuilt |= digit(k, b) << (64 - 2 * k)
        assert rebuilt == frac

    def test_outputs_independent_uniform(self):
        """Contingency test of independence on the top 4 bits of each output."""
        stream = UniformStream(20260808, stream_id=77)
        fracs = stream.fracs(10**5)
        from rowex._kernels import split_fracs

        hi, lo = split_fracs(fracs)
        a = (hi >> np.uint64(60)).astype(np.int64)
        b = (lo >> np.uint64(60)).astype(np.int64)
        joint = np.bincount(a * 16 + b, minlength=256)
        from scipy.stats import chi2_contingency

        stat, p, dof, _ = chi2_contingency(joint.reshape(16, 16))
        assert dof == 225
        assert p > 0.001


class TestUnitUniform:
    def test_frac_validation(self):
        with pytest.raises(InputError):
            UnitUniform(-1)
        with pytest.raises(InputError):
            UnitUniform(1 << 64)

    def test_from_float(self):
        assert UnitUniform.from_float(0.75).frac == 3 << 62
        with pytest.raises(InputError):
            UnitUniform.from_float(1.0)

    def test_value(self):
        assert UnitUniform(1 << 63).value == 0.5


class TestUniformStream:
    def test_pure_function_of_counter(self):
        s1 = UniformStream(42, stream_id=3)
        s2 = UniformStream(42, stream_id=3, counter=999)
        assert s1.uniform_at(5) == s2.uniform_at(5)

    def test_distinct_streams_differ(self):
        a = UniformStream(42, stream_id=1).uniform_at(0)
        b = UniformStream(42, stream_id=2).uniform_at(0)
        assert a != b

    def test_bulk_matches_scalar(self):
        s = UniformStream(7, stream_id=11, namespace=2)
        bulk = s.fracs(50, start=3)
        scalars = [s.uniform_at(3 + c).frac for c in range(50)]
        assert bulk.tolist() == scalars

    def test_draws_never_zero(self):
        s = UniformStream(1, stream_id=0)
        assert int(s.fracs(200000).min()) > 0

    def test_next_uniform_advances(self):
        s = UniformStream(5)
        first = s.next_uniform()
        assert s.counter == 1
        assert first == s.uniform_at(0)


class TestCollapse:
    def test_ignores_last_two_arguments(self):
        g = lambda a, b, e, z: int(a.value < 0.5) + 2 * int(b.value < 0.5)
        f = collapse(g)
        for zv in (0.1, 0.5, 11 / 16, 0.99):
            assert f(u(0.3), u(0.7), u(zv)) == g(u(0.3), u(0.7), None, None)

    def test_indicator_worked_example(self):
        # first split output of 11/16 is 0.75, so indicator(e < 1/2) gives 0
        g = lambda a, b, e, z: int(e.value < 0.5)
        assert collapse(g)(u(0.2), u(0.9), u(11 / 16)) == 0

    def test_collapsed_law_matches_separate_sampler(self):
        """Patch law of collapse(g) equals g driven by fresh column uniforms."""

        def g(a, b, e, z):
            return int((int(a.value < 0.6) + int(b.value < 0.5)
                        + int(e.value < 0.4) + int(z.value < 0.7)) % 2)

        f = collapse(g)
        K = 10**5
        codes_a = np.empty(K, dtype=np.int64)
        codes_b = np.empty(K, dtype=np.int64)
        for k in range(K):
            arr = sample_array_rep(f, 2, 2, subseed(99, NS_REPLICA_A, k))
            codes_a[k] = arr[0, 0] * 8 + arr[0, 1] * 4 + arr[1, 0] * 2 + arr[1, 1]
            arr = sample_array_separate(g, 2, 2, subseed(99, NS_REPLICA_B, k))
            codes_b[k] = arr[0, 0] * 8 + arr[0, 1] * 4 + arr[1, 0] * 2 + arr[1, 1]
        p = chi_square_two_sample(np.bincount(codes_a, minlength=16),
                                  np.bincount(codes_b, minlength=16))
        assert p > 0.001


class TestSampleArrayRep:
    def test_constant_function(self):
        arr = sample_array_rep(lambda a, b, z: 3, 2, 4, seed=0)
        assert (arr == 3).all()

    def test_deterministic_per_seed(self):
        f = lambda a, b, z: int(z.value < 0.5)
        one = sample_array_rep(f, 3, 5, seed=12)
        two = sample_array_rep(f, 3, 5, seed=12)
        np.testing.assert_array_equal(one, two)
        assert not np.array_equal(one, sample_array_rep(f, 3, 5, seed=13))

    def test_column_extension_stability(self):
        f = lambda a, b, z: int(z.value * 4)
        small = sample_array_rep(f, 3, 4, seed=5)
        large = sample_array_rep(f, 3, 9, seed=5)
        np.testing.assert_array_equal(small, large[:, :4])

    def test_row_extension_stability(self):
        f = lambda a, b, z: int(z.value * 4)
        small = sample_array_rep(f, 2, 4, seed=5)
        large = sample_array_rep(f, 6, 4, seed=5)
        np.testing.assert_array_equal(small, large[:2])

    def test_dimension_validation(self):
        with pytest.raises(InputError):
            sample_array_rep(lambda a, b, z: 0, 0, 3, seed=1)

    def test_row_function_gives_constant_iid_rows(self):
        """f reading only the row uniform: constant rows, i.i.d. across rows."""
        f = lambda a, b, z: int(b.value < 0.5)
        values = []
        for seed in range(400):
            arr = sample_array_rep(f, 4, 3, seed=seed)
            assert (arr == arr[:, :1]).all()  # rows constant
            values.extend(arr[:, 0].tolist())
        counts = np.bincount(values, minlength=2)
        from scipy.stats import chisquare

        assert chisquare(counts).pvalue > 0.001

    def test_return_uniforms(self):
        f = lambda a, b, z: int(b.value < 0.5)
        arr, realized = sample_array_rep(f, 3, 2, seed=9, return_uniforms=True)
        assert len(realized.betas) == 3
        expected = [int(b.value < 0.5) for b in realized.betas]
        assert arr[:, 0].tolist() == expected

    def test_fast_path_matches_generic(self, penny):
        rep = rep_from_model(penny)
        for seed in (0, 1, 17, 991):
            fast = sample_array_rep(rep, 3, 4, seed=seed)
            generic, _ = sample_array_rep(rep, 3, 4, seed=seed, return_uniforms=True)
            np.testing.assert_array_equal(fast, generic)

    def test_bulk_matches_per_seed(self, penny):
        rep = rep_from_model(penny)
        seeds = np.arange(20, dtype=np.uint64)
        bulk = sample_patch_arrays(rep, 2, 3, seeds)
        for k, seed in enumerate(seeds):
            np.testing.assert_array_equal(bulk[k], sample_array_rep(rep, 2, 3, int(seed)))


class TestSampleArraySeparate:
    def test_constant(self):
        arr = sample_array_separate(lambda a, b, e, z: 1, 2, 2, seed=0)
        assert (arr == 1).all()

    def test_deterministic(self):
        g = lambda a, b, e, z: int(z.value < 0.3)
        np.testing.assert_array_equal(
            sample_array_separate(g, 2, 3, seed=4),
            sample_array_separate(g, 2, 3, seed=4),
        )

    def test_column_function_gives_constant_columns(self):
        g = lambda a, b, e, z: int(e.value < 0.5)
        arr = sample_array_separate(g, 4, 5, seed=2)
        assert (arr == arr[:1, :]).all()


class TestRepSamplerExchangeability:
    def test_row_permutation_invariance(self, penny):
        """Permuted and raw 2x2 patch laws agree for the table sampler."""
        from rowex import RepresentationArraySampler, exchangeability_test

        sampler = RepresentationArraySampler(penny, 2, 2)
        report = exchangeability_test(
            sampler, sigma=[1, 0], taus=[[1, 0], [0, 1]], K=10**5, seed=23
        )
        assert report.passed and report.p_value > 0.001


@pytest.mark.skipif(not backend.HAS_NUMBA, reason="numba unavailable")
class TestBackendsBitIdentical:
    def test_all_kernels_agree(self, penny):
        from rowex import _kernels_numba as knb
        from rowex import _kernels_numpy as knp

        tab = builtin_models("penny", biases=(0.25, 0.5, 0.75),
                             prior=(0.2, 0.3, 0.5)).tables()
        seeds = np.arange(1, 501, dtype=np.uint64)
        args = (tab.prior_cum, tab.n_atoms, tab.gen_cum, tab.sym_cum,
                seeds, 3, 3, np.uint64(3), np.uint64(4))
        for a, b in zip(knp.sample_patches(*args), knb.sample_patches(*args)):
            np.testing.assert_array_equal(a, b)

        f1 = knp.stream_fracs(np.uint64(5), np.uint64(1), np.uint64(2),
                              np.uint64(0), 4096)
        f2 = knb.stream_fracs(np.uint64(5), np.uint64(1), np.uint64(2),
                              np.uint64(0), 4096)
        np.testing.assert_array_equal(f1, f2)
        for a, b in zip(knp.split_fracs(f1), knb.split_fracs(f2)):
            np.testing.assert_array_equal(a, b)

        cum = tab.sym_cum[0, 0]
        np.testing.assert_array_equal(
            knp.row_cells(np.uint64(9), np.uint64(4), 1, 333, cum),
            knb.row_cells(np.uint64(9), np.uint64(4), 1, 333, cum),
        )
