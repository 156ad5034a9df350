import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from edukl import (
    DensityConfig,
    DiscreteDistribution,
    EmpiricalDistribution,
    density_pair,
    entropy,
    expected_lr,
    kl_discrete,
    kl_divergence,
    mean_gap_area,
    signed_kl,
    theil_index,
)


def gaussian_kl(mu1, sd1, mu0, sd0):
    """Closed-form KL(N(mu1, sd1^2) || N(mu0, sd0^2)) in nats."""
    return math.log(sd0 / sd1) + (sd1**2 + (mu1 - mu0) ** 2) / (2 * sd0**2) - 0.5


def normal_pair(mu1, sd1, mu0, sd0, n=100_000, seed=0):
    rng = np.random.default_rng(seed)
    return (
        EmpiricalDistribution(rng.normal(mu1, sd1, n)),
        EmpiricalDistribution(rng.normal(mu0, sd0, n)),
    )


positive_vectors = st.lists(
    st.floats(min_value=1e-3, max_value=1e6, allow_nan=False), min_size=1, max_size=30
)


class TestKlDiscrete:
    def test_identical_is_zero(self):
        p = DiscreteDistribution(np.array([0.2, 0.3, 0.5]))
        assert kl_discrete(p, p) == 0.0

    def test_direct_evaluation(self):
        # 0.25 log(0.25/0.5) + 0.75 log(0.75/0.5)
        p = DiscreteDistribution(np.array([0.25, 0.75]))
        q = DiscreteDistribution(np.array([0.5, 0.5]))
        expected = 0.25 * math.log(0.5) + 0.75 * math.log(1.5)
        assert kl_discrete(p, q) == pytest.approx(expected, abs=1e-15)
        assert kl_discrete(p, q) == pytest.approx(0.1308, abs=5e-5)

    def test_point_mass_vs_uniform(self):
        p = DiscreteDistribution(np.array([1.0, 0.0]))
        q = DiscreteDistribution(np.array([0.5, 0.5]))
        assert kl_discrete(p, q) == pytest.approx(math.log(2), abs=1e-15)

    def test_absolute_continuity_failure_is_inf(self):
        p = DiscreteDistribution(np.array([0.5, 0.5]))
        q = DiscreteDistribution(np.array([1.0, 0.0]))
        assert kl_discrete(p, q) == math.inf

    def test_zero_p_entries_ignored(self):
        p = DiscreteDistribution(np.array([0.0, 1.0]))
        q = DiscreteDistribution(np.array([0.0, 1.0]))
        assert kl_discrete(p, q) == 0.0

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            kl_discrete(DiscreteDistribution.uniform(2), DiscreteDistribution.uniform(3))

    @given(positive_vectors, positive_vectors)
    def test_nonnegative(self, wp, wq):
        n = min(len(wp), len(wq))
        p = DiscreteDistribution.from_weights(wp[:n])
        q = DiscreteDistribution.from_weights(wq[:n])
        assert kl_discrete(p, q) >= 0.0


class TestDiscreteDistribution:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            DiscreteDistribution(np.array([0.5, 0.6]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            DiscreteDistribution(np.array([1.5, -0.5]))

    def test_uniform(self):
        assert_allclose(DiscreteDistribution.uniform(4).probabilities, 0.25)


class TestEntropy:
    def test_degenerate_is_zero(self):
        assert entropy(DiscreteDistribution(np.array([1.0, 0.0, 0.0]))) == 0.0

    def test_uniform_is_log_n(self):
        assert entropy(DiscreteDistribution.uniform(4)) == pytest.approx(
            math.log(4), abs=1e-12
        )

    @given(positive_vectors)
    def test_bounded_by_log_n(self, weights):
        p = DiscreteDistribution.from_weights(weights)
        assert 0.0 <= entropy(p) <= math.log(len(p)) + 1e-12


class TestTheil:
    def test_equal_incomes_zero(self):
        assert theil_index([5.0, 5.0, 5.0]) == pytest.approx(0.0, abs=1e-15)

    def test_two_person_oracle(self):
        # shares (0.25, 0.75) vs uniform: same number as the kl_discrete oracle
        assert theil_index([1.0, 3.0]) == pytest.approx(0.1308, abs=5e-5)

    def test_concentration_limit_is_log_n(self):
        # all income with one person (others epsilon): approaches log n
        n = 8
        incomes = [1e-12] * (n - 1) + [1.0]
        assert theil_index(incomes) == pytest.approx(math.log(n), abs=1e-9)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            theil_index([1.0, 0.0])
        with pytest.raises(ValueError):
            theil_index([1.0, -2.0])

    @given(positive_vectors)
    def test_equals_kl_from_uniform(self, incomes):
        shares = DiscreteDistribution.from_weights(incomes)
        uniform = DiscreteDistribution.uniform(len(incomes))
        assert theil_index(incomes) == pytest.approx(
            kl_discrete(shares, uniform), abs=1e-12
        )

    @given(positive_vectors, st.integers(min_value=-20, max_value=20))
    def test_scale_invariance_exact_for_power_of_two(self, incomes, exponent):
        c = 2.0**exponent
        assert theil_index([c * x for x in incomes]) == theil_index(incomes)

    @given(positive_vectors, st.floats(min_value=1e-3, max_value=1e3))
    def test_scale_invariance_general(self, incomes, c):
        assert theil_index([c * x for x in incomes]) == pytest.approx(
            theil_index(incomes), abs=1e-10
        )


class TestKlDivergence:
    def test_identical_estimates_zero(self):
        rng = np.random.default_rng(1)
        d = EmpiricalDistribution(rng.normal(0, 1, 10_000))
        f, f0 = density_pair(d, d)
        assert kl_divergence(f, f0) == 0.0

    def test_unit_shift_oracle(self):
        obs, ref = normal_pair(0, 1, 1, 1, seed=0)
        f, f0 = density_pair(obs, ref, DensityConfig(bins=200))
        truth = gaussian_kl(0, 1, 1, 1)
        assert truth == 0.5
        assert kl_divergence(f, f0) == pytest.approx(truth, abs=0.05)

    def test_variance_ratio_oracle_and_asymmetry(self):
        wide, narrow = normal_pair(0, 2, 0, 1, seed=1)
        cfg = DensityConfig(bins=200)
        f_w, f_n = density_pair(wide, narrow, cfg)
        forward = kl_divergence(f_w, f_n)
        backward = kl_divergence(f_n, f_w)
        assert forward == pytest.approx(gaussian_kl(0, 2, 0, 1), rel=0.10)
        assert backward == pytest.approx(gaussian_kl(0, 1, 0, 2), rel=0.10)
        assert forward != backward

    def test_rejects_mismatched_grids(self):
        rng = np.random.default_rng(2)
        a = EmpiricalDistribution(rng.normal(0, 1, 1000))
        b = EmpiricalDistribution(rng.normal(5, 1, 1000))
        from edukl import estimate_density

        with pytest.raises(ValueError):
            kl_divergence(estimate_density(a), estimate_density(b))

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            a = EmpiricalDistribution(rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 2), 2000))
            b = EmpiricalDistribution(rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 2), 2000))
            f, f0 = density_pair(a, b)
            assert kl_divergence(f, f0) >= 0.0


class TestExpectedLr:
    def test_identical_zero(self):
        rng = np.random.default_rng(4)
        d = EmpiricalDistribution(rng.normal(0, 1, 5000))
        f, f0 = density_pair(d, d)
        assert expected_lr(f, f0) == 0.0

    def test_exactly_twice_kl(self):
        obs, ref = normal_pair(0.4, 1.2, 0, 1, n=20_000, seed=5)
        f, f0 = density_pair(obs, ref)
        assert expected_lr(f, f0) == 2.0 * kl_divergence(f, f0)

    def test_unit_shift_value(self):
        obs, ref = normal_pair(0, 1, 1, 1, seed=6)
        f, f0 = density_pair(obs, ref, DensityConfig(bins=200))
        assert expected_lr(f, f0) == pytest.approx(1.0, abs=0.1)


class TestMeanGapArea:
    def test_identical_zero(self):
        d = EmpiricalDistribution([1.0, 2.0, 3.0])
        assert mean_gap_area(d, d) == 0.0

    def test_pointwise_shift(self):
        base = np.array([10.0, 25.0, 40.0])
        assert mean_gap_area(
            EmpiricalDistribution(base + 10.0), EmpiricalDistribution(base)
        ) == pytest.approx(10.0)

    def test_direct_means(self):
        obs = EmpiricalDistribution([1, 2, 3])
        ref = EmpiricalDistribution([2, 4, 6])
        assert mean_gap_area(obs, ref) == pytest.approx(-2.0)


class TestSignedKl:
    def test_self_is_zero(self):
        rng = np.random.default_rng(7)
        d = EmpiricalDistribution(rng.normal(250, 40, 5000))
        result = signed_kl(d, d)
        assert result.value == 0.0
        assert result.magnitude == 0.0

    def test_shift_down_is_negative(self):
        rng = np.random.default_rng(8)
        base = rng.normal(250, 40, 20_000)
        obs = EmpiricalDistribution(base - 40.0)
        ref = EmpiricalDistribution(base)
        result = signed_kl(obs, ref)
        assert result.sign == -1
        assert result.value < 0

    def test_shift_up_is_positive(self):
        rng = np.random.default_rng(8)
        base = rng.normal(250, 40, 20_000)
        result = signed_kl(EmpiricalDistribution(base + 40.0), EmpiricalDistribution(base))
        assert result.sign == 1
        assert result.value > 0

    def test_sign_follows_shift_direction(self):
        rng = np.random.default_rng(9)
        base = rng.normal(0, 1, 20_000)
        ref = EmpiricalDistribution(base)
        for shift in (-1.5, -0.5, 0.5, 1.5):
            res = signed_kl(EmpiricalDistribution(base + shift), ref)
            assert np.sign(res.value) == np.sign(shift)

    def test_magnitude_tracks_gaussian_oracle(self):
        obs, ref = normal_pair(0, 1, 1, 1, seed=10)
        res = signed_kl(obs, ref, DensityConfig(bins=200))
        assert res.magnitude == pytest.approx(0.5, abs=0.05)
        assert res.sign == -1  # observed sits below the reference

    def test_value_is_sign_times_magnitude(self):
        from edukl import SignedKL

        assert SignedKL(magnitude=0.7, sign=-1).value == -0.7
        with pytest.raises(ValueError):
            SignedKL(magnitude=-0.1, sign=1)
        with pytest.raises(ValueError):
            SignedKL(magnitude=0.1, sign=2)
