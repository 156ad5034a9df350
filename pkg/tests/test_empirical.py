import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from edukl import DensityConfig, EmpiricalDistribution, PercentileTable, estimate_density
from edukl.exceptions import MonotonicityError

finite_samples = st.lists(
    st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    min_size=1,
    max_size=60,
)


class TestConstruction:
    def test_sorts_values(self):
        d = EmpiricalDistribution([3.0, 1.0, 2.0])
        assert d.values.tolist() == [1.0, 2.0, 3.0]

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution([])

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution([1.0, float("nan")])

    def test_weights_normalized(self):
        d = EmpiricalDistribution([1.0, 2.0], weights=[2.0, 6.0])
        assert_allclose(d.weights, [0.25, 0.75])
        assert d.weights.sum() == pytest.approx(1.0, abs=1e-9)

    def test_rejects_negative_weights(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution([1.0, 2.0], weights=[1.0, -0.5])

    def test_rejects_zero_total_weight(self):
        with pytest.raises(ValueError):
            EmpiricalDistribution([1.0, 2.0], weights=[0.0, 0.0])

    def test_immutable(self):
        d = EmpiricalDistribution([1.0, 2.0])
        with pytest.raises(ValueError):
            d.values[0] = 99.0


class TestEcdf:
    def test_below_minimum(self):
        assert EmpiricalDistribution([1, 2, 3]).ecdf(0.5) == 0.0

    def test_at_maximum(self):
        assert EmpiricalDistribution([1, 2, 3]).ecdf(3) == 1.0

    def test_direct_count(self):
        # 2 of 3 values are <= 2
        assert EmpiricalDistribution([1, 2, 3]).ecdf(2) == pytest.approx(2 / 3)

    def test_right_continuity_at_jump(self):
        d = EmpiricalDistribution([1.0, 2.0, 2.0, 3.0])
        assert d.ecdf(2.0) == pytest.approx(0.75)
        assert d.ecdf(np.nextafter(2.0, 1.0)) == pytest.approx(0.25)

    def test_weighted_matches_expanded_sample(self):
        weighted = EmpiricalDistribution([1.0, 2.0, 3.0], weights=[1, 2, 1])
        expanded = EmpiricalDistribution([1.0, 2.0, 2.0, 3.0])
        for y in (0.0, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0):
            assert weighted.ecdf(y) == pytest.approx(expanded.ecdf(y))

    def test_array_input(self):
        d = EmpiricalDistribution([1, 2, 3])
        assert_allclose(d.ecdf(np.array([0.0, 2.0, 5.0])), [0.0, 2 / 3, 1.0])

    @given(finite_samples)
    def test_nondecreasing(self, values):
        d = EmpiricalDistribution(values)
        ys = np.linspace(min(values) - 1, max(values) + 1, 50)
        out = d.ecdf(ys)
        assert np.all(np.diff(out) >= 0)


class TestQuantile:
    def test_inf_definition(self):
        # ecdf(2) = 2/3 >= 0.5, and no smaller sample value reaches 0.5
        assert EmpiricalDistribution([1, 2, 3]).quantile(0.5) == 2.0

    def test_p_one_is_maximum(self):
        assert EmpiricalDistribution([1, 2, 3]).quantile(1.0) == 3.0

    def test_degenerate(self):
        d = EmpiricalDistribution([5, 5, 5])
        for p in (0.0, 0.1, 0.5, 1.0):
            assert d.quantile(p) == 5.0

    def test_p_zero_is_minimum(self):
        assert EmpiricalDistribution([4, 7, 9]).quantile(0.0) == 4.0

    @pytest.mark.parametrize("p", [-0.1, 1.1, float("nan")])
    def test_rejects_out_of_range(self, p):
        with pytest.raises(ValueError):
            EmpiricalDistribution([1, 2]).quantile(p)

    @given(finite_samples)
    def test_nondecreasing_in_p(self, values):
        d = EmpiricalDistribution(values)
        ps = np.linspace(0, 1, 23)
        assert np.all(np.diff(d.quantile(ps)) >= 0)

    @given(finite_samples)
    def test_galois_consistency(self, values):
        d = EmpiricalDistribution(values)
        # quantile(ecdf(y)) <= y at every sample point
        for y in d.values:
            assert d.quantile(d.ecdf(y)) <= y
        # ecdf(quantile(p)) >= p for p in (0, 1]
        for p in (1e-9, 0.25, 0.5, 0.75, 1.0):
            assert d.ecdf(d.quantile(p)) >= p


class TestPercentileTable:
    def test_uniform_grid_identity(self):
        d = EmpiricalDistribution(np.arange(101.0))
        table = d.percentile_table()
        # independent oracle: the inf-definition quantile on this grid is r itself
        assert_allclose(table.entries, np.arange(101.0))

    def test_constant_sample(self):
        table = EmpiricalDistribution([7.0, 7.0, 7.0]).percentile_table()
        assert np.all(table.entries == 7.0)

    def test_endpoints(self):
        d = EmpiricalDistribution([3.0, 9.0, 4.0, 8.0])
        table = d.percentile_table()
        assert table.entries[0] == 3.0
        assert table.entries[100] == 9.0

    @given(finite_samples)
    def test_always_nondecreasing(self, values):
        table = EmpiricalDistribution(values).percentile_table()
        assert np.all(np.diff(table.entries) >= 0)

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            PercentileTable(np.arange(100.0))

    def test_rejects_decreasing(self):
        entries = np.arange(101.0)
        entries[50] = 100.0
        with pytest.raises(MonotonicityError, match="50"):
            PercentileTable(entries)


class TestDensity:
    def test_rejects_single_point_support(self):
        with pytest.raises(ValueError):
            estimate_density(EmpiricalDistribution([2.0, 2.0]))

    def test_histogram_uniform_interior_bins_near_one(self):
        rng = np.random.default_rng(7)
        d = EmpiricalDistribution(rng.uniform(0, 1, 100_000))
        est = estimate_density(d, DensityConfig(bins=10))
        lo, hi = d.support
        interior = (est.grid > lo) & (est.grid < hi)
        assert interior.sum() >= 7
        assert_allclose(est.density[interior], 1.0, atol=0.05)

    def test_kde_standard_normal_at_zero(self):
        rng = np.random.default_rng(11)
        d = EmpiricalDistribution(rng.normal(0, 1, 100_000))
        est = estimate_density(d, DensityConfig(estimator="kde", bins=200))
        # closed-form standard normal pdf at 0
        truth = 1.0 / np.sqrt(2 * np.pi)
        assert abs(est.at(0.0) - truth) / truth < 0.10

    @pytest.mark.parametrize("estimator", ["histogram", "kde"])
    def test_normalized_and_floored(self, estimator):
        rng = np.random.default_rng(3)
        d = EmpiricalDistribution(rng.normal(100, 15, 5_000))
        est = estimate_density(d, DensityConfig(estimator=estimator))
        assert abs(np.trapezoid(est.density, est.grid) - 1.0) <= 1e-6
        assert np.all(est.density >= est.floor)
        assert est.floor > 0

    def test_explicit_floor_respected(self):
        rng = np.random.default_rng(3)
        d = EmpiricalDistribution(rng.normal(0, 1, 1_000))
        est = estimate_density(d, DensityConfig(floor=1e-12))
        assert est.floor == 1e-12
        assert np.all(est.density >= 1e-12)

    def test_weighted_histogram_matches_expanded(self):
        values = np.array([1.0, 2.0, 3.0, 4.0])
        weighted = EmpiricalDistribution(values, weights=[1, 1, 2, 1])
        expanded = EmpiricalDistribution([1.0, 2.0, 3.0, 3.0, 4.0])
        cfg = DensityConfig(bins=8, floor=1e-9)
        est_w = estimate_density(weighted, cfg)
        est_e = estimate_density(expanded, cfg)
        assert_allclose(est_w.density, est_e.density, rtol=1e-12)

    def test_support_must_cover_data(self):
        d = EmpiricalDistribution([0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            estimate_density(d, support=(0.5, 3.0))

    def test_at_nearest_grid_point(self):
        d = EmpiricalDistribution(np.linspace(0, 1, 100))
        est = estimate_density(d, DensityConfig(bins=10))
        assert est.at(est.grid[3]) == est.density[3]
        assert est.at(-99.0) == est.density[0]
        assert est.at(99.0) == est.density[-1]

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            DensityConfig(estimator="spline")
        with pytest.raises(ValueError):
            DensityConfig(bins=2)
        with pytest.raises(ValueError):
            DensityConfig(floor=-1.0)
