import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierevo import stats


class TestRankSum:
    def test_exact_separated_samples(self):
        u, p = stats.rank_sum([1, 2, 3], [4, 5, 6])
        assert u == 0.0
        assert p == pytest.approx(0.1)

    def test_exact_one_sided(self):
        _, p_less = stats.rank_sum([1, 2, 3], [4, 5, 6], "less")
        _, p_greater = stats.rank_sum([1, 2, 3], [4, 5, 6], "greater")
        assert p_less == pytest.approx(0.05)
        assert p_greater == pytest.approx(1.0)

    def test_identical_samples(self):
        assert stats.rank_sum([5, 5, 5], [5, 5, 5])[1] == 1.0
        assert stats.rank_sum([5.0] * 40, [5.0] * 40)[1] == 1.0

    def test_u_statistic_counts_wins(self):
        # U counts pairwise wins of the first sample, halves for ties
        u, _ = stats.rank_sum([3, 5], [1, 4], "two-sided")
        assert u == 3.0
        u, _ = stats.rank_sum([2, 2], [2, 4], "two-sided")
        assert u == 1.0

    def test_swap_symmetry_exact_and_approx(self, rng):
        for size in (4, 30):
            a = list(rng.normal(size=size))
            b = list(rng.normal(size=size) + 0.3)
            u_ab, p_ab = stats.rank_sum(a, b)
            u_ba, p_ba = stats.rank_sum(b, a)
            assert u_ab + u_ba == pytest.approx(size * size)
            assert p_ab == pytest.approx(p_ba, abs=1e-12)

    def test_matches_permutation_oracle_at_scale(self, rng):
        n = 100
        a = rng.normal(size=n)
        b = rng.normal(size=n) + 0.35
        u_obs, p = stats.rank_sum(a, b, "two-sided")
        pooled = np.concatenate([a, b])
        order = pooled.argsort(kind="stable")
        ranks = np.empty(2 * n)
        ranks[order] = np.arange(1, 2 * n + 1)  # no ties in continuous draws
        mu = n * n / 2.0
        hits = 0
        perms = 100_000
        offset = n * (n + 1) / 2.0
        for _ in range(perms):
            take = rng.permutation(2 * n)[:n]
            u = ranks[take].sum() - offset
            hits += abs(u - mu) >= abs(u_obs - mu) - 1e-9
        assert p == pytest.approx(hits / perms, abs=0.01)

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            stats.rank_sum([], [1.0])

    def test_bad_alternative(self):
        with pytest.raises(ValueError):
            stats.rank_sum([1.0], [2.0], "bigger")


class TestFisherExact:
    def test_diagonal_two_by_two(self):
        assert stats.fisher_exact([[2, 0], [0, 2]]) == pytest.approx(1 / 3)

    def test_no_association(self):
        assert stats.fisher_exact([[5, 5], [5, 5]]) == 1.0

    def test_strong_diagonal(self):
        assert stats.fisher_exact([[10, 0], [0, 10]]) == pytest.approx(
            2 / math.comb(20, 10)
        )

    def test_zero_margin(self):
        assert stats.fisher_exact([[0, 0], [3, 4]]) == 1.0
        assert stats.fisher_exact([[0, 3], [0, 4]]) == 1.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            stats.fisher_exact([[1, -1], [0, 2]])

    @settings(max_examples=150, deadline=None)
    @given(st.tuples(*[st.integers(0, 12)] * 4))
    def test_transpose_invariance_and_range(self, cells):
        a, b, c, d = cells
        p = stats.fisher_exact([[a, b], [c, d]])
        assert 0.0 < p <= 1.0
        assert p == pytest.approx(stats.fisher_exact([[a, c], [b, d]]), rel=1e-12)


class TestPearson:
    def test_perfect_positive(self):
        x = [1.0, 2.0, 3.0, 4.0]
        r, p = stats.pearson_r(x, [2 * v + 1 for v in x])
        assert r == 1.0
        assert p == 0.0

    def test_perfect_negative(self):
        x = [0.5, 1.5, 2.5, 4.0]
        r, _ = stats.pearson_r(x, [-v for v in x])
        assert r == -1.0

    def test_hand_case(self):
        r, p = stats.pearson_r([1, 2, 3, 4], [1, 3, 2, 4])
        assert r == pytest.approx(0.8)
        assert 0.0 < p < 1.0

    def test_p_against_scipy(self, rng):
        from scipy.stats import pearsonr

        x = rng.normal(size=40)
        y = 0.4 * x + rng.normal(size=40)
        r, p = stats.pearson_r(x, y)
        ref = pearsonr(x, y)
        assert r == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, rel=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(
        st.floats(0.1, 50.0),
        st.floats(-5.0, 5.0),
        st.floats(0.1, 50.0),
        st.floats(-5.0, 5.0),
    )
    def test_affine_invariance(self, sa, oa, sb, ob):
        x = np.array([0.0, 1.0, 3.0, 4.0, 9.0])
        y = np.array([2.0, 1.0, 5.0, 4.0, 8.0])
        r0, p0 = stats.pearson_r(x, y)
        r1, p1 = stats.pearson_r(sa * x + oa, sb * y + ob)
        assert r1 == pytest.approx(r0, abs=1e-9)
        assert p1 == pytest.approx(p0, abs=1e-9)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            stats.pearson_r([1, 1, 1], [2, 3, 4])

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            stats.pearson_r([1, 2], [3, 4])


class TestBootstrapMedianCI:
    def test_constant_sample(self, rng):
        low, high = stats.bootstrap_median_ci([3.0] * 17, rng=rng)
        assert (low, high) == (3.0, 3.0)

    def test_interval_orders_around_median(self, rng):
        sample = rng.normal(size=101)
        low, high = stats.bootstrap_median_ci(sample, rng=rng)
        assert low <= np.median(sample) <= high
        assert sample.min() <= low and high <= sample.max()

    def test_deterministic_under_seed(self):
        sample = list(range(30))
        a = stats.bootstrap_median_ci(sample, rng=np.random.default_rng(5))
        b = stats.bootstrap_median_ci(sample, rng=np.random.default_rng(5))
        assert a == b

    def test_coverage_on_known_median(self, rng):
        # standard normal, true median 0
        covered = 0
        sims = 1000
        for _ in range(sims):
            sample = rng.normal(size=200)
            low, high = stats.bootstrap_median_ci(sample, resamples=400, rng=rng)
            covered += low <= 0.0 <= high
        assert 0.90 <= covered / sims <= 0.99

    def test_empty_rejected(self, rng):
        with pytest.raises(ValueError):
            stats.bootstrap_median_ci([], rng=rng)


class TestMedianFilter:
    def test_constant_series_unchanged(self):
        series = [4.0] * 50
        assert list(stats.median_filter(series, 7)) == series

    def test_spike_removed(self):
        series = [1.0, 1.0, 9.0, 1.0, 1.0]
        assert list(stats.median_filter(series, 3)) == [1.0] * 5

    def test_truncated_edges_use_lower_median(self):
        out = stats.median_filter([1, 9, 2, 8, 3], 3)
        assert list(out) == [1.0, 2.0, 8.0, 3.0, 3.0]

    def test_window_longer_than_series(self):
        out = stats.median_filter([5.0, 1.0, 3.0], 101)
        assert list(out) == [3.0, 3.0, 3.0]

    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            stats.median_filter([1.0, 2.0], 4)
