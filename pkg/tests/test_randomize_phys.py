"""Partition-of-unity and physical randomization contracts."""

import numpy as np
import pytest

from zkrf.fields import make_grid, random_band_limited, zero_field
from zkrf.randomize_phys import (
    PartitionOfUnity,
    RandomModel,
    build_partition,
    bump_profile,
    randomize_physical,
    sample_coefficients,
)


@pytest.fixture(scope="module")
def grid8():
    # L = 8 (fast FFT path), unit translates at every node multiple
    return make_grid(8.0, 32)


@pytest.fixture(scope="module")
def pou8(grid8):
    return build_partition(grid8)


class TestRandomModel:
    def test_determinism(self):
        m = RandomModel("gaussian", 1.0, seed=42)
        a = sample_coefficients(m, [(0, 0, 0), (1, 2, 3)])
        b = sample_coefficients(m, [(1, 2, 3), (0, 0, 0)])
        assert a[(0, 0, 0)] == b[(0, 0, 0)]
        assert a[(1, 2, 3)] == b[(1, 2, 3)]

    def test_distinct_indices_differ(self):
        m = RandomModel("gaussian", 1.0, seed=42)
        vals = sample_coefficients(m, [(i, 0, 0) for i in range(64)])
        assert len(set(np.round(list(vals.values()), 12))) == 64

    def test_empirical_mean_clt_bound(self):
        # CLT oracle: |mean of n samples| < 4 s / sqrt(n) with probability
        # 1 - 6e-5; deterministic given the fixed seed
        m = RandomModel("gaussian", scale=1.5, seed=3)
        n = 10**5
        x = m.sample_stream("phys", (0, 0, 0), n)
        assert abs(x.mean()) < 4 * 1.5 / np.sqrt(n)

    def test_gaussian_mgf_bound(self):
        # closed-form oracle: E exp(X) = exp(s^2/2) for X ~ N(0, s^2)
        m = RandomModel("gaussian", scale=1.0, seed=11)
        n = 2 * 10**5
        x = m.sample_stream("phys", (1, 1, 1), n)
        e = np.exp(x)
        mc_se = e.std() / np.sqrt(n)
        assert e.mean() <= np.exp(m.subgaussian_c) + 5 * mc_se

    def test_bounded_family_support(self):
        m = RandomModel("bounded", scale=2.0, seed=5)
        x = m.sample_stream("phys", (0, 1, 0), 5000)
        assert set(np.unique(x)) == {-2.0, 2.0}
        assert abs(x.mean()) < 4 * 2.0 / np.sqrt(5000)

    def test_gaussian_variance(self):
        m = RandomModel("gaussian", scale=0.7, seed=9)
        x = m.sample_stream("phys", (4, 4, 4), 10**5)
        assert x.std() == pytest.approx(0.7, rel=0.02)

    def test_invalid_family_rejected(self):
        with pytest.raises(ValueError):
            RandomModel("cauchy", 1.0, 0)


class TestPartition:
    def test_bump_plateau_support(self):
        r = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
        v = bump_profile(r)
        assert v[0] == v[1] == v[2] == 1.0
        assert v[4] == v[5] == 0.0
        assert 0.0 < v[3] < 1.0

    def test_partition_sums_to_one(self, pou8):
        total = pou8.weight_sum(np.ones(pou8.n_translates))
        assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_psi_positive_at_center_zero_far(self, pou8, grid8):
        psi = pou8.psi((1.0, 0.0, 0.0))
        X, Y, Z = grid8.physical_mesh()
        d = np.sqrt((X - 1.0) ** 2 + Y**2 + Z**2)
        center = np.unravel_index(np.argmin(d), d.shape)
        assert psi[center] > 0
        assert np.all(psi[d >= 2.0] == 0.0)

    def test_psi_sum_matches_weight_sum(self, pou8):
        # individual bumps against the convolution path
        rng = np.random.default_rng(0)
        w = rng.standard_normal(pou8.n_translates)
        fast = pou8.weight_sum(w)
        slow = np.zeros_like(fast)
        for t, wk in zip(pou8.translates, w):
            slow += wk * pou8.psi(t)
        assert np.max(np.abs(fast - slow)) < 1e-10 * np.max(np.abs(slow))

    def test_small_box_rejected(self):
        with pytest.raises(ValueError):
            build_partition(make_grid(3.0, 16))

    def test_non_integer_box_slow_path(self):
        g = make_grid(2 * np.pi, 16)
        pou = build_partition(g)
        assert not pou._fast
        total = pou.weight_sum(np.ones(pou.n_translates))
        assert np.max(np.abs(total - 1.0)) < 1e-12


class TestRandomizePhysical:
    def test_all_ones_identity(self, grid8, pou8):
        rng = np.random.default_rng(2)
        f = random_band_limited(grid8, rng, xi_cut=4.0)
        model = RandomModel("gaussian", 1.0, seed=0)
        out = randomize_physical(f, pou8, model, weights=np.ones(pou8.n_translates))
        assert (out - f).l2_norm() < 1e-12 * f.l2_norm()

    def test_zero_field(self, grid8, pou8):
        model = RandomModel("gaussian", 1.0, seed=0)
        out = randomize_physical(zero_field(grid8, "physical"), pou8, model)
        assert out.l2_norm() == 0.0

    def test_seed_reproducibility(self, grid8, pou8):
        rng = np.random.default_rng(3)
        f = random_band_limited(grid8, rng, xi_cut=4.0)
        model = RandomModel("bounded", 1.0, seed=123)
        a = randomize_physical(f, pou8, model, draw=7)
        b = randomize_physical(f, pou8, model, draw=7)
        assert np.array_equal(a.values, b.values)
        c = randomize_physical(f, pou8, model, draw=8)
        assert not np.array_equal(a.values, c.values)

    def test_mc_mean_square_matches_bruteforce_sum(self, grid8, pou8):
        # independence / mean-zero cross-term cancellation:
        # E ||f^w||^2 = sum_k ||psi_k f||^2, brute-force sum oracle
        rng = np.random.default_rng(4)
        f = random_band_limited(grid8, rng, xi_cut=4.0)
        fv = f.values
        dx3 = grid8.cell_volume
        oracle = 0.0
        for t in pou8.translates:
            oracle += np.sum(np.abs(pou8.psi(t) * fv) ** 2) * dx3

        model = RandomModel("gaussian", 1.0, seed=77)
        n_draws = 200
        sq = np.empty(n_draws)
        for d in range(n_draws):
            sq[d] = randomize_physical(f, pou8, model, draw=d).l2_norm() ** 2
        se = sq.std(ddof=1) / np.sqrt(n_draws)
        assert abs(sq.mean() - oracle) < 3 * se

    def test_linearity_in_f(self, grid8, pou8):
        rng = np.random.default_rng(5)
        f = random_band_limited(grid8, rng, xi_cut=4.0)
        g = random_band_limited(grid8, rng, xi_cut=4.0)
        model = RandomModel("gaussian", 1.0, seed=21)
        a = randomize_physical(f + 2.0 * g, pou8, model, draw=3)
        b = randomize_physical(f, pou8, model, draw=3)
        c = randomize_physical(g, pou8, model, draw=3)
        combo = b + 2.0 * c
        assert (a - combo).l2_norm() < 1e-12 * max(a.l2_norm(), 1e-30)

    def test_pointwise_mean_vanishes(self, grid8, pou8):
        rng = np.random.default_rng(6)
        f = random_band_limited(grid8, rng, xi_cut=4.0)
        model = RandomModel("bounded", 1.0, seed=8)
        acc = np.zeros((grid8.N,) * 3, dtype=complex)
        n_draws = 400
        for d in range(n_draws):
            acc += randomize_physical(f, pou8, model, draw=d).values
        mean_norm = np.sqrt(np.sum(np.abs(acc / n_draws) ** 2) * grid8.cell_volume)
        assert mean_norm < 4 * f.l2_norm() / np.sqrt(n_draws)

    def test_h1_moment_sqrt_beta_growth(self, grid8, pou8):
        # L^beta_omega moments of ||f^w||_{H^1} grow at most like sqrt(beta):
        # log-log fit exponent <= 0.5 + 0.1
        rng = np.random.default_rng(7)
        f = random_band_limited(grid8, rng, xi_cut=4.0)
        model = RandomModel("gaussian", 1.0, seed=31)
        n_draws = 512
        h1 = np.empty(n_draws)
        for d in range(n_draws):
            h1[d] = randomize_physical(f, pou8, model, draw=d).h1_norm()
        betas = np.array([2.0, 4.0, 8.0, 16.0])
        moments = [(np.mean(h1**b)) ** (1.0 / b) for b in betas]
        slope = np.polyfit(np.log(betas), np.log(moments), 1)[0]
        assert slope <= 0.6
