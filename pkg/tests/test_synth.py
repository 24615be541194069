"""Synthetic panel generators: determinism, dependence shape, validation."""

import numpy as np
import pytest
from scipy import stats

from lgcport.synth import (
    DEFAULT_NAMES,
    clayton_normal_sample,
    sample_clayton_uniforms,
    synth_panel,
)


class TestDeterminism:
    @pytest.mark.parametrize("model", ["gaussian", "bear", "clayton"])
    def test_same_seed_same_bytes(self, model):
        a = synth_panel(months=60, model=model, seed=11)
        b = synth_panel(months=60, model=model, seed=11)
        assert a.dates == b.dates
        assert a.asset_names == b.asset_names
        assert np.array_equal(a.returns, b.returns)

    def test_different_seed_differs(self):
        a = synth_panel(months=60, seed=1)
        b = synth_panel(months=60, seed=2)
        assert not np.array_equal(a.returns, b.returns)


class TestShapeAndLabels:
    def test_default_dimensions(self):
        p = synth_panel()
        assert p.n_months == 463
        assert p.n_assets == 6
        assert p.asset_names == list(DEFAULT_NAMES)
        assert p.dates[0] == "1980-02"
        assert p.dates[-1] == "2018-08"

    def test_custom_start_and_length(self):
        p = synth_panel(months=14, n_assets=2, start="1999-11", seed=0)
        assert p.dates[0] == "1999-11"
        assert p.dates[2] == "2000-01"
        assert len(p.dates) == 14

    def test_many_assets_get_generated_names(self):
        p = synth_panel(months=10, n_assets=8, model="gaussian", seed=0)
        assert p.asset_names[0] == "A01"
        assert p.asset_names[7] == "A08"
        assert len(set(p.asset_names)) == 8

    def test_custom_names_and_moments(self):
        p = synth_panel(
            months=2000,
            n_assets=2,
            model="gaussian",
            seed=4,
            means=(1.0, -1.0),
            sds=(2.0, 6.0),
            names=("X", "Y"),
        )
        assert p.asset_names == ["X", "Y"]
        assert p.returns[:, 0].mean() == pytest.approx(1.0, abs=0.15)
        assert p.returns[:, 1].std(ddof=1) == pytest.approx(6.0, rel=0.1)


class TestGaussianModel:
    def test_correlation_matches_rho(self):
        p = synth_panel(months=20000, n_assets=3, model="gaussian", seed=8, rho=0.6)
        c = np.corrcoef(p.returns, rowvar=False)
        off = c[~np.eye(3, dtype=bool)]
        assert np.allclose(off, 0.6, atol=0.03)

    def test_rho_validation(self):
        with pytest.raises(ValueError):
            synth_panel(months=10, model="gaussian", rho=1.0)


class TestBearModel:
    def test_lower_tail_correlation_exceeds_upper(self):
        p = synth_panel(months=30000, seed=3, model="bear")
        z = (p.returns - p.returns.mean(axis=0)) / p.returns.std(axis=0)
        x, y = z[:, 0], z[:, 1]
        lo = x < np.quantile(x, 0.2)
        hi = x > np.quantile(x, 0.8)
        assert np.corrcoef(x[lo], y[lo])[0, 1] > np.corrcoef(x[hi], y[hi])[0, 1] + 0.1

    def test_negative_skew_for_equities(self):
        p = synth_panel(months=50000, seed=5, model="bear")
        r = p.returns[:, 0]
        dev = r - r.mean()
        skew = np.mean(dev**3) / np.mean(dev**2) ** 1.5
        assert skew < -0.2

    def test_bear_prob_zero_is_calm_only(self):
        p = synth_panel(months=50000, seed=6, model="bear", bear_prob=0.0)
        r = p.returns[:, 0]
        assert r.mean() == pytest.approx(0.6, abs=0.1)
        dev = r - r.mean()
        skew = np.mean(dev**3) / np.mean(dev**2) ** 1.5
        assert abs(skew) < 0.1


class TestClaytonModel:
    def test_uniform_marginals(self):
        rng = np.random.default_rng(9)
        u = sample_clayton_uniforms(rng, 20000, 3, 2.0)
        assert u.min() > 0.0 and u.max() < 1.0
        for j in range(3):
            ks = stats.kstest(u[:, j], "uniform")
            assert ks.pvalue > 1e-4

    def test_kendall_tau_matches_theta(self):
        # Exchangeable Clayton has tau = theta / (theta + 2).
        rng = np.random.default_rng(10)
        u = sample_clayton_uniforms(rng, 4000, 2, 2.0)
        tau = stats.kendalltau(u[:, 0], u[:, 1]).statistic
        assert tau == pytest.approx(0.5, abs=0.03)

    def test_normal_marginals_after_transform(self):
        rng = np.random.default_rng(11)
        z = clayton_normal_sample(rng, 20000, 2, 1.5)
        ks = stats.kstest(z[:, 0], "norm")
        assert ks.pvalue > 1e-4

    def test_lower_tail_clusters_more_than_upper(self):
        rng = np.random.default_rng(12)
        u = sample_clayton_uniforms(rng, 50000, 2, 2.0)
        both_low = np.mean((u[:, 0] < 0.05) & (u[:, 1] < 0.05))
        both_high = np.mean((u[:, 0] > 0.95) & (u[:, 1] > 0.95))
        assert both_low > 2.0 * both_high

    def test_theta_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_clayton_uniforms(rng, 10, 2, 0.0)


class TestValidation:
    def test_unknown_model(self):
        with pytest.raises(ValueError):
            synth_panel(months=10, model="cauchy")

    def test_too_short(self):
        with pytest.raises(ValueError):
            synth_panel(months=1)

    def test_moment_length_mismatch(self):
        with pytest.raises(ValueError):
            synth_panel(months=10, n_assets=3, means=(0.1, 0.2))

    def test_nonpositive_sd(self):
        with pytest.raises(ValueError):
            synth_panel(months=10, n_assets=2, sds=(1.0, 0.0))
