import math

import numpy as np
import pytest
from scipy.special import gammaln

from elmap.bayes import make_prior_grid, posterior_update
from elmap.divergences import polya_l_divergence
from elmap.errors import DomainViolation, UrnExhausted
from elmap.estimators import mnpl_grid
from elmap.polya import (
    UrnConfig,
    apportion_counts,
    gamma_ratio_bounds,
    mnpl_asymptotic,
    mnpl_exact,
    polya_decay_experiment,
    polya_draw,
    polya_log_prob,
    polya_posterior,
    rebuild_urn,
)
from elmap.prob import Sample, make_pmf
from elmap.rng import derive_seed

R_BIN = make_pmf([0, 1], [0.5, 0.5])
G1 = make_pmf([0, 1], [0.6, 0.4])
G2 = make_pmf([0, 1], [0.9, 0.1])


class TestUrnConfig:
    def test_counts_positive(self):
        with pytest.raises(DomainViolation):
            UrnConfig((0, 2), 1)

    def test_horizon_validity(self):
        assert UrnConfig((5, 5), 1).valid_for_horizon(100)
        assert UrnConfig((5, 5), -1).valid_for_horizon(5)
        assert not UrnConfig((5, 5), -1).valid_for_horizon(6)


class TestDraw:
    def test_c_zero_is_iid(self):
        cfg = UrnConfig((3, 1), 0)
        path = polya_draw(cfg, 20000, seed=0)
        freq = path.counts[0] / path.n
        assert abs(freq - 0.75) <= 0.02

    def test_single_color(self):
        for c in (-1, 0, 2):
            cfg = UrnConfig((4,), c)
            path = polya_draw(cfg, 4, seed=1)
            assert path.counts == (4,)

    def test_without_replacement_exhausts(self):
        cfg = UrnConfig((2, 2), -1)
        for seed in range(10):
            path = polya_draw(cfg, 4, seed=seed)
            assert path.counts == (2, 2)
        with pytest.raises(UrnExhausted):
            polya_draw(cfg, 5, seed=0)

    def test_deterministic_in_seed(self):
        cfg = UrnConfig((2, 3), 1)
        a = polya_draw(cfg, 50, seed=7)
        b = polya_draw(cfg, 50, seed=7)
        assert a.colors == b.colors


class TestLogProb:
    def test_c_zero_value(self):
        cfg = UrnConfig((1, 1), 0)
        assert math.isclose(polya_log_prob((2, 1), cfg), -3 * math.log(2.0), rel_tol=1e-15)

    def test_enumeration_value(self):
        cfg = UrnConfig((1, 1), 1)
        assert math.isclose(polya_log_prob((1, 1), cfg), math.log(1 / 6), rel_tol=1e-12)

    def test_exchangeability_exact(self):
        cfg = UrnConfig((2, 3, 1), 2)
        path = polya_draw(cfg, 30, seed=5)
        perm = tuple(reversed(path.colors))
        counts_perm = tuple(
            sum(1 for c in perm if c == i) for i in range(cfg.m)
        )
        assert counts_perm == path.counts
        assert polya_log_prob(counts_perm, cfg) == polya_log_prob(path.counts, cfg)

    def test_product_vs_gamma_random(self):
        rng = np.random.default_rng(0)
        worst = 0.0
        checked = 0
        while checked < 100:
            m = int(rng.integers(2, 5))
            alpha = tuple(int(a) for a in rng.integers(1, 9, size=m))
            c = int(rng.choice([-1, 1, 2, 3]))
            n = int(rng.integers(1, 13))
            cfg = UrnConfig(alpha, c)
            if c < 0 and not cfg.valid_for_horizon(n):
                continue
            counts = tuple(int(v) for v in rng.multinomial(n, np.ones(m) / m))
            a = polya_log_prob(counts, cfg)
            if not math.isfinite(a):
                continue
            b = polya_log_prob(counts, cfg, method="gamma")
            worst = max(worst, abs(a - b))
            checked += 1
        assert worst <= 1e-9

    def test_unreachable_counts(self):
        cfg = UrnConfig((2, 2), -1)
        assert polya_log_prob((3, 1), cfg) == -math.inf  # third draw of color 1 impossible
        with pytest.raises(DomainViolation):
            polya_log_prob((4, 1), cfg)  # factor goes negative


class TestGammaRatioBounds:
    def test_unit_interval_example(self):
        lo, hi = gamma_ratio_bounds(1.0, 2.0)
        assert math.isclose(lo, 2.0 * math.exp(-1.0), rel_tol=1e-15)
        assert math.isclose(hi, 2.0**1.5 * math.exp(-1.0), rel_tol=1e-15)
        assert lo <= 1.0 <= hi

    def test_continuity_as_b_approaches_a(self):
        lo, hi = gamma_ratio_bounds(3.0, 3.0 + 1e-9)
        assert abs(lo - 1.0) <= 1e-6 and abs(hi - 1.0) <= 1e-6

    def test_brackets_on_grid(self):
        avals = np.arange(1.0, 50.0, 0.5)
        for a in avals:
            bvals = np.arange(a + 0.5, 50.0 + 1e-9, 0.5)
            lows, highs = zip(*(gamma_ratio_bounds(a, b) for b in bvals))
            truth = np.exp(gammaln(bvals) - gammaln(a))
            assert np.all(np.asarray(lows) <= truth)
            assert np.all(truth <= np.asarray(highs))

    def test_domain(self):
        with pytest.raises(DomainViolation):
            gamma_ratio_bounds(0.5, 2.0)
        with pytest.raises(DomainViolation):
            gamma_ratio_bounds(2.0, 2.0)


class TestPosteriorAndMnpl:
    def test_single_config(self):
        cfg = UrnConfig((2, 2), 1)
        w = polya_posterior([cfg], (3, 1))
        assert np.allclose(w, [1.0])

    def test_accepts_draw_path(self):
        cfg = UrnConfig((2, 2), 1)
        path = polya_draw(cfg, 10, seed=0)
        w = polya_posterior([cfg], path)
        assert np.allclose(w, [1.0])
        assert mnpl_exact([cfg], path) == [0]

    def test_color_swap_symmetry(self):
        a = UrnConfig((3, 1), 1)
        b = UrnConfig((1, 3), 1)
        w = polya_posterior([a, b], (2, 2))
        assert np.allclose(w, [0.5, 0.5])

    def test_c_zero_reduces_to_iid_posterior(self):
        grid = [UrnConfig((6, 4), 0), UrnConfig((9, 1), 0)]
        counts = (7, 3)
        w = polya_posterior(grid, counts)
        prior = make_prior_grid([G1, G2])
        obs = (0.0,) * 7 + (1.0,) * 3
        state = posterior_update(prior, Sample(obs))
        assert np.max(np.abs(w - np.exp(state.log_posterior))) <= 1e-12

    def test_mnpl_exact_c_zero_matches_grid(self):
        grid = [UrnConfig((6, 4), 0), UrnConfig((9, 1), 0)]
        counts = (6, 4)
        obs = (0.0,) * 6 + (1.0,) * 4
        exact = mnpl_exact(grid, counts)
        iid, _ = mnpl_grid(Sample(obs), [G1, G2])
        assert exact == iid

    def test_mnpl_exact_symmetric_tie(self):
        grid = [UrnConfig((3, 1), 1), UrnConfig((1, 3), 1)]
        assert mnpl_exact(grid, (2, 2)) == [0, 1]

    def test_mnpl_asymptotic_c_zero(self):
        nu = make_pmf([0, 1], [0.62, 0.38])
        assert mnpl_asymptotic([G1, G2], nu, 0.5, 0) == [0]

    def test_mnpl_asymptotic_gibbs(self):
        nu = G1
        assert mnpl_asymptotic([G1, G2], nu, 0.5, 0) == [0]

    def test_exact_asymptotic_agreement_long_paths(self):
        beta, c, n = 0.5, 1, 10000
        for seed in range(20):
            urn = rebuild_urn(R_BIN, n, beta, c)
            path = polya_draw(urn, n, derive_seed("agree", seed))
            grid = [
                UrnConfig(apportion_counts(urn.n_total, q.weights), c)
                for q in (G1, G2)
            ]
            exact = mnpl_exact(grid, path.counts)
            nu = make_pmf([0, 1], np.asarray(path.counts) / n)
            asym = mnpl_asymptotic([G1, G2], nu, beta, c)
            assert exact == asym


class TestSlln:
    def test_frequencies_track_target(self):
        n = 100000
        for seed in range(20):
            urn = rebuild_urn(R_BIN, n, 0.5, 1)
            path = polya_draw(urn, n, derive_seed("slln", seed))
            freq = np.asarray(path.counts) / n
            assert np.max(np.abs(freq - R_BIN.weights)) <= 0.02


class TestDecay:
    def test_full_grid_zero_rate(self):
        rep = polya_decay_experiment([G1, G2], [0, 1], R_BIN, 0.5, 1, [200], [0])
        assert abs(rep.reports[0].empirical_rate[-1]) <= 1e-12

    def test_c1_rate_matches_divergence_gap(self):
        gap = polya_l_divergence(G2, R_BIN, 0.5, 1) - polya_l_divergence(G1, R_BIN, 0.5, 1)
        rep = polya_decay_experiment([G1, G2], [1], R_BIN, 0.5, 1, [5000], range(20))
        rates = [r.empirical_rate[-1] for r in rep.reports]
        assert abs(np.mean(rates) - gap) <= 0.05 * gap

    def test_c0_reproduces_iid_rate(self):
        rep = polya_decay_experiment([G1, G2], [1], R_BIN, 0.5, 0, [5000], range(20))
        rates = [r.empirical_rate[-1] for r in rep.reports]
        target = 0.49041462650586309
        assert abs(np.mean(rates) - target) <= 0.05 * target


class TestRebuild:
    def test_rounding_keeps_colors(self):
        r = make_pmf([0, 1, 2], [0.002, 0.499, 0.499])
        urn = rebuild_urn(r, 100, 0.5, 1)
        assert min(urn.alpha) >= 1
        assert urn.n_total == sum(urn.alpha)

    def test_apportionment_exact_total(self):
        w = np.array([0.2601, 0.7399])
        parts = apportion_counts(1000, w)
        assert sum(parts) == 1000 and min(parts) >= 1
        assert parts == (260, 740)
