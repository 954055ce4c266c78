import math

import numpy as np
import pytest
from scipy import stats

from taskload import (OU_FTE_CENTERED, OU_FTE_FIT, Barrier, DensityGrid,
                      OuParams, RandomSource, autoconvolve_density,
                      closed_form_divergence_report, convolve_density,
                      fpt_density_closed_form, fpt_density_oracle,
                      intervention_count_mc, intervention_pmf, tv_distance)
from taskload.hitting import FLAG_DEGENERATE, FLAG_NO_HITS
from taskload.pmf import TaskloadPmf

LAT = OU_FTE_FIT["lateral"]


def exponential_grid(rate_per_min, horizon=120.0, h=0.05):
    # normalize under the grid's own quadrature: the trapezoid rule
    # overestimates a convex density by O(h^2)
    t = np.arange(0.0, horizon + h / 2, h)
    vals = rate_per_min * np.exp(-rate_per_min * t)
    mass = np.trapezoid(vals, dx=h)
    if mass > 1.0:
        vals = vals / mass
    return DensityGrid(0.0, h, vals)


class TestClosedForm:
    def test_vanishes_near_zero_when_origin_far_inside(self):
        # the printed damping term carries (X0/sigma^2)^2 coth(kappa t),
        # so the t -> 0 limit needs a nonzero start
        b = Barrier("one_sided", level=0.1, origin=-0.05)
        out = fpt_density_closed_form(LAT, b, [1e-6, 1e-4])
        assert np.all(out.values < 1e-30)

    def test_rejects_two_sided(self):
        with pytest.raises(ValueError):
            fpt_density_closed_form(LAT, Barrier("two_sided", 0.1), 1.0)

    def test_degenerate_sigma_flagged(self):
        p = OuParams(kappa=1.0, mu=0.5, sigma=0.0)
        out = fpt_density_closed_form(p, Barrier("one_sided", 0.1, -0.1), 1.0)
        assert FLAG_DEGENERATE in out.flags
        assert np.all(out.values == 0.0)

    def test_divergence_reported_not_asserted(self):
        # the as-printed expression is compared against the MC oracle and
        # the gap recorded; nothing here pins its value
        b = Barrier("one_sided", level=0.1, origin=0.0)
        report = closed_form_divergence_report(LAT, b, horizon=120.0, dt=0.1,
                                               n_paths=20000,
                                               src=RandomSource(97))
        assert math.isfinite(report["closed_form_integral"])
        assert 0.0 <= report["mc_probability"] <= 1.0
        assert "ratio" in report


class TestOracle:
    def test_unreachable_barrier_empty(self):
        out = fpt_density_oracle(LAT, Barrier("two_sided", 1e6), 60.0, 1.0,
                                 1000, RandomSource(0))
        assert out.empty
        assert FLAG_NO_HITS in out.flags

    def test_brownian_case_matches_level_crossing_density(self):
        # for driftless unit-volatility diffusion the hitting density of a
        # one-sided level k is (k/t^1.5) phi(k/sqrt(t)); compare in-bin
        # averages within 4 sigma of the Poisson bin error
        p = OuParams(kappa=0.0, mu=0.0, sigma=1.0)
        k, horizon, res, n = 2.0, 4.0, 0.02, 400000
        grid = fpt_density_oracle(p, Barrier("one_sided", k), horizon, res, n,
                                  RandomSource(101))
        t = grid.times[5:]
        exact = k / t ** 1.5 * stats.norm.pdf(k / np.sqrt(t))
        sd = np.sqrt(np.maximum(exact, 1e-12) / (n * res))
        # grid monitoring loses intra-step excursions: allow the known
        # O(sqrt(dt)) deflation plus statistical noise
        rel_bias = 0.5826 * math.sqrt(res) * (k / t - np.sqrt(t) / k)
        resid = np.abs(grid.values[5:] - exact) - np.abs(exact * rel_bias)
        assert np.mean(resid < 4 * sd) > 0.95

    def test_ci_width_shrinks_with_paths(self):
        b = Barrier("two_sided", 0.08)
        p = OU_FTE_CENTERED["lateral"]
        widths = []
        for n in (5000, 20000):
            g = fpt_density_oracle(p, b, 60.0, 1.0, n, RandomSource(103))
            mask = g.values > 0
            widths.append(np.mean((g.ci_high - g.ci_low)[mask]))
        assert widths[1] < widths[0] / 1.6  # ~1/2 expected at 4x paths

    def test_integral_equals_hit_fraction(self):
        p = OU_FTE_CENTERED["lateral"]
        g = fpt_density_oracle(p, Barrier("two_sided", 0.08), 60.0, 1.0,
                               20000, RandomSource(107))
        from taskload import first_passage_mc
        fp = first_passage_mc(p, Barrier("two_sided", 0.08), 60.0, 1.0,
                              20000, RandomSource(107))
        assert g.integral() == pytest.approx(fp.probability, rel=1e-9)


class TestConvolution:
    def test_order_zero_identity(self):
        f = exponential_grid(0.1)
        assert autoconvolve_density(f, 0) is f

    def test_exponential_once_gives_erlang2(self):
        f = exponential_grid(1.0, horizon=10.0, h=0.01)
        g = autoconvolve_density(f, 1)
        idx = int(round(1.0 / 0.01))
        assert g.values[idx] == pytest.approx(math.exp(-1.0), abs=1e-4)

    def test_grid_mismatch_rejected(self):
        f = exponential_grid(1.0, h=0.05)
        g = exponential_grid(1.0, h=0.1)
        with pytest.raises(ValueError):
            convolve_density(f, g)

    def test_grid_halving_second_order(self):
        coarse = autoconvolve_density(exponential_grid(0.2, 30.0, 0.1), 2)
        fine = autoconvolve_density(exponential_grid(0.2, 30.0, 0.05), 2)
        at = np.arange(1.0, 29.0, 1.0)
        ci = (at / 0.1).astype(int)
        fi = (at / 0.05).astype(int)
        rel = np.abs(fine.values[fi] - coarse.values[ci]) / fine.values[fi]
        assert rel.max() < 0.005


class TestInterventionPmf:
    def test_zero_density_all_mass_at_zero(self):
        f = DensityGrid(0.0, 1.0, np.zeros(121))
        pmf = intervention_pmf(f, 120.0)
        assert pmf.probs.tolist() == [1.0]

    @pytest.mark.parametrize("rate_per_hour", [0.1, 1.0, 10.0])
    def test_exponential_gaps_give_poisson_counts(self, rate_per_hour):
        # the module's primary correctness anchor: a renewal process with
        # exponential gaps counts Poisson
        r = rate_per_hour / 60.0
        pmf = intervention_pmf(exponential_grid(r), 120.0, n_max=64)
        lam = r * 120.0
        n = np.arange(pmf.probs.size)
        target = TaskloadPmf(stats.poisson.pmf(n, lam),
                             stats.poisson.sf(n[-1], lam), 120.0)
        assert tv_distance(pmf, target) <= 1e-3

    def test_point_mass_renewals_concentrate(self):
        # a narrow gap density at tau0 gives floor(T/tau0) renewals
        h, tau0 = 0.01, 10.0
        t = np.arange(0.0, 40.0 + h / 2, h)
        vals = stats.norm.pdf(t, loc=tau0, scale=0.05)
        f = DensityGrid(0.0, h, vals / np.trapezoid(vals, dx=h))
        pmf = intervention_pmf(f, 35.0, n_max=8)
        assert pmf.mode() == 3
        assert pmf.probs[3] > 0.99

    def test_monotone_tail(self):
        pmf = intervention_pmf(exponential_grid(1.0 / 60.0), 120.0)
        tails = [pmf.p_geq(n) for n in range(pmf.probs.size)]
        assert all(a >= b - 1e-12 for a, b in zip(tails, tails[1:]))

    def test_normalization(self):
        pmf = intervention_pmf(exponential_grid(10.0 / 60.0), 120.0)
        assert pmf.probs.sum() + pmf.truncation_mass == pytest.approx(1.0,
                                                                      abs=1e-9)

    def test_horizon_monotonicity(self):
        f = exponential_grid(1.0 / 60.0)
        p_short = intervention_pmf(f, 60.0)
        p_long = intervention_pmf(f, 120.0)
        assert p_long.p_geq(1) >= p_short.p_geq(1)

    def test_truncation_guard(self):
        with pytest.raises(ValueError):
            intervention_pmf(exponential_grid(10.0 / 60.0), 120.0, n_max=10)

    def test_broken_density_raises(self):
        # an increasing "density" makes the tail differences negative
        t = np.arange(0.0, 120.0 + 0.025, 0.05)
        f = DensityGrid(0.0, 0.05, np.full(t.size, 1e-6))
        # sneak in a shape violating monotone tails via a doctored grid:
        # convolution tails exceed the first integral at large n is not
        # physically constructible here, so instead check the guard wiring
        # by requesting an impossible truncation threshold
        with pytest.raises(ValueError):
            intervention_pmf(exponential_grid(10.0 / 60.0), 120.0, n_max=12,
                             trunc_eps=1e-12)


class TestCrossValidation:
    def test_oracle_pmf_matches_direct_counting(self):
        # two independent routes to the same per-aircraft count PMF: the
        # renewal reconstruction from the hitting density vs direct
        # simulation with resets, at the fitted lateral dynamics and the
        # stringent bound
        p = OU_FTE_FIT["lateral"]
        b = Barrier("two_sided", 0.1)
        horizon, res = 120.0, 1.0
        grid = fpt_density_oracle(p, b, horizon, res, 300000,
                                  RandomSource(109))
        analytic = intervention_pmf(grid, horizon, n_max=16)
        mc = intervention_count_mc(p, b, horizon, res, 0.0, 100000,
                                   RandomSource(113))
        assert tv_distance(analytic, mc) < 0.02
