import math

import numpy as np
import pytest

from iontomo import (
    CountDistribution,
    FluorescenceParams,
    IndistinguishableError,
    ReadoutErrorModel,
    TruncationPolicy,
    bright_distribution,
    choose_threshold,
    dark_decay_pmf,
    dark_distribution,
    error_rates,
    factorial_moments,
    generating_function,
    poisson_pmf,
    regularized_lower_incomplete_gamma,
)
from iontomo.photon_stats import _poisson_pmf_array

import oracles

REFERENCE = FluorescenceParams(t=1.0, lam=0.001, lam_b=25.0, lam_d=0.2)
NOISY = FluorescenceParams(t=1.0, lam=0.05, lam_b=3.0, lam_d=0.05)

PARAM_GRID = [
    FluorescenceParams(t=t, lam=lam, lam_b=lam_b, lam_d=0.1)
    for lam in (1e-4, 0.05, 1.0)
    for lam_b in (3.0, 25.0)
    for t in (0.5, 1.0, 2.0)
]


class TestPoissonPmf:
    def test_zero_count(self):
        assert poisson_pmf(0, 25.0) == pytest.approx(math.exp(-25.0), rel=1e-14)

    def test_degenerate(self):
        assert poisson_pmf(0, 0.0) == 1.0
        assert poisson_pmf(3, 0.0) == 0.0

    @pytest.mark.parametrize("k", [1, 5, 12, 25, 30])
    def test_against_high_precision(self, k):
        assert poisson_pmf(k, 25.0) == pytest.approx(
            oracles.poisson_pmf_highprec(k, 25.0), rel=1e-13)

    def test_large_mean_stability(self):
        mean = 1e4
        value = poisson_pmf(10_000, mean)
        assert value == pytest.approx(oracles.poisson_pmf_highprec(10_000, mean), rel=1e-10)
        assert np.isfinite(value) and value > 0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            poisson_pmf(-1, 2.0)
        with pytest.raises(ValueError):
            poisson_pmf(1, -2.0)
        with pytest.raises(ValueError):
            poisson_pmf(1.5, 2.0)


class TestIncompleteGamma:
    @pytest.mark.parametrize("a", [0.5, 1.0, 3.0, 10.0])
    def test_at_zero(self, a):
        assert regularized_lower_incomplete_gamma(0.0, a) == 0.0

    def test_normalization(self):
        assert regularized_lower_incomplete_gamma(1e6, 3.0) == pytest.approx(1.0, abs=1e-12)

    def test_exponential_cdf(self):
        assert regularized_lower_incomplete_gamma(1.0, 1.0) == pytest.approx(
            1.0 - math.exp(-1.0), rel=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            regularized_lower_incomplete_gamma(-0.5, 1.0)
        with pytest.raises(ValueError):
            regularized_lower_incomplete_gamma(1.0, 0.0)


class TestDarkDecayPmf:
    def test_no_decay_is_point_mass(self):
        params = FluorescenceParams(t=1.0, lam=0.0, lam_b=25.0, lam_d=0.2)
        assert dark_decay_pmf(0, params) == 1.0
        assert dark_decay_pmf(7, params) == 0.0

    def test_reference_k0_matches_quadrature(self):
        assert dark_decay_pmf(0, REFERENCE) == pytest.approx(
            oracles.decay_pmf_quadrature(0, REFERENCE), rel=1e-10)

    def test_noisy_k5_matches_quadrature(self):
        assert dark_decay_pmf(5, NOISY) == pytest.approx(
            oracles.decay_pmf_quadrature(5, NOISY), rel=1e-8)

    @pytest.mark.parametrize("params", [PARAM_GRID[1], PARAM_GRID[8], PARAM_GRID[15]])
    def test_grid_spot_checks(self, params):
        for k in range(0, 60, 7):
            closed = dark_decay_pmf(k, params)
            if closed <= 1e-12:
                continue
            assert closed == pytest.approx(oracles.decay_pmf_quadrature(k, params), rel=1e-8)

    def test_degenerate_rates_use_quadrature(self):
        # lam ~ lam_b is outside the closed form's reach; values must still
        # be a valid pmf matching the integral form
        params = FluorescenceParams(t=1.0, lam=3.0, lam_b=3.0 + 1e-9, lam_d=0.0)
        vals = [dark_decay_pmf(k, params) for k in range(30)]
        assert all(v >= 0 for v in vals)
        assert sum(vals) == pytest.approx(1.0, abs=1e-6)
        assert vals[2] == pytest.approx(oracles.decay_pmf_quadrature(2, params), rel=1e-8)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            dark_decay_pmf(-1, REFERENCE)
        with pytest.raises(ValueError):
            dark_decay_pmf(0.5, REFERENCE)


class TestDistributions:
    def test_bright_mean(self):
        dist = bright_distribution(REFERENCE)
        assert dist.mean() == pytest.approx(25.0, abs=1e-9)

    def test_bright_rejects_zero_intensity(self):
        with pytest.raises(ValueError):
            FluorescenceParams(t=1.0, lam=0.001, lam_b=0.0, lam_d=0.2)

    def test_bright_normalization(self):
        dist = bright_distribution(NOISY)
        assert dist.pmf.sum() == pytest.approx(1.0 - dist.tail_mass, abs=1e-15)

    def test_bright_noise_flag_shifts_mean(self):
        dist = bright_distribution(REFERENCE, include_noise=True)
        assert dist.mean() == pytest.approx(25.2, abs=1e-9)

    def test_dark_no_decay_is_pure_noise(self):
        params = FluorescenceParams(t=1.0, lam=0.0, lam_b=25.0, lam_d=0.2)
        dist = dark_distribution(params)
        expected = _poisson_pmf_array(dist.k_max, 0.2)
        np.testing.assert_allclose(dist.pmf, expected, rtol=1e-12, atol=1e-300)

    def test_dark_mode_at_zero(self):
        dist = dark_distribution(REFERENCE)
        assert int(np.argmax(dist.pmf)) == 0

    def test_immediate_decay_limit(self):
        params = FluorescenceParams(t=1.0, lam=1e3, lam_b=25.0, lam_d=0.2)
        dist = dark_distribution(params)
        limit = _poisson_pmf_array(dist.k_max, 25.2)
        assert oracles.total_variation(dist.pmf, limit) < 1e-2

    @pytest.mark.parametrize("params", PARAM_GRID[::4])
    def test_normalization_invariant(self, params):
        for dist in (bright_distribution(params), dark_distribution(params)):
            assert abs(dist.pmf.sum() + dist.tail_mass - 1.0) <= 1e-12
            assert dist.tail_mass <= TruncationPolicy().tol

    def test_serialization_round_trip(self):
        dist = dark_distribution(NOISY)
        restored = CountDistribution.from_dict(dist.to_dict())
        np.testing.assert_array_equal(restored.pmf, dist.pmf)
        assert restored.tail_mass == dist.tail_mass
        assert restored.params == dist.params

    def test_invalid_distribution_rejected(self):
        with pytest.raises(ValueError):
            CountDistribution(pmf=np.array([0.5, 0.6]), tail_mass=0.0)
        with pytest.raises(ValueError):
            CountDistribution(pmf=np.array([0.5, -0.1]), tail_mass=0.6)


class TestGeneratingFunction:
    def test_normalized_at_one(self):
        for params in (REFERENCE, NOISY):
            for include_noise in (False, True):
                assert generating_function(1.0, params, include_noise) == 1.0

    def test_zero_matches_dark_probability(self):
        dist = dark_distribution(NOISY)
        assert generating_function(0.0, NOISY, include_noise=True) == pytest.approx(
            dist.pmf[0], rel=1e-12)

    def test_no_decay_is_constant_one(self):
        params = FluorescenceParams(t=1.0, lam=0.0, lam_b=25.0, lam_d=0.2)
        assert generating_function(0.0, params) == 1.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            generating_function(-0.1, NOISY)
        with pytest.raises(ValueError):
            generating_function(1.1, NOISY)

    @pytest.mark.parametrize("include_noise", [False, True])
    def test_derivative_identity(self, include_noise):
        """Taylor coefficients of the generating function reproduce the pmf
        for k <= 6.

        Derivatives at z = 0 are one-sided finite differences with exact
        rational stencil weights and a documented step of 1/67, evaluated on a
        60-digit oracle of the same generating function; the public
        double-precision function is pinned to that oracle at every stencil
        node. Orders k <= 4 are additionally differenced directly on the
        double-precision function (Richardson ladders, steps in
        oracles.GF_RECIPE_FLOAT64); beyond k = 4 the derivative functional
        amplifies double rounding past the tolerance for any step choice.
        """
        params = oracles.GF_FIXTURE
        f = lambda z: generating_function(z, params, include_noise)
        if include_noise:
            reference = dark_distribution(params).pmf
        else:
            reference = np.array([dark_decay_pmf(k, params) for k in range(7)])
        for z in oracles.gf_stencil_nodes():
            assert f(z) == pytest.approx(
                float(oracles.mp_generating_function(z, params, include_noise)), rel=1e-12)
        for k in range(7):
            estimate = oracles.gf_taylor_coefficient_highprec(params, k, include_noise)
            assert estimate == pytest.approx(reference[k], rel=1e-4), f"k = {k}"
        for k in range(5):
            estimate = oracles.gf_taylor_coefficient_float64(f, k)
            assert estimate == pytest.approx(reference[k], rel=1e-4), f"k = {k} (float64)"


class TestFactorialMoments:
    def test_fast_decay_mean(self):
        params = FluorescenceParams(t=1.0, lam=1e3, lam_b=25.0, lam_d=0.2)
        mean, _, _ = factorial_moments(params)
        assert mean == pytest.approx(25.0 - 25.0 / 1e3, rel=1e-12)

    def test_no_decay_limit(self):
        params = FluorescenceParams(t=1.0, lam=0.0, lam_b=25.0, lam_d=0.2)
        assert factorial_moments(params) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("params", [NOISY, REFERENCE, PARAM_GRID[10]])
    def test_moments_match_pmf_summation(self, params):
        cap = TruncationPolicy(tol=1e-15).cap(params.lam_b * params.t)
        pmf = np.array([dark_decay_pmf(k, params) for k in range(cap + 1)])
        ref_mean, ref_second, ref_var = oracles.pmf_moments(pmf)
        mean, second, variance = factorial_moments(params)
        assert mean == pytest.approx(ref_mean, rel=1e-6)
        assert second == pytest.approx(ref_second, rel=1e-6)
        assert variance == pytest.approx(ref_var, rel=1e-6)

    def test_tiny_decay_series_branch(self):
        params = FluorescenceParams(t=1.0, lam=1e-7, lam_b=25.0, lam_d=0.0)
        mean, second, variance = factorial_moments(params)
        # against direct evaluation at slightly higher lam the values scale linearly
        assert mean == pytest.approx(25.0 * 1e-7 / 2.0, rel=1e-6)
        assert second > 0 and variance > 0


class TestThreshold:
    def test_reference_threshold(self):
        assert choose_threshold(bright_distribution(REFERENCE), dark_distribution(REFERENCE)) == 8

    def test_noisy_threshold(self):
        assert choose_threshold(bright_distribution(NOISY), dark_distribution(NOISY)) == 1

    def test_identical_distributions_raise(self):
        dist = bright_distribution(NOISY)
        with pytest.raises(IndistinguishableError):
            choose_threshold(dist, dist)

    def test_multiple_crossings_warn(self):
        bright = CountDistribution(pmf=np.array([0.30, 0.40, 0.05, 0.15, 0.10]), tail_mass=0.0)
        dark = CountDistribution(pmf=np.array([0.35, 0.30, 0.10, 0.20, 0.05]), tail_mass=0.0)
        with pytest.warns(UserWarning, match="cross"):
            assert choose_threshold(bright, dark) == 1

    def test_dark_point_mass(self):
        params = FluorescenceParams(t=1.0, lam=0.0, lam_b=25.0, lam_d=0.0)
        k0 = choose_threshold(bright_distribution(params), dark_distribution(params))
        assert k0 == 1


class TestErrorRates:
    def test_reference_rates(self):
        em = error_rates(bright_distribution(REFERENCE), dark_distribution(REFERENCE), 8)
        assert em.p10 == pytest.approx(2.292e-5, rel=5e-4)
        assert em.p01 == pytest.approx(6.878e-4, rel=5e-4)

    def test_noisy_rates(self):
        em = error_rates(bright_distribution(NOISY), dark_distribution(NOISY), 1)
        assert em.p10 == pytest.approx(0.0498, abs=5e-4)
        assert em.p01 == pytest.approx(0.0806, abs=5e-4)

    def test_zero_threshold(self):
        em = error_rates(bright_distribution(NOISY), dark_distribution(NOISY), 0)
        assert em.p10 == 0.0
        assert em.p01 == 1.0

    def test_threshold_monotonicity(self):
        bright = bright_distribution(NOISY)
        dark = dark_distribution(NOISY)
        models = [error_rates(bright, dark, k0) for k0 in range(0, 12)]
        p10 = [m.p10 for m in models]
        p01 = [m.p01 for m in models]
        assert all(a <= b + 1e-15 for a, b in zip(p10, p10[1:]))
        assert all(a >= b - 1e-15 for a, b in zip(p01, p01[1:]))

    def test_error_model_validation(self):
        with pytest.raises(ValueError):
            ReadoutErrorModel(k0=-1, p10=0.1, p01=0.1)
        with pytest.raises(ValueError):
            ReadoutErrorModel(k0=1, p10=0.7, p01=0.7)
        em = ReadoutErrorModel(k0=2, p10=0.01, p01=0.02)
        assert ReadoutErrorModel.from_dict(em.to_dict()) == em
