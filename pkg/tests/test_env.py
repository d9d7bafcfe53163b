"""Tests for the non-stationary Gaussian testbed and its analytic CVaR oracle."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ndtri

from cvarbandits.env import (
    DEFAULT_MU_BOUNDS,
    DEFAULT_SIGMA0_BOUNDS,
    TABLE_SHOCK_STDS,
    ArmParams,
    ArmProcess,
    ParameterSpec,
    RunStreams,
    apply_shock,
    generate_run,
    labeled_stream,
    normal_cvar,
    normal_cvar_factor,
    sample_arm_params,
    standard_normal_quantile,
    step_variance,
    write_realization_csv,
)
from cvarbandits.env import TestbedConfig as EnvConfig


def quadrature_cvar(mu, sigma, alpha):
    """Oracle: CVaR as the tail quantile average (1/(1-a)) * int_a^1 ndtri(u) du."""
    integral, err = quad(ndtri, alpha, 1.0, epsabs=1e-12, epsrel=1e-12, limit=500)
    assert err < 1e-11
    return mu + sigma * integral / (1.0 - alpha)


class TestStandardNormalQuantile:
    def test_against_scipy(self):
        ps = np.concatenate(
            [
                np.linspace(1e-10, 1 - 1e-10, 2001),
                [1e-12, 1e-9, 0.5, 1 - 1e-9, 1 - 1e-12],
            ]
        )
        for p in ps:
            assert standard_normal_quantile(float(p)) == pytest.approx(
                float(ndtri(p)), abs=1e-9
            )

    def test_symmetry(self):
        # 1 - p is exact for dyadic p, 1 ulp off otherwise
        assert standard_normal_quantile(0.25) == -standard_normal_quantile(0.75)
        for p in (0.001, 0.1, 0.3, 0.49):
            assert standard_normal_quantile(p) == pytest.approx(
                -standard_normal_quantile(1 - p), rel=1e-14
            )
        assert standard_normal_quantile(0.5) == 0.0

    def test_domain(self):
        for p in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(ValueError):
                standard_normal_quantile(p)


class TestNormalCvar:
    def test_spot_values(self):
        assert normal_cvar(0.0, 1.0, 0.9) == pytest.approx(1.75498, abs=5e-6)
        assert normal_cvar(5.0, 1.0, 0.9) == pytest.approx(6.75498, abs=5e-6)
        assert normal_cvar(0.0, 1.0, 0.95) == pytest.approx(2.06271, abs=5e-6)

    def test_against_quadrature(self):
        rng = np.random.default_rng(61)
        for _ in range(40):
            mu = float(rng.uniform(-3, 3))
            sigma = float(rng.uniform(0.1, 4))
            alpha = float(rng.uniform(0.05, 0.99))
            assert normal_cvar(mu, sigma, alpha) == pytest.approx(
                quadrature_cvar(mu, sigma, alpha), abs=1e-6
            )

    def test_exceeds_var(self):
        for alpha in (0.1, 0.5, 0.9, 0.99):
            var = standard_normal_quantile(alpha)
            assert normal_cvar(0.0, 1.0, alpha) > var

    def test_monotone_in_mu_and_sigma(self):
        assert normal_cvar(1.0, 1.0, 0.9) > normal_cvar(0.0, 1.0, 0.9)
        assert normal_cvar(0.0, 2.0, 0.9) > normal_cvar(0.0, 1.0, 0.9)

    def test_sigma_validation(self):
        for sigma in (0.0, -1.0):
            with pytest.raises(ValueError):
                normal_cvar(0.0, sigma, 0.9)

    def test_factor_matches_closed_form(self):
        for alpha in (0.5, 0.9, 0.95):
            q = standard_normal_quantile(alpha)
            pdf = math.exp(-0.5 * q * q) / math.sqrt(2 * math.pi)
            assert normal_cvar_factor(alpha) == pytest.approx(pdf / (1 - alpha), rel=1e-12)


class TestParams:
    def test_table_defaults(self):
        assert TABLE_SHOCK_STDS == (
            0.08870,
            0.08871,
            0.08872,
            0.08873,
            0.08874,
            0.08874,
            0.08872,
            0.08873,
        )
        spec = ParameterSpec()
        assert spec.mu_bounds == DEFAULT_MU_BOUNDS == (0.0, 2.0)
        assert spec.sigma0_bounds == DEFAULT_SIGMA0_BOUNDS == (1.0, 2.0)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ParameterSpec(mu_bounds=(2.0, 0.0))
        with pytest.raises(ValueError):
            ParameterSpec(sigma0_bounds=(0.0, 1.0))
        with pytest.raises(ValueError):
            ParameterSpec(shock_stds=(0.1, -0.1))
        with pytest.raises(ValueError):
            ParameterSpec(shock_stds=())

    def test_arm_params_validation(self):
        with pytest.raises(ValueError):
            ArmParams(mu=0.0, sigma0=0.0, shock_std=0.1)
        with pytest.raises(ValueError):
            ArmParams(mu=0.0, sigma0=1.0, shock_std=0.0)

    def test_degenerate_spec_is_point_mass(self):
        spec = ParameterSpec(mu_bounds=(1.0, 1.0), sigma0_bounds=(1.0, 1.0))
        rng = np.random.default_rng(0)
        p = sample_arm_params(rng, spec, 0)
        assert p.mu == 1.0 and p.sigma0 == 1.0
        assert p.shock_std == TABLE_SHOCK_STDS[0]

    def test_default_bounds_respected(self):
        rng = np.random.default_rng(67)
        spec = ParameterSpec()
        mus = []
        for i in range(10_000):
            p = sample_arm_params(rng, spec, i % 8)
            assert 0.0 <= p.mu <= 2.0
            assert 1.0 <= p.sigma0 <= 2.0
            mus.append(p.mu)
        assert abs(np.mean(mus) - 1.0) < 0.05

    def test_shock_std_cycles_beyond_table(self):
        rng = np.random.default_rng(1)
        spec = ParameterSpec()
        p8 = sample_arm_params(rng, spec, 8)
        assert p8.shock_std == TABLE_SHOCK_STDS[0]


class TestVarianceDynamics:
    def test_forced_shocks(self):
        proc = ArmProcess(ArmParams(0.0, 2.0, 0.1), sigma2=4.0)
        apply_shock(proc, 0.0)
        assert proc.sigma2 == 4.0
        apply_shock(proc, math.log(2.0))
        assert proc.sigma2 == pytest.approx(8.0, rel=1e-12)

    def test_positivity_over_many_steps(self):
        rng = np.random.default_rng(71)
        proc = ArmProcess(ArmParams(0.0, 1.0, 0.0887), sigma2=1.0)
        log_increments = []
        previous = proc.sigma2
        for _ in range(100_000):
            step_variance(proc, rng)
            assert proc.sigma2 > 0.0
            log_increments.append(math.log(proc.sigma2 / previous))
            previous = proc.sigma2
        assert abs(np.std(log_increments) - 0.0887) / 0.0887 < 0.02


class TestGenerateRun:
    def test_deterministic(self):
        config = EnvConfig(stages=50, arms=8, alpha=0.9)
        a = generate_run(RunStreams.from_seed(0, 3), config)
        b = generate_run(RunStreams.from_seed(0, 3), config)
        assert np.array_equal(a.losses, b.losses)
        assert np.array_equal(a.true_cvar, b.true_cvar)
        assert a.params == b.params

    def test_different_runs_differ(self):
        config = EnvConfig(stages=50, arms=8, alpha=0.9)
        a = generate_run(RunStreams.from_seed(0, 3), config)
        b = generate_run(RunStreams.from_seed(0, 4), config)
        assert not np.array_equal(a.losses, b.losses)

    def test_shapes_and_initial_cvar_range(self):
        config = EnvConfig(stages=200, arms=8, alpha=0.9)
        for run in range(20):
            real = generate_run(RunStreams.from_seed(9, run), config)
            assert real.losses.shape == (200, 8)
            assert real.true_cvar.shape == (200, 8)
            lo = 0.0 + 1.0 * 1.7549833193248683
            hi = 2.0 + 2.0 * 1.7549833193248683
            assert (real.true_cvar[0] >= lo - 1e-9).all()
            assert (real.true_cvar[0] <= hi + 1e-9).all()

    def test_true_cvar_matches_stagewise_params(self):
        # replay the variance recursion by hand and compare the oracle matrix
        config = EnvConfig(stages=30, arms=3, alpha=0.9)
        real = generate_run(RunStreams.from_seed(5, 0), config)
        factor = normal_cvar_factor(0.9)
        for i, p in enumerate(real.params):
            sigma0_cvar = p.mu + p.sigma0 * factor
            assert real.true_cvar[0, i] == pytest.approx(sigma0_cvar, rel=1e-12)

    def test_stationary_when_shocks_vanish(self):
        spec = ParameterSpec(shock_stds=(1e-300,))
        config = EnvConfig(stages=100, arms=4, alpha=0.9, param_spec=spec)
        real = generate_run(RunStreams.from_seed(2, 0), config)
        for i in range(4):
            column = real.true_cvar[:, i]
            assert np.allclose(column, column[0], rtol=1e-9, atol=0.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EnvConfig(stages=0, arms=8, alpha=0.9)
        with pytest.raises(ValueError):
            EnvConfig(stages=10, arms=0, alpha=0.9)

    def test_csv_export(self, tmp_path):
        config = EnvConfig(stages=3, arms=2, alpha=0.9)
        real = generate_run(RunStreams.from_seed(0, 0), config)
        target = tmp_path / "realization.csv"
        write_realization_csv(real, target)
        lines = target.read_text().strip().split("\n")
        assert lines[0] == "stage,arm,loss,true_cvar"
        assert len(lines) == 1 + 3 * 2
        first = lines[1].split(",")
        assert first[0] == "1" and first[1] == "1"
        assert float(first[2]) == real.losses[0, 0]


class TestStreams:
    def test_labels_are_disjoint(self):
        a = labeled_stream(0, 0, 0).standard_normal(8)
        b = labeled_stream(0, 0, 1).standard_normal(8)
        assert not np.array_equal(a, b)

    def test_extra_key_separates(self):
        a = labeled_stream(0, 0, 3, extra=(0,)).random(8)
        b = labeled_stream(0, 0, 3, extra=(1,)).random(8)
        assert not np.array_equal(a, b)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            labeled_stream(-1, 0, 0)
        with pytest.raises(ValueError):
            labeled_stream(0, -2, 0)
