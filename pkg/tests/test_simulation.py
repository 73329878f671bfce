import numpy as np
import pytest
from scipy.integrate import quad

from tobit_additive import simulation
from tobit_additive.errors import ExperimentFailure, InvalidArgument, NonConvergence
from tobit_additive.estimator import BASELINE, TOBIT, fit
from tobit_additive.simulation import (
    Scenario,
    calibrate_threshold,
    imse,
    m2,
    run_experiment,
    simulate_replicate,
    true_components,
)
from tobit_additive.splines import component_curve


def fresh_latent(draws, seed, noise_sd=0.2):
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(draws, 2))
    return (u[:, 0] - 0.5) + (u[:, 1] - 0.5) ** 2 - 1 / 12 + noise_sd * rng.standard_normal(draws)


class TestTrueComponents:
    def test_values(self):
        a, b = true_components([0.5])
        assert a[0] == 0.0
        assert b[0] == pytest.approx(-0.083333, abs=1e-6)

    def test_m2_integrates_to_zero(self):
        value, _ = quad(m2, 0, 1)
        assert abs(value) < 1e-14

    @pytest.mark.parametrize("bad", [-0.1, 1.2, np.nan])
    def test_outside_unit_interval(self, bad):
        with pytest.raises(InvalidArgument):
            true_components([0.2, bad])


class TestCalibration:
    def test_no_censoring(self):
        assert calibrate_threshold(0.0) == -np.inf

    @pytest.mark.parametrize("cen, tol", [(0.5, 0.002), (0.30, 0.005)])
    def test_fresh_sample_fraction(self, cen, tol):
        c = calibrate_threshold(cen)
        y = fresh_latent(1_000_000, seed=99)
        assert abs(np.mean(y <= c) - cen) <= tol

    def test_deterministic(self):
        assert calibrate_threshold(0.15, oracle_draws=10_000, seed=1) == calibrate_threshold(0.15, oracle_draws=10_000, seed=1)

    def test_invalid(self):
        with pytest.raises(InvalidArgument):
            calibrate_threshold(1.0)


class TestReplicate:
    def test_shape_and_determinism(self):
        scenario = Scenario(n=80, cen=0.15)
        a, b = simulate_replicate(scenario, 3), simulate_replicate(scenario, 3)
        assert a.x.shape == (80, 2) and a.n == 80
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y) and a.c == b.c
        assert not np.array_equal(a.x, simulate_replicate(scenario, 4).x)

    def test_common_random_numbers(self):
        small = simulate_replicate(Scenario(n=80, cen=0.05), 2)
        large = simulate_replicate(Scenario(n=160, cen=0.30), 2)
        assert np.array_equal(small.x, large.x[:80])

    def test_pooled_censoring_fraction(self):
        scenario = Scenario(n=160, cen=0.15)
        censored = sum(simulate_replicate(scenario, r).censored_count for r in range(50))
        assert abs(censored / (50 * 160) - 0.15) <= 0.01

    def test_uncensored_scenario(self):
        data = simulate_replicate(Scenario(n=40, cen=0.0), 0)
        assert data.censored_count == 0


class TestImse:
    def test_identical(self):
        t = m2(np.linspace(0, 1, 50))
        assert imse(t, t) == 0.0

    def test_level_shift(self):
        t = m2(np.linspace(0, 1, 50))
        assert imse(t + 3.0, t) == pytest.approx(0.0, abs=1e-28)

    def test_alternating(self):
        t = m2(np.linspace(0, 1, 50))
        wiggle = 0.01 * (-1.0) ** np.arange(50)
        assert imse(t + wiggle, t) == pytest.approx(1e-4, rel=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgument):
            imse(np.zeros(3), np.zeros(4))


class TestRunExperiment:
    def test_single_replicate(self):
        scenario = Scenario(n=80, cen=0.15, replicates=1)
        report = run_experiment(scenario, methods=("tobit",))[TOBIT]
        model = fit(simulate_replicate(scenario, 0))
        grid = scenario.grid
        for j in range(2):
            curve = component_curve(model, j, grid)
            assert np.array_equal(report.bands[j]["median"], curve)
            truth = true_components(grid)[j]
            assert report.imse_per_component[j] == imse(curve, truth)
        assert np.array_equal(report.per_replicate[0], report.imse_per_component)

    def test_band_order_and_nonnegative(self):
        reports = run_experiment(Scenario(n=80, cen=0.30, replicates=20))
        assert set(reports) == {TOBIT, BASELINE}
        for rep in reports.values():
            assert np.all(rep.per_replicate >= 0) and rep.failures == 0
            for band in rep.bands.values():
                assert np.all(band["q025"] <= band["median"]) and np.all(band["median"] <= band["q975"])
                assert abs(band["truth"].mean()) < 1e-15

    def test_deterministic_across_workers(self):
        scenario = Scenario(n=80, cen=0.15, replicates=6)
        a = run_experiment(scenario)
        b = run_experiment(scenario)
        c = run_experiment(scenario, workers=2)
        for label in a:
            assert np.array_equal(a[label].per_replicate, b[label].per_replicate)
            assert np.array_equal(a[label].curves, c[label].curves)
            assert np.array_equal(a[label].bands[1]["q975"], c[label].bands[1]["q975"])

    def test_failures_recorded(self, monkeypatch):
        calls = {"n": 0}

        def sometimes(data, spec):
            calls["n"] += 1
            if calls["n"] == 2:
                raise NonConvergence("synthetic")
            return fit(data, spec)

        monkeypatch.setattr(simulation, "fit", sometimes)
        report = run_experiment(Scenario(n=80, replicates=10), methods=("tobit",))[TOBIT]
        assert report.failures == 1 and report.per_replicate.shape == (9, 2)

    def test_too_many_failures(self, monkeypatch):
        def never(data, spec):
            raise NonConvergence("synthetic")

        monkeypatch.setattr(simulation, "fit", never)
        with pytest.raises(ExperimentFailure):
            run_experiment(Scenario(n=80, replicates=5), methods=("tobit", "naive"))

    def test_unknown_method(self):
        with pytest.raises(InvalidArgument):
            run_experiment(Scenario(replicates=1), methods=("np",))

    @pytest.mark.parametrize("kwargs", [dict(cen=1.0), dict(n=0), dict(replicates=0), dict(noise_sd=-1.0)])
    def test_invalid_scenario(self, kwargs):
        with pytest.raises(InvalidArgument):
            Scenario(**kwargs)

    def test_select_kappa_flag(self):
        report = run_experiment(Scenario(n=160, cen=0.15, replicates=2), methods=("tobit",), select_kappa=True)[TOBIT]
        assert report.per_replicate.shape == (2, 2)
