import numpy as np
import pytest

import temsphere as ts
from temsphere.core import ParameterError
from temsphere.inversion import DecayModel


def noisy(values, rel, seed):
    rng = np.random.default_rng(seed)
    return values * (1.0 + rel * rng.standard_normal(values.shape))


class TestFitPowerLaw:
    def test_exact_recovery(self):
        t = np.geomspace(1e-4, 1e-2, 30)
        data = ts.TimeSeries(times_s=t, values=5.0 * t**-0.5)
        fit = ts.fit_power_law(data, (t[0], t[-1]))
        assert fit.amplitude == pytest.approx(5.0, rel=1e-12)
        assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
        assert fit.residual < 1e-12

    def test_noisy_exponent_within_band(self):
        t = np.geomspace(1e-4, 1e-2, 30)
        clean = 5.0 * t**-0.5
        for seed in range(100):
            data = ts.TimeSeries(times_s=t, values=noisy(clean, 0.01, seed))
            fit = ts.fit_power_law(data, (t[0], t[-1]))
            assert -0.52 <= fit.exponent <= -0.48

    def test_exponential_data_flags_misdetection(self):
        t = np.geomspace(2e-2, 2e-1, 30)
        data = ts.TimeSeries(times_s=t, values=np.exp(-50.0 * t))
        fit = ts.fit_power_law(data, (t[0], t[-1]))
        assert fit.residual > 0.1
        assert abs(fit.exponent + 0.5) > 0.5

    def test_window_and_positivity_validation(self):
        t = np.geomspace(1e-4, 1e-2, 30)
        data = ts.TimeSeries(times_s=t, values=5.0 * t**-0.5)
        with pytest.raises(ParameterError):
            ts.fit_power_law(data, (t[0], t[2]))  # too few gates
        bad = ts.TimeSeries(times_s=t, values=np.linspace(-1, 1, 30))
        with pytest.raises(ParameterError):
            ts.fit_power_law(bad, (t[0], t[-1]))


class TestFitExponentials:
    def test_single_exponential_exact(self):
        t = np.geomspace(1e-3, 1.0, 60)
        data = ts.TimeSeries(times_s=t, values=2.0 * np.exp(-3.0 * t))
        result = ts.fit_exponentials(data, k=1, seed=0)
        assert result.converged
        assert result.model.rates[0] == pytest.approx(3.0, rel=1e-8)
        assert result.model.amplitudes[0] == pytest.approx(2.0, rel=1e-8)

    def test_planted_two_exponentials_with_noise(self):
        t = np.geomspace(1e-3, 3.0, 80)
        clean = 0.3 * np.exp(-1.0 * t) + 3.0 * np.exp(-10.0 * t)
        data = ts.TimeSeries(times_s=t, values=noisy(clean, 0.01, seed=11))
        result = ts.fit_exponentials(data, k=2, seed=7)
        assert result.converged
        assert result.model.rates[0] == pytest.approx(1.0, rel=0.05)
        assert result.model.rates[1] == pytest.approx(10.0, rel=0.05)
        assert result.model.amplitudes[0] == pytest.approx(0.3, rel=0.05)
        assert result.model.amplitudes[1] == pytest.approx(3.0, rel=0.05)

    def test_near_degenerate_rates_flagged(self):
        t = np.geomspace(1e-3, 3.0, 80)
        clean = 1.0 * np.exp(-1.0 * t) + 1.0 * np.exp(-1.05 * t)
        data = ts.TimeSeries(times_s=t, values=noisy(clean, 0.01, seed=3))
        result = ts.fit_exponentials(data, k=2, seed=3)
        assert (not result.converged) or result.diagnostics["ill_conditioned"]

    def test_nested_models_non_increasing_residual(self):
        t = np.geomspace(1e-3, 3.0, 80)
        clean = 0.3 * np.exp(-1.0 * t) + 3.0 * np.exp(-10.0 * t)
        data = ts.TimeSeries(times_s=t, values=noisy(clean, 0.01, seed=5))
        misfits = [
            ts.fit_exponentials(data, k=k, seed=9).misfit for k in (1, 2, 3)
        ]
        assert misfits[1] <= misfits[0] * (1 + 1e-9)
        assert misfits[2] <= misfits[1] * (1 + 1e-9)

    def test_deterministic_given_seed(self):
        t = np.geomspace(1e-3, 3.0, 60)
        clean = 0.5 * np.exp(-2.0 * t) + 2.0 * np.exp(-20.0 * t)
        data = ts.TimeSeries(times_s=t, values=noisy(clean, 0.02, seed=1))
        r1 = ts.fit_exponentials(data, k=2, seed=42)
        r2 = ts.fit_exponentials(data, k=2, seed=42)
        assert r1.model.rates == r2.model.rates
        assert r1.model.amplitudes == r2.model.amplitudes

    def test_power_term_recovery(self):
        t = np.geomspace(1e-4, 1e-1, 80)
        clean = 4.0 * t**-0.5 + 50.0 * np.exp(-40.0 * t)
        data = ts.TimeSeries(times_s=t, values=clean)
        init = DecayModel(power_amplitude=1.0)
        result = ts.fit_exponentials(data, k=1, init=init, seed=0)
        assert result.model.power_amplitude == pytest.approx(4.0, rel=1e-6)
        assert result.model.rates[0] == pytest.approx(40.0, rel=1e-4)

    def test_decade_span_required(self):
        t = np.linspace(1.0, 2.0, 30)
        data = ts.TimeSeries(times_s=t, values=np.exp(-t))
        with pytest.raises(ParameterError):
            ts.fit_exponentials(data, k=2)

    def test_term_cap(self):
        t = np.geomspace(1e-3, 3.0, 30)
        data = ts.TimeSeries(times_s=t, values=np.exp(-t))
        with pytest.raises(ParameterError):
            ts.fit_exponentials(data, k=6)


class TestClassifyLibrary:
    @staticmethod
    def forward(config, times):
        amp, rate = config
        return amp * np.exp(-rate * np.asarray(times))

    def test_noiseless_self_classification(self):
        t = np.geomspace(1e-3, 1.0, 40)
        candidates = [("a", (1.0, 3.0)), ("b", (1.0, 6.0)), ("c", (2.0, 3.0))]
        data = ts.TimeSeries(times_s=t, values=self.forward(("x", (1.0, 3.0))[1], t))
        result = ts.classify_library(data, candidates, self.forward)
        assert result.best == "a"
        assert result.ranking[0][1] <= 1e-8

    def test_noisy_pair_discrimination(self):
        t = np.geomspace(1e-3, 1.0, 40)
        truth = self.forward((1.0, 3.0), t)
        data = ts.TimeSeries(times_s=t, values=noisy(truth, 0.02, seed=2))
        candidates = [("steel", (1.0, 6.0)), ("aluminum", (1.0, 3.0))]
        result = ts.classify_library(data, candidates, self.forward, noise_rel=0.02)
        assert result.best == "aluminum"
        assert result.margin > 1.0

    def test_gain_nuisance_preserves_ranking(self):
        t = np.geomspace(1e-3, 1.0, 40)
        truth = self.forward((1.0, 3.0), t)
        data = ts.TimeSeries(times_s=t, values=7.7 * noisy(truth, 0.02, seed=4))
        candidates = [("a", (1.0, 3.0)), ("b", (1.0, 6.0)), ("c", (1.0, 1.5))]
        plain = ts.classify_library(
            ts.TimeSeries(times_s=t, values=noisy(truth, 0.02, seed=4)),
            candidates,
            self.forward,
            free_gain=False,
        )
        gained = ts.classify_library(data, candidates, self.forward, free_gain=True)
        assert [name for name, _ in gained.ranking] == [
            name for name, _ in plain.ranking
        ]

    def test_weight_invariance_under_common_scaling(self):
        t = np.geomspace(1e-3, 1.0, 40)
        truth = self.forward((1.0, 3.0), t)
        candidates = [("a", (1.0, 3.0)), ("b", (1.0, 6.0)), ("c", (0.5, 3.0))]
        d1 = ts.TimeSeries(times_s=t, values=noisy(truth, 0.02, seed=6))
        d2 = ts.TimeSeries(times_s=t, values=5.0 * d1.values)
        r1 = ts.classify_library(d1, candidates, self.forward, free_gain=True)
        r2 = ts.classify_library(d2, candidates, self.forward, free_gain=True)
        assert [n for n, _ in r1.ranking] == [n for n, _ in r2.ranking]

    def test_all_invalid_fails(self):
        t = np.geomspace(1e-3, 1.0, 10)
        data = ts.TimeSeries(times_s=t, values=np.exp(-t))

        def broken(config, times):
            raise ValueError("no forward model")

        with pytest.raises(ParameterError):
            ts.classify_library(data, [("a", None)], broken)

    def test_empty_library_fails(self):
        t = np.geomspace(1e-3, 1.0, 10)
        data = ts.TimeSeries(times_s=t, values=np.exp(-t))
        with pytest.raises(ParameterError):
            ts.classify_library(data, [], self.forward)
