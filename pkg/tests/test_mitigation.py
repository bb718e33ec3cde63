# -*- coding: utf-8 -*-
""" Test the readout correction and decay rescaling
"""
import unittest

import numpy as np

from dtc_floquet.errors import (
    DegenerateNormalizationError,
    InvalidConfigError,
    NonInvertibleChannelError,
)
from dtc_floquet.mitigation import (
    ExponentialFit,
    MitigationParams,
    correct_measurement,
    extract_eta,
    filter_qubits,
    fit_reference_decay,
    mitigate,
    normalize_empirical,
    rescale_magnetization,
    sign,
)
from dtc_floquet.noise import NoiseModel, readout_expectation
from dtc_floquet.panel import Stage, TimeSeriesPanel

TIMES = np.arange(51)
ECHO = (-1.0) ** TIMES


def _panel(values, stage=Stage.MEASUREMENT_CORRECTED):
    values = np.atleast_2d(values)
    return TimeSeriesPanel(values, (0,) * values.shape[0], stage=stage)


class Test_measurement_correction(unittest.TestCase):
    def test_examples(self):
        self.assertAlmostEqual(correct_measurement(0.5, 0.25, 0.0), 1.0)
        self.assertAlmostEqual(correct_measurement(0.37, 0.0, 0.0), 0.37)
        self.assertAlmostEqual(correct_measurement(0.0, 0.05, 0.1), 0.1 / 0.9)

    def test_inverts_readout(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(-1, 1, 1000)
        eta0, eta1 = rng.uniform(0, 0.45, (2, 1000))
        noise = NoiseModel(eta0=eta0, eta1=eta1, depol_rate=np.zeros(1000))
        measured = readout_expectation(z, noise)
        np.testing.assert_allclose(correct_measurement(measured, noise.eta_bar, noise.delta), z, atol=1e-12)

    def test_non_invertible(self):
        with self.assertRaises(NonInvertibleChannelError):
            correct_measurement(0.1, 0.5, 0.0)

    def test_sign_of_zero(self):
        np.testing.assert_array_equal(sign([-0.2, 0.0, 0.3]), [-1, 1, 1])


class Test_empirical_normalization(unittest.TestCase):
    def test_clean_echo_unchanged(self):
        np.testing.assert_allclose(normalize_empirical(ECHO), ECHO)

    def test_initial_value_is_one(self):
        series = 0.9 * ECHO * np.exp(-0.02 * TIMES)
        self.assertAlmostEqual(abs(normalize_empirical(series, final_window=3)[0]), 1.0, places=12)

    def test_degenerate(self):
        with self.assertRaises(DegenerateNormalizationError):
            normalize_empirical(np.full(51, 0.5))

    def test_span_floor(self):
        series = ECHO * 0.04 + 0.3
        with self.assertRaises(DegenerateNormalizationError):
            normalize_empirical(series, min_span=0.1)
        self.assertAlmostEqual(abs(normalize_empirical(series, min_span=0.01)[0]), 1.0, places=12)
        self.assertEqual(MitigationParams().span_floor, 0.1)
        self.assertEqual(MitigationParams(w0=0.0, wf=0.0).span_floor, 1e-6)

    def test_extract_eta_example(self):
        series = np.array([0.9] + [0.3] * 44 + [-0.05] * 6)
        eta0, eta1 = extract_eta(series)
        self.assertAlmostEqual(eta0, 0.05, places=12)
        self.assertAlmostEqual(eta1, 0.0, places=12)

    def test_extract_injected_eta(self):
        noise = NoiseModel(eta0=(0.03,), eta1=(0.02,), depol_rate=(0.0,))
        eta0, eta1 = extract_eta(readout_expectation(ECHO[None, :], noise)[0])
        self.assertAlmostEqual(eta0, 0.03, delta=0.01)
        self.assertAlmostEqual(eta1, 0.02, delta=0.01)


class Test_reference_fit(unittest.TestCase):
    def test_constant_echo(self):
        fit = fit_reference_decay(ECHO)
        self.assertTrue(fit.converged)
        self.assertEqual(fit.a, 0.0)
        self.assertEqual(fit.b, 0.0)
        self.assertAlmostEqual(fit.c, 1.0, places=6)

    def test_recovers_decay(self):
        noise = np.random.default_rng(4).normal(0.0, 0.005, TIMES.size)
        series = ECHO * (0.8 * np.exp(-0.05 * TIMES) + 0.1 + 2 * noise)
        fit = fit_reference_decay(series)
        self.assertTrue(fit.converged)
        self.assertAlmostEqual(fit.a, 0.4, delta=0.04)
        self.assertAlmostEqual(fit.b, 0.05, delta=0.005)
        self.assertAlmostEqual(fit.c, 0.55, delta=0.02)

    def test_oscillation_does_not_converge(self):
        fit = fit_reference_decay(0.8 * np.cos(0.3 * TIMES))
        self.assertFalse(fit.converged)
        self.assertGreater(fit.rms_residual, 0.05)

    def test_near_linear_decay_stays_bounded(self):
        fit = fit_reference_decay(ECHO * (1.0 - 0.004 * TIMES))
        self.assertTrue(fit.converged)
        self.assertTrue(0.0 <= fit.a <= 1.0)
        self.assertTrue(0.0 <= fit.c <= 1.0)
        self.assertLess(fit.rms_residual, 0.01)


class Test_filter_and_rescale(unittest.TestCase):
    def test_filter_drops_fast_decay(self):
        reference = _panel([ECHO, ECHO * np.exp(-0.3 * TIMES)])
        np.testing.assert_array_equal(filter_qubits(reference, MitigationParams()), [True, False])
        np.testing.assert_array_equal(
            filter_qubits(reference, MitigationParams(w0=0.0, wf=0.0)), [True, True]
        )

    def test_filter_monotonic_in_w0(self):
        rates = [0.0, 0.02, 0.05, 0.1, 0.2]
        reference = _panel([ECHO * np.exp(-rate * TIMES) for rate in rates])
        counts = [
            int(filter_qubits(reference, MitigationParams(w0=w0, wf=0.0)).sum())
            for w0 in (0.05, 0.1, 0.3, 0.5, 0.9)
        ]
        self.assertListEqual(counts, sorted(counts, reverse=True))

    def test_identical_runs_unchanged(self):
        panel = _panel([ECHO, -ECHO])
        fits = [fit_reference_decay(row) for row in panel.values]
        mitigated, thermal = rescale_magnetization(panel, panel, fits, [True, True], MitigationParams())
        np.testing.assert_allclose(mitigated.values, panel.values)
        self.assertFalse(thermal.any())
        self.assertEqual(mitigated.stage, Stage.FULLY_MITIGATED)

    def test_literal_rescaling(self):
        params = MitigationParams(formula="literal")
        envelope = 0.8 * np.exp(-0.05 * TIMES) + 0.1
        fit = ExponentialFit(0.4, 0.05, 0.55, 0.0, True)
        panel = _panel(0.5 * ECHO)
        mitigated, _ = rescale_magnetization(panel, _panel(ECHO * envelope), [fit], [True], params)
        ratio = 0.5 / np.mean(envelope[13:18])
        expected = ratio * 1.5 / (0.4 * np.exp(-0.05 * 20) + 0.55) - 1.0
        self.assertAlmostEqual(mitigated.values[0, 20], expected, places=12)
        np.testing.assert_array_equal(mitigated.values[0, :13], panel.values[0, :13])

    def test_decay_inverse_rescaling(self):
        params = MitigationParams(formula="decay-inverse")
        fit = ExponentialFit(0.4, 0.05, 0.55, 0.0, True)
        envelope = 0.8 * np.exp(-0.05 * TIMES) + 0.1
        panel = _panel(ECHO * envelope)
        mitigated, _ = rescale_magnetization(panel, panel, [fit], [True], params)
        np.testing.assert_allclose(mitigated.values[0], ECHO, atol=1e-12)

    def test_pure_noise_is_not_boosted(self):
        noise = np.random.default_rng(5).normal(0.0, 0.005, (4, TIMES.size))
        reference = _panel(np.tile(ECHO, (4, 1)))
        fits = [fit_reference_decay(row) for row in reference.values]
        mitigated, thermal = rescale_magnetization(_panel(noise), reference, fits, [True] * 4, MitigationParams())
        self.assertTrue(thermal.all())
        np.testing.assert_array_equal(mitigated.values, noise)

    def test_missing_fit_drops_qubit(self):
        panel = _panel(ECHO)
        mitigated, _ = rescale_magnetization(panel, panel, [None], [True], MitigationParams())
        np.testing.assert_array_equal(mitigated.retained, [False])


class Test_mitigate(unittest.TestCase):
    RATE = 0.018
    NOISE = NoiseModel(eta0=(0.03, 0.03), eta1=(0.02, 0.02), depol_rate=(0.0, 0.0))

    def _raw_echo(self):
        decay = (1 - 4 * self.RATE / 3) ** TIMES
        z = np.array([[1.0], [-1.0]])
        values = readout_expectation(z * decay * ECHO, self.NOISE)
        return TimeSeriesPanel(values, (0, 1))

    def test_noiseless_echo(self):
        raw = TimeSeriesPanel(np.stack([ECHO, -ECHO]), (0, 1))
        mitigated, report = mitigate(raw, raw)
        np.testing.assert_allclose(mitigated.values, raw.values, atol=1e-9)
        self.assertTrue(report.retained.all())
        np.testing.assert_allclose(report.eta0, 0.0, atol=1e-12)

    def test_round_trip_recovers_echo(self):
        raw = self._raw_echo()
        expected = np.stack([ECHO, -ECHO])[:, 13:]
        for formula in ("literal", "decay-inverse"):
            mitigated, report = mitigate(raw, raw, MitigationParams(formula=formula))
            self.assertTrue(report.retained.all())
            np.testing.assert_allclose(mitigated.values[:, 13:], expected, atol=0.05)

    def test_pure_noise_run_stays_raw(self):
        sigma = 1.0 / np.sqrt(32768)
        noise = np.random.default_rng(8).normal(0.0, sigma, (4, TIMES.size))
        raw = TimeSeriesPanel(noise, (0, 1, 0, 1))
        reference = TimeSeriesPanel(0.9 * np.tile(ECHO, (4, 1)), (0, 1, 0, 1))
        mitigated, report = mitigate(raw, reference)
        np.testing.assert_array_equal(mitigated.values, noise)
        self.assertFalse(report.retained.any())
        self.assertTrue(report.degenerate.all())
        self.assertLessEqual(np.sqrt(np.mean(mitigated.values**2)), 3 * sigma)

    def test_slow_linear_decay_is_retained(self):
        raw = TimeSeriesPanel(np.stack([ECHO, -ECHO]) * (1.0 - 0.004 * TIMES), (0, 1))
        mitigated, report = mitigate(raw, raw)
        self.assertTrue(report.retained.all())
        self.assertTrue(all(fit.converged for fit in report.fits))

    def test_flat_reference_is_reported(self):
        flat = TimeSeriesPanel(np.full((2, TIMES.size), 0.5), (0, 0))
        with self.assertLogs("dtc_floquet.mitigation", level="WARNING") as logs:
            _, report = mitigate(flat, flat)
        self.assertTrue(any("has no empirical eta" in line for line in logs.output))
        self.assertTrue(np.isnan(report.eta0).all())
        self.assertFalse(report.retained.any())

    def test_calibrated_readout(self):
        raw = self._raw_echo()
        _, report = mitigate(raw, raw, noise=self.NOISE)
        decay = (1 - 4 * self.RATE / 3) ** TIMES
        np.testing.assert_allclose(report.corrected.values[0], decay * ECHO, atol=1e-12)
        self.assertEqual(report.corrected.stage, Stage.MEASUREMENT_CORRECTED)

    def test_report_frame(self):
        raw = self._raw_echo()
        _, report = mitigate(raw, raw)
        frame = report.to_frame()
        self.assertEqual(len(frame), 2)
        for column in ("eta0", "eta1", "fit_b", "fit_converged", "thermal", "retained"):
            self.assertIn(column, frame.columns)
        self.assertFalse(report.eta_out_of_range.any())

    def test_shape_mismatch(self):
        with self.assertRaises(InvalidConfigError):
            mitigate(_panel(ECHO, Stage.RAW), _panel(ECHO[:40], Stage.RAW))


class Test_params(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(InvalidConfigError):
            MitigationParams(w0=0.1, wf=0.1)
        with self.assertRaises(InvalidConfigError):
            MitigationParams(formula="exponential")
        MitigationParams(w0=0.0, wf=0.0)

    def test_short_series(self):
        with self.assertRaises(InvalidConfigError):
            MitigationParams().check_steps(10)

    def test_rescale_start(self):
        self.assertEqual(MitigationParams().first_rescaled_step, 0)
        self.assertEqual(MitigationParams(formula="literal").first_rescaled_step, 13)
        self.assertEqual(MitigationParams(formula="literal", rescale_start=4).first_rescaled_step, 4)
        with self.assertRaises(InvalidConfigError):
            MitigationParams(rescale_start=-1)


if __name__ == "__main__":
    unittest.main()
