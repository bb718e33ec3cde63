# -*- coding: utf-8 -*-
""" Test engine selection, the mitigation pipeline and chain templates
"""
import unittest

import numpy as np

from dtc_floquet.analysis import autocorrelator, qubit_average
from dtc_floquet.chain_model import ChainConfig, J_MAX, J_MIN, PauliString, make_initial, sample_disorder
from dtc_floquet.errors import EngineCapabilityError, InvalidConfigError
from dtc_floquet.noise import NoiseModel
from dtc_floquet.panel import Stage
from dtc_floquet.pipeline import (
    ChainTemplate,
    PipelineOptions,
    run_pipeline,
    select_engine,
    simulate,
)
from dtc_floquet.statevector import evolve_statevector


class Test_engine_selection(unittest.TestCase):
    IDEAL = sample_disorder(4, seed=0, epsilon=0.05)
    NOISY = ChainConfig(2, 0.05, (0.5,), (0.1, 0.0))

    def test_auto(self):
        self.assertEqual(select_engine(self.IDEAL, PipelineOptions()), "fermion")
        self.assertEqual(select_engine(self.NOISY, PipelineOptions()), "statevector")
        options = PipelineOptions(noise=NoiseModel.uniform(4))
        self.assertEqual(select_engine(self.IDEAL, options), "statevector")

    def test_fermion_with_noise(self):
        options = PipelineOptions(engine="fermion", noise=NoiseModel.uniform(4))
        with self.assertRaises(EngineCapabilityError):
            select_engine(self.IDEAL, options)

    def test_unknown_engine(self):
        with self.assertRaises(InvalidConfigError):
            PipelineOptions(engine="tensor-network")

    def test_engines_agree(self):
        initial = make_initial("neel", 4)
        fermion = simulate(self.IDEAL, initial, PipelineOptions(engine="fermion", steps=10))
        dense = simulate(self.IDEAL, initial, PipelineOptions(engine="statevector", steps=10))
        np.testing.assert_allclose(fermion.values, dense.values, atol=1e-8)


class Test_run_pipeline(unittest.TestCase):
    def test_noiseless_has_raw_only(self):
        config = sample_disorder(4, seed=1, epsilon=0.05)
        result = run_pipeline(config, make_initial("polarized", 4), PipelineOptions(steps=20))
        self.assertIsNone(result.mitigated)
        self.assertIs(result.panel(Stage.FULLY_MITIGATED), result.raw)

    def test_noisy_stages(self):
        config = sample_disorder(3, seed=2, epsilon=0.0)
        noise = NoiseModel.uniform(3, depol_rate=0.01, shots=2000)
        options = PipelineOptions(engine="statevector", steps=20, noise=noise, n_trajectories=8)
        result = run_pipeline(config, make_initial("neel", 3), options, seed=4)
        self.assertEqual(result.raw.stage, Stage.RAW)
        self.assertEqual(result.corrected.stage, Stage.MEASUREMENT_CORRECTED)
        self.assertEqual(result.mitigated.stage, Stage.FULLY_MITIGATED)
        self.assertEqual(result.reference.n_steps, 20)
        self.assertEqual(len(result.report.fits), 3)

    def test_mitigation_off(self):
        config = sample_disorder(3, seed=2, epsilon=0.1)
        options = PipelineOptions(
            engine="statevector", steps=20, noise=NoiseModel.uniform(3, shots=500), n_trajectories=4, mitigate=False
        )
        result = run_pipeline(config, make_initial("neel", 3), options)
        self.assertIsNone(result.reference)
        self.assertIs(result.panel(Stage.MEASUREMENT_CORRECTED), result.raw)

    def test_mitigated_echo_tracks_noiseless_run(self):
        config, initial = ChainTemplate(10, seed=2).realize(0.05)
        noise = NoiseModel.uniform(10, eta0=0.05, eta1=0.03, depol_rate=0.01, shots=32768)
        options = PipelineOptions(engine="statevector", noise=noise, n_trajectories=200)
        result = run_pipeline(config, initial, options, seed=6)
        self.assertTrue(result.mitigated.retained.all())
        mitigated = qubit_average(autocorrelator(result.mitigated))
        oracle = qubit_average(autocorrelator(evolve_statevector(config, initial, 50)))
        self.assertEqual(mitigated.size, 51)
        self.assertLess(np.max(np.abs(mitigated - oracle)), 0.1)

    def test_reference_shares_the_noise_stream(self):
        config = sample_disorder(3, seed=2, epsilon=0.0)
        noise = NoiseModel.uniform(3, depol_rate=0.02, shots=600)
        options = PipelineOptions(engine="statevector", steps=12, noise=noise, n_trajectories=6)
        result = run_pipeline(config, make_initial("neel", 3), options, seed=9)
        np.testing.assert_array_equal(result.raw.values, result.reference.values)


class Test_chain_template(unittest.TestCase):
    def test_fresh_disorder_per_point(self):
        template = ChainTemplate(6, seed=5, coherent_amplitude=0.1)
        first, _ = template.realize(0.05, point=0)
        second, _ = template.realize(0.05, point=1)
        self.assertNotEqual(first.couplings, second.couplings)
        self.assertEqual(first, template.realize(0.05, point=0)[0])
        self.assertTrue(all(J_MIN <= j <= J_MAX for j in first.couplings))
        self.assertTrue(all(abs(b) <= 0.1 for b in first.z_fields))

    def test_pinned_disorder(self):
        template = ChainTemplate(6, seed=5, pin_disorder=True)
        first, initial = template.realize(0.05, point=0)
        second, initial_again = template.realize(0.2, point=3)
        self.assertEqual(first.couplings, second.couplings)
        self.assertEqual(initial, initial_again)
        self.assertEqual(second.epsilon, 0.2)

    def test_uniform_disorder(self):
        template = ChainTemplate(5, disorder="uniform", initial_kind="neel")
        config, initial = template.realize(0.1)
        np.testing.assert_allclose(config.couplings, np.pi / 4)
        self.assertEqual(initial.bits, (0, 1, 0, 1, 0))
        with self.assertRaises(InvalidConfigError):
            ChainTemplate(5, disorder="quasiperiodic")

    def test_extra_terms(self):
        terms = ((PauliString("ZIX"), 0.03),)
        config, _ = ChainTemplate(3, extra_pauli_terms=terms).realize(0.0)
        self.assertEqual(config.extra_pauli_terms, terms)
        self.assertFalse(config.is_ideal)


if __name__ == "__main__":
    unittest.main()
