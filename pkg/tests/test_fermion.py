# -*- coding: utf-8 -*-
""" Test the free-fermion engine against the statevector engine
"""
import time
import unittest

import numpy as np
from pfapack.pfaffian import pfaffian
from scipy.stats import ortho_group

from dtc_floquet.chain_model import ChainConfig, make_initial, sample_disorder
from dtc_floquet.errors import (
    CovarianceInvariantError,
    InvalidConfigError,
    UnsupportedModelError,
)
from dtc_floquet.fermion import (
    MajoranaCovariance,
    check_covariance,
    covariance_from_bits,
    evolve_covariance,
    evolve_fermion,
    flip_layer_update,
    ising_layer_update,
    n_modes,
    nested_pfaffians,
)
from dtc_floquet.statevector import evolve_statevector


class Test_covariance(unittest.TestCase):
    def test_product_state_read_back(self):
        np.testing.assert_allclose(covariance_from_bits([0, 0, 0, 0]).polarizations(), 1.0)
        np.testing.assert_allclose(
            covariance_from_bits([0, 1, 0, 1, 1]).polarizations(), [1, -1, 1, -1, -1]
        )

    def test_physical_covariance(self):
        covariance = covariance_from_bits([1, 0, 1])
        asymmetry, bound = check_covariance(covariance.gamma)
        self.assertEqual(asymmetry, 0.0)
        self.assertAlmostEqual(bound, 1.0, places=12)
        self.assertEqual(covariance.gamma.shape, (n_modes(3), n_modes(3)))

    def test_unphysical_covariance_raises(self):
        gamma = covariance_from_bits([1, 0, 1]).gamma
        with self.assertRaises(CovarianceInvariantError):
            check_covariance(1.5 * gamma)
        with self.assertRaises(CovarianceInvariantError):
            check_covariance(gamma + 1e-6 * np.eye(gamma.shape[0]))

    def test_evolution_checks_every_step(self):
        config = sample_disorder(3, seed=0, epsilon=0.05)
        inflated = MajoranaCovariance(1.5 * covariance_from_bits([0, 1, 0]).gamma, 3)
        with self.assertRaises(CovarianceInvariantError):
            evolve_covariance(inflated, config, 1)

    def test_nested_pfaffians_match_direct(self):
        pairing = np.kron(np.eye(6), np.array([[0.0, 1.0], [-1.0, 0.0]]))
        for seed in range(3):
            rotation = ortho_group.rvs(dim=12, random_state=seed)
            matrix = rotation @ pairing @ rotation.T
            matrix = 0.5 * (matrix - matrix.T)
            expected = [np.real(pfaffian(matrix[: 2 * k, : 2 * k])) for k in range(1, 7)]
            np.testing.assert_allclose(nested_pfaffians(matrix, 6), expected, atol=1e-10)

    def test_nested_pfaffians_with_vanishing_block(self):
        matrix = np.zeros((8, 8))
        for a, b in ((0, 2), (1, 3), (4, 5), (6, 7)):
            matrix[a, b] = 1.0
        matrix = matrix - matrix.T
        expected = [np.real(pfaffian(matrix[: 2 * k, : 2 * k])) for k in range(1, 5)]
        values = nested_pfaffians(matrix, 4)
        self.assertEqual(values[0], 0.0)
        np.testing.assert_allclose(values, expected, atol=1e-12)

    def test_sweep_matches_single_strings(self):
        config = sample_disorder(9, seed=4, epsilon=0.11)
        update = flip_layer_update(config.epsilon, 9)
        covariance = covariance_from_bits([0, 1, 1, 0, 1, 0, 0, 1, 1])
        for _ in range(7):
            covariance = covariance.conjugate(ising_layer_update(config.couplings, 9) @ update)
        np.testing.assert_allclose(
            covariance.polarizations(),
            [covariance.polarization(q) for q in range(9)],
            atol=1e-10,
        )


class Test_layer_updates(unittest.TestCase):
    def test_trivial_flip_is_identity(self):
        np.testing.assert_array_equal(flip_layer_update(1.0, 4), np.eye(12))

    def test_perfect_flip_blocks(self):
        update = flip_layer_update(0.0, 3)
        for s in range(1, 4):
            np.testing.assert_allclose(update[2 * s : 2 * s + 2, 2 * s : 2 * s + 2], -np.eye(2), atol=1e-15)
        np.testing.assert_array_equal(update[:2, :2], np.eye(2))

    def test_updates_are_orthogonal(self):
        for update in (flip_layer_update(0.37, 5), ising_layer_update([0.3, 0.5, 0.7, 0.9], 5)):
            np.testing.assert_allclose(update @ update.T, np.eye(14), atol=1e-12)

    def test_zero_couplings(self):
        np.testing.assert_array_equal(ising_layer_update([0.0, 0.0], 3), np.eye(10))

    def test_coupling_count(self):
        with self.assertRaises(InvalidConfigError):
            ising_layer_update([0.5], 3)


class Test_fermion_engine(unittest.TestCase):
    STEPS = 50

    def test_matches_statevector(self):
        for n_qubits in (4, 8, 12):
            for epsilon in (0.0, 0.05, 0.11, 0.5):
                for seed in range(5):
                    config = sample_disorder(n_qubits, seed=seed, epsilon=epsilon)
                    initial = make_initial("random-bit", n_qubits, seed=seed)
                    fermion = evolve_fermion(config, initial, self.STEPS)
                    dense = evolve_statevector(config, initial, self.STEPS)
                    np.testing.assert_allclose(fermion.values, dense.values, atol=1e-8)

    def test_matches_statevector_at_eight_qubits(self):
        config = sample_disorder(8, seed=11, epsilon=0.07)
        initial = make_initial("neel", 8)
        np.testing.assert_allclose(
            evolve_fermion(config, initial, self.STEPS).values,
            evolve_statevector(config, initial, self.STEPS).values,
            atol=1e-8,
        )

    def test_echo_on_long_chain(self):
        config = sample_disorder(57, seed=0, epsilon=0.0)
        initial = make_initial("random-bit", 57, seed=0)
        panel = evolve_fermion(config, initial, self.STEPS)
        autocorrelator = panel.values * initial.z_signs[:, None]
        expected = np.tile((-1.0) ** np.arange(self.STEPS + 1), (57, 1))
        np.testing.assert_allclose(autocorrelator, expected, atol=1e-10)
        self.assertEqual(panel.metadata["engine"], "fermion")

    def test_long_chain_within_a_second(self):
        config = sample_disorder(57, seed=1, epsilon=0.05)
        for seed in range(10):
            initial = make_initial("random-bit", 57, seed=seed)
            start = time.perf_counter()
            evolve_fermion(config, initial, self.STEPS)
            self.assertLess(time.perf_counter() - start, 1.0)

    def test_values_read_back_unclipped(self):
        config = sample_disorder(6, seed=2, epsilon=0.05)
        initial = make_initial("random-bit", 6, seed=2)
        np.testing.assert_array_equal(
            evolve_fermion(config, initial, 20).values,
            evolve_covariance(covariance_from_bits(initial.bits), config, 20),
        )

    def test_rejects_coherent_errors(self):
        config = ChainConfig(3, 0.05, (0.5, 0.5), (0.1, 0.0, 0.0))
        with self.assertRaises(UnsupportedModelError):
            evolve_fermion(config, make_initial("polarized", 3), 5)


if __name__ == "__main__":
    unittest.main()
