# -*- coding: utf-8 -*-
""" Test the dense statevector engine
"""
import os
import unittest
from unittest import mock

import numpy as np
from scipy.linalg import expm

from dtc_floquet.chain_model import ChainConfig, PauliString, make_initial, sample_disorder
from dtc_floquet.errors import InvalidConfigError, UnsupportedSizeError
from dtc_floquet.statevector import (
    SINGLE_QUBIT_PAULIS,
    apply_coherent_errors,
    apply_flip,
    apply_ising,
    evolve_statevector,
    exact_polarizations,
    floquet_step,
    floquet_unitary,
    product_state,
)


def _expectation(state, operator):
    return np.vdot(state, operator @ state).real


class Test_layers(unittest.TestCase):
    def test_product_state_ordering(self):
        state = product_state([0, 1])
        self.assertEqual(np.argmax(np.abs(state)), 1)
        np.testing.assert_array_equal(exact_polarizations(product_state([0, 1, 1, 0])), [1, -1, -1, 1])

    def test_perfect_flip(self):
        state = apply_flip(product_state([0, 0, 0]), 0.0)
        self.assertAlmostEqual(abs(state[-1]), 1.0, places=12)

    def test_trivial_flip(self):
        state = product_state([0, 1, 1])
        np.testing.assert_array_equal(apply_flip(state, 1.0), state)

    def test_imperfect_flip_rotation(self):
        epsilon = 0.05
        state = apply_flip(product_state([0]), epsilon)
        self.assertAlmostEqual(exact_polarizations(state)[0], np.cos(np.pi * (1 - epsilon)), places=12)

    def test_ising_phases(self):
        state = (product_state([0, 0]) + product_state([0, 1])) / np.sqrt(2)
        evolved = apply_ising(state, [np.pi / 4])
        self.assertAlmostEqual(evolved[0], np.exp(-1j * np.pi / 4) / np.sqrt(2), places=12)
        self.assertAlmostEqual(evolved[1], np.exp(1j * np.pi / 4) / np.sqrt(2), places=12)

    def test_ising_length_mismatch(self):
        with self.assertRaises(InvalidConfigError):
            apply_ising(product_state([0, 0, 0]), [0.5])

    def test_longitudinal_error(self):
        plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
        state = apply_coherent_errors(plus, [0.126])
        self.assertAlmostEqual(_expectation(state, SINGLE_QUBIT_PAULIS["X"]), np.cos(2 * 0.126), places=12)

    def test_non_commuting_errors(self):
        plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
        state = apply_coherent_errors(plus, [0.126], [(PauliString("X"), 0.118)])
        hamiltonian = 0.118 * SINGLE_QUBIT_PAULIS["X"] + 0.126 * SINGLE_QUBIT_PAULIS["Z"]
        np.testing.assert_allclose(state, expm(-1j * hamiltonian) @ plus, atol=1e-10)


class Test_evolution(unittest.TestCase):
    def test_norm_preserved(self):
        config = ChainConfig(
            6, 0.11, sample_disorder(6, seed=2).couplings, (0.05, -0.1, 0.0, 0.02, 0.1, -0.03),
            [(PauliString("IXZIII"), 0.04)],
        )
        state = product_state([0, 1, 1, 0, 1, 0])
        for _ in range(20):
            state = floquet_step(state, config)
        self.assertAlmostEqual(np.vdot(state, state).real, 1.0, places=10)

    def test_echo_without_flip_error(self):
        config = sample_disorder(6, seed=5, epsilon=0.0)
        initial = make_initial("random-bit", 6, seed=5)
        panel = evolve_statevector(config, initial, 20)
        signs = (-1.0) ** np.arange(21)
        np.testing.assert_allclose(panel.values * initial.z_signs[:, None], np.tile(signs, (6, 1)), atol=1e-12)
        self.assertEqual(panel.metadata["engine"], "statevector")

    def test_unitary(self):
        config = ChainConfig(3, 0.05, (0.4, 0.7), (0.1, 0.0, -0.05), [("IYX", 0.03)])
        unitary = floquet_unitary(config)
        np.testing.assert_allclose(unitary @ unitary.conj().T, np.eye(8), atol=1e-10)

    def test_mismatched_initial(self):
        with self.assertRaises(InvalidConfigError):
            evolve_statevector(sample_disorder(4, seed=0), make_initial("neel", 3), 5)

    def test_dense_limit(self):
        with mock.patch.dict(os.environ, {"DTC_FLOQUET_MAX_DENSE_QUBITS": "4"}):
            with self.assertRaises(UnsupportedSizeError):
                product_state([0] * 5)
            with self.assertRaises(UnsupportedSizeError):
                evolve_statevector(sample_disorder(5, seed=987), make_initial("neel", 5), 3)


if __name__ == "__main__":
    unittest.main()
