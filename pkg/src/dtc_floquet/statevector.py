# -*- coding: utf-8 -*-
""" Dense statevector simulation of the Floquet period U = U3 U2 U1

Qubit 0 is the most significant bit of the amplitude index and bit 0 is Z=+1.
"""
import logging
import os
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from dtc_floquet.chain_model import ChainConfig, InitialState
from dtc_floquet.errors import InvalidConfigError, UnsupportedSizeError
from dtc_floquet.panel import TimeSeriesPanel

logger = logging.getLogger(__name__)

# A pure state is the flat vector of its 2**n complex amplitudes
PureState = np.ndarray

NORM_TOLERANCE = 1e-10

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SINGLE_QUBIT_PAULIS = {"X": _PAULI_X, "Y": _PAULI_Y, "Z": _PAULI_Z}


def max_dense_qubits() -> int:
    return int(os.getenv("DTC_FLOQUET_MAX_DENSE_QUBITS", "22"))


def n_qubits_of(state: PureState) -> int:
    n_qubits = int(state.size).bit_length() - 1
    if state.ndim != 1 or 2**n_qubits != state.size:
        raise InvalidConfigError(f"State of size {state.size} is not a qubit register")
    return n_qubits


def check_size(n_qubits: int) -> None:
    cap = max_dense_qubits()
    if n_qubits > cap:
        raise UnsupportedSizeError(
            f"{n_qubits} qubits exceed the dense limit of {cap} "
            "(set DTC_FLOQUET_MAX_DENSE_QUBITS or use the fermion engine)"
        )


def product_state(bits: Sequence[int]) -> PureState:
    """Computational-basis state |b_0 b_1 ... b_N-1>"""
    check_size(len(bits))
    index = int("".join(str(int(b)) for b in bits), 2) if len(bits) else 0
    state = np.zeros(2 ** len(bits), dtype=complex)
    state[index] = 1.0
    return state


def apply_single_qubit(state: PureState, qubit: int, gate: np.ndarray) -> PureState:
    """Apply a 2x2 gate to one qubit of the register"""
    n_qubits = n_qubits_of(state)
    tensor = state.reshape(2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    return np.einsum("ab,ibj->iaj", gate, tensor).reshape(-1)


def flip_gate(epsilon: float) -> np.ndarray:
    """exp(i pi/2 (1 - epsilon) X) on a single qubit"""
    theta = np.pi / 2 * (1.0 - epsilon)
    return np.cos(theta) * np.eye(2, dtype=complex) + 1j * np.sin(theta) * _PAULI_X


def apply_flip(state: PureState, epsilon: float) -> PureState:
    gate = flip_gate(epsilon)
    for qubit in range(n_qubits_of(state)):
        state = apply_single_qubit(state, qubit, gate)
    return state


def z_signs_table(n_qubits: int) -> np.ndarray:
    """z[index, qubit] = +-1 eigenvalue of Z_qubit on each basis state"""
    indices = np.arange(2**n_qubits)[:, None]
    shifts = n_qubits - 1 - np.arange(n_qubits)[None, :]
    return 1.0 - 2.0 * ((indices >> shifts) & 1)


def ising_energies(couplings: Sequence[float], n_qubits: int) -> np.ndarray:
    """sum_i J_i z_i z_i+1 on every basis state"""
    if len(couplings) != n_qubits - 1:
        raise InvalidConfigError(
            f"{len(couplings)} couplings for an open chain of {n_qubits} qubits"
        )
    if n_qubits < 2:
        return np.zeros(2**n_qubits)
    z = z_signs_table(n_qubits)
    return (z[:, :-1] * z[:, 1:]) @ np.asarray(couplings, dtype=float)


def apply_ising(state: PureState, couplings: Sequence[float]) -> PureState:
    energies = ising_energies(couplings, n_qubits_of(state))
    return np.exp(-1j * energies) * state


def _diagonal_error_energies(config_fields, terms, n_qubits: int) -> np.ndarray:
    energies = z_signs_table(n_qubits) @ np.asarray(config_fields, dtype=float)
    for term, coeff in terms:
        energies = energies + coeff * term.diagonal()
    return energies


def error_hamiltonian(z_fields: Sequence[float], extra_pauli_terms, n_qubits: int):
    """Sparse H_add = sum_i b_i Z_i + sum_k c_k P_k"""
    hamiltonian = sparse.diags(
        z_signs_table(n_qubits) @ np.asarray(z_fields, dtype=float)
    ).astype(complex)
    for term, coeff in extra_pauli_terms:
        if coeff:
            hamiltonian = hamiltonian + coeff * term.sparse_matrix()
    return hamiltonian.tocsr()


def apply_coherent_errors(
    state: PureState, z_fields: Sequence[float], extra_pauli_terms=()
) -> PureState:
    """Apply exp(-i H_add); exact phases for Z-type terms, Krylov action otherwise"""
    n_qubits = n_qubits_of(state)
    if len(z_fields) != n_qubits:
        raise InvalidConfigError(f"{len(z_fields)} z fields for {n_qubits} qubits")
    terms = [(term, coeff) for term, coeff in extra_pauli_terms if coeff]
    if not any(z_fields) and not terms:
        return state
    if all(term.is_diagonal for term, _ in terms):
        return np.exp(-1j * _diagonal_error_energies(z_fields, terms, n_qubits)) * state
    return expm_multiply(-1j * error_hamiltonian(z_fields, terms, n_qubits), state)


class FloquetPropagator:
    """One Floquet period with the diagonal layers precomputed for a config"""

    def __init__(self, config: ChainConfig):
        check_size(config.n_qubits)
        self._config = config
        self._flip = flip_gate(config.epsilon)
        self._ising_phase = np.exp(-1j * ising_energies(config.couplings, config.n_qubits))
        terms = [(t, c) for t, c in config.extra_pauli_terms if c]
        self._error_phase: Optional[np.ndarray] = None
        self._error_generator = None
        if all(t.is_diagonal for t, _ in terms):
            if any(config.z_fields) or terms:
                self._error_phase = np.exp(
                    -1j * _diagonal_error_energies(config.z_fields, terms, config.n_qubits)
                )
        else:
            self._error_generator = -1j * error_hamiltonian(
                config.z_fields, terms, config.n_qubits
            )

    @property
    def config(self) -> ChainConfig:
        return self._config

    def __call__(self, state: PureState) -> PureState:
        if state.size != 2**self._config.n_qubits:
            raise InvalidConfigError(
                f"State of size {state.size} does not match {self._config.n_qubits} qubits"
            )
        for qubit in range(self._config.n_qubits):
            state = apply_single_qubit(state, qubit, self._flip)
        state = self._ising_phase * state
        if self._error_phase is not None:
            state = self._error_phase * state
        elif self._error_generator is not None:
            state = expm_multiply(self._error_generator, state)
        return state


@lru_cache(maxsize=32)
def propagator(config: ChainConfig) -> FloquetPropagator:
    return FloquetPropagator(config)


def floquet_step(state: PureState, config: ChainConfig) -> PureState:
    """Flip, then Ising, then the coherent error unitary"""
    return propagator(config)(state)


def exact_polarizations(state: PureState) -> np.ndarray:
    """<Z_i> for every qubit from the amplitudes"""
    n_qubits = n_qubits_of(state)
    probabilities = np.abs(state) ** 2
    polarizations = np.empty(n_qubits)
    for qubit in range(n_qubits):
        p0, p1 = probabilities.reshape(2**qubit, 2, -1).sum(axis=(0, 2))
        polarizations[qubit] = p0 - p1
    return polarizations


def floquet_unitary(config: ChainConfig) -> np.ndarray:
    """Dense matrix of one Floquet period, built column by column"""
    dimension = 2**config.n_qubits
    step = propagator(config)
    columns = []
    for index in range(dimension):
        basis = np.zeros(dimension, dtype=complex)
        basis[index] = 1.0
        columns.append(step(basis))
    return np.stack(columns, axis=1)


def evolve_statevector(
    config: ChainConfig, initial: InitialState, steps: int
) -> TimeSeriesPanel:
    """Exact <Z_i(t)> for t = 0..steps

    Args:
        config (ChainConfig): the Floquet model
        initial (InitialState): product initial state
        steps (int): number of Floquet periods

    Raises:
        InvalidConfigError: if the initial state does not match the chain
        UnsupportedSizeError: if the chain exceeds the dense limit

    Returns:
        TimeSeriesPanel: raw noiseless panel
    """
    if initial.n_qubits != config.n_qubits:
        raise InvalidConfigError(
            f"Initial state on {initial.n_qubits} qubits for a {config.n_qubits}-qubit chain"
        )
    step = propagator(config)
    state = product_state(initial.bits)
    series = [exact_polarizations(state)]
    for t in range(steps):
        state = step(state)
        series.append(exact_polarizations(state))
        logger.debug("Step %d norm drift %.3e", t + 1, abs(np.vdot(state, state).real - 1))
    drift = abs(np.vdot(state, state).real - 1)
    if drift > NORM_TOLERANCE:
        logger.warning("Norm drift %.3e after %d steps", drift, steps)
    return TimeSeriesPanel(
        values=np.stack(series, axis=1),
        initial_bits=initial.bits,
        metadata={"engine": "statevector", "steps": steps},
    )
