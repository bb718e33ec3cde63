# -*- coding: utf-8 -*-
""" Process tomography of small Floquet steps and post-gate error generators

Channels are represented by Pauli transfer matrices R_ab = tr(P_a L(P_b)) / 2^n
over the Pauli basis ordered by PauliString.index. The measured step G is
decomposed as G = E H with H the ideal step, and the generator
L = log(G H^-1) is projected onto the Hamiltonian directions -i[P_a, .].
"""
import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import linalg

from dtc_floquet.chain_model import ChainConfig, PauliString, derive_rng
from dtc_floquet.errors import (
    InvalidConfigError,
    LogBranchError,
    UnderdeterminedSystemError,
    UnsupportedSizeError,
)
from dtc_floquet.noise import NoiseModel, default_workers, depolarize_density, readout_confusion
from dtc_floquet.statevector import floquet_unitary

logger = logging.getLogger(__name__)

MAX_TOMOGRAPHY_QUBITS = 3
BRANCH_TOLERANCE = 1e-9

# Pauli vectors (I, X, Y, Z) of the prepared single-qubit states
_PREPARATIONS = {
    "0": np.array([1.0, 0.0, 0.0, 1.0]),
    "1": np.array([1.0, 0.0, 0.0, -1.0]),
    "+": np.array([1.0, 1.0, 0.0, 0.0]),
    "+i": np.array([1.0, 0.0, 1.0, 0.0]),
}
_MEASUREMENT_BASES = "XYZ"

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# rotations mapping the +1 eigenstate of each basis onto |0>
_BASIS_ROTATIONS = {
    "X": _HADAMARD,
    "Y": _HADAMARD @ np.diag([1, -1j]),
    "Z": np.eye(2, dtype=complex),
}


def _check_qubits(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_TOMOGRAPHY_QUBITS:
        raise UnsupportedSizeError(
            f"process tomography supports 1 to {MAX_TOMOGRAPHY_QUBITS} qubits, got {n_qubits}"
        )


@dataclass
class ProcessTransferMatrix:
    entries: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if self.entries.shape != (4**self.n_qubits,) * 2:
            raise InvalidConfigError(
                f"PTM of shape {self.entries.shape} for {self.n_qubits} qubits"
            )

    def trace_preservation_error(self) -> float:
        expected = np.zeros(self.entries.shape[0])
        expected[0] = 1.0
        return float(np.max(np.abs(self.entries[0] - expected)))

    def orthogonality_error(self) -> float:
        return float(np.max(np.abs(self.entries @ self.entries.T - np.eye(self.entries.shape[0]))))


@dataclass
class ErrorGenerator:
    l_matrix: np.ndarray
    hamiltonian_coeffs: Dict[PauliString, float]
    dissipative_residual_norm: float


@lru_cache(maxsize=None)
def pauli_basis(n_qubits: int) -> List[PauliString]:
    return [PauliString.from_index(index, n_qubits) for index in range(4**n_qubits)]


@lru_cache(maxsize=None)
def _basis_matrices(n_qubits: int) -> np.ndarray:
    return np.stack([p.matrix() for p in pauli_basis(n_qubits)])


def ptm_of_channel(channel: Callable[[np.ndarray], np.ndarray], n_qubits: int) -> ProcessTransferMatrix:
    """PTM of a linear map acting on 2^n x 2^n operators"""
    _check_qubits(n_qubits)
    basis = _basis_matrices(n_qubits)
    images = np.stack([channel(p) for p in basis])
    entries = np.einsum("aij,bji->ab", basis, images).real / 2**n_qubits
    return ProcessTransferMatrix(entries, n_qubits)


def ptm_of_unitary(unitary: Union[np.ndarray, ChainConfig], n_qubits: Optional[int] = None) -> ProcessTransferMatrix:
    """Exact PTM of a unitary or of one Floquet step of a chain

    Raises:
        UnsupportedSizeError: above three qubits
    """
    if isinstance(unitary, ChainConfig):
        _check_qubits(unitary.n_qubits)
        n_qubits = unitary.n_qubits
        unitary = floquet_unitary(unitary)
    n_qubits = n_qubits or int(unitary.shape[0]).bit_length() - 1
    _check_qubits(n_qubits)
    basis = _basis_matrices(n_qubits)
    images = unitary @ basis @ unitary.conj().T
    entries = np.einsum("aij,bji->ab", basis, images).real / 2**n_qubits
    return ProcessTransferMatrix(entries, n_qubits)


@lru_cache(maxsize=None)
def hamiltonian_generators(n_qubits: int) -> np.ndarray:
    """PTMs S_a of rho -> -i[P_a, rho] for every non-identity Pauli string

    The S_a are mutually orthogonal under the trace inner product.
    """
    _check_qubits(n_qubits)
    basis = _basis_matrices(n_qubits)
    generators = []
    for pauli in basis[1:]:
        images = -1j * (pauli @ basis - basis @ pauli)
        generators.append(np.einsum("aij,bji->ab", basis, images).real / 2**n_qubits)
    generators = np.stack(generators)
    gram = np.einsum("aij,bij->ab", generators, generators)
    off_diagonal = gram - np.diag(np.diag(gram))
    if np.max(np.abs(off_diagonal)) > 1e-9:
        raise InvalidConfigError("Hamiltonian generator basis is not orthogonal")
    return generators


def hamiltonian_projection(l_matrix: np.ndarray, n_qubits: int):
    """Coefficients h_a of L along -i[P_a, .] and the norm of the remainder"""
    generators = hamiltonian_generators(n_qubits)
    norms = np.einsum("aij,aij->a", generators, generators)
    coeffs = np.einsum("aij,ij->a", generators, l_matrix) / norms
    residual = l_matrix - np.einsum("a,aij->ij", coeffs, generators)
    labels = pauli_basis(n_qubits)[1:]
    return dict(zip(labels, (float(c) for c in coeffs))), float(np.linalg.norm(residual))


def error_generator(g: ProcessTransferMatrix, h: ProcessTransferMatrix) -> ErrorGenerator:
    """Post-gate generator L = log(G H^-1) and its Hamiltonian part

    Raises:
        LogBranchError: if G H^-1 has an eigenvalue on the negative real axis
    """
    if g.n_qubits != h.n_qubits:
        raise InvalidConfigError("G and H act on different registers")
    error_map = g.entries @ np.linalg.inv(h.entries)
    eigenvalues = np.linalg.eigvals(error_map)
    on_cut = (np.abs(eigenvalues.imag) < BRANCH_TOLERANCE) & (eigenvalues.real <= 0)
    if on_cut.any():
        raise LogBranchError(f"eigenvalues {eigenvalues[on_cut]} on the branch cut")
    l_matrix = linalg.logm(error_map)
    if np.max(np.abs(np.imag(l_matrix))) > 1e-8:
        logger.warning("Matrix logarithm has an imaginary part, keeping the real part")
    l_matrix = np.real(l_matrix)
    coeffs, residual = hamiltonian_projection(l_matrix, g.n_qubits)
    return ErrorGenerator(l_matrix, coeffs, residual)


def coefficient_table(generator: ErrorGenerator, min_abs: float = 0.0) -> pd.DataFrame:
    """Hamiltonian coefficients as (pauli_string, coefficient), Pauli-index order"""
    rows = [
        {"pauli_string": str(label), "coefficient": coeff}
        for label, coeff in sorted(generator.hamiltonian_coeffs.items(), key=lambda kv: kv[0].index)
        if abs(coeff) >= min_abs
    ]
    return pd.DataFrame(rows, columns=["pauli_string", "coefficient"])


def _product_vector(vectors) -> np.ndarray:
    return reduce(np.kron, vectors)


def _preparation_labels(n_qubits: int):
    return list(itertools.product(_PREPARATIONS, repeat=n_qubits))


def _measurement_settings(n_qubits: int):
    return list(itertools.product(_MEASUREMENT_BASES, repeat=n_qubits))


def preparation_matrix(n_qubits: int) -> np.ndarray:
    """Pauli vectors of the 4^n prepared states as columns"""
    return np.stack(
        [_product_vector([_PREPARATIONS[p] for p in labels]) for labels in _preparation_labels(n_qubits)],
        axis=1,
    )


def effect_matrix(n_qubits: int) -> np.ndarray:
    """Rows are effects e_a = tr(P_a E) / 2^n for every basis and outcome"""
    rows = []
    for bases in _measurement_settings(n_qubits):
        for bits in itertools.product((0, 1), repeat=n_qubits):
            single = []
            for basis, bit in zip(bases, bits):
                vector = np.array([0.5, 0.0, 0.0, 0.0])
                vector[1 + _MEASUREMENT_BASES.index(basis)] = 0.5 * (1 - 2 * bit)
                single.append(vector)
            rows.append(_product_vector(single))
    return np.stack(rows)


def _density(labels) -> np.ndarray:
    n_qubits = len(labels)
    vector = _product_vector([_PREPARATIONS[p] for p in labels])
    return np.einsum("a,aij->ij", vector, _basis_matrices(n_qubits)) / 2**n_qubits


def _outcome_probabilities(rho: np.ndarray, bases, confusion) -> np.ndarray:
    rotation = reduce(np.kron, (_BASIS_ROTATIONS[b] for b in bases))
    probabilities = np.clip(np.real(np.diag(rotation @ rho @ rotation.conj().T)), 0.0, None)
    if confusion is not None:
        tensor = probabilities.reshape((2,) * len(bases))
        for qubit, matrix in enumerate(confusion):
            tensor = np.moveaxis(np.tensordot(matrix, tensor, axes=([1], [qubit])), 0, qubit)
        probabilities = tensor.reshape(-1)
    return probabilities / probabilities.sum()


def _preparation_column(
    unitary: np.ndarray,
    labels,
    noise: Optional[NoiseModel],
    shots: Optional[int],
    rng: np.random.Generator,
) -> np.ndarray:
    rho = unitary @ _density(labels) @ unitary.conj().T
    confusion = None
    if noise is not None:
        rho = depolarize_density(rho, noise.depol_rate)
        confusion = readout_confusion(noise)
    column = []
    for bases in _measurement_settings(len(labels)):
        probabilities = _outcome_probabilities(rho, bases, confusion)
        if shots is not None:
            probabilities = rng.multinomial(shots, probabilities) / shots
        column.append(probabilities)
    return np.concatenate(column)


def tomographic_reconstruction(
    config: Union[ChainConfig, np.ndarray],
    noise: Optional[NoiseModel] = None,
    shots_per_setting: Optional[int] = None,
    seed: int = 0,
    workers: Optional[int] = None,
) -> ProcessTransferMatrix:
    """Linear-inversion estimate of the PTM of one noisy Floquet step

    Every product preparation from {|0>, |1>, |+>, |+i>} is evolved, passed
    through the per-qubit depolarizing channel and measured in all 3^n Pauli
    bases with readout errors. Frequencies are exact when shots_per_setting
    is None.

    Args:
        config (ChainConfig or np.ndarray): chain whose step is measured, or
            a unitary
        noise (NoiseModel, optional): depolarization and readout errors
        shots_per_setting (int, optional): shots per preparation and basis
        seed (int, optional): root seed of the shot sampling. Defaults to 0.
        workers (int, optional): joblib workers. Defaults to DTC_FLOQUET_WORKERS.

    Raises:
        UnderdeterminedSystemError: if the settings are not informationally complete
        UnsupportedSizeError: above three qubits

    Returns:
        ProcessTransferMatrix: estimate G, not projected onto physical maps
    """
    if isinstance(config, ChainConfig):
        _check_qubits(config.n_qubits)
        unitary = floquet_unitary(config)
    else:
        unitary = np.asarray(config, dtype=complex)
    n_qubits = int(unitary.shape[0]).bit_length() - 1
    _check_qubits(n_qubits)
    if noise is not None and noise.n_qubits != n_qubits:
        raise InvalidConfigError(f"Noise model for {noise.n_qubits} qubits, step on {n_qubits}")
    if shots_per_setting is not None and shots_per_setting < 1:
        raise InvalidConfigError(f"shots_per_setting={shots_per_setting} must be positive")

    preparations = preparation_matrix(n_qubits)
    effects = effect_matrix(n_qubits)
    dimension = 4**n_qubits
    if np.linalg.matrix_rank(preparations) < dimension or np.linalg.matrix_rank(effects) < dimension:
        raise UnderdeterminedSystemError("preparations or measurements do not span the Pauli basis")

    workers = default_workers() if workers is None else workers
    labels = _preparation_labels(n_qubits)
    columns = Parallel(n_jobs=workers)(
        delayed(_preparation_column)(
            unitary, prep, noise, shots_per_setting, derive_rng(seed, "tomography", index)
        )
        for index, prep in enumerate(labels)
    )
    frequencies = np.stack(columns, axis=1)
    logger.info(
        "Tomography of %d qubits: %d preparations x %d outcomes",
        n_qubits, len(labels), frequencies.shape[0],
    )
    entries = np.linalg.pinv(effects) @ frequencies @ np.linalg.pinv(preparations)
    return ProcessTransferMatrix(entries, n_qubits)
