# -*- coding: utf-8 -*-
""" Free-fermion simulation of the ideal Floquet chain

The chain of N qubits is extended by two frozen ancilla sites, a on the left
and b on the right (M = N + 2 sites, qubit i sits on site i + 1). The
Jordan-Wigner map uses X strings:

    g_2s   = (prod_{r<s} X_r) Z_s
    g_2s+1 = (prod_{r<s} X_r) Y_s

so that X_s = i g_2s g_2s+1 and Z_s Z_s+1 = i g_2s+1 g_2s+2 are both
quadratic. The state (|0,z,0> + |1,zbar,1>)/sqrt(2) is Gaussian, and since
the Floquet unitary commutes with the global flip, <Z_a Z_s> equals the
polarization <Z_s> of the product state |z>. That correlator is a Majorana
string whose expectation is the Pfaffian of a covariance sub-block. The
left strings of all qubits are nested leading blocks, and so are the right
strings once the mode pairs are taken in reverse order, so one Schur sweep
per side reads back the whole chain.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from pfapack.pfaffian import pfaffian

from dtc_floquet.chain_model import ChainConfig, InitialState
from dtc_floquet.errors import (
    CovarianceInvariantError,
    InvalidConfigError,
    UnsupportedModelError,
)
from dtc_floquet.panel import TimeSeriesPanel

logger = logging.getLogger(__name__)

COVARIANCE_TOLERANCE = 1e-9
READBACK_TOLERANCE = 1e-8
PIVOT_TOLERANCE = 1e-3


def n_modes(n_qubits: int) -> int:
    """Number of Majorana modes, 2 (N + 2)"""
    return 2 * (n_qubits + 2)


@dataclass
class MajoranaCovariance:
    """Gamma_ab = i <g_a g_b> on the ancilla-extended chain"""

    gamma: np.ndarray
    n_qubits: int

    def __post_init__(self):
        if self.gamma.shape != (n_modes(self.n_qubits),) * 2:
            raise InvalidConfigError(
                f"Covariance of shape {self.gamma.shape} for {self.n_qubits} qubits"
            )

    def conjugate(self, update: np.ndarray) -> "MajoranaCovariance":
        return MajoranaCovariance(update @ self.gamma @ update.T, self.n_qubits)

    def polarization(self, qubit: int) -> float:
        """<Z_qubit> from the shorter of the two ancilla strings"""
        s = qubit + 1
        if s <= self.n_qubits + 1 - s:
            block = self.gamma[1 : 2 * s + 1, 1 : 2 * s + 1]
        else:
            block = self.gamma[2 * s + 1 : 2 * self.n_qubits + 3, 2 * s + 1 : 2 * self.n_qubits + 3]
        # Pfaffian routines expect an exactly skew input
        return float(np.real(pfaffian(0.5 * (block - block.T))))

    def polarizations(self) -> np.ndarray:
        """<Z_i> of every qubit from one nested sweep per side"""
        n = self.n_qubits
        inner = self.gamma[1 : 2 * n + 3, 1 : 2 * n + 3]
        inner = 0.5 * (inner - inner.T)
        n_left = (n + 1) // 2
        values = np.empty(n)
        values[:n_left] = nested_pfaffians(inner, n_left)
        if n > n_left:
            order = np.concatenate([[2 * j, 2 * j + 1] for j in range(n, -1, -1)])
            right = nested_pfaffians(inner[np.ix_(order, order)], n - n_left)
            values[n_left:] = right[::-1]
        return values


def nested_pfaffians(matrix: np.ndarray, count: int, tol: float = PIVOT_TOLERANCE) -> np.ndarray:
    """Pfaffians of the leading 2k x 2k blocks of a skew matrix, k = 1..count

    Each level eliminates one mode pair by a Schur complement, so the k-th
    value is the running product of the pivots. Once that product drops
    below tol the complement is no longer well conditioned and the remaining
    levels are computed directly.
    """
    work = np.array(matrix, dtype=float)
    values = np.zeros(count)
    current = 1.0
    for level in range(count):
        pivot = work[0, 1]
        current *= pivot
        values[level] = current
        if abs(current) < tol:
            for rest in range(level + 1, count):
                size = 2 * rest + 2
                values[rest] = float(np.real(pfaffian(matrix[:size, :size])))
            break
        if level + 1 < count:
            upper, lower = work[0, 2:], work[1, 2:]
            work = work[2:, 2:] + (np.outer(lower, upper) - np.outer(upper, lower)) / pivot
    return values


def check_covariance(gamma: np.ndarray, tol: float = COVARIANCE_TOLERANCE) -> Tuple[float, float]:
    """Antisymmetry residual and largest singular value of a covariance

    Raises:
        CovarianceInvariantError: if G is not skew within tol or its largest
            singular value exceeds 1 + tol

    Returns:
        Tuple[float, float]: (max |G + G^T|, max singular value)
    """
    asymmetry = float(np.max(np.abs(gamma + gamma.T)))
    bound = float(np.linalg.norm(gamma, ord=2))
    if asymmetry > tol or bound > 1 + tol:
        raise CovarianceInvariantError(f"asymmetry={asymmetry:.2e}, norm={bound:.12f}")
    return asymmetry, bound


def covariance_from_bits(bits: Sequence[int]) -> MajoranaCovariance:
    """Covariance of the product state |bits> embedded between the ancillas"""
    n_qubits = len(bits)
    z = np.concatenate(([1.0], 1.0 - 2.0 * np.asarray(bits, dtype=float), [1.0]))
    gamma = np.zeros((n_modes(n_qubits),) * 2)
    for s in range(n_qubits + 1):
        gamma[2 * s + 1, 2 * s + 2] = z[s] * z[s + 1]
    gamma[0, -1] = 1.0
    return MajoranaCovariance(gamma - gamma.T, n_qubits)


def _rotation(size: int, pairs, angles, sign: float) -> np.ndarray:
    update = np.eye(size)
    for (a, b), angle in zip(pairs, angles):
        c, s = np.cos(angle), np.sin(angle)
        update[a, a] = c
        update[b, b] = c
        update[a, b] = -sign * s
        update[b, a] = sign * s
    return update


def flip_layer_update(epsilon: float, n_qubits: int) -> np.ndarray:
    """Orthogonal action of exp(i pi/2 (1 - epsilon) sum X) on the modes"""
    pairs = [(2 * s, 2 * s + 1) for s in range(1, n_qubits + 1)]
    angle = np.pi * (1.0 - epsilon)
    return _rotation(n_modes(n_qubits), pairs, [angle] * n_qubits, sign=1.0)


def ising_layer_update(couplings: Sequence[float], n_qubits: int) -> np.ndarray:
    """Orthogonal action of exp(-i sum J_i Z_i Z_i+1), angles 2 J_i"""
    if len(couplings) != n_qubits - 1:
        raise InvalidConfigError(
            f"{len(couplings)} couplings for an open chain of {n_qubits} qubits"
        )
    pairs = [(2 * s + 1, 2 * s + 2) for s in range(1, n_qubits)]
    angles = [2.0 * j for j in couplings]
    return _rotation(n_modes(n_qubits), pairs, angles, sign=-1.0)


def step_update(config: ChainConfig) -> np.ndarray:
    """Flip layer followed by the Ising layer"""
    if not config.is_ideal:
        raise UnsupportedModelError(
            "coherent error terms are interacting; use the statevector engine"
        )
    return ising_layer_update(config.couplings, config.n_qubits) @ flip_layer_update(
        config.epsilon, config.n_qubits
    )


def evolve_covariance(
    covariance: MajoranaCovariance, config: ChainConfig, steps: int
) -> np.ndarray:
    """<Z_i(t)> for t = 0..steps as an (n_qubits, steps + 1) array

    Raises:
        CovarianceInvariantError: if a step leaves the covariance unphysical
            or reads back a polarization outside [-1, 1]
    """
    if covariance.n_qubits != config.n_qubits:
        raise InvalidConfigError(
            f"Covariance on {covariance.n_qubits} qubits for a {config.n_qubits}-qubit chain"
        )
    update = step_update(config)
    series = [covariance.polarizations()]
    for step in range(1, steps + 1):
        covariance = covariance.conjugate(update)
        check_covariance(covariance.gamma)
        values = covariance.polarizations()
        overshoot = float(np.max(np.abs(values)))
        if overshoot > 1 + READBACK_TOLERANCE:
            raise CovarianceInvariantError(f"|<Z>| = {overshoot:.12f} read back at step {step}")
        series.append(values)
    return np.stack(series, axis=1)


def evolve_fermion(config: ChainConfig, initial: InitialState, steps: int) -> TimeSeriesPanel:
    """Noiseless panel of the ideal model from the covariance evolution

    Args:
        config (ChainConfig): ideal model (no coherent errors)
        initial (InitialState): product initial state
        steps (int): number of Floquet periods

    Raises:
        UnsupportedModelError: if config carries coherent error terms

    Returns:
        TimeSeriesPanel: raw noiseless panel
    """
    if initial.n_qubits != config.n_qubits:
        raise InvalidConfigError(
            f"Initial state on {initial.n_qubits} qubits for a {config.n_qubits}-qubit chain"
        )
    logger.info("Free-fermion evolution of %d qubits over %d steps", config.n_qubits, steps)
    values = evolve_covariance(covariance_from_bits(initial.bits), config, steps)
    return TimeSeriesPanel(
        values=values,
        initial_bits=initial.bits,
        metadata={"engine": "fermion", "steps": steps},
    )
