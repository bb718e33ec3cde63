# -*- coding: utf-8 -*-
""" Hardware-style noise: readout flips, stochastic Pauli trajectories and shots
"""
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from dtc_floquet.chain_model import ChainConfig, InitialState, derive_rng
from dtc_floquet.errors import InvalidConfigError
from dtc_floquet.panel import TimeSeriesPanel
from dtc_floquet.statevector import (
    SINGLE_QUBIT_PAULIS,
    PureState,
    apply_single_qubit,
    check_size,
    exact_polarizations,
    n_qubits_of,
    product_state,
    propagator,
)

logger = logging.getLogger(__name__)

DEFAULT_SHOTS = 32768
DEFAULT_STEPS = 50
# (1 - 4p/3)**50 ~ 0.3: the echo decays to about 0.3 by the last step
DEFAULT_DEPOL_RATE = 0.018
DEFAULT_READOUT_ERROR = 0.03
DEFAULT_TRAJECTORIES = 64

_PAULI_ORDER = "XYZ"


def default_workers() -> int:
    return int(os.getenv("DTC_FLOQUET_WORKERS", "1"))


@dataclass(frozen=True)
class NoiseModel:
    """Per-qubit readout flip probabilities, depolarization rates and shot budget"""

    eta0: Tuple[float, ...]
    eta1: Tuple[float, ...]
    depol_rate: Tuple[float, ...]
    shots: int = DEFAULT_SHOTS

    def __post_init__(self):
        for name in ("eta0", "eta1", "depol_rate"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not len(self.eta0) == len(self.eta1) == len(self.depol_rate):
            raise InvalidConfigError("eta0, eta1 and depol_rate must have one entry per qubit")
        if any(not 0.0 <= v < 0.5 for v in self.eta0 + self.eta1):
            raise InvalidConfigError("Readout flip probabilities must lie in [0, 0.5)")
        if any(not 0.0 <= v < 1.0 for v in self.depol_rate):
            raise InvalidConfigError("Depolarization rates must lie in [0, 1)")
        if int(self.shots) < 1:
            raise InvalidConfigError(f"shots={self.shots} must be positive")

    @classmethod
    def uniform(
        cls,
        n_qubits: int,
        eta0: float = DEFAULT_READOUT_ERROR,
        eta1: float = DEFAULT_READOUT_ERROR,
        depol_rate: float = DEFAULT_DEPOL_RATE,
        shots: int = DEFAULT_SHOTS,
    ) -> "NoiseModel":
        return cls(
            eta0=(eta0,) * n_qubits,
            eta1=(eta1,) * n_qubits,
            depol_rate=(depol_rate,) * n_qubits,
            shots=shots,
        )

    @classmethod
    def noiseless(cls, n_qubits: int, shots: int = DEFAULT_SHOTS) -> "NoiseModel":
        return cls.uniform(n_qubits, 0.0, 0.0, 0.0, shots)

    @property
    def n_qubits(self) -> int:
        return len(self.eta0)

    @property
    def eta_bar(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.eta0) + np.asarray(self.eta1))

    @property
    def delta(self) -> np.ndarray:
        return np.asarray(self.eta0) - np.asarray(self.eta1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eta0": list(self.eta0),
            "eta1": list(self.eta1),
            "depol_rate": list(self.depol_rate),
            "shots": self.shots,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NoiseModel":
        try:
            return cls(
                eta0=data["eta0"],
                eta1=data["eta1"],
                depol_rate=data["depol_rate"],
                shots=int(data.get("shots", DEFAULT_SHOTS)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfigError(f"Noise document: {exc!r}") from exc


@dataclass
class ShotPanel:
    """Per-qubit tallies of measured 1s, ones[qubit, t], out of shots"""

    ones: np.ndarray
    shots: int

    @property
    def zeros(self) -> np.ndarray:
        return self.shots - self.ones

    def expectations(self) -> np.ndarray:
        """Estimator <Z_i> = (n0 - n1) / shots"""
        return (self.zeros - self.ones) / self.shots

    def __add__(self, other: "ShotPanel") -> "ShotPanel":
        return ShotPanel(self.ones + other.ones, self.shots + other.shots)


def readout_confusion(noise: NoiseModel) -> List[np.ndarray]:
    """Per-qubit assignment matrices A[measured, true]"""
    return [
        np.array([[1.0 - e0, e1], [e0, 1.0 - e1]])
        for e0, e1 in zip(noise.eta0, noise.eta1)
    ]


def apply_readout_error(
    true_bits: np.ndarray, noise: NoiseModel, rng: np.random.Generator
) -> np.ndarray:
    """Independent flips 0->1 with eta0 and 1->0 with eta1, bits[..., qubit]"""
    true_bits = np.asarray(true_bits, dtype=np.int8)
    flip_probability = np.where(true_bits == 0, noise.eta0, noise.eta1)
    flips = rng.random(true_bits.shape) < flip_probability
    return np.where(flips, 1 - true_bits, true_bits).astype(np.int8)


def trajectory_step(
    state: PureState, depol_rate: Sequence[float], rng: np.random.Generator
) -> PureState:
    """With probability depol_rate apply a uniformly chosen X, Y or Z per qubit"""
    n_qubits = n_qubits_of(state)
    hits = rng.random(n_qubits) < np.asarray(depol_rate)
    letters = rng.integers(0, 3, size=n_qubits)
    for qubit in np.flatnonzero(hits):
        state = apply_single_qubit(state, int(qubit), SINGLE_QUBIT_PAULIS[_PAULI_ORDER[letters[qubit]]])
    return state


def sample_bits(state: PureState, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Computational-basis samples as a (shots, n_qubits) bit array"""
    n_qubits = n_qubits_of(state)
    probabilities = np.abs(state) ** 2
    indices = rng.choice(probabilities.size, size=shots, p=probabilities / probabilities.sum())
    shifts = n_qubits - 1 - np.arange(n_qubits)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def sample_shots(
    state: PureState, noise: NoiseModel, rng: np.random.Generator, shots: Optional[int] = None
) -> ShotPanel:
    """Sample shots, corrupt them with readout errors and tally per qubit"""
    shots = noise.shots if shots is None else int(shots)
    if shots < 1:
        raise InvalidConfigError(f"shots={shots} must be positive")
    measured = apply_readout_error(sample_bits(state, shots, rng), noise, rng)
    return ShotPanel(ones=measured.sum(axis=0)[:, None].astype(np.int64), shots=shots)


def readout_expectation(polarizations: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Exact measured <Z> = z (1 - 2 eta_bar) - Delta"""
    eta_bar = noise.eta_bar.reshape(-1, *([1] * (np.ndim(polarizations) - 1)))
    delta = noise.delta.reshape(eta_bar.shape)
    return polarizations * (1.0 - 2.0 * eta_bar) - delta


def depolarize_density(rho: np.ndarray, rates: Sequence[float]) -> np.ndarray:
    """Exact per-qubit depolarizing channel (1 - p) rho + p/3 sum_P P rho P"""
    n_qubits = int(rho.shape[0]).bit_length() - 1
    for qubit, rate in enumerate(rates):
        if not rate:
            continue
        tensor = rho.reshape(2**qubit, 2, -1, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
        mixed = (1.0 - rate) * tensor
        for pauli in SINGLE_QUBIT_PAULIS.values():
            mixed = mixed + rate / 3.0 * np.einsum(
                "xy,iyjkzl,wz->ixjkwl", pauli, tensor, pauli.conj()
            )
        rho = mixed.reshape(rho.shape)
    return rho


def shot_split(shots: int, n_trajectories: int) -> List[int]:
    """Even split of the shot budget, the first shots % n trajectories get one extra"""
    base, extra = divmod(shots, n_trajectories)
    return [base + (k < extra) for k in range(n_trajectories)]


def _run_trajectory(
    config: ChainConfig,
    initial: InitialState,
    noise: NoiseModel,
    steps: int,
    shots: int,
    rng: np.random.Generator,
    sample: bool,
) -> np.ndarray:
    step = propagator(config)
    state = product_state(initial.bits)
    series = []
    for t in range(steps + 1):
        if t:
            state = trajectory_step(step(state), noise.depol_rate, rng)
        if sample:
            series.append(sample_shots(state, noise, rng, shots).ones[:, 0])
        else:
            series.append(exact_polarizations(state))
    return np.stack(series, axis=1)


def run_noisy_experiment(
    config: ChainConfig,
    initial: InitialState,
    noise: NoiseModel,
    steps: int = DEFAULT_STEPS,
    n_trajectories: int = DEFAULT_TRAJECTORIES,
    seed: int = 0,
    workers: Optional[int] = None,
    sample: bool = True,
) -> TimeSeriesPanel:
    """Raw panel from depolarizing trajectories and noisy shot sampling

    Noise is applied after every Floquet step; t = 0 is measured on the
    prepared state. Each trajectory draws its randomness from
    derive_rng(seed, "trajectory", k) so the result does not depend on the
    worker count.

    Args:
        config (ChainConfig): Floquet model
        initial (InitialState): product initial state
        noise (NoiseModel): readout, depolarization and shot budget
        steps (int, optional): Floquet periods. Defaults to 50.
        n_trajectories (int, optional): Monte-Carlo trajectories. Defaults to 64.
        seed (int, optional): root seed. Defaults to 0.
        workers (int, optional): joblib workers. Defaults to DTC_FLOQUET_WORKERS.
        sample (bool, optional): sample shots; when False the trajectory
            average is exact and readout enters analytically. Defaults to True.

    Raises:
        InvalidConfigError: on mismatched sizes or more trajectories than shots
        UnsupportedSizeError: if the chain exceeds the dense limit

    Returns:
        TimeSeriesPanel: raw panel of measured <Z_i(t)>
    """
    check_size(config.n_qubits)
    if not initial.n_qubits == config.n_qubits == noise.n_qubits:
        raise InvalidConfigError("Chain, initial state and noise model sizes differ")
    if n_trajectories < 1 or (sample and n_trajectories > noise.shots):
        raise InvalidConfigError(
            f"{n_trajectories} trajectories for a budget of {noise.shots} shots"
        )
    workers = default_workers() if workers is None else workers
    shots = shot_split(noise.shots, n_trajectories)
    logger.info(
        "Noisy run: %d qubits, %d steps, %d trajectories, %d shots, %d workers",
        config.n_qubits, steps, n_trajectories, noise.shots, workers,
    )
    results = Parallel(n_jobs=workers)(
        delayed(_run_trajectory)(
            config, initial, noise, steps, shots[k], derive_rng(seed, "trajectory", k), sample
        )
        for k in range(n_trajectories)
    )
    if sample:
        tallies = ShotPanel(ones=np.sum(results, axis=0), shots=noise.shots)
        values = tallies.expectations()
    else:
        values = readout_expectation(np.mean(results, axis=0), noise)
    return TimeSeriesPanel(
        values=values,
        initial_bits=initial.bits,
        metadata={
            "engine": "statevector",
            "steps": steps,
            "noise": noise.to_dict(),
            "n_trajectories": n_trajectories,
            "seed": seed,
        },
    )
