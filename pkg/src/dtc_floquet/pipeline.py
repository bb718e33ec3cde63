# -*- coding: utf-8 -*-
""" Simulation, optional noise and mitigation for one chain realization
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

from dtc_floquet.chain_model import (
    ChainConfig,
    InitialState,
    PauliString,
    derive_seed,
    make_initial,
    sample_coherent_errors,
    sample_disorder,
    uniform_disorder,
)
from dtc_floquet.errors import EngineCapabilityError, InvalidConfigError
from dtc_floquet.fermion import evolve_fermion
from dtc_floquet.mitigation import MitigationParams, MitigationReport, mitigate
from dtc_floquet.noise import DEFAULT_STEPS, DEFAULT_TRAJECTORIES, NoiseModel, run_noisy_experiment
from dtc_floquet.panel import Stage, TimeSeriesPanel
from dtc_floquet.statevector import evolve_statevector

logger = logging.getLogger(__name__)

ENGINES = ["auto", "statevector", "fermion"]


@dataclass(frozen=True)
class PipelineOptions:
    """How one realization is simulated and post-processed"""

    engine: str = "auto"
    steps: int = DEFAULT_STEPS
    noise: Optional[NoiseModel] = None
    n_trajectories: int = DEFAULT_TRAJECTORIES
    mitigation: MitigationParams = field(default_factory=MitigationParams)
    mitigate: bool = True
    calibrated_readout: bool = False
    sample: bool = True
    stage: Stage = Stage.FULLY_MITIGATED
    workers: Optional[int] = None

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise InvalidConfigError(f"Engine {self.engine} not in {ENGINES}")
        if self.steps < 1:
            raise InvalidConfigError(f"steps={self.steps} must be positive")
        object.__setattr__(self, "stage", Stage(self.stage))


@dataclass
class PipelineResult:
    raw: TimeSeriesPanel
    reference: Optional[TimeSeriesPanel] = None
    corrected: Optional[TimeSeriesPanel] = None
    mitigated: Optional[TimeSeriesPanel] = None
    report: Optional[MitigationReport] = None

    def panel(self, stage: Stage) -> TimeSeriesPanel:
        """Panel at the requested stage; noiseless runs only have the raw stage"""
        stage = Stage(stage)
        if stage == Stage.FULLY_MITIGATED and self.mitigated is not None:
            return self.mitigated
        if stage == Stage.MEASUREMENT_CORRECTED and self.corrected is not None:
            return self.corrected
        return self.raw


def select_engine(config: ChainConfig, options: PipelineOptions) -> str:
    if options.engine == "auto":
        return "fermion" if config.is_ideal and options.noise is None else "statevector"
    if options.engine == "fermion" and options.noise is not None:
        raise EngineCapabilityError("noisy trajectories need the statevector engine")
    return options.engine


def simulate(
    config: ChainConfig, initial: InitialState, options: PipelineOptions, seed: int = 0
) -> TimeSeriesPanel:
    """Raw panel of one run, noisy when options carry a noise model"""
    engine = select_engine(config, options)
    logger.debug("Engine %s for %d qubits at epsilon=%.4f", engine, config.n_qubits, config.epsilon)
    if options.noise is not None:
        return run_noisy_experiment(
            config,
            initial,
            options.noise,
            steps=options.steps,
            n_trajectories=options.n_trajectories,
            seed=seed,
            workers=options.workers,
            sample=options.sample,
        )
    if engine == "fermion":
        return evolve_fermion(config, initial, options.steps)
    return evolve_statevector(config, initial, options.steps)


def run_pipeline(
    config: ChainConfig, initial: InitialState, options: PipelineOptions, seed: int = 0
) -> PipelineResult:
    """Simulate the epsilon run and, with noise, its epsilon = 0 reference and mitigate

    Both runs draw from the same noise stream, so the depolarizing hits and
    shot noise of the reference track those of the run step by step.

    Args:
        config (ChainConfig): Floquet model
        initial (InitialState): product initial state
        options (PipelineOptions): engine, noise and mitigation settings
        seed (int, optional): root seed of the noise streams. Defaults to 0.

    Returns:
        PipelineResult: raw panel plus the mitigation stages when noise is on
    """
    noise_seed = derive_seed(seed, "noise")
    raw = simulate(config, initial, options, noise_seed)
    if options.noise is None or not options.mitigate:
        return PipelineResult(raw=raw)
    reference = simulate(config.with_epsilon(0.0), initial, options, noise_seed)
    calibration = options.noise if options.calibrated_readout else None
    mitigated, report = mitigate(raw, reference, options.mitigation, calibration)
    return PipelineResult(
        raw=raw,
        reference=reference,
        corrected=report.corrected,
        mitigated=mitigated,
        report=report,
    )


@dataclass(frozen=True)
class ChainTemplate:
    """Recipe for disorder realizations of a chain at any epsilon

    Every (epsilon index, realization) pair draws fresh couplings, error
    fields and initial bits unless pin_disorder is set, in which case the
    epsilon index does not enter the seeds.
    """

    n_qubits: int
    seed: int = 0
    coherent_amplitude: float = 0.0
    initial_kind: str = "random-bit"
    initial_bits: Optional[Tuple[int, ...]] = None
    disorder: str = "random"
    extra_pauli_terms: Tuple[Tuple[PauliString, float], ...] = ()
    pin_disorder: bool = False

    def __post_init__(self):
        if self.disorder not in ("random", "uniform"):
            raise InvalidConfigError(f"Disorder {self.disorder} not in ['random', 'uniform']")

    def realize(
        self, epsilon: float, point: int = 0, realization: int = 0
    ) -> Tuple[ChainConfig, InitialState]:
        tags = (realization,) if self.pin_disorder else (point, realization)
        disorder_seed = derive_seed(self.seed, "realization", *tags)
        if self.disorder == "uniform":
            config = uniform_disorder(self.n_qubits, epsilon=epsilon, seed=disorder_seed)
        else:
            config = sample_disorder(self.n_qubits, disorder_seed, epsilon)
        fields = sample_coherent_errors(self.n_qubits, self.coherent_amplitude, disorder_seed)
        config = replace(config, z_fields=fields, extra_pauli_terms=self.extra_pauli_terms)
        initial = make_initial(self.initial_kind, self.n_qubits, disorder_seed, self.initial_bits)
        return config, initial
