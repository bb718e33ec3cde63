# -*- coding: utf-8 -*-
""" Experiment specs, named presets and the run orchestration writing artifacts
"""
import copy
import hashlib
import json
import logging
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from dtc_floquet import __version__
from dtc_floquet.analysis import (
    autocorrelator,
    critical_epsilon,
    decay_constants,
    mean_amplitudes,
    qubit_average,
    spectrum,
    sweep_epsilon,
    variance_h,
)
from dtc_floquet.chain_model import (
    DEFAULT_COHERENT_AMPLITUDE,
    INITIAL_KINDS,
    ChainConfig,
    InitialState,
    PauliString,
    derive_seed,
    make_initial,
    tomography_reference_terms,
)
from dtc_floquet.errors import (
    EngineCapabilityError,
    InvalidConfigError,
    SpecValidationError,
    UndefinedVarianceError,
    UnknownPresetError,
)
from dtc_floquet.mitigation import MitigationParams
from dtc_floquet.noise import (
    DEFAULT_DEPOL_RATE,
    DEFAULT_READOUT_ERROR,
    DEFAULT_SHOTS,
    DEFAULT_STEPS,
    DEFAULT_TRAJECTORIES,
    NoiseModel,
)
from dtc_floquet.panel import Stage
from dtc_floquet.pipeline import ENGINES, ChainTemplate, PipelineOptions, run_pipeline
from dtc_floquet.tomography import (
    coefficient_table,
    error_generator,
    ptm_of_unitary,
    tomographic_reconstruction,
)

logger = logging.getLogger(__name__)

ANALYSES = ["autocorrelator", "spectrum", "variance_h", "decay", "sweep", "tomography"]
_LIBRARIES = ["numpy", "scipy", "pandas", "joblib", "pfapack"]


def _library_version(name: str) -> str:
    try:
        return version(name)
    except PackageNotFoundError:
        return "unknown"


def _per_qubit(value, n_qubits: int, name: str) -> Tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * n_qubits
    if len(value) != n_qubits:
        raise ValueError(f"{name} needs {n_qubits} entries")
    return tuple(float(v) for v in value)


class ExperimentSpec:
    """Validated experiment document

    Every field is checked by its setter; ExperimentSpec.from_dict collects
    all field errors before raising a SpecValidationError.
    """

    def __init__(self, data: Dict[str, Any]) -> None:
        field_errors: Dict[str, str] = {}
        for name in (
            "name", "seed", "steps", "engine", "model", "initial", "noise",
            "mitigation", "stage", "analyses", "sweep", "tomography", "output_dir",
        ):
            try:
                setattr(self, name, data.get(name))
            except (ValueError, TypeError, KeyError, AttributeError, InvalidConfigError) as err:
                field_errors[name] = str(err)
        unknown = set(data) - {
            "name", "seed", "steps", "engine", "model", "initial", "noise",
            "mitigation", "stage", "analyses", "sweep", "tomography", "output_dir",
        }
        for name in sorted(unknown):
            field_errors[name] = "unknown field"
        if not field_errors:
            field_errors.update(self._cross_field_errors())
        if field_errors:
            raise SpecValidationError(field_errors)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        if not isinstance(data, dict):
            raise SpecValidationError({"spec": "document must be a JSON object"})
        return cls(data)

    @classmethod
    def from_json(cls, filepath: Path) -> "ExperimentSpec":
        try:
            data = json.loads(Path(filepath).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise SpecValidationError({"spec": f"cannot read {filepath}: {err}"}) from err
        return cls.from_dict(data)

    @property
    def name(self) -> str:
        return self._name

    @name.setter
    def name(self, value):
        self._name = str(value or "experiment")

    @property
    def seed(self) -> int:
        return self._seed

    @seed.setter
    def seed(self, value):
        value = 0 if value is None else value
        if not isinstance(value, int) or value < 0:
            raise ValueError("seed must be a non-negative integer")
        self._seed = value

    @property
    def steps(self) -> int:
        return self._steps

    @steps.setter
    def steps(self, value):
        value = DEFAULT_STEPS if value is None else value
        if not isinstance(value, int) or value < 1:
            raise ValueError("steps must be a positive integer")
        self._steps = value

    @property
    def engine(self) -> str:
        return self._engine

    @engine.setter
    def engine(self, value):
        value = value or "auto"
        if value not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        self._engine = value

    @property
    def model(self) -> Dict[str, Any]:
        return self._model

    @model.setter
    def model(self, value):
        if not isinstance(value, dict) or "n_qubits" not in value:
            raise ValueError("model must be an object with n_qubits")
        n_qubits = value["n_qubits"]
        if not isinstance(n_qubits, int) or n_qubits < 1:
            raise ValueError("n_qubits must be a positive integer")
        model = {
            "n_qubits": n_qubits,
            "epsilon": float(value.get("epsilon", 0.0)),
            "disorder": value.get("disorder", "random"),
            "coherent_amplitude": float(value.get("coherent_amplitude", 0.0)),
            "extra_pauli_terms": [[str(PauliString(t)), float(c)] for t, c in value.get("extra_pauli_terms", [])],
            "pin_disorder": bool(value.get("pin_disorder", False)),
        }
        if "couplings" in value:
            model["couplings"] = [float(j) for j in value["couplings"]]
            model["z_fields"] = list(_per_qubit(value.get("z_fields", 0.0), n_qubits, "z_fields"))
        if not 0.0 <= model["epsilon"] <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if model["disorder"] not in ("random", "uniform"):
            raise ValueError("disorder must be random or uniform")
        if model["coherent_amplitude"] < 0:
            raise ValueError("coherent_amplitude must be non-negative")
        for term, _ in model["extra_pauli_terms"]:
            if len(term) != n_qubits:
                raise ValueError(f"Pauli term {term} does not act on {n_qubits} qubits")
        self._model = model

    @property
    def initial(self) -> Dict[str, Any]:
        return self._initial

    @initial.setter
    def initial(self, value):
        value = value or {"kind": "random-bit"}
        if value.get("kind") not in INITIAL_KINDS:
            raise ValueError(f"kind must be one of {INITIAL_KINDS}")
        self._initial = {"kind": value["kind"]}
        if "bits" in value:
            self._initial["bits"] = [int(b) for b in value["bits"]]

    @property
    def noise(self) -> Optional[Dict[str, Any]]:
        return self._noise

    @noise.setter
    def noise(self, value):
        if value in (None, "none"):
            self._noise = None
            return
        if not isinstance(value, dict):
            raise ValueError('noise must be "none" or an object')
        if not hasattr(self, "_model"):
            raise ValueError("noise depends on a valid model")
        n_qubits = self._model["n_qubits"]
        noise = {
            "eta0": list(_per_qubit(value.get("eta0", DEFAULT_READOUT_ERROR), n_qubits, "eta0")),
            "eta1": list(_per_qubit(value.get("eta1", DEFAULT_READOUT_ERROR), n_qubits, "eta1")),
            "depol_rate": list(_per_qubit(value.get("depol_rate", DEFAULT_DEPOL_RATE), n_qubits, "depol_rate")),
            "shots": int(value.get("shots", DEFAULT_SHOTS)),
            "n_trajectories": int(value.get("n_trajectories", DEFAULT_TRAJECTORIES)),
            "calibrated": bool(value.get("calibrated", False)),
        }
        NoiseModel.from_dict(noise)
        if noise["n_trajectories"] < 1:
            raise ValueError("n_trajectories must be positive")
        self._noise = noise

    @property
    def mitigation(self) -> Optional[Dict[str, Any]]:
        return self._mitigation

    @mitigation.setter
    def mitigation(self, value):
        if value == "off":
            self._mitigation = None
            return
        self._mitigation = MitigationParams(**(value or {})).to_dict()

    @property
    def stage(self) -> Stage:
        return self._stage

    @stage.setter
    def stage(self, value):
        self._stage = Stage(value or Stage.FULLY_MITIGATED.value)

    @property
    def analyses(self) -> List[str]:
        return self._analyses

    @analyses.setter
    def analyses(self, value):
        value = list(value if value is not None else ["autocorrelator", "spectrum"])
        unknown = [a for a in value if a not in ANALYSES]
        if unknown:
            raise ValueError(f"unknown analyses {unknown}, expected a subset of {ANALYSES}")
        self._analyses = value

    @property
    def sweep(self) -> Optional[Dict[str, Any]]:
        return self._sweep

    @sweep.setter
    def sweep(self, value):
        if value is None:
            self._sweep = None
            return
        epsilons = [float(e) for e in value["epsilons"]]
        if not epsilons or any(not 0.0 <= e <= 1.0 for e in epsilons):
            raise ValueError("epsilons must be a non-empty list in [0, 1]")
        realizations = int(value.get("n_realizations", 1))
        if realizations < 1:
            raise ValueError("n_realizations must be positive")
        self._sweep = {"epsilons": epsilons, "n_realizations": realizations}

    @property
    def tomography(self) -> Optional[Dict[str, Any]]:
        return self._tomography

    @tomography.setter
    def tomography(self, value):
        if value is None:
            self._tomography = None
            return
        shots = value.get("shots_per_setting")
        if shots is not None and (not isinstance(shots, int) or shots < 1):
            raise ValueError("shots_per_setting must be a positive integer or null")
        self._tomography = {"shots_per_setting": shots}

    @property
    def output_dir(self) -> Path:
        return self._output_dir

    @output_dir.setter
    def output_dir(self, value):
        self._output_dir = Path(value or "dtc_output")

    def _cross_field_errors(self) -> Dict[str, str]:
        errors = {}
        if ("sweep" in self.analyses) != (self.sweep is not None):
            errors["sweep"] = "sweep must be given exactly when analyses include sweep"
        if ("tomography" in self.analyses) != (self.tomography is not None):
            errors["tomography"] = "tomography must be given exactly when analyses include it"
        spectral = {"spectrum", "variance_h", "sweep"} & set(self.analyses)
        if spectral and (self.steps % 2 or self.steps < 8):
            errors["steps"] = "spectral analyses need an even number of steps, at least 8"
        skip = (self.mitigation or MitigationParams().to_dict())["skip_steps"]
        if {"decay", "sweep"} & set(self.analyses) and self.steps <= skip + 4:
            errors["steps"] = f"decay fits need more than {skip + 4} steps"
        return errors

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "seed": self.seed,
            "steps": self.steps,
            "engine": self.engine,
            "model": self.model,
            "initial": self.initial,
            "noise": self.noise if self.noise is not None else "none",
            "mitigation": self.mitigation if self.mitigation is not None else "off",
            "stage": self.stage.value,
            "analyses": self.analyses,
            "output_dir": str(self.output_dir),
        }
        if self.sweep is not None:
            data["sweep"] = self.sweep
        if self.tomography is not None:
            data["tomography"] = self.tomography
        return data

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON document, output directory excluded"""
        data = self.to_dict()
        data.pop("output_dir")
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def template(self) -> ChainTemplate:
        bits = self.initial.get("bits")
        return ChainTemplate(
            n_qubits=self.model["n_qubits"],
            seed=self.seed,
            coherent_amplitude=self.model["coherent_amplitude"],
            initial_kind=self.initial["kind"],
            initial_bits=tuple(bits) if bits else None,
            disorder=self.model["disorder"],
            extra_pauli_terms=tuple((PauliString(t), c) for t, c in self.model["extra_pauli_terms"]),
            pin_disorder=self.model["pin_disorder"],
        )

    def realize(self, epsilon: Optional[float] = None) -> Tuple[ChainConfig, InitialState]:
        """Chain and initial state of the single-point run"""
        epsilon = self.model["epsilon"] if epsilon is None else epsilon
        if "couplings" not in self.model:
            return self.template().realize(epsilon)
        config = ChainConfig(
            n_qubits=self.model["n_qubits"],
            epsilon=epsilon,
            couplings=self.model["couplings"],
            z_fields=self.model["z_fields"],
            extra_pauli_terms=[(PauliString(t), c) for t, c in self.model["extra_pauli_terms"]],
            seed=self.seed,
        )
        initial = make_initial(
            self.initial["kind"], config.n_qubits, derive_seed(self.seed, "initial"), self.initial.get("bits")
        )
        return config, initial

    def noise_model(self) -> Optional[NoiseModel]:
        if self.noise is None:
            return None
        return NoiseModel.from_dict(self.noise)

    def pipeline_options(self, workers: Optional[int] = None) -> PipelineOptions:
        noise = self.noise_model()
        return PipelineOptions(
            engine=self.engine,
            steps=self.steps,
            noise=noise,
            n_trajectories=self.noise["n_trajectories"] if self.noise else DEFAULT_TRAJECTORIES,
            mitigation=MitigationParams(**self.mitigation) if self.mitigation else MitigationParams(),
            calibrated_readout=bool(self.noise and self.noise["calibrated"]),
            mitigate=self.mitigation is not None,
            stage=self.stage if self.mitigation else Stage.RAW,
            workers=workers,
        )

    def check_capabilities(self) -> None:
        """Engine constraints that only show once the model is realized"""
        if self.engine != "fermion":
            return
        if self.noise is not None:
            raise EngineCapabilityError("the fermion engine cannot run noisy trajectories")
        config, _ = self.realize()
        if not config.is_ideal:
            raise EngineCapabilityError("the fermion engine requires zero coherent errors")


_DEFAULT_NOISE: Dict[str, Any] = {
    "eta0": DEFAULT_READOUT_ERROR,
    "eta1": DEFAULT_READOUT_ERROR,
    "depol_rate": DEFAULT_DEPOL_RATE,
    "shots": DEFAULT_SHOTS,
    "n_trajectories": DEFAULT_TRAJECTORIES,
}


_PRESETS: Dict[str, Dict[str, Any]] = {
    "echo": {
        "engine": "fermion",
        "model": {"n_qubits": 57, "epsilon": 0.0},
        "initial": {"kind": "random-bit"},
        "analyses": ["autocorrelator", "spectrum", "variance_h", "decay"],
    },
    "fig2-dtc": {
        "engine": "statevector",
        "model": {"n_qubits": 12, "epsilon": 0.05, "coherent_amplitude": DEFAULT_COHERENT_AMPLITUDE},
        "initial": {"kind": "random-bit"},
        "noise": _DEFAULT_NOISE,
        "analyses": ["autocorrelator", "spectrum", "variance_h", "decay"],
    },
    "fig2-thermal": {
        "engine": "statevector",
        "model": {"n_qubits": 12, "epsilon": 0.5, "coherent_amplitude": DEFAULT_COHERENT_AMPLITUDE},
        "initial": {"kind": "random-bit"},
        "noise": _DEFAULT_NOISE,
        "analyses": ["autocorrelator", "spectrum", "variance_h", "decay"],
    },
    "fig3-sweep": {
        "engine": "statevector",
        "model": {
            "n_qubits": 12,
            "epsilon": 0.05,
            "coherent_amplitude": DEFAULT_COHERENT_AMPLITUDE,
            "pin_disorder": True,
        },
        "initial": {"kind": "random-bit"},
        "analyses": ["sweep"],
        "sweep": {"epsilons": [round(0.02 * k, 2) for k in range(1, 11)], "n_realizations": 4},
    },
    "s1-neel": {
        "engine": "fermion",
        "model": {"n_qubits": 57, "epsilon": 0.05},
        "initial": {"kind": "neel"},
        "analyses": ["autocorrelator", "spectrum", "variance_h", "decay"],
    },
    "s1-polarized": {
        "engine": "fermion",
        "model": {"n_qubits": 57, "epsilon": 0.05},
        "initial": {"kind": "polarized"},
        "analyses": ["autocorrelator", "spectrum", "variance_h", "decay"],
    },
    "s1-no-disorder": {
        "engine": "fermion",
        "model": {"n_qubits": 57, "epsilon": 0.05, "disorder": "uniform"},
        "initial": {"kind": "random-bit"},
        "analyses": ["autocorrelator", "spectrum", "variance_h", "decay"],
    },
    "s1-no-disorder-polarized": {
        "engine": "fermion",
        "model": {"n_qubits": 57, "epsilon": 0.05, "disorder": "uniform"},
        "initial": {"kind": "polarized"},
        "analyses": ["autocorrelator", "spectrum", "variance_h", "decay"],
    },
    "s4-tomography": {
        "engine": "statevector",
        "model": {
            "n_qubits": 3,
            "epsilon": 0.05,
            "extra_pauli_terms": [[str(t), c] for t, c in tomography_reference_terms()],
        },
        "initial": {"kind": "polarized"},
        "analyses": ["tomography"],
        "tomography": {"shots_per_setting": 100000},
    },
}


def preset_names() -> List[str]:
    return sorted(_PRESETS)


def preset(name: str, seed: int = 0, output_dir: Optional[Path] = None) -> ExperimentSpec:
    """Fully populated spec of a named preset

    Raises:
        UnknownPresetError: listing the known presets
    """
    if name not in _PRESETS:
        raise UnknownPresetError(f"{name}, expected one of {preset_names()}")
    data = copy.deepcopy(_PRESETS[name])
    data.update({"name": name, "seed": seed, "output_dir": str(output_dir or Path("dtc_output") / name)})
    return ExperimentSpec.from_dict(data)


def _write_panels(result, output_dir: Path) -> List[str]:
    written = []
    for label, panel in (
        ("raw", result.raw),
        ("reference", result.reference),
        ("corrected", result.corrected),
        ("mitigated", result.mitigated),
    ):
        if panel is None:
            continue
        panel.to_csv(output_dir / f"{label}.csv")
        panel.to_json(output_dir / f"{label}.json")
        written += [f"{label}.csv", f"{label}.json"]
    if result.report is not None:
        result.report.to_frame().to_csv(output_dir / "mitigation_report.csv", index=False, float_format="%.12g")
        written.append("mitigation_report.csv")
    return written


def _run_single(spec: ExperimentSpec, output_dir: Path, workers: Optional[int]) -> Tuple[List[str], Dict[str, Any]]:
    config, initial = spec.realize()
    options = spec.pipeline_options(workers)
    result = run_pipeline(config, initial, options, spec.seed)
    written = _write_panels(result, output_dir)
    summary: Dict[str, Any] = {"config": config.to_dict(), "initial": str(initial)}

    correlator = autocorrelator(result.panel(options.stage))
    retained = correlator.retained_mask()
    if "autocorrelator" in spec.analyses:
        pd.DataFrame({"step": correlator.times, "autocorrelator": qubit_average(correlator)}).to_csv(
            output_dir / "autocorrelator.csv", index=False, float_format="%.12g"
        )
        written.append("autocorrelator.csv")
    if {"spectrum", "variance_h"} & set(spec.analyses):
        spectral = spectrum(correlator)
        summary["h"] = spectral.h.tolist()
        if "spectrum" in spec.analyses:
            spectral.to_frame().to_csv(output_dir / "spectrum.csv", index=False, float_format="%.12g")
            frequencies, _ = spectral.one_sided()
            averaged = mean_amplitudes(spectral, retained)[: frequencies.size]
            pd.DataFrame({"frequency": frequencies, "amplitude": averaged}).to_csv(
                output_dir / "mean_spectrum.csv", index=False, float_format="%.12g"
            )
            written += ["spectrum.csv", "mean_spectrum.csv"]
        if "variance_h" in spec.analyses:
            try:
                summary["var_h"] = variance_h(spectral, retained)
            except UndefinedVarianceError as err:
                logger.warning(err)
                summary["var_h"] = None
    if "decay" in spec.analyses:
        decay = decay_constants(correlator, options.mitigation.skip_steps, retained)
        summary["delta"] = decay.delta.tolist()
        summary["delta_bar"] = None if np.isnan(decay.delta_bar) else decay.delta_bar
    summary["n_retained"] = int(retained.sum())
    return written, summary


def _run_sweep(spec: ExperimentSpec, output_dir: Path, workers: Optional[int]) -> Tuple[List[str], Dict[str, Any]]:
    frame = sweep_epsilon(
        spec.sweep["epsilons"],
        spec.template(),
        spec.pipeline_options(),
        n_realizations=spec.sweep["n_realizations"],
        workers=workers,
    )
    frame.to_csv(output_dir / "phase_diagram.csv", index=False, float_format="%.12g")
    try:
        epsilon_c: Optional[float] = critical_epsilon(frame)
    except UndefinedVarianceError:
        epsilon_c = None
    return ["phase_diagram.csv"], {"epsilon_c": epsilon_c}


def _run_tomography(spec: ExperimentSpec, output_dir: Path, workers: Optional[int]) -> Tuple[List[str], Dict[str, Any]]:
    config, _ = spec.realize()
    measured = tomographic_reconstruction(
        config,
        spec.noise_model(),
        spec.tomography["shots_per_setting"],
        derive_seed(spec.seed, "tomography"),
        workers,
    )
    ideal = ptm_of_unitary(config.without_errors())
    generator = error_generator(measured, ideal)
    coefficient_table(generator).to_csv(output_dir / "tomography.csv", index=False, float_format="%.12g")
    summary = {
        "config": config.to_dict(),
        "dissipative_residual_norm": generator.dissipative_residual_norm,
        "trace_preservation_error": measured.trace_preservation_error(),
    }
    return ["tomography.csv"], summary


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> Dict[str, Any]:
    """Run every analysis of a spec and write its artifacts and manifest

    Args:
        spec (ExperimentSpec): validated experiment
        workers (int, optional): joblib workers. Defaults to DTC_FLOQUET_WORKERS.

    Raises:
        EngineCapabilityError: if the engine cannot run the experiment

    Returns:
        Dict[str, Any]: the manifest written to output_dir/manifest.json
    """
    spec.check_capabilities()
    output_dir = spec.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Experiment %s into %s", spec.name, output_dir)

    written: List[str] = []
    summary: Dict[str, Any] = {}
    if "tomography" in spec.analyses:
        files, part = _run_tomography(spec, output_dir, workers)
        written += files
        summary.update(part)
    if "sweep" in spec.analyses:
        files, part = _run_sweep(spec, output_dir, workers)
        written += files
        summary.update(part)
    if set(spec.analyses) - {"sweep", "tomography"}:
        files, part = _run_single(spec, output_dir, workers)
        written += files
        summary.update(part)

    (output_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    written.append("summary.json")
    manifest = {
        "spec": spec.to_dict(),
        "config_hash": spec.config_hash(),
        "root_seed": spec.seed,
        "derived_seeds": {
            "noise": derive_seed(spec.seed, "noise"),
            "initial": derive_seed(spec.seed, "initial"),
            "tomography": derive_seed(spec.seed, "tomography"),
        },
        "versions": {"dtc_floquet": __version__, **{lib: _library_version(lib) for lib in _LIBRARIES}},
        "outputs": sorted(written),
    }
    (output_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    logger.info("Wrote %d artifacts to %s", len(written) + 1, output_dir)
    return manifest
